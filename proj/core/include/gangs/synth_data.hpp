#pragma once

#include <array>
#include <filesystem>
#include <optional>
#include <span>
#include <utility>
#include <vector>

#include "gangs/common.hpp"
#include "gangs/matrix_game.hpp"
#include "gangs/neural.hpp"
#include "gangs/rng.hpp"

namespace gangs::data {

/// Two-dimensional Gaussian mixture. Covariances are row-major 2x2 and must
/// be symmetric positive definite.
struct GaussianMixture {
  game::MixedStrategy weights;
  std::vector<Vec2> means;
  std::vector<std::array<double, 4>> covs;

  int num_components() const { return static_cast<int>(means.size()); }
  void validate() const;
};

struct NoiseDist {
  enum class Kind { standard_normal, uniform_cube };
  int dim = 2;
  Kind kind = Kind::standard_normal;
  double half_width = 1.0;  // uniform_cube only
  void validate() const;
};

/// sqrt(k) x sqrt(k) lattice centered on the origin (k must be a perfect
/// square), isotropic sigma^2 covariance, uniform weights.
GaussianMixture make_grid(int k, double spacing, double sigma);

/// k components equally spaced on a circle, first at angle zero.
GaussianMixture make_annulus(int k, double radius, double sigma);

/// Means uniform on [-location_scale, location_scale]^2; covariance
/// A A^T + 0.01 * cov_scale * I with A entries drawn N(0, cov_scale), so the
/// whole family scales linearly in its two knobs.
GaussianMixture make_random(int k, Rng& rng, double location_scale, double cov_scale);

/// Draws n points; optionally records which component produced each.
std::vector<Vec2> sample(const GaussianMixture& mix, int n, Rng& rng,
                         std::vector<int>* components = nullptr);

/// Lower-triangular Cholesky factor {l00, l10, l11}. Throws if not SPD.
std::array<double, 3> cholesky2(const std::array<double, 4>& cov);

double mahalanobis(const Vec2& point, const Vec2& mean, const std::array<double, 4>& cov);

/// Nearest component by Mahalanobis distance if within k_sigma, else empty.
/// Ties go to the lowest index.
std::optional<int> mode_assignment(const Vec2& point, const GaussianMixture& mix, double k_sigma);

/// Analytic first and second moments of the mixture.
Vec2 mixture_mean(const GaussianMixture& mix);
std::array<double, 4> mixture_cov(const GaussianMixture& mix);

/// Noise batch for a generator: n rows of dim columns.
nn::Batch sample_noise(const NoiseDist& noise, int n, Rng& rng);

/// CSV with an `x,y,trueComponent` header; numbers round-trip exactly.
void save_samples_csv(std::span<const Vec2> points, std::span<const int> components,
                      const std::filesystem::path& file);
std::pair<std::vector<Vec2>, std::vector<int>> load_samples_csv(const std::filesystem::path& file);

}  // namespace gangs::data
