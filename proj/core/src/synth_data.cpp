#include "gangs/synth_data.hpp"

#include <cmath>
#include <fstream>
#include <stdexcept>

namespace gangs::data {

void GaussianMixture::validate() const {
  weights.validate();
  if (means.empty() || means.size() != covs.size() ||
      means.size() != weights.probs.size()) {
    throw std::invalid_argument("GaussianMixture: component lists disagree in length");
  }
  for (const auto& m : means) {
    if (!std::isfinite(m[0]) || !std::isfinite(m[1])) {
      throw std::invalid_argument("GaussianMixture: non-finite mean");
    }
  }
  for (const auto& c : covs) {
    if (std::abs(c[1] - c[2]) > 1e-12) {
      throw std::invalid_argument("GaussianMixture: covariance not symmetric");
    }
    cholesky2(c);  // throws if not SPD
  }
}

void NoiseDist::validate() const {
  if (dim <= 0) throw std::invalid_argument("NoiseDist: dimension must be positive");
  if (kind == Kind::uniform_cube && !(half_width > 0.0)) {
    throw std::invalid_argument("NoiseDist: half width must be positive");
  }
}

GaussianMixture make_grid(int k, double spacing, double sigma) {
  if (k <= 0) throw std::invalid_argument("make_grid: component count must be positive");
  const int m = static_cast<int>(std::lround(std::sqrt(static_cast<double>(k))));
  if (m * m != k) {
    throw std::invalid_argument("make_grid: " + std::to_string(k) + " is not a perfect square");
  }
  if (!(spacing > 0.0) || !(sigma > 0.0)) {
    throw std::invalid_argument("make_grid: spacing and sigma must be positive");
  }
  GaussianMixture mix;
  mix.weights = game::MixedStrategy::uniform(k);
  const double offset = (m - 1) / 2.0;
  for (int gy = 0; gy < m; ++gy) {
    for (int gx = 0; gx < m; ++gx) {
      mix.means.push_back({(gx - offset) * spacing, (gy - offset) * spacing});
      mix.covs.push_back({sigma * sigma, 0.0, 0.0, sigma * sigma});
    }
  }
  return mix;
}

GaussianMixture make_annulus(int k, double radius, double sigma) {
  if (k <= 0) throw std::invalid_argument("make_annulus: component count must be positive");
  if (!(radius > 0.0) || !(sigma > 0.0)) {
    throw std::invalid_argument("make_annulus: radius and sigma must be positive");
  }
  GaussianMixture mix;
  mix.weights = game::MixedStrategy::uniform(k);
  for (int i = 0; i < k; ++i) {
    const double angle = 2.0 * 3.14159265358979323846 * i / k;
    mix.means.push_back({radius * std::cos(angle), radius * std::sin(angle)});
    mix.covs.push_back({sigma * sigma, 0.0, 0.0, sigma * sigma});
  }
  return mix;
}

GaussianMixture make_random(int k, Rng& rng, double location_scale, double cov_scale) {
  if (k <= 0) throw std::invalid_argument("make_random: component count must be positive");
  if (!(location_scale > 0.0) || !(cov_scale > 0.0)) {
    throw std::invalid_argument("make_random: scales must be positive");
  }
  GaussianMixture mix;
  mix.weights = game::MixedStrategy::uniform(k);
  const double a_scale = std::sqrt(cov_scale);
  const double ridge = 0.01 * cov_scale;
  for (int i = 0; i < k; ++i) {
    mix.means.push_back({rng.uniform(-location_scale, location_scale),
                         rng.uniform(-location_scale, location_scale)});
    const double a00 = a_scale * rng.normal(), a01 = a_scale * rng.normal();
    const double a10 = a_scale * rng.normal(), a11 = a_scale * rng.normal();
    mix.covs.push_back({a00 * a00 + a01 * a01 + ridge, a00 * a10 + a01 * a11,
                        a00 * a10 + a01 * a11, a10 * a10 + a11 * a11 + ridge});
  }
  return mix;
}

std::vector<Vec2> sample(const GaussianMixture& mix, int n, Rng& rng,
                         std::vector<int>* components) {
  mix.validate();
  if (n < 0) throw std::invalid_argument("sample: negative count");
  std::vector<std::array<double, 3>> chol;
  chol.reserve(mix.covs.size());
  for (const auto& c : mix.covs) chol.push_back(cholesky2(c));
  std::vector<Vec2> out;
  out.reserve(static_cast<std::size_t>(n));
  if (components) {
    components->clear();
    components->reserve(static_cast<std::size_t>(n));
  }
  for (int s = 0; s < n; ++s) {
    const int k = rng.categorical(mix.weights.probs);
    const double z0 = rng.normal(), z1 = rng.normal();
    const auto& l = chol[static_cast<std::size_t>(k)];
    const auto& mu = mix.means[static_cast<std::size_t>(k)];
    out.push_back({mu[0] + l[0] * z0, mu[1] + l[1] * z0 + l[2] * z1});
    if (components) components->push_back(k);
  }
  return out;
}

std::array<double, 3> cholesky2(const std::array<double, 4>& cov) {
  if (!(cov[0] > 0.0)) throw std::invalid_argument("cholesky2: covariance not positive definite");
  const double l00 = std::sqrt(cov[0]);
  const double l10 = cov[2] / l00;
  const double rem = cov[3] - l10 * l10;
  if (!(rem > 0.0)) throw std::invalid_argument("cholesky2: covariance not positive definite");
  return {l00, l10, std::sqrt(rem)};
}

double mahalanobis(const Vec2& point, const Vec2& mean, const std::array<double, 4>& cov) {
  const double det = cov[0] * cov[3] - cov[1] * cov[2];
  if (!(det > 0.0)) throw std::invalid_argument("mahalanobis: covariance not positive definite");
  const double d0 = point[0] - mean[0], d1 = point[1] - mean[1];
  const double q = (d0 * (cov[3] * d0 - cov[1] * d1) + d1 * (cov[0] * d1 - cov[2] * d0)) / det;
  return std::sqrt(std::max(0.0, q));
}

std::optional<int> mode_assignment(const Vec2& point, const GaussianMixture& mix, double k_sigma) {
  if (!(k_sigma > 0.0)) throw std::invalid_argument("mode_assignment: k_sigma must be positive");
  int best = -1;
  double best_dist = std::numeric_limits<double>::infinity();
  for (int i = 0; i < mix.num_components(); ++i) {
    const double d = mahalanobis(point, mix.means[static_cast<std::size_t>(i)],
                                 mix.covs[static_cast<std::size_t>(i)]);
    if (d < best_dist) {
      best_dist = d;
      best = i;
    }
  }
  if (best >= 0 && best_dist <= k_sigma) return best;
  return std::nullopt;
}

Vec2 mixture_mean(const GaussianMixture& mix) {
  Vec2 mu{0.0, 0.0};
  for (int i = 0; i < mix.num_components(); ++i) {
    const double w = mix.weights.probs[static_cast<std::size_t>(i)];
    mu[0] += w * mix.means[static_cast<std::size_t>(i)][0];
    mu[1] += w * mix.means[static_cast<std::size_t>(i)][1];
  }
  return mu;
}

std::array<double, 4> mixture_cov(const GaussianMixture& mix) {
  const Vec2 mu = mixture_mean(mix);
  std::array<double, 4> out{0.0, 0.0, 0.0, 0.0};
  for (int i = 0; i < mix.num_components(); ++i) {
    const double w = mix.weights.probs[static_cast<std::size_t>(i)];
    const auto& c = mix.covs[static_cast<std::size_t>(i)];
    const auto& m = mix.means[static_cast<std::size_t>(i)];
    out[0] += w * (c[0] + m[0] * m[0]);
    out[1] += w * (c[1] + m[0] * m[1]);
    out[2] += w * (c[2] + m[1] * m[0]);
    out[3] += w * (c[3] + m[1] * m[1]);
  }
  out[0] -= mu[0] * mu[0];
  out[1] -= mu[0] * mu[1];
  out[2] -= mu[1] * mu[0];
  out[3] -= mu[1] * mu[1];
  return out;
}

nn::Batch sample_noise(const NoiseDist& noise, int n, Rng& rng) {
  noise.validate();
  if (n < 0) throw std::invalid_argument("sample_noise: negative count");
  nn::Batch out(n, noise.dim);
  if (noise.kind == NoiseDist::Kind::standard_normal) {
    for (auto& v : out.data) v = rng.normal();
  } else {
    for (auto& v : out.data) v = rng.uniform(-noise.half_width, noise.half_width);
  }
  return out;
}

void save_samples_csv(std::span<const Vec2> points, std::span<const int> components,
                      const std::filesystem::path& file) {
  if (points.size() != components.size()) {
    throw std::invalid_argument("save_samples_csv: " + std::to_string(points.size()) +
                                " points vs " + std::to_string(components.size()) + " component ids");
  }
  std::ofstream out(file);
  if (!out) throw std::runtime_error("save_samples_csv: cannot open " + file.string());
  out << "x,y,trueComponent\n";
  for (std::size_t i = 0; i < points.size(); ++i) {
    out << format_double(points[i][0]) << ',' << format_double(points[i][1]) << ','
        << components[i] << '\n';
  }
  if (!out) throw std::runtime_error("save_samples_csv: write failed for " + file.string());
}

std::pair<std::vector<Vec2>, std::vector<int>> load_samples_csv(const std::filesystem::path& file) {
  std::ifstream in(file);
  if (!in) throw std::runtime_error("load_samples_csv: cannot open " + file.string());
  std::string line;
  if (!std::getline(in, line) || line != "x,y,trueComponent") {
    throw std::runtime_error("load_samples_csv: bad header in " + file.string());
  }
  std::pair<std::vector<Vec2>, std::vector<int>> out;
  int line_no = 1;
  while (std::getline(in, line)) {
    ++line_no;
    if (line.empty()) continue;
    const std::size_t c1 = line.find(',');
    const std::size_t c2 = c1 == std::string::npos ? std::string::npos : line.find(',', c1 + 1);
    if (c2 == std::string::npos || line.find(',', c2 + 1) != std::string::npos) {
      throw std::runtime_error("load_samples_csv: " + file.string() + ": line " +
                               std::to_string(line_no) + ": expected 3 fields");
    }
    out.first.push_back({parse_double(std::string_view(line).substr(0, c1)),
                         parse_double(std::string_view(line).substr(c1 + 1, c2 - c1 - 1))});
    out.second.push_back(static_cast<int>(parse_double(std::string_view(line).substr(c2 + 1))));
  }
  return out;
}

}  // namespace gangs::data
