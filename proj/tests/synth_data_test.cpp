#include "gangs/synth_data.hpp"

#include <doctest.h>

#include <bit>
#include <cmath>
#include <filesystem>
#include <fstream>

using namespace gangs;
using namespace gangs::data;

namespace {

std::filesystem::path temp_file(const char* name) {
  auto dir = std::filesystem::temp_directory_path() / "gangs_synth_data_test";
  std::filesystem::create_directories(dir);
  return dir / name;
}

}  // namespace

TEST_CASE("grid mixture lattice") {
  auto mix = make_grid(9, 2.0, 0.05);
  mix.validate();
  REQUIRE(mix.num_components() == 9);
  // Row-major lattice, origin centered: component 0 bottom-left, 4 center.
  const Vec2 expected[9] = {{-2, -2}, {0, -2}, {2, -2}, {-2, 0}, {0, 0},
                            {2, 0},   {-2, 2}, {0, 2},  {2, 2}};
  for (int i = 0; i < 9; ++i) {
    CHECK(mix.means[i][0] == expected[i][0]);
    CHECK(mix.means[i][1] == expected[i][1]);
    CHECK(mix.covs[i][0] == 0.05 * 0.05);
    CHECK(mix.covs[i][1] == 0.0);
    CHECK(mix.covs[i][3] == 0.05 * 0.05);
    CHECK(mix.weights.probs[i] == 1.0 / 9);
  }

  auto one = make_grid(1, 2.0, 0.1);
  CHECK(one.means[0][0] == 0.0);
  CHECK(one.means[0][1] == 0.0);

  auto four = make_grid(4, 1.0, 0.1);  // offsets are half-integer
  CHECK(four.means[0][0] == -0.5);
  CHECK(four.means[3][1] == 0.5);

  CHECK_THROWS_AS(make_grid(8, 2.0, 0.05), std::invalid_argument);
  CHECK_THROWS_AS(make_grid(0, 2.0, 0.05), std::invalid_argument);
  CHECK_THROWS_AS(make_grid(9, -1.0, 0.05), std::invalid_argument);
}

TEST_CASE("annulus mixture ring") {
  auto mix = make_annulus(4, 2.0, 0.1);
  mix.validate();
  REQUIRE(mix.num_components() == 4);
  CHECK(mix.means[0][0] == 2.0);  // angle zero exactly
  CHECK(mix.means[0][1] == 0.0);
  CHECK(std::abs(mix.means[1][0]) <= 1e-12);
  CHECK(mix.means[1][1] == doctest::Approx(2.0).epsilon(1e-12));
  CHECK(mix.means[2][0] == doctest::Approx(-2.0).epsilon(1e-12));
  CHECK(mix.means[3][1] == doctest::Approx(-2.0).epsilon(1e-12));
  for (int i = 0; i < 4; ++i) {
    const double r = std::hypot(mix.means[i][0], mix.means[i][1]);
    CHECK(r == doctest::Approx(2.0).epsilon(1e-12));
  }
}

TEST_CASE("random mixture determinism and linear scaling") {
  Rng a(42), b(42);
  auto mix1 = make_random(5, a, 2.0, 0.05);
  auto mix2 = make_random(5, b, 2.0, 0.05);
  mix1.validate();
  for (int i = 0; i < 5; ++i) {
    CHECK(mix1.means[i] == mix2.means[i]);
    CHECK(mix1.covs[i] == mix2.covs[i]);
  }

  // Doubling location_scale and quadrupling cov_scale rescales the draw
  // exactly: every factor is a power of two, so the arithmetic commutes.
  Rng c(42);
  auto scaled = make_random(5, c, 4.0, 0.2);
  for (int i = 0; i < 5; ++i) {
    CHECK(scaled.means[i][0] == 2.0 * mix1.means[i][0]);
    CHECK(scaled.means[i][1] == 2.0 * mix1.means[i][1]);
    for (int k = 0; k < 4; ++k) CHECK(scaled.covs[i][k] == 4.0 * mix1.covs[i][k]);
  }
}

TEST_CASE("cholesky factor and failure modes") {
  auto l = cholesky2({4.0, 0.0, 0.0, 9.0});
  CHECK(l[0] == 2.0);
  CHECK(l[1] == 0.0);
  CHECK(l[2] == 3.0);

  // L L^T reproduces a correlated covariance.
  auto lc = cholesky2({2.0, 0.6, 0.6, 1.0});
  CHECK(lc[0] * lc[0] == doctest::Approx(2.0).epsilon(1e-15));
  CHECK(lc[0] * lc[1] == doctest::Approx(0.6).epsilon(1e-15));
  CHECK(lc[1] * lc[1] + lc[2] * lc[2] == doctest::Approx(1.0).epsilon(1e-15));

  CHECK_THROWS_AS(cholesky2({1.0, 2.0, 2.0, 1.0}), std::invalid_argument);   // indefinite
  CHECK_THROWS_AS(cholesky2({-1.0, 0.0, 0.0, 1.0}), std::invalid_argument);  // negative diag
  GaussianMixture bad = make_grid(1, 1.0, 0.1);
  bad.covs[0] = {1.0, 0.5, -0.5, 1.0};
  CHECK_THROWS_AS(bad.validate(), std::invalid_argument);  // asymmetric
}

TEST_CASE("mahalanobis hand values") {
  CHECK(mahalanobis({3, 2}, {1, 1}, {4, 0, 0, 1}) == std::sqrt(2.0));
  CHECK(mahalanobis({1, 1}, {0, 0}, {2, 1, 1, 2}) ==
        doctest::Approx(std::sqrt(2.0 / 3.0)).epsilon(1e-15));
  CHECK(mahalanobis({5, -3}, {5, -3}, {0.3, 0.1, 0.1, 0.2}) == 0.0);
  CHECK_THROWS_AS(mahalanobis({0, 0}, {0, 0}, {1, 2, 2, 1}), std::invalid_argument);
}

TEST_CASE("mode assignment nearest within k sigma") {
  auto mix = make_grid(9, 2.0, 0.05);
  CHECK(mode_assignment({0, 0}, mix, 3.0) == 4);
  CHECK(mode_assignment({2, 2}, mix, 3.0) == 8);
  CHECK(mode_assignment({0.14, 0.0}, mix, 3.0) == 4);   // 2.8 sigma out
  CHECK(!mode_assignment({0.2, 0.0}, mix, 3.0));        // 4 sigma from everything
  CHECK(!mode_assignment({1.0, 1.0}, mix, 3.0));        // dead center between modes

  GaussianMixture twin;
  twin.weights = game::MixedStrategy::uniform(2);
  twin.means = {{0, 0}, {0, 0}};
  twin.covs = {{1, 0, 0, 1}, {1, 0, 0, 1}};
  CHECK(mode_assignment({0.5, 0.5}, twin, 3.0) == 0);  // exact tie, lowest index
}

TEST_CASE("sampled moments match analytic moments") {
  GaussianMixture mix;
  mix.weights.probs = {0.2, 0.8};
  mix.means = {{5, -3}, {-1, 2}};
  mix.covs = {{2, 0.6, 0.6, 1}, {0.5, -0.2, -0.2, 0.8}};
  mix.validate();

  const auto mu = mixture_mean(mix);
  CHECK(mu[0] == doctest::Approx(0.2 * 5 - 0.8).epsilon(1e-15));
  CHECK(mu[1] == doctest::Approx(-0.6 + 1.6).epsilon(1e-15));
  const auto cov = mixture_cov(mix);

  Rng rng(2024);
  std::vector<int> comps;
  const int n = 40000;
  auto pts = sample(mix, n, rng, &comps);
  REQUIRE(pts.size() == static_cast<std::size_t>(n));

  // Component frequencies: binomial(n, 0.8), five sigmas of slack.
  int count1 = 0;
  for (int c : comps) count1 += c == 1 ? 1 : 0;
  CHECK(std::abs(count1 - 0.8 * n) <= 5.0 * std::sqrt(0.16 * n));

  Vec2 emp_mu{0, 0};
  for (const auto& p : pts) {
    emp_mu[0] += p[0];
    emp_mu[1] += p[1];
  }
  emp_mu[0] /= n;
  emp_mu[1] /= n;
  // Five-sigma bands around the analytic values.
  CHECK(std::abs(emp_mu[0] - mu[0]) <= 5.0 * std::sqrt(cov[0] / n));
  CHECK(std::abs(emp_mu[1] - mu[1]) <= 5.0 * std::sqrt(cov[3] / n));

  std::array<double, 4> emp_cov{0, 0, 0, 0};
  for (const auto& p : pts) {
    const double d0 = p[0] - emp_mu[0], d1 = p[1] - emp_mu[1];
    emp_cov[0] += d0 * d0;
    emp_cov[1] += d0 * d1;
    emp_cov[2] += d1 * d0;
    emp_cov[3] += d1 * d1;
  }
  for (auto& v : emp_cov) v /= n;
  for (int k = 0; k < 4; ++k) {
    CHECK(std::abs(emp_cov[k] - cov[k]) <= 0.05 * std::max(1.0, std::abs(cov[k])));
  }

  // Per-component conditional means land on the component means.
  Vec2 mean0{0, 0};
  int n0 = 0;
  for (std::size_t i = 0; i < pts.size(); ++i) {
    if (comps[i] == 0) {
      mean0[0] += pts[i][0];
      mean0[1] += pts[i][1];
      ++n0;
    }
  }
  mean0[0] /= n0;
  mean0[1] /= n0;
  CHECK(std::abs(mean0[0] - 5.0) <= 5.0 * std::sqrt(2.0 / n0));
  CHECK(std::abs(mean0[1] + 3.0) <= 5.0 * std::sqrt(1.0 / n0));
}

TEST_CASE("sampling is deterministic") {
  auto mix = make_grid(4, 2.0, 0.05);
  Rng a(5), b(5);
  auto p1 = sample(mix, 100, a);
  auto p2 = sample(mix, 100, b);
  CHECK(p1 == p2);
}

TEST_CASE("noise batches") {
  NoiseDist gauss;
  gauss.dim = 2;
  Rng rng(808);
  auto batch = sample_noise(gauss, 20000, rng);
  CHECK(batch.rows == 20000);
  CHECK(batch.cols == 2);
  double mean = 0, var = 0;
  for (double v : batch.data) mean += v;
  mean /= static_cast<double>(batch.data.size());
  for (double v : batch.data) var += (v - mean) * (v - mean);
  var /= static_cast<double>(batch.data.size());
  CHECK(std::abs(mean) <= 5.0 / std::sqrt(40000.0));
  CHECK(std::abs(var - 1.0) <= 0.05);

  NoiseDist cube;
  cube.kind = NoiseDist::Kind::uniform_cube;
  cube.dim = 3;
  cube.half_width = 0.5;
  auto cb = sample_noise(cube, 1000, rng);
  CHECK(cb.cols == 3);
  for (double v : cb.data) {
    CHECK(v >= -0.5);
    CHECK(v < 0.5);
  }

  cube.half_width = -1.0;
  CHECK_THROWS_AS(sample_noise(cube, 10, rng), std::invalid_argument);
}

TEST_CASE("sample csv round trip") {
  std::vector<Vec2> pts = {{1.0 / 3.0, -0.0}, {1e-300, 42.5}};
  std::vector<int> comps = {3, 0};
  const auto file = temp_file("samples.csv");
  save_samples_csv(pts, comps, file);

  std::ifstream in(file);
  std::string header;
  std::getline(in, header);
  CHECK(header == "x,y,trueComponent");
  in.close();

  auto [lp, lc] = load_samples_csv(file);
  REQUIRE(lp.size() == 2);
  CHECK(lc == comps);
  for (std::size_t i = 0; i < pts.size(); ++i) {
    CHECK(std::bit_cast<std::uint64_t>(lp[i][0]) == std::bit_cast<std::uint64_t>(pts[i][0]));
    CHECK(std::bit_cast<std::uint64_t>(lp[i][1]) == std::bit_cast<std::uint64_t>(pts[i][1]));
  }

  std::vector<int> wrong = {1};
  CHECK_THROWS_AS(save_samples_csv(pts, wrong, file), std::invalid_argument);
}
