#include "gangs/gang_model.hpp"

#include <doctest.h>

#include <bit>
#include <cmath>

#include "testutil.hpp"

using namespace gangs;
using namespace gangs::gang;

namespace {

nn::MlpSpec spec_of(std::vector<int> sizes, std::vector<nn::Activation> acts) {
  nn::MlpSpec s;
  s.layer_sizes = std::move(sizes);
  s.activations = std::move(acts);
  return s;
}

// Generator that ignores its noise and emits a constant point.
nn::NetworkParams constant_generator(double x, double y) {
  return {spec_of({2, 2}, {nn::Activation::linear}), {0, 0, 0, 0, x, y}};
}

GangSpec small_gang(data::GaussianMixture dist, nn::MlpSpec gen, nn::MlpSpec clf) {
  GangSpec g;
  g.data_dist = std::move(dist);
  g.noise.dim = 2;
  g.gen_spec = std::move(gen);
  g.clf_spec = std::move(clf);
  g.phi = MeasuringFn::make_bounded_log(1e-5);
  return g;
}

data::GaussianMixture point_mass_at(double x, double y) {
  data::GaussianMixture d;
  d.weights.probs = {1.0};
  d.means = {{x, y}};
  d.covs = {{1e-12, 0, 0, 1e-12}};
  return d;
}

}  // namespace

TEST_CASE("measuring functions: values") {
  const auto lg = MeasuringFn::make_log();
  CHECK(measure(lg, 0.5) == std::log(0.5));
  CHECK(measure(lg, 1.0) == 0.0);
  CHECK_THROWS_AS(measure(lg, 0.0), std::domain_error);

  const auto bl = MeasuringFn::make_bounded_log(1e-5);
  CHECK(measure(bl, 0.0) == std::log(1e-5));  // clamp makes zero safe, exactly
  CHECK(measure(bl, 1e-7) == std::log(1e-5));
  CHECK(measure(bl, 0.5) == std::log(0.5));
  CHECK(measure(bl, 1.0) == 0.0);

  const auto id = MeasuringFn::make_identity();
  CHECK(measure(id, 0.25) == 0.25);

  CHECK_THROWS_AS(measure(lg, -0.1), std::invalid_argument);
  CHECK_THROWS_AS(measure(lg, 1.1), std::invalid_argument);
  CHECK_THROWS_AS(measure(id, std::numeric_limits<double>::quiet_NaN()), std::invalid_argument);
  CHECK_THROWS_AS(MeasuringFn::make_bounded_log(0.0).validate(), std::invalid_argument);
  CHECK_THROWS_AS(MeasuringFn::make_bounded_log(1.5).validate(), std::invalid_argument);
}

TEST_CASE("measuring functions: derivatives") {
  CHECK(measure_derivative(MeasuringFn::make_log(), 0.25) == 4.0);
  CHECK(measure_derivative(MeasuringFn::make_bounded_log(1e-5), 0.5) == 2.0);
  CHECK(measure_derivative(MeasuringFn::make_bounded_log(1e-5), 1e-6) == 0.0);
  CHECK(measure_derivative(MeasuringFn::make_identity(), 0.9) == 1.0);
  CHECK_THROWS_AS(measure_derivative(MeasuringFn::make_log(), 0.0), std::domain_error);

  // Central differences confirm the formulas away from the clamp.
  for (auto phi : {MeasuringFn::make_log(), MeasuringFn::make_bounded_log(1e-5),
                   MeasuringFn::make_identity()}) {
    const double v = 0.3, h = 1e-7;
    const double fd = (measure(phi, v + h) - measure(phi, v - h)) / (2 * h);
    CHECK(std::abs(fd - measure_derivative(phi, v)) <= 1e-6);
  }
}

TEST_CASE("oracle payoff: saturated classifier separating point masses") {
  // Data sits at (10, 0); the generator emits (-10, 0); the classifier is
  // sigmoid(4 x0). Then phi(C(real)) = log(1) = 0 exactly and phi(C(fake))
  // clamps to log(1e-5), so u_C = -log(1e-5).
  auto g = small_gang(point_mass_at(10.0, 0.0), spec_of({2, 2}, {nn::Activation::linear}),
                      spec_of({2, 1}, {nn::Activation::sigmoid}));
  const auto gen = constant_generator(-10.0, 0.0);
  const nn::NetworkParams clf{g.clf_spec, {4.0, 0.0, 0.0}};

  // The saturation itself is exact in double precision.
  nn::Batch probe(2, 2);
  probe.at(0, 0) = 10.0;
  probe.at(1, 0) = -10.0;
  auto out = nn::forward(clf, probe);
  CHECK(out.at(0, 0) == 1.0);
  CHECK(out.at(1, 0) < 1e-5);

  Rng rng(123);
  const double u = payoff_classifier_mc(g, MixedNetStrategy::singleton(gen), clf, 10, rng);
  CHECK(std::abs(u - (-std::log(1e-5))) <= 1e-12);
  CHECK(u == doctest::Approx(11.512925464970227).epsilon(1e-13));

  Rng rng2(123);
  const double uw =
      payoff_classifier_mc_weighted(g, MixedNetStrategy::singleton(gen), clf, 10, rng2);
  CHECK(std::abs(uw - (-std::log(1e-5))) <= 1e-12);
}

TEST_CASE("generator and classifier payoffs cancel exactly") {
  auto g = small_gang(data::make_grid(4, 2.0, 0.05),
                      spec_of({2, 8, 2}, {nn::Activation::relu, nn::Activation::linear}),
                      spec_of({2, 8, 1}, {nn::Activation::relu, nn::Activation::sigmoid}));
  Rng init(7);
  auto mix = MixedNetStrategy::singleton(nn::glorot_init(g.gen_spec, init));
  auto clf = nn::glorot_init(g.clf_spec, init);
  Rng ra(55), rb(55);
  const double u_c = payoff_classifier_mc_weighted(g, mix, clf, 500, ra);
  const double u_g = payoff_generator_mc_weighted(g, mix, clf, 500, rb);
  CHECK(u_g + u_c == 0.0);
}

TEST_CASE("weighted payoff is exactly linear in mixture weights under a fixed seed") {
  auto g = small_gang(data::make_grid(4, 2.0, 0.05),
                      spec_of({2, 8, 2}, {nn::Activation::relu, nn::Activation::linear}),
                      spec_of({2, 8, 1}, {nn::Activation::relu, nn::Activation::sigmoid}));
  Rng init(99);
  auto a = nn::glorot_init(g.gen_spec, init);
  auto b = nn::glorot_init(g.gen_spec, init);
  auto clf = nn::glorot_init(g.clf_spec, init);

  const std::uint64_t seed = 31415;
  Rng r1(seed), r2(seed), r3(seed);
  const double ua = payoff_classifier_mc_weighted(g, MixedNetStrategy::singleton(a), clf, 2000, r1);
  const double ub = payoff_classifier_mc_weighted(g, MixedNetStrategy::singleton(b), clf, 2000, r2);

  MixedNetStrategy both;
  both.members = {a, b};
  both.weights.probs = {0.3, 0.7};
  const double um = payoff_classifier_mc_weighted(g, both, clf, 2000, r3);
  CHECK(std::abs(um - (0.3 * ua + 0.7 * ub)) <= 1e-9);
}

TEST_CASE("classifier mixture payoff is linear too") {
  auto g = small_gang(data::make_grid(4, 2.0, 0.05),
                      spec_of({2, 8, 2}, {nn::Activation::relu, nn::Activation::linear}),
                      spec_of({2, 8, 1}, {nn::Activation::relu, nn::Activation::sigmoid}));
  Rng init(17);
  auto gen = nn::glorot_init(g.gen_spec, init);
  auto c1 = nn::glorot_init(g.clf_spec, init);
  auto c2 = nn::glorot_init(g.clf_spec, init);

  const std::uint64_t seed = 2718;
  Rng r1(seed), r2(seed), r3(seed);
  const double u1 = payoff_vs_classifier_mix(g, gen, MixedNetStrategy::singleton(c1), 2000, r1);
  const double u2 = payoff_vs_classifier_mix(g, gen, MixedNetStrategy::singleton(c2), 2000, r2);
  MixedNetStrategy both;
  both.members = {c1, c2};
  both.weights.probs = {0.25, 0.75};
  const double um = payoff_vs_classifier_mix(g, gen, both, 2000, r3);
  CHECK(std::abs(um - (0.25 * u1 + 0.75 * u2)) <= 1e-9);
}

TEST_CASE("simulate_cell is the weighted singleton estimate, bit for bit") {
  auto g = small_gang(data::make_grid(4, 2.0, 0.05),
                      spec_of({2, 8, 2}, {nn::Activation::relu, nn::Activation::linear}),
                      spec_of({2, 8, 1}, {nn::Activation::relu, nn::Activation::sigmoid}));
  Rng init(3);
  auto gen = nn::glorot_init(g.gen_spec, init);
  auto clf = nn::glorot_init(g.clf_spec, init);
  Rng ra(777), rb(777);
  const double cell = simulate_cell(g, gen, clf, 1000, ra);
  const double ref = payoff_classifier_mc_weighted(g, MixedNetStrategy::singleton(gen), clf, 1000, rb);
  CHECK(std::bit_cast<std::uint64_t>(cell) == std::bit_cast<std::uint64_t>(ref));
}

TEST_CASE("multinomial and weighted estimators agree within noise") {
  auto g = small_gang(data::make_grid(4, 2.0, 0.05),
                      spec_of({2, 8, 2}, {nn::Activation::relu, nn::Activation::linear}),
                      spec_of({2, 8, 1}, {nn::Activation::relu, nn::Activation::sigmoid}));
  Rng init(41);
  MixedNetStrategy mix;
  mix.members = {nn::glorot_init(g.gen_spec, init), nn::glorot_init(g.gen_spec, init)};
  mix.weights.probs = {0.5, 0.5};
  auto clf = nn::glorot_init(g.clf_spec, init);
  Rng ra(1001), rb(1002);
  const double mc = payoff_classifier_mc(g, mix, clf, 20000, ra);
  const double wt = payoff_classifier_mc_weighted(g, mix, clf, 20000, rb);
  CHECK(std::abs(mc - wt) <= 0.2);
}

TEST_CASE("replicated cell estimates are self-consistent") {
  auto g = small_gang(data::make_grid(4, 2.0, 0.05),
                      spec_of({2, 8, 2}, {nn::Activation::relu, nn::Activation::linear}),
                      spec_of({2, 8, 1}, {nn::Activation::relu, nn::Activation::sigmoid}));
  Rng init(29);
  auto gen = nn::glorot_init(g.gen_spec, init);
  auto clf = nn::glorot_init(g.clf_spec, init);

  std::vector<double> reps;
  for (int i = 0; i < 10; ++i) {
    Rng r(derive_seed(404, {static_cast<std::uint64_t>(i)}));
    reps.push_back(simulate_cell(g, gen, clf, 2000, r));
  }
  double mean = 0;
  for (double v : reps) mean += v;
  mean /= static_cast<double>(reps.size());
  double sd = 0;
  for (double v : reps) sd += (v - mean) * (v - mean);
  sd = std::sqrt(sd / 9.0);
  CHECK(sd > 0.0);

  Rng big_rng(derive_seed(404, {99}));
  const double big = simulate_cell(g, gen, clf, 50000, big_rng);
  CHECK(std::abs(mean - big) <= 2.0 * sd);
}

TEST_CASE("grouped mixture sampling equals the naive per-draw loop") {
  auto g = small_gang(data::make_grid(4, 2.0, 0.05),
                      spec_of({2, 8, 2}, {nn::Activation::relu, nn::Activation::linear}),
                      spec_of({2, 8, 1}, {nn::Activation::relu, nn::Activation::sigmoid}));
  Rng init(61);
  MixedNetStrategy mix;
  mix.members = {nn::glorot_init(g.gen_spec, init), nn::glorot_init(g.gen_spec, init),
                 nn::glorot_init(g.gen_spec, init)};
  mix.weights.probs = {0.2, 0.5, 0.3};

  const std::uint64_t seed = 909;
  Rng grouped(seed);
  auto pts = sample_generator(g, mix, 200, grouped);

  Rng naive(seed);
  for (int s = 0; s < 200; ++s) {
    const int k = naive.categorical(mix.weights.probs);
    nn::Batch z(1, 2);
    z.at(0, 0) = naive.normal();
    z.at(0, 1) = naive.normal();
    auto out = nn::forward(mix.members[static_cast<std::size_t>(k)], z);
    CHECK(std::bit_cast<std::uint64_t>(pts[static_cast<std::size_t>(s)][0]) ==
          std::bit_cast<std::uint64_t>(out.at(0, 0)));
    CHECK(std::bit_cast<std::uint64_t>(pts[static_cast<std::size_t>(s)][1]) ==
          std::bit_cast<std::uint64_t>(out.at(0, 1)));
  }
}

TEST_CASE("mixture member frequencies follow the weights") {
  auto g = small_gang(point_mass_at(0.0, 0.0), spec_of({2, 2}, {nn::Activation::linear}),
                      spec_of({2, 1}, {nn::Activation::sigmoid}));
  MixedNetStrategy mix;
  mix.members = {constant_generator(-5, -5), constant_generator(5, 5)};
  mix.weights.probs = {0.2, 0.8};
  Rng rng(2021);
  auto pts = sample_generator(g, mix, 10000, rng);
  int high = 0;
  for (const auto& p : pts) high += p[0] > 0 ? 1 : 0;
  CHECK(std::abs(high - 8000) <= 5 * std::sqrt(10000 * 0.16));
}

TEST_CASE("mean_phi over fixed points") {
  // Zero-weight sigmoid classifier outputs exactly 0.5 everywhere.
  const nn::NetworkParams clf{spec_of({2, 1}, {nn::Activation::sigmoid}), {0, 0, 0}};
  const std::vector<Vec2> pts = {{1, 2}, {-3, 4}, {0, 0}};
  CHECK(mean_phi(MeasuringFn::make_identity(), clf, pts) == 0.5);
  CHECK(mean_phi(MeasuringFn::make_bounded_log(1e-5), clf, pts) == std::log(0.5));
  CHECK_THROWS_AS(mean_phi(MeasuringFn::make_identity(), clf, {}), std::invalid_argument);
}

TEST_CASE("validation catches wiring mistakes") {
  auto good = small_gang(data::make_grid(4, 2.0, 0.05),
                         spec_of({2, 8, 2}, {nn::Activation::relu, nn::Activation::linear}),
                         spec_of({2, 8, 1}, {nn::Activation::relu, nn::Activation::sigmoid}));
  CHECK_NOTHROW(good.validate());

  auto bad = good;
  bad.clf_spec = spec_of({2, 8, 2}, {nn::Activation::relu, nn::Activation::sigmoid});
  CHECK_THROWS_AS(bad.validate(), std::invalid_argument);

  bad = good;
  bad.gen_spec = spec_of({3, 8, 2}, {nn::Activation::relu, nn::Activation::linear});
  CHECK_THROWS_AS(bad.validate(), std::invalid_argument);  // noise is 2-d

  bad = good;
  bad.noise.dim = 0;
  CHECK_THROWS_AS(bad.validate(), std::invalid_argument);

  // Mixed strategies must be coherent.
  Rng init(5);
  MixedNetStrategy mix;
  CHECK_THROWS_AS(mix.validate(), std::invalid_argument);
  mix.members = {nn::glorot_init(good.gen_spec, init)};
  mix.weights.probs = {0.5, 0.5};
  CHECK_THROWS_AS(mix.validate(), std::invalid_argument);
  mix.weights.probs = {1.0};
  CHECK_NOTHROW(mix.validate());
  mix.members.push_back(nn::glorot_init(good.clf_spec, init));
  mix.weights.probs = {0.5, 0.5};
  CHECK_THROWS_AS(mix.validate(), std::invalid_argument);  // shape mismatch

  // Payoffs reject nets whose shape is not the game's.
  auto gen = nn::glorot_init(good.gen_spec, init);
  auto clf = nn::glorot_init(good.clf_spec, init);
  Rng r(1);
  CHECK_THROWS_AS(simulate_cell(good, clf, clf, 100, r), std::invalid_argument);
  CHECK_THROWS_AS(simulate_cell(good, gen, gen, 100, r), std::invalid_argument);
  CHECK_THROWS_AS(simulate_cell(good, gen, clf, 0, r), std::invalid_argument);
}
