#include "gangs/gang_model.hpp"

#include <cmath>
#include <stdexcept>
#include <string>

namespace gangs::gang {

void MeasuringFn::validate() const {
  if (kind == Kind::bounded_log && !(delta > 0.0 && delta < 1.0)) {
    throw std::invalid_argument("MeasuringFn: bounded_log delta must lie in (0, 1)");
  }
}

double measure(const MeasuringFn& phi, double v) {
  if (!(v >= 0.0 && v <= 1.0)) {
    throw std::invalid_argument("measure: value " + format_double(v) + " outside [0, 1]");
  }
  switch (phi.kind) {
    case MeasuringFn::Kind::log:
      if (v == 0.0) {
        throw std::domain_error("measure: log of zero classifier output; use bounded_log");
      }
      return std::log(v);
    case MeasuringFn::Kind::bounded_log:
      phi.validate();
      return std::log(std::min(1.0, std::max(phi.delta, v)));
    case MeasuringFn::Kind::identity:
      return v;
  }
  throw std::logic_error("measure: bad measuring function enum");
}

double measure_derivative(const MeasuringFn& phi, double v) {
  if (!(v >= 0.0 && v <= 1.0)) {
    throw std::invalid_argument("measure_derivative: value " + format_double(v) + " outside [0, 1]");
  }
  switch (phi.kind) {
    case MeasuringFn::Kind::log:
      if (v == 0.0) {
        throw std::domain_error("measure_derivative: log of zero classifier output; use bounded_log");
      }
      return 1.0 / v;
    case MeasuringFn::Kind::bounded_log:
      phi.validate();
      return v > phi.delta ? 1.0 / v : 0.0;
    case MeasuringFn::Kind::identity:
      return 1.0;
  }
  throw std::logic_error("measure_derivative: bad measuring function enum");
}

void GangSpec::validate() const {
  data_dist.validate();
  noise.validate();
  gen_spec.validate();
  clf_spec.validate();
  phi.validate();
  if (gen_spec.input_width() != noise.dim) {
    throw std::invalid_argument("GangSpec: generator input width " +
                                std::to_string(gen_spec.input_width()) +
                                " does not match noise dimension " + std::to_string(noise.dim));
  }
  if (gen_spec.output_width() != 2) {
    throw std::invalid_argument("GangSpec: generator must emit 2-d points, got width " +
                                std::to_string(gen_spec.output_width()));
  }
  if (clf_spec.input_width() != 2) {
    throw std::invalid_argument("GangSpec: classifier must take 2-d points, got width " +
                                std::to_string(clf_spec.input_width()));
  }
  if (clf_spec.output_width() != 1) {
    throw std::invalid_argument("GangSpec: classifier must emit one value, got width " +
                                std::to_string(clf_spec.output_width()));
  }
}

MixedNetStrategy MixedNetStrategy::singleton(nn::NetworkParams net) {
  MixedNetStrategy s;
  s.members.push_back(std::move(net));
  s.weights.probs = {1.0};
  return s;
}

void MixedNetStrategy::validate() const {
  if (members.empty()) throw std::invalid_argument("MixedNetStrategy: no members");
  weights.validate();
  if (weights.probs.size() != members.size()) {
    throw std::invalid_argument("MixedNetStrategy: " + std::to_string(weights.probs.size()) +
                                " weights for " + std::to_string(members.size()) + " members");
  }
  for (const auto& m : members) {
    if (!(m.spec == members.front().spec)) {
      throw std::invalid_argument("MixedNetStrategy: members disagree on network shape");
    }
    if (static_cast<int>(m.values.size()) != m.spec.param_count()) {
      throw std::invalid_argument("MixedNetStrategy: member parameter vector has wrong size");
    }
  }
}

namespace {

void check_role(const nn::MlpSpec& want, const nn::NetworkParams& net, const char* role) {
  if (!(net.spec == want)) {
    throw std::invalid_argument(std::string("payoff: ") + role +
                                " network shape does not match the game spec");
  }
}

void check_role(const nn::MlpSpec& want, const MixedNetStrategy& mix, const char* role) {
  mix.validate();
  for (const auto& m : mix.members) check_role(want, m, role);
}

nn::Batch points_to_batch(std::span<const Vec2> pts) {
  nn::Batch b(static_cast<int>(pts.size()), 2);
  for (std::size_t s = 0; s < pts.size(); ++s) {
    b.at(static_cast<int>(s), 0) = pts[s][0];
    b.at(static_cast<int>(s), 1) = pts[s][1];
  }
  return b;
}

// One noise row, drawn in place; keeps per-draw rng order explicit.
void fill_noise_row(const data::NoiseDist& noise, nn::Batch& batch, int row, Rng& rng) {
  if (noise.kind == data::NoiseDist::Kind::standard_normal) {
    for (int d = 0; d < noise.dim; ++d) batch.at(row, d) = rng.normal();
  } else {
    for (int d = 0; d < noise.dim; ++d) {
      batch.at(row, d) = rng.uniform(-noise.half_width, noise.half_width);
    }
  }
}

// phi(C(p)) for every point, in order.
std::vector<double> phi_of_classifier(const GangSpec& spec, const nn::NetworkParams& clf,
                                      const nn::Batch& pts) {
  const nn::Batch out = nn::forward(clf, pts);
  std::vector<double> vals(static_cast<std::size_t>(out.rows));
  for (int s = 0; s < out.rows; ++s) vals[static_cast<std::size_t>(s)] = measure(spec.phi, out.at(s, 0));
  return vals;
}

double mean_of(std::span<const double> vals) {
  double sum = 0.0;
  for (double v : vals) sum += v;
  return sum / static_cast<double>(vals.size());
}

void check_samples(int n) {
  if (n <= 0) throw std::invalid_argument("payoff: sample count must be positive");
}

// Forward a generator mixture over per-draw member ids, batched by member,
// outputs scattered back into draw order.
std::vector<Vec2> forward_mixture(const GangSpec& spec, const MixedNetStrategy& gen_mix,
                                  const std::vector<int>& ids, const nn::Batch& noise) {
  std::vector<Vec2> out(ids.size());
  for (int k = 0; k < gen_mix.size(); ++k) {
    std::vector<int> rows;
    for (std::size_t s = 0; s < ids.size(); ++s) {
      if (ids[s] == k) rows.push_back(static_cast<int>(s));
    }
    if (rows.empty()) continue;
    nn::Batch sub(static_cast<int>(rows.size()), noise.cols);
    for (std::size_t r = 0; r < rows.size(); ++r) {
      for (int d = 0; d < noise.cols; ++d) sub.at(static_cast<int>(r), d) = noise.at(rows[r], d);
    }
    const nn::Batch pts = nn::forward(gen_mix.members[static_cast<std::size_t>(k)], sub);
    for (std::size_t r = 0; r < rows.size(); ++r) {
      out[static_cast<std::size_t>(rows[r])] = {pts.at(static_cast<int>(r), 0),
                                                pts.at(static_cast<int>(r), 1)};
    }
  }
  return out;
}

}  // namespace

std::vector<Vec2> sample_generator(const GangSpec& spec, const MixedNetStrategy& gen_mix, int n,
                                   Rng& rng) {
  spec.validate();
  check_role(spec.gen_spec, gen_mix, "generator");
  check_samples(n);
  std::vector<int> ids(static_cast<std::size_t>(n));
  nn::Batch noise(n, spec.noise.dim);
  for (int s = 0; s < n; ++s) {
    ids[static_cast<std::size_t>(s)] = rng.categorical(gen_mix.weights.probs);
    fill_noise_row(spec.noise, noise, s, rng);
  }
  return forward_mixture(spec, gen_mix, ids, noise);
}

double payoff_classifier_mc(const GangSpec& spec, const MixedNetStrategy& gen_mix,
                            const nn::NetworkParams& clf, int n_samples, Rng& rng) {
  spec.validate();
  check_role(spec.gen_spec, gen_mix, "generator");
  check_role(spec.clf_spec, clf, "classifier");
  check_samples(n_samples);
  const auto reals = data::sample(spec.data_dist, n_samples, rng);
  const auto fakes = sample_generator(spec, gen_mix, n_samples, rng);
  const double real_term = mean_of(phi_of_classifier(spec, clf, points_to_batch(reals)));
  const double fake_term = mean_of(phi_of_classifier(spec, clf, points_to_batch(fakes)));
  return real_term - fake_term;
}

namespace {

// Shared by the weighted estimators: real draws, then one noise batch.
struct CommonDraws {
  std::vector<Vec2> reals;
  nn::Batch noise;
};

CommonDraws draw_common(const GangSpec& spec, int n, Rng& rng) {
  CommonDraws cd;
  cd.reals = data::sample(spec.data_dist, n, rng);
  cd.noise = nn::Batch(n, spec.noise.dim);
  for (int s = 0; s < n; ++s) fill_noise_row(spec.noise, cd.noise, s, rng);
  return cd;
}

}  // namespace

double payoff_classifier_mc_weighted(const GangSpec& spec, const MixedNetStrategy& gen_mix,
                                     const nn::NetworkParams& clf, int n_samples, Rng& rng) {
  spec.validate();
  check_role(spec.gen_spec, gen_mix, "generator");
  check_role(spec.clf_spec, clf, "classifier");
  check_samples(n_samples);
  const CommonDraws cd = draw_common(spec, n_samples, rng);
  const double real_term = mean_of(phi_of_classifier(spec, clf, points_to_batch(cd.reals)));
  double fake_term = 0.0;
  for (int k = 0; k < gen_mix.size(); ++k) {
    const nn::Batch pts = nn::forward(gen_mix.members[static_cast<std::size_t>(k)], cd.noise);
    const double member_mean = mean_of(phi_of_classifier(spec, clf, pts));
    fake_term += gen_mix.weights.probs[static_cast<std::size_t>(k)] * member_mean;
  }
  return real_term - fake_term;
}

double payoff_generator_mc_weighted(const GangSpec& spec, const MixedNetStrategy& gen_mix,
                                    const nn::NetworkParams& clf, int n_samples, Rng& rng) {
  return -payoff_classifier_mc_weighted(spec, gen_mix, clf, n_samples, rng);
}

double payoff_vs_classifier_mix(const GangSpec& spec, const nn::NetworkParams& gen,
                                const MixedNetStrategy& clf_mix, int n_samples, Rng& rng) {
  spec.validate();
  check_role(spec.gen_spec, gen, "generator");
  check_role(spec.clf_spec, clf_mix, "classifier");
  check_samples(n_samples);
  const CommonDraws cd = draw_common(spec, n_samples, rng);
  const nn::Batch real_batch = points_to_batch(cd.reals);
  const nn::Batch fake_batch = nn::forward(gen, cd.noise);
  double u = 0.0;
  for (int k = 0; k < clf_mix.size(); ++k) {
    const auto& clf = clf_mix.members[static_cast<std::size_t>(k)];
    const double term = mean_of(phi_of_classifier(spec, clf, real_batch)) -
                        mean_of(phi_of_classifier(spec, clf, fake_batch));
    u += clf_mix.weights.probs[static_cast<std::size_t>(k)] * term;
  }
  return u;
}

double simulate_cell(const GangSpec& spec, const nn::NetworkParams& gen,
                     const nn::NetworkParams& clf, int n_samples, Rng& rng) {
  return payoff_classifier_mc_weighted(spec, MixedNetStrategy::singleton(gen), clf, n_samples, rng);
}

double mean_phi(const MeasuringFn& phi, const nn::NetworkParams& clf,
                std::span<const Vec2> points) {
  if (points.empty()) throw std::invalid_argument("mean_phi: no points");
  const nn::Batch out = nn::forward(clf, points_to_batch(points));
  double sum = 0.0;
  for (int s = 0; s < out.rows; ++s) sum += measure(phi, out.at(s, 0));
  return sum / static_cast<double>(points.size());
}

}  // namespace gangs::gang
