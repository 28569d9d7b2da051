#pragma once

#include <span>
#include <vector>

#include "gangs/common.hpp"
#include "gangs/matrix_game.hpp"
#include "gangs/neural.hpp"
#include "gangs/rng.hpp"
#include "gangs/synth_data.hpp"

namespace gangs::gang {

/// Scalar measuring function applied to classifier outputs before averaging.
/// bounded_log clamps its argument to [delta, 1] first, which keeps payoffs
/// finite when the classifier saturates.
struct MeasuringFn {
  enum class Kind { log, bounded_log, identity };
  Kind kind = Kind::bounded_log;
  double delta = 1e-5;

  static MeasuringFn make_log() { return {Kind::log, 0.0}; }
  static MeasuringFn make_bounded_log(double delta = 1e-5) { return {Kind::bounded_log, delta}; }
  static MeasuringFn make_identity() { return {Kind::identity, 0.0}; }
  void validate() const;
};

/// phi(v) for v in [0, 1]. The plain log variant refuses v == 0 and points
/// the caller at the bounded variant.
double measure(const MeasuringFn& phi, double v);

/// d(phi)/dv, zero inside bounded_log's clamped region.
double measure_derivative(const MeasuringFn& phi, double v);

/// Everything that defines one adversarial game instance: the data
/// distribution, the noise source, both network shapes, and the measuring
/// function. The induced payoff to the classifier against generator G and
/// classifier C is E_data[phi(C(x))] - E_noise[phi(C(G(z)))]; the generator
/// receives the negation.
struct GangSpec {
  data::GaussianMixture data_dist;
  data::NoiseDist noise;
  nn::MlpSpec gen_spec;
  nn::MlpSpec clf_spec;
  MeasuringFn phi;
  void validate() const;
};

/// Mixture over trained networks of one role; all members share a spec.
struct MixedNetStrategy {
  std::vector<nn::NetworkParams> members;
  game::MixedStrategy weights;

  int size() const { return static_cast<int>(members.size()); }
  static MixedNetStrategy singleton(nn::NetworkParams net);
  void validate() const;
};

/// Draws n points from the generator mixture. Per draw: one member pick, then
/// one noise row (a single-member mixture consumes no picks). Evaluation is
/// batched per member but outputs keep draw order bit-exactly.
std::vector<Vec2> sample_generator(const GangSpec& spec, const MixedNetStrategy& gen_mix, int n,
                                   Rng& rng);

/// Monte Carlo classifier payoff with multinomial member sampling: every fake
/// draw picks a fresh member from the mixture.
double payoff_classifier_mc(const GangSpec& spec, const MixedNetStrategy& gen_mix,
                            const nn::NetworkParams& clf, int n_samples, Rng& rng);

/// Lower-variance variant: one shared noise batch pushed through every
/// member, combined by the mixture weights. Identical rng consumption for any
/// member count, which makes payoffs exactly linear in the weights under a
/// fixed seed.
double payoff_classifier_mc_weighted(const GangSpec& spec, const MixedNetStrategy& gen_mix,
                                     const nn::NetworkParams& clf, int n_samples, Rng& rng);

/// Generator view of the same estimate; exact negation of the classifier's.
double payoff_generator_mc_weighted(const GangSpec& spec, const MixedNetStrategy& gen_mix,
                                    const nn::NetworkParams& clf, int n_samples, Rng& rng);

/// u_C(gen, clf_mix): one generator against a classifier mixture, common
/// samples across members.
double payoff_vs_classifier_mix(const GangSpec& spec, const nn::NetworkParams& gen,
                                const MixedNetStrategy& clf_mix, int n_samples, Rng& rng);

/// Payoff matrix cell for one generator / one classifier, u_C convention.
/// Exactly payoff_classifier_mc_weighted on singletons.
double simulate_cell(const GangSpec& spec, const nn::NetworkParams& gen,
                     const nn::NetworkParams& clf, int n_samples, Rng& rng);

/// Mean of phi(C(x)) over a fixed point set; no randomness involved.
double mean_phi(const MeasuringFn& phi, const nn::NetworkParams& clf, std::span<const Vec2> points);

}  // namespace gangs::gang
