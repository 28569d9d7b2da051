#pragma once

#include <vector>

#include "gangs/gang_model.hpp"

namespace gangs::gan {

/// Single-network adversarial training, the experimental control: one
/// generator and one classifier updated in alternation, no strategy memory.
struct GanConfig {
  nn::OptimizerConfig gen_opt;
  nn::OptimizerConfig clf_opt;
  /// Applied to classifier outputs; the default clamps at 1e-7 so the plain
  /// log objective cannot hit a saturated output's -inf.
  gang::MeasuringFn phi = gang::MeasuringFn::make_bounded_log(1e-7);
  /// Classifier updates per generator update. The classifier's iteration
  /// budget must equal gen_opt.iterations times this ratio.
  int clf_steps_per_gen = 1;

  GanConfig();
  void validate() const;
};

/// Losses are in descent convention: the negated utility each update pushed
/// up. With a step ratio above one, clf_loss is the round's last update.
struct GanStepRecord {
  int round = 0;  // 1-based generator rounds
  double clf_loss = 0.0;
  double gen_loss = 0.0;
};

struct GanResult {
  nn::NetworkParams gen;
  nn::NetworkParams clf;
  std::vector<GanStepRecord> history;
};

/// Alternating rounds: the classifier ascends
///   E[phi(C(x))] + E[phi(1 - C(G(z)))]
/// and the generator ascends E[phi(C(G(z)))], the surrogate that keeps its
/// gradients alive where the classifier rejects confidently. Both networks
/// start from fresh random initializations drawn from `rng`.
GanResult train_gan(const gang::GangSpec& spec, const GanConfig& cfg, Rng& rng);

/// The generator's per-batch objective on a fixed noise batch:
/// mean phi(C(G(z))). Exactly the fake term of the adversarial payoff on the
/// same samples, computed through the same code path.
double generator_batch_objective(const gang::GangSpec& spec, const nn::NetworkParams& gen,
                                 const nn::NetworkParams& clf, const nn::Batch& noise);

}  // namespace gangs::gan
