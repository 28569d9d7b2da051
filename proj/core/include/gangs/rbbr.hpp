#pragma once

#include <optional>
#include <span>

#include "gangs/gang_model.hpp"

namespace gangs::rbbr {

struct BoundingBox {
  Vec2 min{0.0, 0.0};
  Vec2 max{0.0, 0.0};
};

/// Knobs for one resource-bounded best-response computation. The budget is
/// the optimizer iteration count; responses are trained from a fresh random
/// initialization unless a warm start is passed in explicitly.
struct RbbrConfig {
  nn::OptimizerConfig opt;  // adam, lr 1e-3, batch 128, 1000 iterations

  /// Classifier oracle: augment every batch with uniform fakes drawn from the
  /// bounding box of that batch's real and generated points. The fake term
  /// then averages over generated and uniform fakes together.
  bool uniform_fakes = true;
  /// Number of uniform fakes per batch; defaults to the batch size.
  std::optional<int> uniform_fake_count_override;
  /// Freeze one bounding box per call (from a reference batch drawn up
  /// front) instead of one per batch.
  bool box_per_call = false;

  /// Generator oracle: classifiers sampled per step from the opponent mix.
  int clf_subsample_count = 5;
  /// Generator oracle learning rate, when it must differ from opt.
  std::optional<double> gen_learning_rate_override;

  void validate() const;
};

/// Smallest axis-aligned box containing both point sets. Throws when the
/// union is empty.
BoundingBox bounding_box(std::span<const Vec2> reals, std::span<const Vec2> fakes);

/// n points uniform on the box; a degenerate box yields copies of the corner.
std::vector<Vec2> sample_uniform_fakes(const BoundingBox& box, int n, Rng& rng);

/// Trains a classifier best response to the generator mixture: ascends
/// E_data[phi(C(x))] - E_fakes[phi(C(x))] over minibatches. `warm` overrides
/// the fresh initialization when given (it must match the game's shape).
nn::NetworkParams train_classifier_rbbr(const gang::GangSpec& spec,
                                        const gang::MixedNetStrategy& gen_mix,
                                        const RbbrConfig& cfg, Rng& rng,
                                        const nn::NetworkParams* warm = nullptr);

/// Trains a generator best response to the classifier mixture: each step
/// samples clf_subsample_count members (with replacement, by weight) and
/// ascends their average phi(C(G(z))), the standard surrogate that keeps
/// gradients alive where the classifier rejects confidently.
nn::NetworkParams train_generator_rbbr(const gang::GangSpec& spec,
                                       const gang::MixedNetStrategy& clf_mix,
                                       const RbbrConfig& cfg, Rng& rng,
                                       const nn::NetworkParams* warm = nullptr);

/// Interaction test of two candidate responses against the current mixture
/// profile: u_g_br = u_G(new_gen, clf_mix), u_c_br = u_C(gen_mix, new_clf).
/// Their sum is the gain certificate: nonpositive means neither player's
/// oracle found an improvement.
struct UBrsBreakdown {
  double u_g_br = 0.0;
  double u_c_br = 0.0;
  double total() const { return u_g_br + u_c_br; }
};

UBrsBreakdown u_brs_detail(const gang::GangSpec& spec, const gang::MixedNetStrategy& gen_mix,
                           const gang::MixedNetStrategy& clf_mix, const nn::NetworkParams& new_gen,
                           const nn::NetworkParams& new_clf, int n_samples, Rng& rng);

double u_brs(const gang::GangSpec& spec, const gang::MixedNetStrategy& gen_mix,
             const gang::MixedNetStrategy& clf_mix, const nn::NetworkParams& new_gen,
             const nn::NetworkParams& new_clf, int n_samples, Rng& rng);

}  // namespace gangs::rbbr
