#include "gangs/rbbr.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <stdexcept>
#include <string>

namespace gangs::rbbr {

void RbbrConfig::validate() const {
  opt.validate();
  if (clf_subsample_count <= 0) {
    throw std::invalid_argument("RbbrConfig: classifier subsample count must be positive");
  }
  if (uniform_fake_count_override && *uniform_fake_count_override < 0) {
    throw std::invalid_argument("RbbrConfig: uniform fake count cannot be negative");
  }
  if (gen_learning_rate_override && !(*gen_learning_rate_override >= 0.0)) {
    throw std::invalid_argument("RbbrConfig: generator learning rate override must be nonnegative");
  }
}

BoundingBox bounding_box(std::span<const Vec2> reals, std::span<const Vec2> fakes) {
  if (reals.empty() && fakes.empty()) {
    throw std::invalid_argument("bounding_box: no points");
  }
  BoundingBox box;
  box.min = {std::numeric_limits<double>::infinity(), std::numeric_limits<double>::infinity()};
  box.max = {-std::numeric_limits<double>::infinity(), -std::numeric_limits<double>::infinity()};
  auto absorb = [&box](std::span<const Vec2> pts) {
    for (const auto& p : pts) {
      box.min[0] = std::min(box.min[0], p[0]);
      box.min[1] = std::min(box.min[1], p[1]);
      box.max[0] = std::max(box.max[0], p[0]);
      box.max[1] = std::max(box.max[1], p[1]);
    }
  };
  absorb(reals);
  absorb(fakes);
  return box;
}

std::vector<Vec2> sample_uniform_fakes(const BoundingBox& box, int n, Rng& rng) {
  if (n < 0) throw std::invalid_argument("sample_uniform_fakes: negative count");
  if (!(box.min[0] <= box.max[0]) || !(box.min[1] <= box.max[1])) {
    throw std::invalid_argument("sample_uniform_fakes: inverted box");
  }
  std::vector<Vec2> out;
  out.reserve(static_cast<std::size_t>(n));
  for (int i = 0; i < n; ++i) {
    out.push_back({rng.uniform(box.min[0], box.max[0]), rng.uniform(box.min[1], box.max[1])});
  }
  return out;
}

namespace {

void check_warm(const nn::MlpSpec& want, const nn::NetworkParams* warm, const char* role) {
  if (warm && !(warm->spec == want)) {
    throw std::invalid_argument(std::string("rbbr: warm start ") + role +
                                " does not match the game's network shape");
  }
}

}  // namespace

nn::NetworkParams train_classifier_rbbr(const gang::GangSpec& spec,
                                        const gang::MixedNetStrategy& gen_mix,
                                        const RbbrConfig& cfg, Rng& rng,
                                        const nn::NetworkParams* warm) {
  spec.validate();
  cfg.validate();
  gen_mix.validate();
  check_warm(spec.clf_spec, warm, "classifier");

  nn::NetworkParams start = warm ? *warm : nn::glorot_init(spec.clf_spec, rng);

  std::optional<BoundingBox> frozen_box;
  if (cfg.uniform_fakes && cfg.box_per_call) {
    const auto ref_reals = data::sample(spec.data_dist, cfg.opt.batch_size, rng);
    const auto ref_fakes = gang::sample_generator(spec, gen_mix, cfg.opt.batch_size, rng);
    frozen_box = bounding_box(ref_reals, ref_fakes);
  }

  auto objective = [&](const nn::NetworkParams& net, int, Rng& r) -> nn::StepValue {
    const int nb = cfg.opt.batch_size;
    const auto reals = data::sample(spec.data_dist, nb, r);
    const auto gen_fakes = gang::sample_generator(spec, gen_mix, nb, r);
    std::vector<Vec2> uniform;
    if (cfg.uniform_fakes) {
      const BoundingBox box = frozen_box ? *frozen_box : bounding_box(reals, gen_fakes);
      uniform = sample_uniform_fakes(box, cfg.uniform_fake_count_override.value_or(nb), r);
    }
    const int n_real = nb;
    const int n_fake = nb + static_cast<int>(uniform.size());

    nn::Batch all(n_real + n_fake, 2);
    int row = 0;
    for (const auto& p : reals) {
      all.at(row, 0) = p[0];
      all.at(row, 1) = p[1];
      ++row;
    }
    for (const auto& p : gen_fakes) {
      all.at(row, 0) = p[0];
      all.at(row, 1) = p[1];
      ++row;
    }
    for (const auto& p : uniform) {
      all.at(row, 0) = p[0];
      all.at(row, 1) = p[1];
      ++row;
    }

    // Descend the negated payoff: loss = mean_fakes phi - mean_reals phi.
    auto res = nn::gradient(net, all, [&](const nn::Batch& out) {
      nn::LossValue lv;
      lv.output_grad = nn::Batch(out.rows, 1);
      double real_sum = 0.0, fake_sum = 0.0;
      for (int s = 0; s < n_real; ++s) {
        const double v = out.at(s, 0);
        real_sum += gang::measure(spec.phi, v);
        lv.output_grad.at(s, 0) = -gang::measure_derivative(spec.phi, v) / n_real;
      }
      for (int s = n_real; s < out.rows; ++s) {
        const double v = out.at(s, 0);
        fake_sum += gang::measure(spec.phi, v);
        lv.output_grad.at(s, 0) = gang::measure_derivative(spec.phi, v) / n_fake;
      }
      lv.loss = fake_sum / n_fake - real_sum / n_real;
      return lv;
    });
    return {res.loss, std::move(res.param_grad)};
  };

  return nn::train(std::move(start), objective, cfg.opt, rng);
}

nn::NetworkParams train_generator_rbbr(const gang::GangSpec& spec,
                                       const gang::MixedNetStrategy& clf_mix,
                                       const RbbrConfig& cfg, Rng& rng,
                                       const nn::NetworkParams* warm) {
  spec.validate();
  cfg.validate();
  clf_mix.validate();
  check_warm(spec.gen_spec, warm, "generator");

  nn::NetworkParams start = warm ? *warm : nn::glorot_init(spec.gen_spec, rng);

  nn::OptimizerConfig opt = cfg.opt;
  if (cfg.gen_learning_rate_override) opt.learning_rate = *cfg.gen_learning_rate_override;

  const int k_sub = cfg.clf_subsample_count;
  auto objective = [&](const nn::NetworkParams& net, int, Rng& r) -> nn::StepValue {
    // Sample k_sub classifiers with replacement, then evaluate each distinct
    // member once with its pick count folded into the coefficient. count / (k
    // * batch) and 1 / batch round the same real number when the counts
    // coincide, so a singleton mixture behaves identically for every k_sub.
    std::vector<int> counts(clf_mix.members.size(), 0);
    for (int i = 0; i < k_sub; ++i) ++counts[static_cast<std::size_t>(r.categorical(clf_mix.weights.probs))];
    const nn::Batch z = data::sample_noise(spec.noise, opt.batch_size, r);

    auto gen_trace = nn::forward_trace(net, z);
    const nn::Batch& pts = gen_trace.output();

    // Ascend mean phi(C(G(z))); the chain rule runs through each sampled
    // classifier back into the emitted points.
    nn::Batch d_pts(pts.rows, pts.cols);
    double loss = 0.0;
    for (std::size_t m = 0; m < counts.size(); ++m) {
      if (counts[m] == 0) continue;
      const double coeff = static_cast<double>(counts[m]) /
                           (static_cast<double>(k_sub) * opt.batch_size);
      auto clf_trace = nn::forward_trace(clf_mix.members[m], pts);
      const nn::Batch& v = clf_trace.output();
      nn::Batch dv(v.rows, 1);
      for (int s = 0; s < v.rows; ++s) {
        loss -= gang::measure(spec.phi, v.at(s, 0)) * coeff;
        dv.at(s, 0) = -gang::measure_derivative(spec.phi, v.at(s, 0)) * coeff;
      }
      const nn::Batch d_in = nn::backprop_inputs(clf_mix.members[m], clf_trace, dv);
      for (std::size_t i = 0; i < d_pts.data.size(); ++i) d_pts.data[i] += d_in.data[i];
    }
    nn::StepValue sv;
    sv.loss = loss;
    sv.param_grad = nn::backprop_params(net, gen_trace, d_pts);
    return sv;
  };

  return nn::train(std::move(start), objective, opt, rng);
}

UBrsBreakdown u_brs_detail(const gang::GangSpec& spec, const gang::MixedNetStrategy& gen_mix,
                           const gang::MixedNetStrategy& clf_mix, const nn::NetworkParams& new_gen,
                           const nn::NetworkParams& new_clf, int n_samples, Rng& rng) {
  UBrsBreakdown out;
  out.u_g_br = -gang::payoff_vs_classifier_mix(spec, new_gen, clf_mix, n_samples, rng);
  out.u_c_br = gang::payoff_classifier_mc_weighted(spec, gen_mix, new_clf, n_samples, rng);
  return out;
}

double u_brs(const gang::GangSpec& spec, const gang::MixedNetStrategy& gen_mix,
             const gang::MixedNetStrategy& clf_mix, const nn::NetworkParams& new_gen,
             const nn::NetworkParams& new_clf, int n_samples, Rng& rng) {
  return u_brs_detail(spec, gen_mix, clf_mix, new_gen, new_clf, n_samples, rng).total();
}

}  // namespace gangs::rbbr
