#include "gangs/baseline_gan.hpp"

#include <cmath>
#include <stdexcept>
#include <string>
#include <utility>

#include "gangs/synth_data.hpp"

namespace gangs::gan {

GanConfig::GanConfig() {
  gen_opt.iterations = 2500;
  gen_opt.learning_rate = 2e-4;
  gen_opt.batch_size = 64;
  clf_opt = gen_opt;
}

void GanConfig::validate() const {
  gen_opt.validate();
  clf_opt.validate();
  phi.validate();
  if (clf_steps_per_gen < 0) {
    throw std::invalid_argument("GanConfig: classifier step ratio cannot be negative");
  }
  if (clf_opt.iterations != gen_opt.iterations * clf_steps_per_gen) {
    throw std::invalid_argument(
        "GanConfig: classifier iterations (" + std::to_string(clf_opt.iterations) +
        ") must equal generator iterations (" + std::to_string(gen_opt.iterations) +
        ") times the step ratio (" + std::to_string(clf_steps_per_gen) + ")");
  }
}

double generator_batch_objective(const gang::GangSpec& spec, const nn::NetworkParams& gen,
                                 const nn::NetworkParams& clf, const nn::Batch& noise) {
  const nn::Batch pts = nn::forward(gen, noise);
  std::vector<Vec2> points(static_cast<std::size_t>(pts.rows));
  for (int s = 0; s < pts.rows; ++s) points[static_cast<std::size_t>(s)] = {pts.at(s, 0), pts.at(s, 1)};
  return gang::mean_phi(spec.phi, clf, points);
}

namespace {

void check_finite_loss(double loss, int round, const char* which) {
  if (!std::isfinite(loss)) {
    throw std::runtime_error("train_gan: non-finite " + std::string(which) + " loss at round " +
                             std::to_string(round));
  }
}

}  // namespace

GanResult train_gan(const gang::GangSpec& spec, const GanConfig& cfg, Rng& rng) {
  spec.validate();
  cfg.validate();

  GanResult res;
  res.gen = nn::glorot_init(spec.gen_spec, rng);
  res.clf = nn::glorot_init(spec.clf_spec, rng);

  nn::Optimizer gen_opt(cfg.gen_opt, res.gen.values.size());
  nn::Optimizer clf_opt(cfg.clf_opt, res.clf.values.size());
  res.history.reserve(static_cast<std::size_t>(cfg.gen_opt.iterations));

  for (int round = 1; round <= cfg.gen_opt.iterations; ++round) {
    GanStepRecord rec;
    rec.round = round;

    for (int sub = 0; sub < cfg.clf_steps_per_gen; ++sub) {
      // Classifier ascends E[phi(C(x))] + E[phi(1 - C(G(z)))] on one batch
      // of reals stacked over one batch of generated fakes.
      const int nb = cfg.clf_opt.batch_size;
      const auto reals = data::sample(spec.data_dist, nb, rng);
      const nn::Batch z = data::sample_noise(spec.noise, nb, rng);
      const nn::Batch fakes = nn::forward(res.gen, z);

      nn::Batch all(2 * nb, 2);
      for (int s = 0; s < nb; ++s) {
        all.at(s, 0) = reals[static_cast<std::size_t>(s)][0];
        all.at(s, 1) = reals[static_cast<std::size_t>(s)][1];
      }
      for (int s = 0; s < nb; ++s) {
        all.at(nb + s, 0) = fakes.at(s, 0);
        all.at(nb + s, 1) = fakes.at(s, 1);
      }

      const auto grad = nn::gradient(res.clf, all, [&](const nn::Batch& out) {
        nn::LossValue lv;
        lv.output_grad = nn::Batch(out.rows, 1);
        double real_sum = 0.0, fake_sum = 0.0;
        for (int s = 0; s < nb; ++s) {
          const double v = out.at(s, 0);
          real_sum += gang::measure(cfg.phi, v);
          lv.output_grad.at(s, 0) = -gang::measure_derivative(cfg.phi, v) / nb;
        }
        for (int s = nb; s < out.rows; ++s) {
          const double v = out.at(s, 0);
          fake_sum += gang::measure(cfg.phi, 1.0 - v);
          lv.output_grad.at(s, 0) = gang::measure_derivative(cfg.phi, 1.0 - v) / nb;
        }
        lv.loss = -(real_sum / nb + fake_sum / nb);
        return lv;
      });
      check_finite_loss(grad.loss, round, "classifier");
      clf_opt.step(res.clf, grad.param_grad);
      rec.clf_loss = grad.loss;
    }

    // Generator ascends E[phi(C(G(z)))]; the loss sums in the same order as
    // the payoff fake term so the two paths agree bit for bit.
    {
      const int nb = cfg.gen_opt.batch_size;
      const nn::Batch z = data::sample_noise(spec.noise, nb, rng);
      const auto gen_trace = nn::forward_trace(res.gen, z);
      const auto clf_trace = nn::forward_trace(res.clf, gen_trace.output());
      const nn::Batch& v = clf_trace.output();

      double sum = 0.0;
      nn::Batch dv(v.rows, 1);
      for (int s = 0; s < v.rows; ++s) {
        sum += gang::measure(cfg.phi, v.at(s, 0));
        dv.at(s, 0) = -gang::measure_derivative(cfg.phi, v.at(s, 0)) / nb;
      }
      rec.gen_loss = -(sum / nb);
      check_finite_loss(rec.gen_loss, round, "generator");

      const nn::Batch d_pts = nn::backprop_inputs(res.clf, clf_trace, dv);
      const auto param_grad = nn::backprop_params(res.gen, gen_trace, d_pts);
      gen_opt.step(res.gen, param_grad);
    }

    res.history.push_back(rec);
  }
  return res;
}

}  // namespace gangs::gan
