#pragma once

#include <cstddef>
#include <filesystem>
#include <functional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "gangs/rng.hpp"

namespace gangs::nn {

enum class Activation { relu, tanh, sigmoid, linear };

std::string to_string(Activation a);
Activation activation_from_string(std::string_view s);

/// Fully connected network shape. layer_sizes runs [input, hidden..., output];
/// activations has one entry per weight layer.
struct MlpSpec {
  std::vector<int> layer_sizes;
  std::vector<Activation> activations;

  int num_weight_layers() const { return static_cast<int>(activations.size()); }
  int input_width() const { return layer_sizes.front(); }
  int output_width() const { return layer_sizes.back(); }
  int param_count() const;
  void validate() const;

  bool operator==(const MlpSpec&) const = default;
};

/// Parameters live in one flat vector: for each weight layer, the weight
/// matrix row-major [fan_out][fan_in], then the biases. The flat layout makes
/// optimizers, serialization, and finite-difference checks trivial.
struct NetworkParams {
  MlpSpec spec;
  std::vector<double> values;
};

int weight_offset(const MlpSpec& spec, int layer);
int bias_offset(const MlpSpec& spec, int layer);

/// Row-major sample batch: rows = samples, cols = feature width.
struct Batch {
  int rows = 0;
  int cols = 0;
  std::vector<double> data;

  Batch() = default;
  Batch(int r, int c) : rows(r), cols(c), data(static_cast<std::size_t>(r) * c, 0.0) {}

  double& at(int r, int c) { return data[static_cast<std::size_t>(r) * cols + c]; }
  double at(int r, int c) const { return data[static_cast<std::size_t>(r) * cols + c]; }
  double* row_ptr(int r) { return data.data() + static_cast<std::size_t>(r) * cols; }
  const double* row_ptr(int r) const { return data.data() + static_cast<std::size_t>(r) * cols; }
};

/// Forward pass. Throws on width mismatch or non-finite values, naming the
/// layer where the blowup appeared.
Batch forward(const NetworkParams& net, const Batch& inputs);

/// Forward pass that keeps every layer's post-activation output (index 0 is
/// the input batch), which is exactly what the backward passes need.
struct ForwardTrace {
  std::vector<Batch> layer_outputs;
  const Batch& output() const { return layer_outputs.back(); }
};
ForwardTrace forward_trace(const NetworkParams& net, const Batch& inputs);

/// d(loss)/d(params) given d(loss)/d(outputs). Same flat layout as values.
std::vector<double> backprop_params(const NetworkParams& net, const ForwardTrace& trace,
                                    const Batch& output_grad);

/// d(loss)/d(inputs) given d(loss)/d(outputs). Lets a generator receive
/// gradient through a classifier applied to its samples.
Batch backprop_inputs(const NetworkParams& net, const ForwardTrace& trace,
                      const Batch& output_grad);

struct LossValue {
  double loss = 0.0;
  Batch output_grad;
};
using OutputLoss = std::function<LossValue(const Batch& outputs)>;

struct GradResult {
  double loss = 0.0;
  std::vector<double> param_grad;
};

/// Convenience wrapper: forward_trace + loss + backprop_params.
GradResult gradient(const NetworkParams& net, const Batch& inputs, const OutputLoss& loss);

struct OptimizerConfig {
  enum class Kind { sgd, adam };
  Kind kind = Kind::adam;
  double learning_rate = 1e-3;
  double beta1 = 0.5;  // low first moment suits adversarial objectives
  double beta2 = 0.999;
  double epsilon = 1e-8;
  int batch_size = 128;
  int iterations = 1000;
  void validate() const;
};

/// Stepwise optimizer state, for loops that interleave updates to several
/// networks. The adam bias corrections follow this instance's own step
/// count. `train` below is the single-network convenience wrapper.
class Optimizer {
 public:
  Optimizer(OptimizerConfig cfg, std::size_t param_count);
  void step(NetworkParams& net, std::span<const double> grad);
  int steps_taken() const { return t_; }

 private:
  OptimizerConfig cfg_;
  std::size_t n_ = 0;
  std::vector<double> m_, v_;
  int t_ = 0;
};

struct StepValue {
  double loss = 0.0;
  std::vector<double> param_grad;
};

/// Produces the minibatch loss and gradient for one optimizer step. The
/// iteration index and Rng are the only sources of variation between calls.
using StepObjective = std::function<StepValue(const NetworkParams& net, int iteration, Rng& rng)>;

/// Runs exactly cfg.iterations descent steps (zero iterations or a zero
/// learning rate return `start` unchanged). Throws naming the iteration if
/// the loss or gradient turns non-finite.
NetworkParams train(NetworkParams start, const StepObjective& objective,
                    const OptimizerConfig& cfg, Rng& rng);

/// Uniform(-a, a) weights with a = sqrt(6 / (fan_in + fan_out)), zero biases.
NetworkParams glorot_init(const MlpSpec& spec, Rng& rng);

/// One-line JSON shape header followed by one value per line; numbers
/// round-trip bit-exactly.
void save_params(const NetworkParams& net, const std::filesystem::path& file);
NetworkParams load_params(const std::filesystem::path& file);

}  // namespace gangs::nn
