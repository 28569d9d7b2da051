#include "gangs/neural.hpp"

#include <cmath>
#include <fstream>
#include <stdexcept>

#include <json.hpp>

#include "gangs/common.hpp"

namespace gangs::nn {

std::string to_string(Activation a) {
  switch (a) {
    case Activation::relu: return "relu";
    case Activation::tanh: return "tanh";
    case Activation::sigmoid: return "sigmoid";
    case Activation::linear: return "linear";
  }
  throw std::logic_error("to_string: bad activation enum");
}

Activation activation_from_string(std::string_view s) {
  if (s == "relu") return Activation::relu;
  if (s == "tanh") return Activation::tanh;
  if (s == "sigmoid") return Activation::sigmoid;
  if (s == "linear") return Activation::linear;
  throw std::invalid_argument("unknown activation '" + std::string(s) + "'");
}

int MlpSpec::param_count() const {
  int n = 0;
  for (std::size_t l = 0; l + 1 < layer_sizes.size(); ++l) {
    n += layer_sizes[l] * layer_sizes[l + 1] + layer_sizes[l + 1];
  }
  return n;
}

void MlpSpec::validate() const {
  if (layer_sizes.size() < 2) throw std::invalid_argument("MlpSpec: need at least input and output layers");
  for (int s : layer_sizes) {
    if (s <= 0) throw std::invalid_argument("MlpSpec: non-positive layer size");
  }
  if (activations.size() != layer_sizes.size() - 1) {
    throw std::invalid_argument("MlpSpec: " + std::to_string(activations.size()) +
                                " activations for " + std::to_string(layer_sizes.size() - 1) +
                                " weight layers");
  }
}

int weight_offset(const MlpSpec& spec, int layer) {
  int off = 0;
  for (int l = 0; l < layer; ++l) {
    off += spec.layer_sizes[static_cast<std::size_t>(l)] * spec.layer_sizes[static_cast<std::size_t>(l) + 1] +
           spec.layer_sizes[static_cast<std::size_t>(l) + 1];
  }
  return off;
}

int bias_offset(const MlpSpec& spec, int layer) {
  return weight_offset(spec, layer) +
         spec.layer_sizes[static_cast<std::size_t>(layer)] * spec.layer_sizes[static_cast<std::size_t>(layer) + 1];
}

namespace {

void check_net(const NetworkParams& net, const char* caller) {
  net.spec.validate();
  if (static_cast<int>(net.values.size()) != net.spec.param_count()) {
    throw std::invalid_argument(std::string(caller) + ": parameter vector size " +
                                std::to_string(net.values.size()) + " does not match spec count " +
                                std::to_string(net.spec.param_count()));
  }
}

void check_input(const NetworkParams& net, const Batch& inputs, const char* caller) {
  if (inputs.cols != net.spec.input_width()) {
    throw std::invalid_argument(std::string(caller) + ": input width " + std::to_string(inputs.cols) +
                                " does not match network input " +
                                std::to_string(net.spec.input_width()));
  }
  for (double v : inputs.data) {
    if (!std::isfinite(v)) throw std::invalid_argument(std::string(caller) + ": non-finite input");
  }
}

void apply_activation(Activation a, double* v, std::size_t n) {
  switch (a) {
    case Activation::relu:
      for (std::size_t i = 0; i < n; ++i) v[i] = v[i] > 0.0 ? v[i] : 0.0;
      break;
    case Activation::tanh:
      for (std::size_t i = 0; i < n; ++i) v[i] = std::tanh(v[i]);
      break;
    case Activation::sigmoid:
      for (std::size_t i = 0; i < n; ++i) v[i] = 1.0 / (1.0 + std::exp(-v[i]));
      break;
    case Activation::linear:
      break;
  }
}

// Derivative of the activation expressed through its own output.
inline double activation_slope(Activation a, double out) {
  switch (a) {
    case Activation::relu: return out > 0.0 ? 1.0 : 0.0;
    case Activation::tanh: return 1.0 - out * out;
    case Activation::sigmoid: return out * (1.0 - out);
    case Activation::linear: return 1.0;
  }
  return 0.0;
}

// out[s][o] = sum_i in[s][i] * W[o][i] + b[o], activation applied in place.
void layer_forward(const double* w, const double* b, Activation act, const Batch& in, Batch& out) {
  const int fan_in = in.cols, fan_out = out.cols;
  for (int s = 0; s < in.rows; ++s) {
    const double* x = in.row_ptr(s);
    double* y = out.row_ptr(s);
    for (int o = 0; o < fan_out; ++o) {
      const double* wr = w + static_cast<std::size_t>(o) * fan_in;
      double acc = b[o];
      for (int i = 0; i < fan_in; ++i) acc += wr[i] * x[i];
      y[o] = acc;
    }
  }
  apply_activation(act, out.data.data(), out.data.size());
}

void check_layer_finite(const Batch& out, int layer, const char* caller) {
  for (double v : out.data) {
    if (!std::isfinite(v)) {
      throw std::runtime_error(std::string(caller) + ": non-finite value in layer " +
                               std::to_string(layer) + " output");
    }
  }
}

}  // namespace

ForwardTrace forward_trace(const NetworkParams& net, const Batch& inputs) {
  check_net(net, "forward");
  check_input(net, inputs, "forward");
  ForwardTrace trace;
  trace.layer_outputs.reserve(net.spec.layer_sizes.size());
  trace.layer_outputs.push_back(inputs);
  for (int l = 0; l < net.spec.num_weight_layers(); ++l) {
    const Batch& prev = trace.layer_outputs.back();
    Batch out(inputs.rows, net.spec.layer_sizes[static_cast<std::size_t>(l) + 1]);
    layer_forward(net.values.data() + weight_offset(net.spec, l),
                  net.values.data() + bias_offset(net.spec, l),
                  net.spec.activations[static_cast<std::size_t>(l)], prev, out);
    check_layer_finite(out, l + 1, "forward");
    trace.layer_outputs.push_back(std::move(out));
  }
  return trace;
}

Batch forward(const NetworkParams& net, const Batch& inputs) {
  // Keeps only two live batches; the trace variant keeps them all.
  check_net(net, "forward");
  check_input(net, inputs, "forward");
  Batch prev = inputs;
  for (int l = 0; l < net.spec.num_weight_layers(); ++l) {
    Batch out(inputs.rows, net.spec.layer_sizes[static_cast<std::size_t>(l) + 1]);
    layer_forward(net.values.data() + weight_offset(net.spec, l),
                  net.values.data() + bias_offset(net.spec, l),
                  net.spec.activations[static_cast<std::size_t>(l)], prev, out);
    check_layer_finite(out, l + 1, "forward");
    prev = std::move(out);
  }
  return prev;
}

namespace {

void check_output_grad(const NetworkParams& net, const ForwardTrace& trace,
                       const Batch& output_grad, const char* caller) {
  if (trace.layer_outputs.size() != net.spec.layer_sizes.size()) {
    throw std::invalid_argument(std::string(caller) + ": trace does not match network depth");
  }
  if (output_grad.rows != trace.output().rows || output_grad.cols != trace.output().cols) {
    throw std::invalid_argument(std::string(caller) + ": output gradient is " +
                                std::to_string(output_grad.rows) + "x" + std::to_string(output_grad.cols) +
                                ", expected " + std::to_string(trace.output().rows) + "x" +
                                std::to_string(trace.output().cols));
  }
}

// Shared backward sweep. Fills param_grad when given, and returns the
// gradient with respect to the input batch.
Batch backward(const NetworkParams& net, const ForwardTrace& trace, const Batch& output_grad,
               std::vector<double>* param_grad) {
  Batch delta = output_grad;  // d(loss)/d(post-activation) of the current layer
  for (int l = net.spec.num_weight_layers() - 1; l >= 0; --l) {
    const Batch& act_out = trace.layer_outputs[static_cast<std::size_t>(l) + 1];
    const Batch& act_in = trace.layer_outputs[static_cast<std::size_t>(l)];
    const Activation act = net.spec.activations[static_cast<std::size_t>(l)];
    const int fan_in = act_in.cols, fan_out = act_out.cols;

    // delta <- d(loss)/d(pre-activation)
    for (std::size_t k = 0; k < delta.data.size(); ++k) {
      delta.data[k] *= activation_slope(act, act_out.data[k]);
    }

    if (param_grad) {
      double* dw = param_grad->data() + weight_offset(net.spec, l);
      double* db = param_grad->data() + bias_offset(net.spec, l);
      for (int s = 0; s < delta.rows; ++s) {
        const double* d = delta.row_ptr(s);
        const double* x = act_in.row_ptr(s);
        for (int o = 0; o < fan_out; ++o) {
          const double coeff = d[o];
          if (coeff == 0.0) continue;
          double* dwr = dw + static_cast<std::size_t>(o) * fan_in;
          for (int i = 0; i < fan_in; ++i) dwr[i] += coeff * x[i];
          db[o] += coeff;
        }
      }
    }

    Batch prev_delta(delta.rows, fan_in);
    const double* w = net.values.data() + weight_offset(net.spec, l);
    for (int s = 0; s < delta.rows; ++s) {
      const double* d = delta.row_ptr(s);
      double* pd = prev_delta.row_ptr(s);
      for (int o = 0; o < fan_out; ++o) {
        const double coeff = d[o];
        if (coeff == 0.0) continue;
        const double* wr = w + static_cast<std::size_t>(o) * fan_in;
        for (int i = 0; i < fan_in; ++i) pd[i] += coeff * wr[i];
      }
    }
    delta = std::move(prev_delta);
  }
  return delta;
}

}  // namespace

std::vector<double> backprop_params(const NetworkParams& net, const ForwardTrace& trace,
                                    const Batch& output_grad) {
  check_net(net, "backprop_params");
  check_output_grad(net, trace, output_grad, "backprop_params");
  std::vector<double> grad(net.values.size(), 0.0);
  backward(net, trace, output_grad, &grad);
  return grad;
}

Batch backprop_inputs(const NetworkParams& net, const ForwardTrace& trace,
                      const Batch& output_grad) {
  check_net(net, "backprop_inputs");
  check_output_grad(net, trace, output_grad, "backprop_inputs");
  return backward(net, trace, output_grad, nullptr);
}

GradResult gradient(const NetworkParams& net, const Batch& inputs, const OutputLoss& loss) {
  ForwardTrace trace = forward_trace(net, inputs);
  LossValue lv = loss(trace.output());
  if (!std::isfinite(lv.loss)) throw std::runtime_error("gradient: non-finite loss");
  GradResult out;
  out.loss = lv.loss;
  out.param_grad = backprop_params(net, trace, lv.output_grad);
  return out;
}

void OptimizerConfig::validate() const {
  if (!(learning_rate >= 0.0)) throw std::invalid_argument("OptimizerConfig: negative learning rate");
  if (iterations < 0) throw std::invalid_argument("OptimizerConfig: negative iteration count");
  if (batch_size <= 0) throw std::invalid_argument("OptimizerConfig: batch size must be positive");
  if (kind == Kind::adam) {
    if (!(beta1 >= 0.0 && beta1 < 1.0) || !(beta2 >= 0.0 && beta2 < 1.0)) {
      throw std::invalid_argument("OptimizerConfig: betas must lie in [0, 1)");
    }
    if (!(epsilon > 0.0)) throw std::invalid_argument("OptimizerConfig: epsilon must be positive");
  }
}

Optimizer::Optimizer(OptimizerConfig cfg, std::size_t param_count)
    : cfg_(std::move(cfg)), n_(param_count) {
  cfg_.validate();
  if (cfg_.kind == OptimizerConfig::Kind::adam) {
    m_.assign(n_, 0.0);
    v_.assign(n_, 0.0);
  }
}

void Optimizer::step(NetworkParams& net, std::span<const double> grad) {
  if (net.values.size() != n_ || grad.size() != n_) {
    throw std::invalid_argument("optimizer: parameter count " + std::to_string(net.values.size()) +
                                " / gradient size " + std::to_string(grad.size()) +
                                " do not match the optimizer's " + std::to_string(n_));
  }
  if (cfg_.kind == OptimizerConfig::Kind::sgd) {
    for (std::size_t i = 0; i < n_; ++i) net.values[i] -= cfg_.learning_rate * grad[i];
  } else {
    const double bc1 = 1.0 - std::pow(cfg_.beta1, t_ + 1);
    const double bc2 = 1.0 - std::pow(cfg_.beta2, t_ + 1);
    for (std::size_t i = 0; i < n_; ++i) {
      const double g = grad[i];
      m_[i] = cfg_.beta1 * m_[i] + (1.0 - cfg_.beta1) * g;
      v_[i] = cfg_.beta2 * v_[i] + (1.0 - cfg_.beta2) * g * g;
      net.values[i] -= cfg_.learning_rate * (m_[i] / bc1) / (std::sqrt(v_[i] / bc2) + cfg_.epsilon);
    }
  }
  ++t_;
}

NetworkParams train(NetworkParams start, const StepObjective& objective,
                    const OptimizerConfig& cfg, Rng& rng) {
  check_net(start, "train");
  cfg.validate();
  const std::size_t n = start.values.size();
  Optimizer opt(cfg, n);
  for (int t = 0; t < cfg.iterations; ++t) {
    StepValue step = objective(start, t, rng);
    if (!std::isfinite(step.loss)) {
      throw std::runtime_error("train: non-finite loss at iteration " + std::to_string(t));
    }
    if (step.param_grad.size() != n) {
      throw std::invalid_argument("train: gradient size " + std::to_string(step.param_grad.size()) +
                                  " does not match parameter count " + std::to_string(n));
    }
    for (double g : step.param_grad) {
      if (!std::isfinite(g)) {
        throw std::runtime_error("train: non-finite gradient at iteration " + std::to_string(t));
      }
    }
    opt.step(start, step.param_grad);
  }
  return start;
}

NetworkParams glorot_init(const MlpSpec& spec, Rng& rng) {
  spec.validate();
  NetworkParams net;
  net.spec = spec;
  net.values.assign(static_cast<std::size_t>(spec.param_count()), 0.0);
  for (int l = 0; l < spec.num_weight_layers(); ++l) {
    const int fan_in = spec.layer_sizes[static_cast<std::size_t>(l)];
    const int fan_out = spec.layer_sizes[static_cast<std::size_t>(l) + 1];
    const double a = std::sqrt(6.0 / (fan_in + fan_out));
    double* w = net.values.data() + weight_offset(spec, l);
    for (int k = 0; k < fan_in * fan_out; ++k) w[k] = rng.uniform(-a, a);
    // biases stay zero
  }
  return net;
}

void save_params(const NetworkParams& net, const std::filesystem::path& file) {
  check_net(net, "save_params");
  std::ofstream out(file);
  if (!out) throw std::runtime_error("save_params: cannot open " + file.string());
  nlohmann::ordered_json header;
  header["layer_sizes"] = net.spec.layer_sizes;
  header["activations"] = nlohmann::ordered_json::array();
  for (Activation a : net.spec.activations) header["activations"].push_back(to_string(a));
  out << header.dump() << '\n';
  for (double v : net.values) out << format_double(v) << '\n';
  if (!out) throw std::runtime_error("save_params: write failed for " + file.string());
}

NetworkParams load_params(const std::filesystem::path& file) {
  std::ifstream in(file);
  if (!in) throw std::runtime_error("load_params: cannot open " + file.string());
  std::string line;
  if (!std::getline(in, line)) throw std::runtime_error("load_params: empty file " + file.string());
  nlohmann::json header = nlohmann::json::parse(line, nullptr, /*allow_exceptions=*/true);
  NetworkParams net;
  net.spec.layer_sizes = header.at("layer_sizes").get<std::vector<int>>();
  for (const auto& name : header.at("activations")) {
    net.spec.activations.push_back(activation_from_string(name.get<std::string>()));
  }
  net.spec.validate();
  const int expected = net.spec.param_count();
  net.values.reserve(static_cast<std::size_t>(expected));
  while (std::getline(in, line)) {
    if (line.empty()) continue;
    net.values.push_back(parse_double(line));
  }
  if (static_cast<int>(net.values.size()) != expected) {
    throw std::runtime_error("load_params: " + file.string() + " holds " +
                             std::to_string(net.values.size()) + " values, spec wants " +
                             std::to_string(expected));
  }
  return net;
}

}  // namespace gangs::nn
