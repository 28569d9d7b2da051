#include "run_config.hpp"

#include <json.hpp>

#include <fstream>
#include <set>
#include <sstream>
#include <stdexcept>
#include <utility>

#include "gangs/rng.hpp"

namespace gangs::cli {

namespace {

using json = nlohmann::ordered_json;

// Substream tag for realizing a random mixture from the run seed.
constexpr std::uint64_t kDataTag = 0xDA7A;

[[noreturn]] void fail(const std::string& what) { throw std::runtime_error("config: " + what); }

/// One JSON object plus its dotted path. Reads mark keys consumed; `finish`
/// rejects whatever remains, naming the full path.
class Section {
 public:
  Section(const json& node, std::string path) : node_(node), path_(std::move(path)) {
    if (!node_.is_object()) fail(path_ + ": expected an object");
  }

  bool has(const char* key) const { return node_.contains(key); }

  std::string where(const char* key) const {
    return path_.empty() ? std::string(key) : path_ + "." + key;
  }

  template <typename T>
  T get(const char* key, const char* kind_name, T fallback) {
    if (!node_.contains(key)) return fallback;
    consumed_.insert(key);
    const json& v = node_.at(key);
    try {
      return v.get<T>();
    } catch (const json::exception&) {
      fail(where(key) + ": expected " + std::string(kind_name));
    }
  }

  double real(const char* key, double fallback) {
    if (!node_.contains(key)) return fallback;
    consumed_.insert(key);
    const json& v = node_.at(key);
    if (!v.is_number()) fail(where(key) + ": expected a number");
    return v.get<double>();
  }

  int integer(const char* key, int fallback) {
    if (!node_.contains(key)) return fallback;
    consumed_.insert(key);
    const json& v = node_.at(key);
    if (!v.is_number_integer()) fail(where(key) + ": expected an integer");
    return v.get<int>();
  }

  bool boolean(const char* key, bool fallback) { return get<bool>(key, "a boolean", fallback); }

  std::string str(const char* key, std::string fallback) {
    return get<std::string>(key, "a string", std::move(fallback));
  }

  std::optional<Section> child(const char* key) {
    if (!node_.contains(key)) return std::nullopt;
    consumed_.insert(key);
    return Section(node_.at(key), where(key));
  }

  /// Every key must have been consumed by now.
  void finish() const {
    for (const auto& [key, value] : node_.items()) {
      if (!consumed_.contains(key)) fail("unknown key '" + where(key.c_str()) + "'");
    }
  }

 private:
  const json& node_;
  std::string path_;
  std::set<std::string> consumed_;
};

nn::Activation activation_from(const std::string& s, const std::string& where) {
  try {
    return nn::activation_from_string(s);
  } catch (const std::exception&) {
    fail(where + ": unknown activation '" + s + "'");
  }
}

std::vector<int> int_list(Section& sec, const char* key, std::vector<int> fallback) {
  return sec.get<std::vector<int>>(key, "a list of integers", std::move(fallback));
}

std::vector<nn::Activation> activation_list(Section& sec, const char* key,
                                            std::vector<nn::Activation> fallback) {
  if (!sec.has(key)) return fallback;
  const auto names = sec.get<std::vector<std::string>>(key, "a list of strings", {});
  std::vector<nn::Activation> acts;
  acts.reserve(names.size());
  for (const auto& name : names) acts.push_back(activation_from(name, sec.where(key)));
  return acts;
}

gang::MeasuringFn parse_phi(Section& parent, const char* key, gang::MeasuringFn fallback) {
  auto sec = parent.child(key);
  if (!sec) return fallback;
  const std::string kind = sec->str("kind", "boundedLog");
  gang::MeasuringFn phi;
  if (kind == "log") {
    phi = gang::MeasuringFn::make_log();
  } else if (kind == "boundedLog") {
    phi = gang::MeasuringFn::make_bounded_log(sec->real("delta", 1e-5));
  } else if (kind == "identity") {
    phi = gang::MeasuringFn::make_identity();
  } else {
    fail(sec->where("kind") + ": unknown measuring function '" + kind + "'");
  }
  if (phi.kind != gang::MeasuringFn::Kind::bounded_log && sec->has("delta")) {
    fail(sec->where("delta") + ": only boundedLog takes a delta");
  }
  sec->finish();
  return phi;
}

json phi_json(const gang::MeasuringFn& phi) {
  json j;
  switch (phi.kind) {
    case gang::MeasuringFn::Kind::log:
      j["kind"] = "log";
      break;
    case gang::MeasuringFn::Kind::bounded_log:
      j["kind"] = "boundedLog";
      j["delta"] = phi.delta;
      break;
    case gang::MeasuringFn::Kind::identity:
      j["kind"] = "identity";
      break;
  }
  return j;
}

void parse_data(Section& parent, DataConfig& data) {
  auto sec = parent.child("data");
  if (!sec) return;
  const std::string kind = sec->str("kind", "grid");
  if (kind == "grid") {
    data.kind = DataConfig::Kind::grid;
    data.components = sec->integer("components", data.components);
    data.spacing = sec->real("spacing", data.spacing);
    data.sigma = sec->real("sigma", data.sigma);
  } else if (kind == "annulus") {
    data.kind = DataConfig::Kind::annulus;
    data.components = sec->integer("components", 9);
    data.radius = sec->real("radius", data.radius);
    data.sigma = sec->real("sigma", data.sigma);
  } else if (kind == "random") {
    data.kind = DataConfig::Kind::random;
    data.components = sec->integer("components", data.components);
    data.location_scale = sec->real("locationScale", data.location_scale);
    data.cov_scale = sec->real("covScale", data.cov_scale);
  } else {
    fail(sec->where("kind") + ": unknown mixture kind '" + kind + "'");
  }
  sec->finish();
}

json data_json(const DataConfig& data) {
  json j;
  switch (data.kind) {
    case DataConfig::Kind::grid:
      j["kind"] = "grid";
      j["components"] = data.components;
      j["spacing"] = data.spacing;
      j["sigma"] = data.sigma;
      break;
    case DataConfig::Kind::annulus:
      j["kind"] = "annulus";
      j["components"] = data.components;
      j["radius"] = data.radius;
      j["sigma"] = data.sigma;
      break;
    case DataConfig::Kind::random:
      j["kind"] = "random";
      j["components"] = data.components;
      j["locationScale"] = data.location_scale;
      j["covScale"] = data.cov_scale;
      break;
  }
  return j;
}

void parse_gang(Section& parent, gang::GangSpec& gang) {
  auto sec = parent.child("gang");
  if (!sec) return;
  gang.noise.dim = sec->integer("noiseDim", gang.noise.dim);
  const std::string noise_kind = sec->str("noiseKind", "standardNormal");
  if (noise_kind == "standardNormal") {
    gang.noise.kind = data::NoiseDist::Kind::standard_normal;
  } else if (noise_kind == "uniformCube") {
    gang.noise.kind = data::NoiseDist::Kind::uniform_cube;
  } else {
    fail(sec->where("noiseKind") + ": unknown noise kind '" + noise_kind + "'");
  }
  gang.noise.half_width = sec->real("noiseHalfWidth", gang.noise.half_width);
  gang.gen_spec.layer_sizes = int_list(*sec, "genLayers", gang.gen_spec.layer_sizes);
  gang.gen_spec.activations = activation_list(*sec, "genActivations", gang.gen_spec.activations);
  gang.clf_spec.layer_sizes = int_list(*sec, "clfLayers", gang.clf_spec.layer_sizes);
  gang.clf_spec.activations = activation_list(*sec, "clfActivations", gang.clf_spec.activations);
  gang.phi = parse_phi(*sec, "phi", gang.phi);
  sec->finish();
}

json gang_json(const gang::GangSpec& gang) {
  json j;
  j["noiseDim"] = gang.noise.dim;
  j["noiseKind"] =
      gang.noise.kind == data::NoiseDist::Kind::standard_normal ? "standardNormal" : "uniformCube";
  j["noiseHalfWidth"] = gang.noise.half_width;
  j["genLayers"] = gang.gen_spec.layer_sizes;
  json gen_acts = json::array();
  for (auto a : gang.gen_spec.activations) gen_acts.push_back(nn::to_string(a));
  j["genActivations"] = std::move(gen_acts);
  j["clfLayers"] = gang.clf_spec.layer_sizes;
  json clf_acts = json::array();
  for (auto a : gang.clf_spec.activations) clf_acts.push_back(nn::to_string(a));
  j["clfActivations"] = std::move(clf_acts);
  j["phi"] = phi_json(gang.phi);
  return j;
}

void parse_optimizer(Section& sec, nn::OptimizerConfig& opt) {
  const std::string kind = sec.str("optimizer", opt.kind == nn::OptimizerConfig::Kind::adam
                                                    ? "adam"
                                                    : "sgd");
  if (kind == "adam") {
    opt.kind = nn::OptimizerConfig::Kind::adam;
  } else if (kind == "sgd") {
    opt.kind = nn::OptimizerConfig::Kind::sgd;
  } else {
    fail(sec.where("optimizer") + ": unknown optimizer '" + kind + "'");
  }
  opt.iterations = sec.integer("iterations", opt.iterations);
  opt.learning_rate = sec.real("learningRate", opt.learning_rate);
  opt.batch_size = sec.integer("batchSize", opt.batch_size);
  opt.beta1 = sec.real("beta1", opt.beta1);
  opt.beta2 = sec.real("beta2", opt.beta2);
  opt.epsilon = sec.real("epsilon", opt.epsilon);
}

void optimizer_json(json& j, const nn::OptimizerConfig& opt) {
  j["optimizer"] = opt.kind == nn::OptimizerConfig::Kind::adam ? "adam" : "sgd";
  j["iterations"] = opt.iterations;
  j["learningRate"] = opt.learning_rate;
  j["batchSize"] = opt.batch_size;
  j["beta1"] = opt.beta1;
  j["beta2"] = opt.beta2;
  j["epsilon"] = opt.epsilon;
}

void parse_pnm(Section& parent, pnm::PnmConfig& cfg) {
  auto sec = parent.child("pnm");
  if (!sec) return;
  cfg.max_iterations = sec->integer("maxIterations", cfg.max_iterations);
  cfg.cell_samples = sec->integer("cellSamples", cfg.cell_samples);
  cfg.solve_tol = sec->real("solveTol", cfg.solve_tol);
  cfg.ignore_non_positive_tests =
      sec->boolean("ignoreNonPositiveTests", cfg.ignore_non_positive_tests);
  if (auto rbbr = sec->child("rbbr")) {
    parse_optimizer(*rbbr, cfg.rbbr_cfg.opt);
    cfg.rbbr_cfg.uniform_fakes = rbbr->boolean("uniformFakes", cfg.rbbr_cfg.uniform_fakes);
    if (rbbr->has("uniformFakeCount")) {
      cfg.rbbr_cfg.uniform_fake_count_override = rbbr->integer("uniformFakeCount", 0);
    }
    cfg.rbbr_cfg.box_per_call = rbbr->boolean("boxPerCall", cfg.rbbr_cfg.box_per_call);
    cfg.rbbr_cfg.clf_subsample_count =
        rbbr->integer("clfSubsampleCount", cfg.rbbr_cfg.clf_subsample_count);
    if (rbbr->has("genLearningRate")) {
      cfg.rbbr_cfg.gen_learning_rate_override = rbbr->real("genLearningRate", 0.0);
    }
    rbbr->finish();
  }
  sec->finish();
}

json pnm_json(const pnm::PnmConfig& cfg) {
  json j;
  j["maxIterations"] = cfg.max_iterations;
  j["cellSamples"] = cfg.cell_samples;
  j["solveTol"] = cfg.solve_tol;
  j["ignoreNonPositiveTests"] = cfg.ignore_non_positive_tests;
  json rbbr;
  optimizer_json(rbbr, cfg.rbbr_cfg.opt);
  rbbr["uniformFakes"] = cfg.rbbr_cfg.uniform_fakes;
  if (cfg.rbbr_cfg.uniform_fake_count_override) {
    rbbr["uniformFakeCount"] = *cfg.rbbr_cfg.uniform_fake_count_override;
  }
  rbbr["boxPerCall"] = cfg.rbbr_cfg.box_per_call;
  rbbr["clfSubsampleCount"] = cfg.rbbr_cfg.clf_subsample_count;
  if (cfg.rbbr_cfg.gen_learning_rate_override) {
    rbbr["genLearningRate"] = *cfg.rbbr_cfg.gen_learning_rate_override;
  }
  j["rbbr"] = std::move(rbbr);
  return j;
}

void parse_gan(Section& parent, gan::GanConfig& cfg) {
  auto sec = parent.child("ganCfg");
  if (!sec) return;
  // One set of optimizer numbers drives both networks; the classifier's
  // iteration budget follows the step ratio.
  parse_optimizer(*sec, cfg.gen_opt);
  cfg.clf_steps_per_gen = sec->integer("clfStepsPerGen", cfg.clf_steps_per_gen);
  cfg.clf_opt = cfg.gen_opt;
  cfg.clf_opt.iterations = cfg.gen_opt.iterations * cfg.clf_steps_per_gen;
  cfg.phi = parse_phi(*sec, "phi", cfg.phi);
  sec->finish();
}

json gan_json(const gan::GanConfig& cfg) {
  json j;
  optimizer_json(j, cfg.gen_opt);
  j["clfStepsPerGen"] = cfg.clf_steps_per_gen;
  j["phi"] = phi_json(cfg.phi);
  return j;
}

void parse_eval(Section& parent, report::EvalParams& eval) {
  auto sec = parent.child("eval");
  if (!sec) return;
  eval.samples = sec->integer("samples", eval.samples);
  eval.k_sigma = sec->real("kSigma", eval.k_sigma);
  eval.resolution = sec->integer("resolution", eval.resolution);
  sec->finish();
}

json eval_json(const report::EvalParams& eval) {
  json j;
  j["samples"] = eval.samples;
  j["kSigma"] = eval.k_sigma;
  j["resolution"] = eval.resolution;
  return j;
}

/// Sections the mode reads, in serialization order.
struct ModeShape {
  bool data = false, gang = false, pnm = false, gan = false, eval = false;
  bool matrix_file = false, run_dir = false, out_dir_required = true;
};

ModeShape shape_of(RunConfig::Mode mode) {
  ModeShape s;
  switch (mode) {
    case RunConfig::Mode::pnm:
      s.data = s.gang = s.pnm = s.eval = true;
      break;
    case RunConfig::Mode::gan:
      s.data = s.gang = s.gan = s.eval = true;
      break;
    case RunConfig::Mode::solve_matrix:
      s.matrix_file = true;
      s.out_dir_required = false;
      break;
    case RunConfig::Mode::pnm_matrix:
      s.pnm = true;
      s.matrix_file = true;
      break;
    case RunConfig::Mode::eval:
      s.data = s.gang = s.eval = s.run_dir = true;
      break;
  }
  return s;
}

void validate_sections(const RunConfig& cfg) {
  const ModeShape shape = shape_of(cfg.mode);
  const std::string mode = to_string(cfg.mode);
  if (shape.matrix_file && cfg.matrix_file.empty()) {
    fail("matrixFile: required by mode " + mode);
  }
  if (shape.run_dir && cfg.run_dir.empty()) fail("runDir: required by mode " + mode);
  if (shape.out_dir_required && cfg.out_dir.empty()) fail("outDir: required by mode " + mode);

  if (shape.gang) {
    cfg.gang.gen_spec.validate();
    cfg.gang.clf_spec.validate();
    cfg.gang.noise.validate();
    cfg.gang.phi.validate();
  }
  if (shape.data) {
    if (cfg.data.components < 1) fail("data.components: must be positive");
  }
  if (cfg.mode == RunConfig::Mode::pnm) {
    cfg.pnm_cfg.validate();
  } else if (shape.pnm) {
    // pnm-matrix: the payoff matrix arrives later, so check the rest here.
    if (cfg.pnm_cfg.max_iterations < 1) fail("pnm.maxIterations: must be positive");
    if (cfg.pnm_cfg.cell_samples < 1) fail("pnm.cellSamples: must be positive");
    if (cfg.pnm_cfg.solve_tol < 0.0) fail("pnm.solveTol: cannot be negative");
  }
  if (shape.gan) cfg.gan_cfg.validate();
  if (shape.eval) cfg.eval.validate();
}

RunConfig parse_json(const json& root) {
  RunConfig cfg;
  Section top(root, "");

  const std::string mode = top.str("mode", "");
  if (mode.empty()) fail("mode: required");
  cfg.mode = mode_from_string(mode);
  const ModeShape shape = shape_of(cfg.mode);

  if (top.has("seed")) {
    const json& raw = root.at("seed");
    if (!raw.is_number_unsigned() && !(raw.is_number_integer() && raw.get<std::int64_t>() >= 0)) {
      fail("seed: expected a nonnegative integer");
    }
  }
  cfg.seed = top.get<std::uint64_t>("seed", "a nonnegative integer", 0);
  cfg.out_dir = top.str("outDir", "");
  if (shape.matrix_file) cfg.matrix_file = top.str("matrixFile", "");
  if (shape.run_dir) cfg.run_dir = top.str("runDir", "");

  // Desk-scale architecture defaults: two 64-unit relu hidden layers.
  cfg.gang.gen_spec.layer_sizes = {2, 64, 64, 2};
  cfg.gang.gen_spec.activations = {nn::Activation::relu, nn::Activation::relu,
                                   nn::Activation::linear};
  cfg.gang.clf_spec.layer_sizes = {2, 64, 64, 1};
  cfg.gang.clf_spec.activations = {nn::Activation::relu, nn::Activation::relu,
                                   nn::Activation::sigmoid};
  cfg.gang.phi = gang::MeasuringFn::make_bounded_log(1e-5);

  if (shape.data) parse_data(top, cfg.data);
  if (shape.gang) parse_gang(top, cfg.gang);
  if (shape.pnm) parse_pnm(top, cfg.pnm_cfg);
  if (shape.gan) parse_gan(top, cfg.gan_cfg);
  if (shape.eval) parse_eval(top, cfg.eval);
  top.finish();

  cfg.pnm_cfg.oracle =
      cfg.mode == RunConfig::Mode::pnm_matrix ? pnm::OracleKind::exact_matrix
                                              : pnm::OracleKind::neural;
  cfg.pnm_cfg.master_seed = cfg.seed;
  validate_sections(cfg);
  return cfg;
}

std::pair<std::size_t, std::size_t> line_column(const std::string& text, std::size_t byte) {
  std::size_t line = 1, col = 1;
  for (std::size_t i = 0; i < byte && i < text.size(); ++i) {
    if (text[i] == '\n') {
      ++line;
      col = 1;
    } else {
      ++col;
    }
  }
  return {line, col};
}

}  // namespace

std::string to_string(RunConfig::Mode mode) {
  switch (mode) {
    case RunConfig::Mode::pnm: return "pnm";
    case RunConfig::Mode::gan: return "gan";
    case RunConfig::Mode::solve_matrix: return "solve-matrix";
    case RunConfig::Mode::pnm_matrix: return "pnm-matrix";
    case RunConfig::Mode::eval: return "eval";
  }
  throw std::logic_error("to_string: bad mode");
}

RunConfig::Mode mode_from_string(const std::string& s) {
  if (s == "pnm") return RunConfig::Mode::pnm;
  if (s == "gan") return RunConfig::Mode::gan;
  if (s == "solve-matrix") return RunConfig::Mode::solve_matrix;
  if (s == "pnm-matrix") return RunConfig::Mode::pnm_matrix;
  if (s == "eval") return RunConfig::Mode::eval;
  fail("mode: unknown mode '" + s + "'");
}

RunConfig parse_config_text(const std::string& text, const std::string& origin) {
  json root;
  try {
    root = json::parse(text);
  } catch (const json::parse_error& e) {
    const auto [line, col] = line_column(text, e.byte > 0 ? e.byte - 1 : 0);
    fail(origin + ": parse error at line " + std::to_string(line) + " column " +
         std::to_string(col));
  }
  return parse_json(root);
}

RunConfig parse_config(const std::filesystem::path& file) {
  std::ifstream in(file, std::ios::binary);
  if (!in) fail("cannot open " + file.string());
  std::ostringstream ss;
  ss << in.rdbuf();
  return parse_config_text(ss.str(), file.string());
}

std::string serialize(const RunConfig& cfg) {
  const ModeShape shape = shape_of(cfg.mode);
  json j;
  j["mode"] = to_string(cfg.mode);
  j["seed"] = cfg.seed;
  if (!cfg.out_dir.empty() || shape.out_dir_required) j["outDir"] = cfg.out_dir;
  if (shape.matrix_file) j["matrixFile"] = cfg.matrix_file;
  if (shape.run_dir) j["runDir"] = cfg.run_dir;
  if (shape.data) j["data"] = data_json(cfg.data);
  if (shape.gang) j["gang"] = gang_json(cfg.gang);
  if (shape.pnm) j["pnm"] = pnm_json(cfg.pnm_cfg);
  if (shape.gan) j["ganCfg"] = gan_json(cfg.gan_cfg);
  if (shape.eval) j["eval"] = eval_json(cfg.eval);
  return j.dump(2) + "\n";
}

void write_resolved_config(const RunConfig& cfg, const std::filesystem::path& dir) {
  std::filesystem::create_directories(dir);
  const auto file = dir / "resolved-config.json";
  std::ofstream out(file, std::ios::trunc | std::ios::binary);
  if (!out) fail("cannot open " + file.string());
  out << serialize(cfg);
  out.flush();
  if (!out) fail("write failed for " + file.string());
}

data::GaussianMixture build_mixture(const RunConfig& cfg) {
  switch (cfg.data.kind) {
    case DataConfig::Kind::grid:
      return data::make_grid(cfg.data.components, cfg.data.spacing, cfg.data.sigma);
    case DataConfig::Kind::annulus:
      return data::make_annulus(cfg.data.components, cfg.data.radius, cfg.data.sigma);
    case DataConfig::Kind::random: {
      Rng rng(derive_seed(cfg.seed, {kDataTag}));
      return data::make_random(cfg.data.components, rng, cfg.data.location_scale,
                               cfg.data.cov_scale);
    }
  }
  throw std::logic_error("build_mixture: bad kind");
}

gang::GangSpec build_gang_spec(const RunConfig& cfg) {
  gang::GangSpec spec = cfg.gang;
  spec.data_dist = build_mixture(cfg);
  spec.validate();
  return spec;
}

pnm::PnmConfig build_pnm_config(const RunConfig& cfg) {
  pnm::PnmConfig out = cfg.pnm_cfg;
  out.master_seed = cfg.seed;
  return out;
}

}  // namespace gangs::cli
