#include "gangs/pnm.hpp"

#include <json.hpp>

#include <algorithm>
#include <chrono>
#include <fstream>
#include <iomanip>
#include <sstream>
#include <stdexcept>
#include <utility>

#include "gangs/threads.hpp"

namespace gangs::pnm {

namespace {

// Substream tags: every random decision derives its seed from the master
// seed and a structural path, never from consumption order. That is what
// makes checkpoint resume retrace the uninterrupted run bit for bit.
constexpr std::uint64_t kInitTag = 0x1417;
constexpr std::uint64_t kOracleTag = 0x04AC1E;
constexpr std::uint64_t kTestTag = 0x7E57;
constexpr std::uint64_t kCellTag = 0xC311;

std::string strategy_file(const char* role, int index) {
  std::ostringstream os;
  os << role << '_' << std::setw(3) << std::setfill('0') << index << ".params";
  return os.str();
}

double cell_value(const gang::GangSpec& spec, const nn::NetworkParams& gen,
                  const nn::NetworkParams& clf, const PnmConfig& cfg, int row, int col) {
  Rng rng(derive_seed(cfg.master_seed, {kCellTag, static_cast<std::uint64_t>(row),
                                        static_cast<std::uint64_t>(col)}));
  return gang::simulate_cell(spec, gen, clf, cfg.cell_samples, rng);
}

}  // namespace

double PnmConfig::effective_solve_tol() const {
  if (solve_tol > 0.0) return solve_tol;
  return oracle == OracleKind::exact_matrix ? 1e-9 : 1e-6;
}

void PnmConfig::validate() const {
  if (max_iterations <= 0) throw std::invalid_argument("PnmConfig: max iterations must be positive");
  if (cell_samples <= 0) throw std::invalid_argument("PnmConfig: cell samples must be positive");
  if (solve_tol < 0.0) throw std::invalid_argument("PnmConfig: solver tolerance cannot be negative");
  if (oracle == OracleKind::exact_matrix) {
    full_game.validate();
  } else {
    rbbr_cfg.validate();
  }
}

int PnmState::gen_count() const {
  return oracle == OracleKind::exact_matrix ? static_cast<int>(gen_rows.size())
                                            : static_cast<int>(gen_strategies.size());
}

int PnmState::clf_count() const {
  return oracle == OracleKind::exact_matrix ? static_cast<int>(clf_cols.size())
                                            : static_cast<int>(clf_strategies.size());
}

gang::MixedNetStrategy PnmState::generator_mixture() const {
  if (oracle != OracleKind::neural) {
    throw std::logic_error("PnmState: no network mixture in exact matrix mode");
  }
  gang::MixedNetStrategy mix;
  mix.members = gen_strategies;
  mix.weights = gen_mix;
  return mix;
}

gang::MixedNetStrategy PnmState::classifier_mixture() const {
  if (oracle != OracleKind::neural) {
    throw std::logic_error("PnmState: no network mixture in exact matrix mode");
  }
  gang::MixedNetStrategy mix;
  mix.members = clf_strategies;
  mix.weights = clf_mix;
  return mix;
}

void PnmState::validate() const {
  if (subgame.rows != gen_count() || subgame.cols != clf_count()) {
    throw std::invalid_argument("PnmState: subgame dims do not match strategy counts");
  }
  subgame.validate();
  gen_mix.validate();
  clf_mix.validate();
  if (gen_mix.size() != subgame.rows || clf_mix.size() != subgame.cols) {
    throw std::invalid_argument("PnmState: mixture sizes do not match subgame dims");
  }
  if (static_cast<int>(history.size()) != completed_iterations) {
    throw std::invalid_argument("PnmState: history length does not match completed iterations");
  }
}

game::MixedStrategy lift_mix(const game::MixedStrategy& sub, std::span<const int> indices,
                             int full_size) {
  if (sub.size() != static_cast<int>(indices.size())) {
    throw std::invalid_argument("lift_mix: mix size does not match index count");
  }
  game::MixedStrategy out;
  out.probs.assign(static_cast<std::size_t>(full_size), 0.0);
  for (std::size_t k = 0; k < indices.size(); ++k) {
    const int id = indices[k];
    if (id < 0 || id >= full_size) throw std::invalid_argument("lift_mix: index out of range");
    out.probs[static_cast<std::size_t>(id)] += sub.probs[k];
  }
  return out;
}

PnmState initialize(const PnmConfig& cfg) {
  cfg.validate();
  if (cfg.oracle != OracleKind::exact_matrix) {
    throw std::invalid_argument("pnm: the neural oracle needs a game description");
  }
  PnmState s;
  s.oracle = OracleKind::exact_matrix;
  s.gen_rows = {0};
  s.clf_cols = {0};
  s.subgame = game::PayoffMatrix(1, 1, cfg.full_game.at(0, 0));
  s.gen_mix = game::MixedStrategy::pure(0, 1);
  s.clf_mix = game::MixedStrategy::pure(0, 1);
  s.subgame_value = cfg.full_game.at(0, 0);
  return s;
}

PnmState initialize(const PnmConfig& cfg, const gang::GangSpec& spec) {
  if (cfg.oracle == OracleKind::exact_matrix) return initialize(cfg);
  cfg.validate();
  spec.validate();

  // Warm both players up against a throwaway random opponent so the 1x1 game
  // starts from strategies the oracle budget could actually produce.
  Rng clf_probe_rng(derive_seed(cfg.master_seed, {kInitTag, 0}));
  auto clf_probe = gang::MixedNetStrategy::singleton(nn::glorot_init(spec.clf_spec, clf_probe_rng));
  Rng gen_probe_rng(derive_seed(cfg.master_seed, {kInitTag, 2}));
  auto gen_probe = gang::MixedNetStrategy::singleton(nn::glorot_init(spec.gen_spec, gen_probe_rng));

  nn::NetworkParams gen0, clf0;
  parallel_for(2, [&](int task) {
    if (task == 0) {
      Rng rng(derive_seed(cfg.master_seed, {kInitTag, 1}));
      gen0 = rbbr::train_generator_rbbr(spec, clf_probe, cfg.rbbr_cfg, rng);
    } else {
      Rng rng(derive_seed(cfg.master_seed, {kInitTag, 3}));
      clf0 = rbbr::train_classifier_rbbr(spec, gen_probe, cfg.rbbr_cfg, rng);
    }
  });

  PnmState s;
  s.oracle = OracleKind::neural;
  const double v = cell_value(spec, gen0, clf0, cfg, 0, 0);
  s.gen_strategies.push_back(std::move(gen0));
  s.clf_strategies.push_back(std::move(clf0));
  s.subgame = game::PayoffMatrix(1, 1, v);
  s.gen_mix = game::MixedStrategy::pure(0, 1);
  s.clf_mix = game::MixedStrategy::pure(0, 1);
  s.subgame_value = v;
  return s;
}

void iterate(PnmState& state, const PnmConfig& cfg) {
  cfg.validate();
  state.validate();
  if (cfg.oracle != OracleKind::exact_matrix || state.oracle != OracleKind::exact_matrix) {
    throw std::invalid_argument("pnm: exact iterate requires exact matrix mode");
  }
  const auto start_time = std::chrono::steady_clock::now();
  const auto& full = cfg.full_game;
  const int t = state.completed_iterations + 1;

  const auto full_gen = lift_mix(state.gen_mix, state.gen_rows, full.rows);
  const auto full_clf = lift_mix(state.clf_mix, state.clf_cols, full.cols);
  const auto br_row = game::best_response(full, full_clf, game::Player::row);
  const auto br_col = game::best_response(full, full_gen, game::Player::column);

  HistoryRecord rec;
  rec.iteration = t;
  rec.u_g_br = br_row.value;
  rec.u_c_br = br_col.value;
  rec.u_brs = br_row.value + br_col.value;

  bool grew = false;
  if (!(rec.u_brs <= 0.0 && cfg.ignore_non_positive_tests)) {
    auto rows = state.gen_rows;
    auto cols = state.clf_cols;
    if (std::find(rows.begin(), rows.end(), br_row.index) == rows.end()) {
      rows.push_back(br_row.index);
      grew = true;
    }
    if (std::find(cols.begin(), cols.end(), br_col.index) == cols.end()) {
      cols.push_back(br_col.index);
      grew = true;
    }
    if (grew) {
      auto grown = game::submatrix(full, rows, cols);
      auto sol = game::solve_zero_sum(grown, cfg.effective_solve_tol());
      state.gen_rows = std::move(rows);
      state.clf_cols = std::move(cols);
      state.subgame = std::move(grown);
      state.gen_mix = std::move(sol.row_mix);
      state.clf_mix = std::move(sol.col_mix);
      state.subgame_value = sol.value;
    }
  }

  rec.accepted = grew;
  rec.subgame_value = state.subgame_value;
  rec.gen_count = state.gen_count();
  rec.clf_count = state.clf_count();
  rec.wall_seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - start_time).count();
  state.history.push_back(rec);
  state.completed_iterations = t;
}

void iterate(PnmState& state, const PnmConfig& cfg, const gang::GangSpec& spec) {
  if (cfg.oracle == OracleKind::exact_matrix) {
    iterate(state, cfg);
    return;
  }
  cfg.validate();
  state.validate();
  if (state.oracle != OracleKind::neural) {
    throw std::invalid_argument("pnm: neural iterate on an exact matrix state");
  }
  const auto start_time = std::chrono::steady_clock::now();
  const int t = state.completed_iterations + 1;
  const auto gen_mix = state.generator_mixture();
  const auto clf_mix = state.classifier_mixture();

  // The two oracles run concurrently on independent substreams.
  nn::NetworkParams new_gen, new_clf;
  parallel_for(2, [&](int task) {
    if (task == 0) {
      Rng rng(derive_seed(cfg.master_seed, {kOracleTag, static_cast<std::uint64_t>(t), 0}));
      new_gen = rbbr::train_generator_rbbr(spec, clf_mix, cfg.rbbr_cfg, rng);
    } else {
      Rng rng(derive_seed(cfg.master_seed, {kOracleTag, static_cast<std::uint64_t>(t), 1}));
      new_clf = rbbr::train_classifier_rbbr(spec, gen_mix, cfg.rbbr_cfg, rng);
    }
  });

  Rng test_rng(derive_seed(cfg.master_seed, {kTestTag, static_cast<std::uint64_t>(t)}));
  const auto test =
      rbbr::u_brs_detail(spec, gen_mix, clf_mix, new_gen, new_clf, cfg.cell_samples, test_rng);

  HistoryRecord rec;
  rec.iteration = t;
  rec.u_g_br = test.u_g_br;
  rec.u_c_br = test.u_c_br;
  rec.u_brs = test.total();

  if (!(rec.u_brs <= 0.0 && cfg.ignore_non_positive_tests)) {
    const int old_rows = state.gen_count();
    const int old_cols = state.clf_count();

    // New payoff cells: the fresh row against every column, every row against
    // the fresh column, and the fresh pairing. Old cells are never
    // re-simulated; the memory stays monotone.
    struct CellId {
      int row, col;
    };
    std::vector<CellId> cells;
    cells.reserve(static_cast<std::size_t>(old_rows + old_cols + 1));
    for (int j = 0; j < old_cols; ++j) cells.push_back({old_rows, j});
    for (int i = 0; i < old_rows; ++i) cells.push_back({i, old_cols});
    cells.push_back({old_rows, old_cols});
    std::vector<double> values(cells.size());
    parallel_for(static_cast<int>(cells.size()), [&](int k) {
      const auto [i, j] = cells[static_cast<std::size_t>(k)];
      const auto& gen = i == old_rows ? new_gen : state.gen_strategies[static_cast<std::size_t>(i)];
      const auto& clf = j == old_cols ? new_clf : state.clf_strategies[static_cast<std::size_t>(j)];
      values[static_cast<std::size_t>(k)] = cell_value(spec, gen, clf, cfg, i, j);
    });

    auto grown = state.subgame;
    grown.append_row(std::span<const double>(values.data(), static_cast<std::size_t>(old_cols)));
    grown.append_col(
        std::span<const double>(values.data() + old_cols, static_cast<std::size_t>(old_rows + 1)));
    auto sol = game::solve_zero_sum(grown, cfg.effective_solve_tol());

    state.gen_strategies.push_back(std::move(new_gen));
    state.clf_strategies.push_back(std::move(new_clf));
    state.subgame = std::move(grown);
    state.gen_mix = std::move(sol.row_mix);
    state.clf_mix = std::move(sol.col_mix);
    state.subgame_value = sol.value;
    rec.accepted = true;
  }

  rec.subgame_value = state.subgame_value;
  rec.gen_count = state.gen_count();
  rec.clf_count = state.clf_count();
  rec.wall_seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - start_time).count();
  state.history.push_back(rec);
  state.completed_iterations = t;
}

namespace {

PnmState run_impl(const PnmConfig& cfg, const gang::GangSpec* spec, const RunOptions& opts) {
  cfg.validate();
  const auto& dir = opts.checkpoint_dir;
  const bool checkpointing = !dir.empty();

  PnmState state;
  if (checkpointing && std::filesystem::exists(dir / "state.json")) {
    state = load_checkpoint(dir);
    if (state.oracle != cfg.oracle) {
      throw std::invalid_argument("pnm: checkpoint oracle mode does not match the config");
    }
  } else {
    state = spec ? initialize(cfg, *spec) : initialize(cfg);
    if (checkpointing) save_checkpoint(state, dir);
  }

  while (state.completed_iterations < cfg.max_iterations) {
    try {
      if (cfg.oracle == OracleKind::neural) {
        iterate(state, cfg, *spec);
      } else {
        iterate(state, cfg);
      }
    } catch (...) {
      // Leave a usable snapshot of the last consistent state behind.
      if (checkpointing) {
        try {
          save_checkpoint(state, dir);
        } catch (...) {
        }
      }
      throw;
    }
    if (cfg.oracle == OracleKind::exact_matrix) {
      const auto& rec = state.history.back();
      if (rec.u_brs <= 0.0 || !rec.accepted) {
        // No oracle can improve on the current mixtures: either the test is
        // nonpositive or both responses already sit in the memory.
        state.rb_ne_certified = true;
      }
    } else {
      state.rb_ne_certified = state.history.back().u_brs <= 0.0;
    }
    if (checkpointing) save_checkpoint(state, dir);
    if (cfg.oracle == OracleKind::exact_matrix && state.rb_ne_certified) break;
  }
  return state;
}

}  // namespace

PnmState run(const PnmConfig& cfg, const gang::GangSpec& spec, const RunOptions& opts) {
  if (cfg.oracle == OracleKind::exact_matrix) return run_impl(cfg, nullptr, opts);
  return run_impl(cfg, &spec, opts);
}

PnmState run(const PnmConfig& cfg, const RunOptions& opts) {
  if (cfg.oracle != OracleKind::exact_matrix) {
    throw std::invalid_argument("pnm: the neural oracle needs a game description");
  }
  return run_impl(cfg, nullptr, opts);
}

namespace {

const char* oracle_name(OracleKind k) {
  return k == OracleKind::exact_matrix ? "exactMatrix" : "neural";
}

OracleKind oracle_from_name(const std::string& s) {
  if (s == "exactMatrix") return OracleKind::exact_matrix;
  if (s == "neural") return OracleKind::neural;
  throw std::runtime_error("checkpoint: unknown oracle kind '" + s + "'");
}

nlohmann::ordered_json record_json(const HistoryRecord& r) {
  nlohmann::ordered_json j;
  j["iteration"] = r.iteration;
  j["uGBr"] = r.u_g_br;
  j["uCBr"] = r.u_c_br;
  j["uBrs"] = r.u_brs;
  j["subgameValue"] = r.subgame_value;
  j["genCount"] = r.gen_count;
  j["clfCount"] = r.clf_count;
  j["accepted"] = r.accepted;
  j["wallSeconds"] = r.wall_seconds;
  return j;
}

HistoryRecord record_from_json(const nlohmann::json& j) {
  HistoryRecord r;
  r.iteration = j.at("iteration").get<int>();
  r.u_g_br = j.at("uGBr").get<double>();
  r.u_c_br = j.at("uCBr").get<double>();
  r.u_brs = j.at("uBrs").get<double>();
  r.subgame_value = j.at("subgameValue").get<double>();
  r.gen_count = j.at("genCount").get<int>();
  r.clf_count = j.at("clfCount").get<int>();
  r.accepted = j.at("accepted").get<bool>();
  r.wall_seconds = j.at("wallSeconds").get<double>();
  return r;
}

}  // namespace

void save_checkpoint(const PnmState& state, const std::filesystem::path& dir) {
  state.validate();
  std::filesystem::create_directories(dir);

  if (state.oracle == OracleKind::neural) {
    for (int i = 0; i < state.gen_count(); ++i) {
      nn::save_params(state.gen_strategies[static_cast<std::size_t>(i)],
                      dir / strategy_file("gen", i));
    }
    for (int j = 0; j < state.clf_count(); ++j) {
      nn::save_params(state.clf_strategies[static_cast<std::size_t>(j)],
                      dir / strategy_file("clf", j));
    }
  }
  game::save_csv(state.subgame, dir / "subgame.csv");

  {
    std::ofstream h(dir / "history.jsonl", std::ios::trunc);
    if (!h) throw std::runtime_error("checkpoint: cannot write " + (dir / "history.jsonl").string());
    for (const auto& rec : state.history) h << record_json(rec).dump() << '\n';
  }

  nlohmann::ordered_json j;
  j["oracle"] = oracle_name(state.oracle);
  j["completedIterations"] = state.completed_iterations;
  j["rbNeCertified"] = state.rb_ne_certified;
  j["subgameValue"] = state.subgame_value;
  j["genMix"] = state.gen_mix.probs;
  j["clfMix"] = state.clf_mix.probs;
  j["genRows"] = state.gen_rows;
  j["clfCols"] = state.clf_cols;
  j["genCount"] = state.gen_count();
  j["clfCount"] = state.clf_count();

  // The state file lands last, via rename, so a complete state.json always
  // sits next to the files it describes.
  const auto tmp = dir / "state.json.tmp";
  {
    std::ofstream f(tmp, std::ios::trunc);
    if (!f) throw std::runtime_error("checkpoint: cannot write " + tmp.string());
    f << j.dump(2) << '\n';
  }
  std::filesystem::rename(tmp, dir / "state.json");
}

PnmState load_checkpoint(const std::filesystem::path& dir) {
  std::ifstream f(dir / "state.json");
  if (!f) throw std::runtime_error("checkpoint: cannot read " + (dir / "state.json").string());
  nlohmann::json j = nlohmann::json::parse(f);

  PnmState s;
  s.oracle = oracle_from_name(j.at("oracle").get<std::string>());
  s.completed_iterations = j.at("completedIterations").get<int>();
  s.rb_ne_certified = j.at("rbNeCertified").get<bool>();
  s.subgame_value = j.at("subgameValue").get<double>();
  s.gen_mix.probs = j.at("genMix").get<std::vector<double>>();
  s.clf_mix.probs = j.at("clfMix").get<std::vector<double>>();
  s.gen_rows = j.at("genRows").get<std::vector<int>>();
  s.clf_cols = j.at("clfCols").get<std::vector<int>>();
  const int gen_count = j.at("genCount").get<int>();
  const int clf_count = j.at("clfCount").get<int>();

  s.subgame = game::load_csv(dir / "subgame.csv");

  if (s.oracle == OracleKind::neural) {
    for (int i = 0; i < gen_count; ++i) {
      s.gen_strategies.push_back(nn::load_params(dir / strategy_file("gen", i)));
    }
    for (int jdx = 0; jdx < clf_count; ++jdx) {
      s.clf_strategies.push_back(nn::load_params(dir / strategy_file("clf", jdx)));
    }
  }

  std::ifstream h(dir / "history.jsonl");
  if (!h) throw std::runtime_error("checkpoint: cannot read " + (dir / "history.jsonl").string());
  std::string line;
  while (std::getline(h, line)) {
    if (line.empty()) continue;
    s.history.push_back(record_from_json(nlohmann::json::parse(line)));
  }

  s.validate();
  return s;
}

}  // namespace gangs::pnm
