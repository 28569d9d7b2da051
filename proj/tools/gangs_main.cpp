#include <CLI11.hpp>

#include <cstdint>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <optional>
#include <string>

#include "gangs/baseline_gan.hpp"
#include "gangs/common.hpp"
#include "gangs/eval_report.hpp"
#include "gangs/matrix_game.hpp"
#include "gangs/pnm.hpp"
#include "gangs/rng.hpp"
#include "run_config.hpp"

namespace fs = std::filesystem;
using namespace gangs;

namespace {

// 0 success, 2 config, 3 runtime, 4 artifact I/O.
constexpr int kExitOk = 0;
constexpr int kExitConfig = 2;
constexpr int kExitRuntime = 3;
constexpr int kExitIo = 4;

// Report sampling sits outside the training substream tags, so evaluating a
// run never perturbs what the run itself would compute.
constexpr std::uint64_t kReportTag = 0x5CA77E;
// Baseline training consumes one dedicated stream per run.
constexpr std::uint64_t kGanTag = 0x6A0;

[[noreturn]] void config_error(const std::string& what) {
  throw std::runtime_error("config: " + what);
}

/// Command-line overrides, applied after the file parse.
struct Overrides {
  std::optional<std::uint64_t> seed;
  std::string out;
  std::optional<int> max_iters;
  std::string uniform_fakes;  // "", "on", "off"
  std::optional<double> gen_lr;
  std::string matrix;  // positional, matrix modes only
};

/// File config plus overrides, revalidated through the canonical round trip
/// so flag-injected values obey the same rules as file-supplied ones.
cli::RunConfig resolve(const std::string& config_file, const Overrides& ov,
                       cli::RunConfig::Mode mode) {
  cli::RunConfig cfg;
  if (!config_file.empty()) {
    cfg = cli::parse_config(config_file);
    if (cfg.mode != mode) {
      config_error("mode '" + cli::to_string(cfg.mode) + "' does not match subcommand '" +
                   cli::to_string(mode) + "'");
    }
  } else {
    cfg.mode = mode;
  }
  if (ov.seed) cfg.seed = *ov.seed;
  if (!ov.out.empty()) cfg.out_dir = ov.out;
  if (!ov.matrix.empty()) cfg.matrix_file = ov.matrix;
  if (ov.max_iters) cfg.pnm_cfg.max_iterations = *ov.max_iters;
  if (ov.uniform_fakes == "on") cfg.pnm_cfg.rbbr_cfg.uniform_fakes = true;
  if (ov.uniform_fakes == "off") cfg.pnm_cfg.rbbr_cfg.uniform_fakes = false;
  if (ov.gen_lr) cfg.pnm_cfg.rbbr_cfg.gen_learning_rate_override = *ov.gen_lr;
  return cli::parse_config_text(cli::serialize(cfg), "<resolved>");
}

void print_mix(const char* label, const game::MixedStrategy& mix) {
  std::cout << label;
  for (double p : mix.probs) std::cout << ' ' << format_double(p);
  std::cout << '\n';
}

void print_coverage(const report::Report& rep) {
  std::cout << "coverage: " << rep.coverage.modes_hit << " of " << rep.coverage.total_modes
            << " modes, high quality fraction " << format_double(rep.coverage.high_quality_fraction)
            << '\n';
}

/// value, certified exploitability, and both mixes in one self-describing CSV.
void write_solution(const fs::path& dir, double value, double exploitability,
                    const game::MixedStrategy& row_mix, const game::MixedStrategy& col_mix) {
  fs::create_directories(dir);
  const auto file = dir / "solution.csv";
  std::ofstream out(file, std::ios::trunc | std::ios::binary);
  if (!out) throw std::runtime_error("solution: cannot open " + file.string());
  out << "quantity,index,value\n";
  out << "value,," << format_double(value) << '\n';
  out << "exploitability,," << format_double(exploitability) << '\n';
  for (int i = 0; i < row_mix.size(); ++i) {
    out << "row," << i << ',' << format_double(row_mix.probs[static_cast<std::size_t>(i)]) << '\n';
  }
  for (int j = 0; j < col_mix.size(); ++j) {
    out << "col," << j << ',' << format_double(col_mix.probs[static_cast<std::size_t>(j)]) << '\n';
  }
  out.flush();
  if (!out) throw std::runtime_error("solution: write failed for " + file.string());
}

int run_pnm(const cli::RunConfig& cfg) {
  const auto spec = cli::build_gang_spec(cfg);
  const auto pcfg = cli::build_pnm_config(cfg);
  const fs::path out(cfg.out_dir);
  cli::write_resolved_config(cfg, out);
  pnm::RunOptions opts;
  opts.checkpoint_dir = out;
  const auto state = pnm::run(pcfg, spec, opts);

  Rng rng(derive_seed(cfg.seed, {kReportTag}));
  const auto rep = report::make_report(spec, state, cfg.eval, rng);
  report::emit(rep, out);

  const double final_test = state.history.empty() ? 0.0 : state.history.back().u_brs;
  std::cout << "pnm: " << state.completed_iterations << " iterations, "
            << (state.rb_ne_certified ? "certified" : "not certified")
            << ", final interaction test " << format_double(final_test) << '\n';
  print_coverage(rep);
  std::cout << "artifacts: " << out.string() << '\n';
  return kExitOk;
}

int run_gan(const cli::RunConfig& cfg) {
  const auto spec = cli::build_gang_spec(cfg);
  const fs::path out(cfg.out_dir);
  cli::write_resolved_config(cfg, out);

  Rng train_rng(derive_seed(cfg.seed, {kGanTag}));
  const auto result = gan::train_gan(spec, cfg.gan_cfg, train_rng);

  fs::create_directories(out);
  nn::save_params(result.gen, out / "gen.params");
  nn::save_params(result.clf, out / "clf.params");
  {
    const auto file = out / "training-history.csv";
    std::ofstream hist(file, std::ios::trunc | std::ios::binary);
    if (!hist) throw std::runtime_error("emit: cannot open " + file.string());
    hist << "round,clf_loss,gen_loss\n";
    for (const auto& rec : result.history) {
      hist << rec.round << ',' << format_double(rec.clf_loss) << ','
           << format_double(rec.gen_loss) << '\n';
    }
    hist.flush();
    if (!hist) throw std::runtime_error("emit: write failed for " + file.string());
  }

  Rng rng(derive_seed(cfg.seed, {kReportTag}));
  const auto rep = report::make_report(spec, result, cfg.eval, rng);
  report::emit(rep, out);

  std::cout << "gan: " << result.history.size() << " rounds\n";
  print_coverage(rep);
  std::cout << "artifacts: " << out.string() << '\n';
  return kExitOk;
}

int run_solve_matrix(const cli::RunConfig& cfg) {
  const auto m = game::load_csv(cfg.matrix_file);
  const auto sol = game::solve_zero_sum(m);
  std::cout << "value " << format_double(sol.value) << '\n';
  print_mix("row mix:", sol.row_mix);
  print_mix("col mix:", sol.col_mix);
  std::cout << "exploitability " << format_double(sol.exploitability) << '\n';
  if (!cfg.out_dir.empty()) {
    const fs::path out(cfg.out_dir);
    cli::write_resolved_config(cfg, out);
    write_solution(out, sol.value, sol.exploitability, sol.row_mix, sol.col_mix);
  }
  return kExitOk;
}

int run_pnm_matrix(const cli::RunConfig& cfg) {
  auto pcfg = cli::build_pnm_config(cfg);
  pcfg.full_game = game::load_csv(cfg.matrix_file);
  pcfg.validate();
  const fs::path out(cfg.out_dir);
  cli::write_resolved_config(cfg, out);
  pnm::RunOptions opts;
  opts.checkpoint_dir = out;
  const auto state = pnm::run(pcfg, opts);

  const auto row_mix = pnm::lift_mix(state.gen_mix, state.gen_rows, pcfg.full_game.rows);
  const auto col_mix = pnm::lift_mix(state.clf_mix, state.clf_cols, pcfg.full_game.cols);
  const double expl = game::exploitability(pcfg.full_game, row_mix, col_mix);

  std::cout << "pnm-matrix: " << state.completed_iterations << " iterations, "
            << (state.rb_ne_certified ? "certified" : "not certified") << '\n';
  std::cout << "subgame value " << format_double(state.subgame_value) << '\n';
  print_mix("row mix:", row_mix);
  print_mix("col mix:", col_mix);
  std::cout << "exploitability " << format_double(expl) << '\n';
  write_solution(out, state.subgame_value, expl, row_mix, col_mix);
  return kExitOk;
}

int run_eval(const cli::RunConfig& cfg) {
  const auto spec = cli::build_gang_spec(cfg);
  const auto state = pnm::load_checkpoint(cfg.run_dir);
  if (state.oracle != pnm::OracleKind::neural) {
    throw std::runtime_error("eval: " + cfg.run_dir + " holds an exact-oracle run; " +
                             "only sample-based runs have report artifacts");
  }
  const fs::path out(cfg.out_dir);
  cli::write_resolved_config(cfg, out);
  Rng rng(derive_seed(cfg.seed, {kReportTag}));
  const auto rep = report::make_report(spec, state, cfg.eval, rng);
  report::emit(rep, out);
  print_coverage(rep);
  std::cout << "artifacts: " << out.string() << '\n';
  return kExitOk;
}

int classify(const std::string& what) {
  if (what.rfind("config:", 0) == 0) return kExitConfig;
  if (what.find("cannot open") != std::string::npos ||
      what.find("write failed") != std::string::npos || what.rfind("emit:", 0) == 0 ||
      what.rfind("parse:", 0) == 0) {
    return kExitIo;
  }
  return kExitRuntime;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"adversarial generative networks trained as finite games"};
  app.require_subcommand(1);

  std::string config_file;
  Overrides ov;
  std::uint64_t seed_value = 0;
  int max_iters_value = 0;
  double gen_lr_value = 0.0;

  auto add_common = [&](CLI::App* sub, bool config_required) {
    auto* c = sub->add_option("--config", config_file, "run configuration file");
    if (config_required) c->required();
    sub->add_option("--seed", seed_value, "master seed, overrides the config seed");
    sub->add_option("--out", ov.out, "output directory, overrides the config outDir");
    return sub;
  };

  auto* pnm_cmd = add_common(app.add_subcommand("pnm", "strategy-memory adversarial training"),
                             /*config_required=*/true);
  pnm_cmd->add_option("--max-iters", max_iters_value, "cap on memory-growth iterations");
  pnm_cmd->add_option("--uniform-fakes", ov.uniform_fakes,
                      "augment classifier oracle batches with box-uniform fakes")
      ->check(CLI::IsMember({"on", "off"}));
  pnm_cmd->add_option("--gen-lr", gen_lr_value,
                      "generator oracle learning rate (slow-generator study)");

  auto* gan_cmd = add_common(app.add_subcommand("gan", "single-network adversarial baseline"),
                             /*config_required=*/true);

  auto* solve_cmd = add_common(
      app.add_subcommand("solve-matrix", "solve one zero-sum payoff matrix exactly"),
      /*config_required=*/false);
  solve_cmd->add_option("matrix", ov.matrix, "payoff CSV, overrides the config matrixFile");

  auto* pm_cmd = add_common(
      app.add_subcommand("pnm-matrix", "double oracle with exact best responses"),
      /*config_required=*/true);
  pm_cmd->add_option("--max-iters", max_iters_value, "cap on memory-growth iterations");
  pm_cmd->add_option("matrix", ov.matrix, "payoff CSV, overrides the config matrixFile");

  auto* eval_cmd = add_common(
      app.add_subcommand("eval", "re-evaluate a finished run's checkpoint"),
      /*config_required=*/true);

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int rc = app.exit(e);  // prints the usage message
    return rc == 0 ? kExitOk : kExitConfig;
  }

  CLI::App* sub = app.get_subcommands().front();
  auto given = [&](const char* name) {
    const CLI::Option* opt = sub->get_option_no_throw(name);
    return opt != nullptr && opt->count() > 0;
  };
  if (given("--seed")) ov.seed = seed_value;
  if (given("--max-iters")) ov.max_iters = max_iters_value;
  if (given("--gen-lr")) ov.gen_lr = gen_lr_value;

  try {
    if (sub == pnm_cmd) return run_pnm(resolve(config_file, ov, cli::RunConfig::Mode::pnm));
    if (sub == gan_cmd) return run_gan(resolve(config_file, ov, cli::RunConfig::Mode::gan));
    if (sub == solve_cmd) {
      return run_solve_matrix(resolve(config_file, ov, cli::RunConfig::Mode::solve_matrix));
    }
    if (sub == pm_cmd) {
      return run_pnm_matrix(resolve(config_file, ov, cli::RunConfig::Mode::pnm_matrix));
    }
    if (sub == eval_cmd) return run_eval(resolve(config_file, ov, cli::RunConfig::Mode::eval));
  } catch (const std::exception& e) {
    std::cerr << "gangs: " << e.what() << '\n';
    return classify(e.what());
  }
  return kExitRuntime;
}
