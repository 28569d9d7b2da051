#pragma once

#include <cstdint>
#include <filesystem>
#include <vector>

#include "gangs/gang_model.hpp"
#include "gangs/matrix_game.hpp"
#include "gangs/rbbr.hpp"

namespace gangs::pnm {

/// neural: strategies are trained networks, payoff cells are Monte Carlo
/// estimates, best responses come from the bounded oracles. exact_matrix:
/// strategies are pure-strategy indices into a known payoff matrix and best
/// responses are exact, which turns the loop into the classic double oracle.
enum class OracleKind { neural, exact_matrix };

struct PnmConfig {
  OracleKind oracle = OracleKind::neural;
  int max_iterations = 40;
  game::PayoffMatrix full_game;  // exact_matrix only
  rbbr::RbbrConfig rbbr_cfg;     // neural only
  int cell_samples = 10000;
  std::uint64_t master_seed = 0;
  /// A nonpositive interaction test means the oracles found no improvement;
  /// with stochastic oracles such tests are ignored and the loop goes on.
  bool ignore_non_positive_tests = true;
  /// Subgame solver tolerance; 0 picks 1e-9 for exact_matrix, 1e-6 for
  /// neural (Monte Carlo cells do not deserve tighter certificates).
  double solve_tol = 0.0;

  double effective_solve_tol() const;
  void validate() const;
};

struct HistoryRecord {
  int iteration = 0;  // 1-based
  double u_g_br = 0.0;
  double u_c_br = 0.0;
  double u_brs = 0.0;  // u_g_br + u_c_br, the interaction test
  double subgame_value = 0.0;
  int gen_count = 0;  // list sizes after the iteration
  int clf_count = 0;
  bool accepted = false;
  double wall_seconds = 0.0;
};

/// The grown game: strategy lists, their payoff matrix, and the current
/// subgame equilibrium. The generator owns the rows (and minimizes u_C), the
/// classifier owns the columns.
struct PnmState {
  OracleKind oracle = OracleKind::neural;

  std::vector<nn::NetworkParams> gen_strategies;  // neural mode
  std::vector<nn::NetworkParams> clf_strategies;
  std::vector<int> gen_rows;  // exact_matrix mode: indices into full_game
  std::vector<int> clf_cols;

  game::PayoffMatrix subgame;
  game::MixedStrategy gen_mix;  // over rows of subgame
  game::MixedStrategy clf_mix;  // over cols of subgame
  double subgame_value = 0.0;

  int completed_iterations = 0;
  bool rb_ne_certified = false;
  std::vector<HistoryRecord> history;

  int gen_count() const;
  int clf_count() const;

  /// Current mixtures as playable strategies (neural mode only).
  gang::MixedNetStrategy generator_mixture() const;
  gang::MixedNetStrategy classifier_mixture() const;

  /// Dims consistent with list sizes, mixes valid and sized to the subgame,
  /// history length equal to completed iterations.
  void validate() const;
};

/// One strategy per player. neural: each is briefly trained against a random
/// opponent (the oracle budget applies). exact_matrix: row 0 and column 0.
PnmState initialize(const PnmConfig& cfg, const gang::GangSpec& spec);
PnmState initialize(const PnmConfig& cfg);  // exact_matrix only

/// One loop pass: compute both best responses against the current mixtures,
/// run the interaction test, and either grow the subgame and re-solve or
/// record the iteration as ignored. Leaves `state` untouched on error.
void iterate(PnmState& state, const PnmConfig& cfg, const gang::GangSpec& spec);
void iterate(PnmState& state, const PnmConfig& cfg);  // exact_matrix only

struct RunOptions {
  /// When set, a checkpoint is written after initialization and after every
  /// iteration; a directory holding a state file resumes in place. Runs are
  /// reproducible from the master seed alone, so a resumed run retraces
  /// exactly the strategies the uninterrupted run would have found.
  std::filesystem::path checkpoint_dir;
};

/// neural: runs exactly max_iterations oracle rounds; certified when the
/// final interaction test is nonpositive. exact_matrix: stops early the
/// moment a nonpositive test or a fully duplicated response proves no oracle
/// can improve, which certifies the subgame equilibrium for the full game.
PnmState run(const PnmConfig& cfg, const gang::GangSpec& spec, const RunOptions& opts = {});
PnmState run(const PnmConfig& cfg, const RunOptions& opts = {});  // exact_matrix only

/// Spreads a subgame mix over the full game's pure strategies.
game::MixedStrategy lift_mix(const game::MixedStrategy& sub, std::span<const int> indices,
                             int full_size);

/// Checkpoint layout: parameter files per strategy, the subgame CSV, history
/// as JSON lines, and a state file (written last, so its presence marks a
/// complete checkpoint).
void save_checkpoint(const PnmState& state, const std::filesystem::path& dir);
PnmState load_checkpoint(const std::filesystem::path& dir);

}  // namespace gangs::pnm
