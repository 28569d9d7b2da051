#pragma once

#include <filesystem>
#include <span>
#include <stdexcept>
#include <vector>

namespace gangs::game {

enum class Player { row, column };

/// Finite two-player zero-sum game in strategic form. Entries hold the
/// COLUMN player's payoff u_C(i, j); the row player receives the negation.
struct PayoffMatrix {
  int rows = 0;
  int cols = 0;
  std::vector<double> entries;  // row-major, rows*cols

  PayoffMatrix() = default;
  PayoffMatrix(int r, int c, double fill = 0.0);

  double& at(int i, int j) { return entries[static_cast<std::size_t>(i) * cols + j]; }
  double at(int i, int j) const { return entries[static_cast<std::size_t>(i) * cols + j]; }

  /// Appends one pure strategy for the row player (length must equal cols).
  void append_row(std::span<const double> values);
  /// Appends one pure strategy for the column player (length must equal rows).
  void append_col(std::span<const double> values);

  /// Throws std::invalid_argument on non-positive dims, size mismatch, or
  /// non-finite entries.
  void validate() const;
};

/// Probability vector over one player's pure strategies.
struct MixedStrategy {
  std::vector<double> probs;

  int size() const { return static_cast<int>(probs.size()); }
  void validate() const;  // nonnegative, sums to 1 within 1e-9

  static MixedStrategy pure(int index, int n);
  static MixedStrategy uniform(int n);
};

struct BestResponse {
  int index = 0;
  double value = 0.0;  // payoff to the responding player
};

/// Expected payoff to `who` under the profile (row_mix, col_mix).
/// Errors name the offending vector when a length does not match.
double expected_payoff(const PayoffMatrix& m, const MixedStrategy& row_mix,
                       const MixedStrategy& col_mix, Player who);

/// Pure best response of `who` against the opponent's mix. Ties break to the
/// lowest index.
BestResponse best_response(const PayoffMatrix& m, const MixedStrategy& opponent, Player who);

struct SolveResult {
  MixedStrategy row_mix;
  MixedStrategy col_mix;
  double value = 0.0;           // column player's equilibrium payoff
  double exploitability = 0.0;  // certified on the returned profile
};

/// Thrown when the solver cannot certify the requested tolerance. Carries the
/// exploitability of the best profile found so callers can decide what to do.
struct SolveFailure : std::runtime_error {
  double achieved_exploitability;
  SolveFailure(const std::string& what, double achieved)
      : std::runtime_error(what), achieved_exploitability(achieved) {}
};

/// Solves the zero-sum game exactly (up to `tol` exploitability) via the
/// standard linear-programming reduction and dense simplex. Deterministic:
/// identical input bits give identical output bits. `max_pivots == 0` picks
/// a bound scaled to the matrix size.
SolveResult solve_zero_sum(const PayoffMatrix& m, double tol = 1e-9, int max_pivots = 0);

/// Sum of both players' best-response gains against (row_mix, col_mix).
/// Zero exactly at a Nash equilibrium.
double exploitability(const PayoffMatrix& m, const MixedStrategy& row_mix,
                      const MixedStrategy& col_mix);

struct EpsilonCheck {
  double row_gain = 0.0;
  double col_gain = 0.0;
  bool within(double eps) const { return row_gain <= eps && col_gain <= eps; }
};

/// Per-player best-response gains; the profile is an eps-equilibrium iff both
/// are <= eps.
EpsilonCheck epsilon_ne_check(const PayoffMatrix& m, const MixedStrategy& row_mix,
                              const MixedStrategy& col_mix);

/// Adds `c` to every entry of column `col`. Shifting u_C by a per-column
/// constant never changes the row player's best-response set against a fixed
/// column mix: the shift contributes the same constant to every row's payoff.
PayoffMatrix column_constant_shift(const PayoffMatrix& m, int col, double c);

/// Restriction of `full` to the given pure-strategy subsets, in order.
PayoffMatrix submatrix(const PayoffMatrix& full, std::span<const int> row_ids,
                       std::span<const int> col_ids);

/// CSV exchange format: a `# rows=<n> cols=<m> convention=u_C` header line,
/// then one comma-separated line per row. Numbers round-trip exactly.
void save_csv(const PayoffMatrix& m, const std::filesystem::path& file);
PayoffMatrix load_csv(const std::filesystem::path& file);

}  // namespace gangs::game
