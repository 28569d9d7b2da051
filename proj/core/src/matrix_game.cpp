#include "gangs/matrix_game.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <limits>
#include <optional>
#include <string>

#include "gangs/common.hpp"

namespace gangs::game {

PayoffMatrix::PayoffMatrix(int r, int c, double fill) : rows(r), cols(c) {
  if (r <= 0 || c <= 0) throw std::invalid_argument("PayoffMatrix: dimensions must be positive");
  entries.assign(static_cast<std::size_t>(r) * c, fill);
}

void PayoffMatrix::append_row(std::span<const double> values) {
  if (static_cast<int>(values.size()) != cols) {
    throw std::invalid_argument("append_row: got " + std::to_string(values.size()) +
                                " values for " + std::to_string(cols) + " columns");
  }
  entries.insert(entries.end(), values.begin(), values.end());
  ++rows;
}

void PayoffMatrix::append_col(std::span<const double> values) {
  if (static_cast<int>(values.size()) != rows) {
    throw std::invalid_argument("append_col: got " + std::to_string(values.size()) +
                                " values for " + std::to_string(rows) + " rows");
  }
  std::vector<double> next(static_cast<std::size_t>(rows) * (cols + 1));
  for (int i = 0; i < rows; ++i) {
    for (int j = 0; j < cols; ++j) next[static_cast<std::size_t>(i) * (cols + 1) + j] = at(i, j);
    next[static_cast<std::size_t>(i) * (cols + 1) + cols] = values[static_cast<std::size_t>(i)];
  }
  entries = std::move(next);
  ++cols;
}

void PayoffMatrix::validate() const {
  if (rows <= 0 || cols <= 0) throw std::invalid_argument("PayoffMatrix: dimensions must be positive");
  if (entries.size() != static_cast<std::size_t>(rows) * cols) {
    throw std::invalid_argument("PayoffMatrix: entry count " + std::to_string(entries.size()) +
                                " does not match " + std::to_string(rows) + "x" + std::to_string(cols));
  }
  for (double v : entries) {
    if (!std::isfinite(v)) throw std::invalid_argument("PayoffMatrix: non-finite entry");
  }
}

void MixedStrategy::validate() const {
  if (probs.empty()) throw std::invalid_argument("MixedStrategy: empty");
  double sum = 0.0;
  for (double p : probs) {
    if (!(p >= 0.0)) throw std::invalid_argument("MixedStrategy: negative or non-finite probability");
    sum += p;
  }
  if (std::abs(sum - 1.0) > 1e-9) {
    throw std::invalid_argument("MixedStrategy: probabilities sum to " + format_double(sum));
  }
}

MixedStrategy MixedStrategy::pure(int index, int n) {
  if (n <= 0 || index < 0 || index >= n) throw std::invalid_argument("MixedStrategy::pure: index out of range");
  MixedStrategy s;
  s.probs.assign(static_cast<std::size_t>(n), 0.0);
  s.probs[static_cast<std::size_t>(index)] = 1.0;
  return s;
}

MixedStrategy MixedStrategy::uniform(int n) {
  if (n <= 0) throw std::invalid_argument("MixedStrategy::uniform: size must be positive");
  MixedStrategy s;
  s.probs.assign(static_cast<std::size_t>(n), 1.0 / n);
  return s;
}

namespace {

void check_profile(const PayoffMatrix& m, const MixedStrategy& row_mix,
                   const MixedStrategy& col_mix, const char* caller) {
  if (row_mix.size() != m.rows) {
    throw std::invalid_argument(std::string(caller) + ": row mix size " +
                                std::to_string(row_mix.size()) + " does not match matrix rows " +
                                std::to_string(m.rows));
  }
  if (col_mix.size() != m.cols) {
    throw std::invalid_argument(std::string(caller) + ": column mix size " +
                                std::to_string(col_mix.size()) + " does not match matrix cols " +
                                std::to_string(m.cols));
  }
}

// (A y)_i for every row and (x^T A)_j for every column.
void profile_scores(const PayoffMatrix& m, const MixedStrategy& row_mix,
                    const MixedStrategy& col_mix, std::vector<double>& row_payoff,
                    std::vector<double>& col_payoff) {
  row_payoff.assign(static_cast<std::size_t>(m.rows), 0.0);
  col_payoff.assign(static_cast<std::size_t>(m.cols), 0.0);
  for (int i = 0; i < m.rows; ++i) {
    const double xi = row_mix.probs[static_cast<std::size_t>(i)];
    double acc = 0.0;
    for (int j = 0; j < m.cols; ++j) {
      const double a = m.at(i, j);
      acc += col_mix.probs[static_cast<std::size_t>(j)] * a;
      col_payoff[static_cast<std::size_t>(j)] += xi * a;
    }
    row_payoff[static_cast<std::size_t>(i)] = acc;
  }
}

}  // namespace

double expected_payoff(const PayoffMatrix& m, const MixedStrategy& row_mix,
                       const MixedStrategy& col_mix, Player who) {
  check_profile(m, row_mix, col_mix, "expected_payoff");
  double u = 0.0;
  for (int i = 0; i < m.rows; ++i) {
    double inner = 0.0;
    for (int j = 0; j < m.cols; ++j) inner += col_mix.probs[static_cast<std::size_t>(j)] * m.at(i, j);
    u += row_mix.probs[static_cast<std::size_t>(i)] * inner;
  }
  return who == Player::column ? u : -u;
}

BestResponse best_response(const PayoffMatrix& m, const MixedStrategy& opponent, Player who) {
  BestResponse br;
  if (who == Player::row) {
    if (opponent.size() != m.cols) {
      throw std::invalid_argument("best_response: opponent mix size " +
                                  std::to_string(opponent.size()) + " does not match matrix cols " +
                                  std::to_string(m.cols));
    }
    br.value = -std::numeric_limits<double>::infinity();
    for (int i = 0; i < m.rows; ++i) {
      double score = 0.0;
      for (int j = 0; j < m.cols; ++j) score -= opponent.probs[static_cast<std::size_t>(j)] * m.at(i, j);
      if (score > br.value) {
        br.value = score;
        br.index = i;
      }
    }
  } else {
    if (opponent.size() != m.rows) {
      throw std::invalid_argument("best_response: opponent mix size " +
                                  std::to_string(opponent.size()) + " does not match matrix rows " +
                                  std::to_string(m.rows));
    }
    br.value = -std::numeric_limits<double>::infinity();
    for (int j = 0; j < m.cols; ++j) {
      double score = 0.0;
      for (int i = 0; i < m.rows; ++i) score += opponent.probs[static_cast<std::size_t>(i)] * m.at(i, j);
      if (score > br.value) {
        br.value = score;
        br.index = j;
      }
    }
  }
  return br;
}

double exploitability(const PayoffMatrix& m, const MixedStrategy& row_mix,
                      const MixedStrategy& col_mix) {
  check_profile(m, row_mix, col_mix, "exploitability");
  std::vector<double> row_payoff, col_payoff;
  profile_scores(m, row_mix, col_mix, row_payoff, col_payoff);
  // Gains telescope: max_j (x^T A)_j - min_i (A y)_i.
  const double best_col = *std::max_element(col_payoff.begin(), col_payoff.end());
  const double worst_row = *std::min_element(row_payoff.begin(), row_payoff.end());
  return best_col - worst_row;
}

EpsilonCheck epsilon_ne_check(const PayoffMatrix& m, const MixedStrategy& row_mix,
                              const MixedStrategy& col_mix) {
  check_profile(m, row_mix, col_mix, "epsilon_ne_check");
  std::vector<double> row_payoff, col_payoff;
  profile_scores(m, row_mix, col_mix, row_payoff, col_payoff);
  double u_col = 0.0;
  for (int j = 0; j < m.cols; ++j) u_col += col_mix.probs[static_cast<std::size_t>(j)] * col_payoff[static_cast<std::size_t>(j)];
  EpsilonCheck out;
  // Row player's payoff is -u_col; its best deviation earns -min_i (A y)_i.
  out.row_gain = (-*std::min_element(row_payoff.begin(), row_payoff.end())) - (-u_col);
  out.col_gain = *std::max_element(col_payoff.begin(), col_payoff.end()) - u_col;
  return out;
}

PayoffMatrix column_constant_shift(const PayoffMatrix& m, int col, double c) {
  if (col < 0 || col >= m.cols) throw std::invalid_argument("column_constant_shift: column out of range");
  PayoffMatrix out = m;
  for (int i = 0; i < m.rows; ++i) out.at(i, col) += c;
  return out;
}

PayoffMatrix submatrix(const PayoffMatrix& full, std::span<const int> row_ids,
                       std::span<const int> col_ids) {
  if (row_ids.empty() || col_ids.empty()) throw std::invalid_argument("submatrix: empty id list");
  PayoffMatrix out(static_cast<int>(row_ids.size()), static_cast<int>(col_ids.size()));
  for (std::size_t i = 0; i < row_ids.size(); ++i) {
    if (row_ids[i] < 0 || row_ids[i] >= full.rows) throw std::invalid_argument("submatrix: row id out of range");
    for (std::size_t j = 0; j < col_ids.size(); ++j) {
      if (col_ids[j] < 0 || col_ids[j] >= full.cols) throw std::invalid_argument("submatrix: col id out of range");
      out.at(static_cast<int>(i), static_cast<int>(j)) = full.at(row_ids[i], col_ids[j]);
    }
  }
  return out;
}

// ---------------------------------------------------------------------------
// Solver. LP reduction: shift entries so the minimum is 1, then the row
// player's problem is  max 1^T w  s.t.  A'^T w <= 1, w >= 0,  whose optimum is
// 1/v' with x = w / sum(w); the column player's optimum falls out of the dual
// values carried in the slack columns of the objective row.
// ---------------------------------------------------------------------------

namespace {

constexpr double kEnterTol = 1e-11;  // reduced cost must exceed this to enter
constexpr double kPivotTol = 1e-11;  // ratio-test denominators below this are treated as 0

struct Simplex {
  int n_struct;  // structural variables (matrix rows)
  int n_con;     // constraints (matrix cols)
  int width;     // n_struct + n_con + 1 (rhs)
  std::vector<double> t;     // n_con x width
  std::vector<double> obj;   // n_struct + n_con reduced costs
  std::vector<int> basis;    // per constraint row

  double* row(int r) { return t.data() + static_cast<std::size_t>(r) * width; }

  explicit Simplex(const PayoffMatrix& m, double shift)
      : n_struct(m.rows), n_con(m.cols), width(m.rows + m.cols + 1) {
    t.assign(static_cast<std::size_t>(n_con) * width, 0.0);
    obj.assign(static_cast<std::size_t>(n_struct + n_con), 0.0);
    basis.resize(static_cast<std::size_t>(n_con));
    for (int j = 0; j < n_con; ++j) {
      double* tr = row(j);
      for (int i = 0; i < n_struct; ++i) tr[i] = m.at(i, j) + shift;
      tr[n_struct + j] = 1.0;
      tr[width - 1] = 1.0;
      basis[static_cast<std::size_t>(j)] = n_struct + j;
    }
    for (int i = 0; i < n_struct; ++i) obj[static_cast<std::size_t>(i)] = 1.0;
  }

  int pick_entering(bool bland) const {
    if (bland) {
      for (int j = 0; j < n_struct + n_con; ++j) {
        if (obj[static_cast<std::size_t>(j)] > kEnterTol) return j;
      }
      return -1;
    }
    int best = -1;
    double best_val = kEnterTol;
    for (int j = 0; j < n_struct + n_con; ++j) {
      if (obj[static_cast<std::size_t>(j)] > best_val) {
        best_val = obj[static_cast<std::size_t>(j)];
        best = j;
      }
    }
    return best;
  }

  int pick_leaving(int enter) {
    int best = -1;
    double best_ratio = std::numeric_limits<double>::infinity();
    for (int r = 0; r < n_con; ++r) {
      const double a = row(r)[enter];
      if (a > kPivotTol) {
        const double ratio = row(r)[width - 1] / a;
        if (ratio < best_ratio) {
          best_ratio = ratio;
          best = r;
        }
      }
    }
    return best;
  }

  void pivot(int r, int enter) {
    double* pr = row(r);
    const double inv = 1.0 / pr[enter];
    for (int k = 0; k < width; ++k) pr[k] *= inv;
    pr[enter] = 1.0;
    for (int r2 = 0; r2 < n_con; ++r2) {
      if (r2 == r) continue;
      double* qr = row(r2);
      const double f = qr[enter];
      if (f == 0.0) continue;
      for (int k = 0; k < width; ++k) qr[k] -= f * pr[k];
      qr[enter] = 0.0;
    }
    const double f = obj[static_cast<std::size_t>(enter)];
    if (f != 0.0) {
      for (int k = 0; k < n_struct + n_con; ++k) obj[static_cast<std::size_t>(k)] -= f * pr[k];
      obj[static_cast<std::size_t>(enter)] = 0.0;
    }
    basis[static_cast<std::size_t>(r)] = enter;
  }
};

std::optional<std::vector<double>> solve_linear(int n, std::vector<double> a, std::vector<double> b) {
  for (int col = 0; col < n; ++col) {
    int piv = col;
    for (int r = col + 1; r < n; ++r) {
      if (std::abs(a[static_cast<std::size_t>(r) * n + col]) >
          std::abs(a[static_cast<std::size_t>(piv) * n + col])) {
        piv = r;
      }
    }
    if (std::abs(a[static_cast<std::size_t>(piv) * n + col]) < 1e-12) return std::nullopt;
    if (piv != col) {
      for (int k = 0; k < n; ++k) {
        std::swap(a[static_cast<std::size_t>(piv) * n + k], a[static_cast<std::size_t>(col) * n + k]);
      }
      std::swap(b[static_cast<std::size_t>(piv)], b[static_cast<std::size_t>(col)]);
    }
    const double inv = 1.0 / a[static_cast<std::size_t>(col) * n + col];
    for (int r = 0; r < n; ++r) {
      if (r == col) continue;
      const double f = a[static_cast<std::size_t>(r) * n + col] * inv;
      if (f == 0.0) continue;
      for (int k = col; k < n; ++k) {
        a[static_cast<std::size_t>(r) * n + k] -= f * a[static_cast<std::size_t>(col) * n + k];
      }
      b[static_cast<std::size_t>(r)] -= f * b[static_cast<std::size_t>(col)];
    }
  }
  std::vector<double> x(static_cast<std::size_t>(n));
  for (int r = 0; r < n; ++r) x[static_cast<std::size_t>(r)] = b[static_cast<std::size_t>(r)] / a[static_cast<std::size_t>(r) * n + r];
  return x;
}

void clip_and_normalize(std::vector<double>& probs) {
  double sum = 0.0;
  for (double& p : probs) {
    if (p < 0.0) p = 0.0;
    sum += p;
  }
  if (!(sum > 0.0)) throw std::runtime_error("solver produced a zero strategy vector");
  for (double& p : probs) p /= sum;
}

// Equalizer refinement: re-solves the strategies exactly on the simplex
// supports. Cheap, and recovers the last few bits when tableau updates have
// drifted.
std::optional<SolveResult> refine_on_support(const PayoffMatrix& m, const SolveResult& base) {
  std::vector<int> sup_row, sup_col;
  for (int i = 0; i < m.rows; ++i) {
    if (base.row_mix.probs[static_cast<std::size_t>(i)] > 1e-10) sup_row.push_back(i);
  }
  for (int j = 0; j < m.cols; ++j) {
    if (base.col_mix.probs[static_cast<std::size_t>(j)] > 1e-10) sup_col.push_back(j);
  }
  if (sup_row.size() != sup_col.size() || sup_row.empty()) return std::nullopt;
  const int k = static_cast<int>(sup_row.size());

  // Column mix: rows in the support are indifferent. Unknowns y_j (j in
  // support) and v; equations (A y)_i = v for supported i, plus sum(y) = 1.
  const int dim = k + 1;
  std::vector<double> a(static_cast<std::size_t>(dim) * dim, 0.0), b(static_cast<std::size_t>(dim), 0.0);
  for (int r = 0; r < k; ++r) {
    for (int c = 0; c < k; ++c) a[static_cast<std::size_t>(r) * dim + c] = m.at(sup_row[static_cast<std::size_t>(r)], sup_col[static_cast<std::size_t>(c)]);
    a[static_cast<std::size_t>(r) * dim + k] = -1.0;
  }
  for (int c = 0; c < k; ++c) a[static_cast<std::size_t>(k) * dim + c] = 1.0;
  b[static_cast<std::size_t>(k)] = 1.0;
  auto ysol = solve_linear(dim, a, b);
  if (!ysol) return std::nullopt;

  // Row mix: same system on the transpose.
  std::fill(a.begin(), a.end(), 0.0);
  std::fill(b.begin(), b.end(), 0.0);
  for (int r = 0; r < k; ++r) {
    for (int c = 0; c < k; ++c) a[static_cast<std::size_t>(r) * dim + c] = m.at(sup_row[static_cast<std::size_t>(c)], sup_col[static_cast<std::size_t>(r)]);
    a[static_cast<std::size_t>(r) * dim + k] = -1.0;
  }
  for (int c = 0; c < k; ++c) a[static_cast<std::size_t>(k) * dim + c] = 1.0;
  b[static_cast<std::size_t>(k)] = 1.0;
  auto xsol = solve_linear(dim, a, b);
  if (!xsol) return std::nullopt;

  SolveResult out;
  out.row_mix.probs.assign(static_cast<std::size_t>(m.rows), 0.0);
  out.col_mix.probs.assign(static_cast<std::size_t>(m.cols), 0.0);
  for (int r = 0; r < k; ++r) {
    if ((*xsol)[static_cast<std::size_t>(r)] < -1e-9 || (*ysol)[static_cast<std::size_t>(r)] < -1e-9) return std::nullopt;
    out.row_mix.probs[static_cast<std::size_t>(sup_row[static_cast<std::size_t>(r)])] = (*xsol)[static_cast<std::size_t>(r)];
    out.col_mix.probs[static_cast<std::size_t>(sup_col[static_cast<std::size_t>(r)])] = (*ysol)[static_cast<std::size_t>(r)];
  }
  clip_and_normalize(out.row_mix.probs);
  clip_and_normalize(out.col_mix.probs);
  out.value = expected_payoff(m, out.row_mix, out.col_mix, Player::column);
  out.exploitability = exploitability(m, out.row_mix, out.col_mix);
  return out;
}

}  // namespace

SolveResult solve_zero_sum(const PayoffMatrix& m, double tol, int max_pivots) {
  m.validate();
  if (!(tol > 0.0)) throw std::invalid_argument("solve_zero_sum: tolerance must be positive");
  const double min_entry = *std::min_element(m.entries.begin(), m.entries.end());
  const double shift = 1.0 - min_entry;

  Simplex sx(m, shift);
  if (max_pivots <= 0) max_pivots = 1000 + 50 * (m.rows + m.cols);
  const int bland_after = 200 + 20 * (m.rows + m.cols);

  int pivots = 0;
  while (true) {
    const int enter = sx.pick_entering(pivots >= bland_after);
    if (enter < 0) break;  // optimal
    const int leave = sx.pick_leaving(enter);
    if (leave < 0) {
      throw SolveFailure("solve_zero_sum: unbounded tableau (corrupt input?)",
                         std::numeric_limits<double>::infinity());
    }
    sx.pivot(leave, enter);
    if (++pivots >= max_pivots) {
      throw SolveFailure("solve_zero_sum: pivot budget " + std::to_string(max_pivots) +
                             " exhausted",
                         std::numeric_limits<double>::infinity());
    }
  }

  SolveResult res;
  res.row_mix.probs.assign(static_cast<std::size_t>(m.rows), 0.0);
  res.col_mix.probs.assign(static_cast<std::size_t>(m.cols), 0.0);
  double sum_w = 0.0;
  for (int r = 0; r < sx.n_con; ++r) {
    const int var = sx.basis[static_cast<std::size_t>(r)];
    if (var < sx.n_struct) {
      const double w = sx.row(r)[sx.width - 1];
      res.row_mix.probs[static_cast<std::size_t>(var)] = w;
      sum_w += w;
    }
  }
  if (!(sum_w > 0.0)) {
    throw SolveFailure("solve_zero_sum: degenerate optimum", std::numeric_limits<double>::infinity());
  }
  // Dual values sit in the slack entries of the objective row, negated.
  for (int j = 0; j < m.cols; ++j) {
    res.col_mix.probs[static_cast<std::size_t>(j)] = std::max(0.0, -sx.obj[static_cast<std::size_t>(sx.n_struct + j)]);
  }
  clip_and_normalize(res.row_mix.probs);
  clip_and_normalize(res.col_mix.probs);
  res.value = expected_payoff(m, res.row_mix, res.col_mix, Player::column);
  res.exploitability = exploitability(m, res.row_mix, res.col_mix);

  if (auto refined = refine_on_support(m, res); refined && refined->exploitability < res.exploitability) {
    res = *refined;
  }
  if (res.exploitability > tol) {
    throw SolveFailure("solve_zero_sum: achieved exploitability " +
                           format_double(res.exploitability) + " exceeds tolerance " +
                           format_double(tol),
                       res.exploitability);
  }
  return res;
}

// ---------------------------------------------------------------------------
// CSV exchange.
// ---------------------------------------------------------------------------

void save_csv(const PayoffMatrix& m, const std::filesystem::path& file) {
  m.validate();
  std::ofstream out(file);
  if (!out) throw std::runtime_error("save_csv: cannot open " + file.string());
  out << "# rows=" << m.rows << " cols=" << m.cols << " convention=u_C\n";
  for (int i = 0; i < m.rows; ++i) {
    for (int j = 0; j < m.cols; ++j) {
      if (j) out << ',';
      out << format_double(m.at(i, j));
    }
    out << '\n';
  }
  if (!out) throw std::runtime_error("save_csv: write failed for " + file.string());
}

namespace {

int parse_header_int(std::string_view& rest, std::string_view key, const std::string& file) {
  if (rest.substr(0, key.size()) != key) {
    throw std::runtime_error("load_csv: malformed header in " + file);
  }
  rest.remove_prefix(key.size());
  std::size_t end = rest.find(' ');
  std::string_view tok = rest.substr(0, end);
  rest.remove_prefix(end == std::string_view::npos ? rest.size() : end + 1);
  int v = 0;
  for (char c : tok) {
    if (c < '0' || c > '9') throw std::runtime_error("load_csv: malformed header in " + file);
    v = v * 10 + (c - '0');
  }
  if (tok.empty()) throw std::runtime_error("load_csv: malformed header in " + file);
  return v;
}

}  // namespace

PayoffMatrix load_csv(const std::filesystem::path& file) {
  std::ifstream in(file);
  if (!in) throw std::runtime_error("load_csv: cannot open " + file.string());
  std::string line;
  if (!std::getline(in, line)) throw std::runtime_error("load_csv: empty file " + file.string());
  std::string_view rest(line);
  const int rows = parse_header_int(rest, "# rows=", file.string());
  const int cols = parse_header_int(rest, "cols=", file.string());
  if (rest != "convention=u_C") {
    throw std::runtime_error("load_csv: expected convention=u_C in header of " + file.string());
  }
  if (rows <= 0 || cols <= 0) throw std::runtime_error("load_csv: bad dimensions in " + file.string());

  PayoffMatrix m(rows, cols);
  for (int i = 0; i < rows; ++i) {
    if (!std::getline(in, line)) {
      throw std::runtime_error("load_csv: " + file.string() + ": expected " + std::to_string(rows) +
                               " data rows, got " + std::to_string(i));
    }
    std::string_view sv(line);
    for (int j = 0; j < cols; ++j) {
      std::size_t comma = sv.find(',');
      std::string_view tok = sv.substr(0, comma);
      if (j + 1 < cols) {
        if (comma == std::string_view::npos) {
          throw std::runtime_error("load_csv: " + file.string() + ": line " + std::to_string(i + 2) +
                                   ": expected " + std::to_string(cols) + " fields");
        }
        sv.remove_prefix(comma + 1);
      } else {
        if (comma != std::string_view::npos) {
          throw std::runtime_error("load_csv: " + file.string() + ": line " + std::to_string(i + 2) +
                                   ": too many fields");
        }
        sv = {};
      }
      m.at(i, j) = parse_double(tok);
    }
  }
  m.validate();
  return m;
}

}  // namespace gangs::game
