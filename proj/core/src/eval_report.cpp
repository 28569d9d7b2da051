#include "gangs/eval_report.hpp"

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <fstream>
#include <sstream>
#include <stdexcept>
#include <string>

#include "gangs/synth_data.hpp"

namespace gangs::report {

CoverageReport coverage(std::span<const Vec2> samples, const data::GaussianMixture& mix,
                        double k_sigma) {
  if (!(k_sigma > 0.0)) {
    throw std::invalid_argument("coverage: k_sigma must be positive, got " +
                                format_double(k_sigma));
  }
  mix.validate();

  CoverageReport rep;
  rep.total_modes = static_cast<int>(mix.means.size());
  rep.per_mode_counts.assign(mix.means.size(), 0);

  std::size_t assigned = 0;
  for (const Vec2& p : samples) {
    if (const auto mode = data::mode_assignment(p, mix, k_sigma)) {
      ++rep.per_mode_counts[static_cast<std::size_t>(*mode)];
      ++assigned;
    }
  }
  for (int c : rep.per_mode_counts) rep.modes_hit += c > 0 ? 1 : 0;
  rep.high_quality_fraction =
      samples.empty() ? 0.0 : static_cast<double>(assigned) / static_cast<double>(samples.size());
  return rep;
}

double within_mode_dispersion(std::span<const Vec2> samples, const data::GaussianMixture& mix,
                              double k_sigma) {
  if (!(k_sigma > 0.0)) {
    throw std::invalid_argument("within_mode_dispersion: k_sigma must be positive, got " +
                                format_double(k_sigma));
  }
  mix.validate();

  double total = 0.0;
  std::size_t assigned = 0;
  for (const Vec2& p : samples) {
    if (const auto mode = data::mode_assignment(p, mix, k_sigma)) {
      const Vec2& m = mix.means[static_cast<std::size_t>(*mode)];
      total += std::hypot(p[0] - m[0], p[1] - m[1]);
      ++assigned;
    }
  }
  return assigned == 0 ? 0.0 : total / static_cast<double>(assigned);
}

double SurfaceGrid::lattice_coord(double lo, double hi, int n, int i) {
  if (i == n - 1) return hi;
  return lo + i * (hi - lo) / (n - 1);
}

Vec2 SurfaceGrid::lattice_point(int iy, int ix) const {
  return {lattice_coord(box.min[0], box.max[0], resolution, ix),
          lattice_coord(box.min[1], box.max[1], resolution, iy)};
}

SurfaceGrid classifier_surface(const gang::MixedNetStrategy& clf_mix, const rbbr::BoundingBox& box,
                               int resolution) {
  if (resolution < 2) {
    throw std::invalid_argument("classifier_surface: resolution must be at least 2, got " +
                                std::to_string(resolution));
  }
  clf_mix.validate();

  SurfaceGrid grid;
  grid.box = box;
  grid.resolution = resolution;
  const std::size_t cells = static_cast<std::size_t>(resolution) * resolution;
  grid.values.assign(cells, 0.0);

  nn::Batch lattice(resolution * resolution, 2);
  for (int iy = 0; iy < resolution; ++iy) {
    for (int ix = 0; ix < resolution; ++ix) {
      const Vec2 p = grid.lattice_point(iy, ix);
      lattice.at(iy * resolution + ix, 0) = p[0];
      lattice.at(iy * resolution + ix, 1) = p[1];
    }
  }
  for (int k = 0; k < clf_mix.size(); ++k) {
    const double w = clf_mix.weights.probs[static_cast<std::size_t>(k)];
    const nn::Batch out = nn::forward(clf_mix.members[static_cast<std::size_t>(k)], lattice);
    for (std::size_t i = 0; i < cells; ++i) {
      grid.values[i] += w * out.at(static_cast<int>(i), 0);
    }
  }
  return grid;
}

void Report::validate() const {
  if (security_series.size() != u_brs_series.size() ||
      subgame_value_series.size() != u_brs_series.size()) {
    throw std::invalid_argument("Report: series lengths differ (" +
                                std::to_string(u_brs_series.size()) + " tests, " +
                                std::to_string(security_series.size()) + " security, " +
                                std::to_string(subgame_value_series.size()) + " values)");
  }
  if (surface.values.size() !=
      static_cast<std::size_t>(surface.resolution) * static_cast<std::size_t>(surface.resolution)) {
    throw std::invalid_argument("Report: surface cell count does not match its resolution");
  }
}

void EvalParams::validate() const {
  if (samples < 1) throw std::invalid_argument("EvalParams: samples must be positive");
  if (!(k_sigma > 0.0)) throw std::invalid_argument("EvalParams: k_sigma must be positive");
  if (resolution < 2) throw std::invalid_argument("EvalParams: resolution must be at least 2");
}

namespace {

Report assemble(const gang::GangSpec& spec, const gang::MixedNetStrategy& gen_mix,
                const gang::MixedNetStrategy& clf_mix, const EvalParams& params, Rng& rng) {
  Report rep;
  rep.real_points = data::sample(spec.data_dist, params.samples, rng);
  rep.gen_points = gang::sample_generator(spec, gen_mix, params.samples, rng);
  rep.coverage = coverage(rep.gen_points, spec.data_dist, params.k_sigma);
  const rbbr::BoundingBox box = rbbr::bounding_box(rep.real_points, rep.gen_points);
  rep.surface = classifier_surface(clf_mix, box, params.resolution);
  return rep;
}

}  // namespace

Report make_report(const gang::GangSpec& spec, const pnm::PnmState& state,
                   const EvalParams& params, Rng& rng) {
  spec.validate();
  params.validate();

  Report rep = assemble(spec, state.generator_mixture(), state.classifier_mixture(), params, rng);
  rep.u_brs_series.reserve(state.history.size());
  rep.security_series.reserve(state.history.size());
  rep.subgame_value_series.reserve(state.history.size());
  for (const auto& rec : state.history) {
    rep.u_brs_series.push_back(rec.u_brs);
    // Security: zero-sum flips of the best responses' own payoffs.
    rep.security_series.emplace_back(-rec.u_c_br, -rec.u_g_br);
    rep.subgame_value_series.push_back(rec.subgame_value);
  }
  rep.validate();
  return rep;
}

Report make_report(const gang::GangSpec& spec, const gan::GanResult& result,
                   const EvalParams& params, Rng& rng) {
  spec.validate();
  params.validate();

  Report rep = assemble(spec, gang::MixedNetStrategy::singleton(result.gen),
                        gang::MixedNetStrategy::singleton(result.clf), params, rng);
  rep.validate();
  return rep;
}

namespace {

std::ofstream open_out(const std::filesystem::path& file) {
  std::ofstream out(file, std::ios::trunc);
  if (!out) throw std::runtime_error("emit: cannot open " + file.string());
  return out;
}

void finish(std::ofstream& out, const std::filesystem::path& file) {
  out.flush();
  if (!out) throw std::runtime_error("emit: write failed for " + file.string());
}

void write_coverage_csv(const CoverageReport& cov, const std::filesystem::path& file) {
  auto out = open_out(file);
  out << "metric,value\n";
  out << "modes_hit," << cov.modes_hit << '\n';
  out << "total_modes," << cov.total_modes << '\n';
  out << "high_quality_fraction," << format_double(cov.high_quality_fraction) << '\n';
  for (std::size_t k = 0; k < cov.per_mode_counts.size(); ++k) {
    out << "mode_" << k << ',' << cov.per_mode_counts[k] << '\n';
  }
  finish(out, file);
}

void write_series_csv(const Report& rep, const std::filesystem::path& file) {
  auto out = open_out(file);
  out << "iteration,u_brs,security_gen,security_clf,subgame_value\n";
  for (std::size_t i = 0; i < rep.u_brs_series.size(); ++i) {
    out << (i + 1) << ',' << format_double(rep.u_brs_series[i]) << ','
        << format_double(rep.security_series[i].first) << ','
        << format_double(rep.security_series[i].second) << ','
        << format_double(rep.subgame_value_series[i]) << '\n';
  }
  finish(out, file);
}

void write_surface_csv(const SurfaceGrid& grid, const std::filesystem::path& file) {
  auto out = open_out(file);
  out << "row,col,x,y,value\n";
  for (int iy = 0; iy < grid.resolution; ++iy) {
    for (int ix = 0; ix < grid.resolution; ++ix) {
      const Vec2 p = grid.lattice_point(iy, ix);
      out << iy << ',' << ix << ',' << format_double(p[0]) << ',' << format_double(p[1]) << ','
          << format_double(grid.at(iy, ix)) << '\n';
    }
  }
  finish(out, file);
}

void write_points_csv(const Report& rep, const std::filesystem::path& file) {
  auto out = open_out(file);
  out << "kind,x,y\n";
  for (const Vec2& p : rep.real_points) {
    out << "real," << format_double(p[0]) << ',' << format_double(p[1]) << '\n';
  }
  for (const Vec2& p : rep.gen_points) {
    out << "generated," << format_double(p[0]) << ',' << format_double(p[1]) << '\n';
  }
  finish(out, file);
}

// Plot scales. A degenerate domain maps everything to the midpoint.
struct LinScale {
  double lo = 0.0, hi = 1.0, out_lo = 0.0, out_hi = 1.0;
  double operator()(double v) const {
    if (hi == lo) return 0.5 * (out_lo + out_hi);
    return out_lo + (v - lo) / (hi - lo) * (out_hi - out_lo);
  }
};

std::string svg_num(double v) {
  // Plot coordinates rounded short; artifacts stay byte-stable because the
  // inputs are deterministic.
  std::ostringstream ss;
  ss.precision(2);
  ss << std::fixed << v;
  return ss.str();
}

void write_convergence_svg(const Report& rep, const std::filesystem::path& file) {
  const int width = 640, height = 400;
  const double left = 64, right = 628, top = 20, bottom = 356;
  const std::size_t n = rep.u_brs_series.size();

  double lo = 0.0, hi = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    for (double v : {rep.u_brs_series[i], rep.security_series[i].first,
                     rep.security_series[i].second}) {
      lo = std::min(lo, v);
      hi = std::max(hi, v);
    }
  }
  if (hi == lo) {
    lo -= 1.0;
    hi += 1.0;
  } else {
    const double pad = 0.05 * (hi - lo);
    lo -= pad;
    hi += pad;
  }
  const LinScale sx{0.5, static_cast<double>(n) + 0.5, left, right};
  const LinScale sy{lo, hi, bottom, top};  // SVG y grows downward

  auto out = open_out(file);
  out << "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"" << width << "\" height=\"" << height
      << "\" viewBox=\"0 0 " << width << ' ' << height << "\">\n";
  out << "<rect width=\"" << width << "\" height=\"" << height << "\" fill=\"#ffffff\"/>\n";

  // Zero line: the certification threshold for the test payoffs.
  out << "<line x1=\"" << svg_num(left) << "\" y1=\"" << svg_num(sy(0.0)) << "\" x2=\""
      << svg_num(right) << "\" y2=\"" << svg_num(sy(0.0))
      << "\" stroke=\"#999999\" stroke-dasharray=\"4 3\"/>\n";

  const auto polyline = [&](const char* color, auto value_at) {
    if (n == 0) return;
    out << "<polyline fill=\"none\" stroke=\"" << color << "\" stroke-width=\"1.5\" points=\"";
    for (std::size_t i = 0; i < n; ++i) {
      if (i > 0) out << ' ';
      out << svg_num(sx(static_cast<double>(i) + 1.0)) << ',' << svg_num(sy(value_at(i)));
    }
    out << "\"/>\n";
  };
  polyline("#d62728", [&](std::size_t i) { return rep.u_brs_series[i]; });
  polyline("#1f77b4", [&](std::size_t i) { return rep.security_series[i].first; });
  polyline("#2ca02c", [&](std::size_t i) { return rep.security_series[i].second; });

  // Axes with end-value labels.
  out << "<line x1=\"" << svg_num(left) << "\" y1=\"" << svg_num(top) << "\" x2=\"" << svg_num(left)
      << "\" y2=\"" << svg_num(bottom) << "\" stroke=\"#000000\"/>\n";
  out << "<line x1=\"" << svg_num(left) << "\" y1=\"" << svg_num(bottom) << "\" x2=\""
      << svg_num(right) << "\" y2=\"" << svg_num(bottom) << "\" stroke=\"#000000\"/>\n";
  out << "<text x=\"" << svg_num(left - 8) << "\" y=\"" << svg_num(bottom)
      << "\" font-size=\"11\" text-anchor=\"end\">" << format_double(lo) << "</text>\n";
  out << "<text x=\"" << svg_num(left - 8) << "\" y=\"" << svg_num(top + 8)
      << "\" font-size=\"11\" text-anchor=\"end\">" << format_double(hi) << "</text>\n";
  out << "<text x=\"" << svg_num(left) << "\" y=\"" << svg_num(bottom + 16)
      << "\" font-size=\"11\" text-anchor=\"middle\">1</text>\n";
  out << "<text x=\"" << svg_num(right) << "\" y=\"" << svg_num(bottom + 16)
      << "\" font-size=\"11\" text-anchor=\"middle\">" << n << "</text>\n";
  out << "<text x=\"" << svg_num(0.5 * (left + right)) << "\" y=\"" << svg_num(bottom + 32)
      << "\" font-size=\"12\" text-anchor=\"middle\">iteration</text>\n";

  const char* legend[3][2] = {{"#d62728", "payoff for tests"},
                              {"#1f77b4", "generator mixture security"},
                              {"#2ca02c", "classifier mixture security"}};
  for (int i = 0; i < 3; ++i) {
    const double y = top + 14 + 16 * i;
    out << "<line x1=\"" << svg_num(left + 12) << "\" y1=\"" << svg_num(y - 4) << "\" x2=\""
        << svg_num(left + 34) << "\" y2=\"" << svg_num(y - 4) << "\" stroke=\"" << legend[i][0]
        << "\" stroke-width=\"1.5\"/>\n";
    out << "<text x=\"" << svg_num(left + 40) << "\" y=\"" << svg_num(y)
        << "\" font-size=\"11\">" << legend[i][1] << "</text>\n";
  }
  out << "</svg>\n";
  finish(out, file);
}

// Linear colormap: 0 (fake) deep red, 1 (realistic) deep blue.
std::string surface_color(double v) {
  v = std::clamp(v, 0.0, 1.0);
  const auto channel = [&](double at0, double at1) {
    return static_cast<int>(std::lround(at0 + v * (at1 - at0)));
  };
  std::ostringstream ss;
  ss << "rgb(" << channel(214, 31) << ',' << channel(39, 119) << ',' << channel(40, 180) << ')';
  return ss.str();
}

void write_scatter_svg(const Report& rep, const std::filesystem::path& file) {
  const int size = 520;
  const double left = 30, right = 490, top = 30, bottom = 490;
  const SurfaceGrid& grid = rep.surface;

  // Plot domain: the surface box when present, else the points' own box.
  rbbr::BoundingBox box = grid.box;
  if (grid.resolution == 0 && !(rep.real_points.empty() && rep.gen_points.empty())) {
    box = rbbr::bounding_box(rep.real_points, rep.gen_points);
  }
  const LinScale sx{box.min[0], box.max[0], left, right};
  const LinScale sy{box.min[1], box.max[1], bottom, top};

  auto out = open_out(file);
  out << "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"" << size << "\" height=\"" << size
      << "\" viewBox=\"0 0 " << size << ' ' << size << "\">\n";
  out << "<rect width=\"" << size << "\" height=\"" << size << "\" fill=\"#ffffff\"/>\n";

  if (grid.resolution > 0) {
    const double cw = (right - left) / grid.resolution;
    const double ch = (bottom - top) / grid.resolution;
    for (int iy = 0; iy < grid.resolution; ++iy) {
      for (int ix = 0; ix < grid.resolution; ++ix) {
        const double x = left + ix * cw;
        const double y = bottom - (iy + 1) * ch;
        out << "<rect x=\"" << svg_num(x) << "\" y=\"" << svg_num(y) << "\" width=\""
            << svg_num(cw + 0.5) << "\" height=\"" << svg_num(ch + 0.5) << "\" fill=\""
            << surface_color(grid.at(iy, ix)) << "\"/>\n";
      }
    }
  }

  for (const Vec2& p : rep.real_points) {
    out << "<circle cx=\"" << svg_num(sx(p[0])) << "\" cy=\"" << svg_num(sy(p[1]))
        << "\" r=\"2.5\" fill=\"none\" stroke=\"#000000\"/>\n";
  }
  for (const Vec2& p : rep.gen_points) {
    out << "<circle cx=\"" << svg_num(sx(p[0])) << "\" cy=\"" << svg_num(sy(p[1]))
        << "\" r=\"2\" fill=\"#ffd92f\" stroke=\"#000000\" stroke-width=\"0.5\"/>\n";
  }

  out << "<rect x=\"" << svg_num(left) << "\" y=\"" << svg_num(top) << "\" width=\""
      << svg_num(right - left) << "\" height=\"" << svg_num(bottom - top)
      << "\" fill=\"none\" stroke=\"#000000\"/>\n";
  out << "</svg>\n";
  finish(out, file);
}

}  // namespace

void emit(const Report& report, const std::filesystem::path& dir) {
  report.validate();
  std::filesystem::create_directories(dir);
  write_coverage_csv(report.coverage, dir / "coverage.csv");
  write_series_csv(report, dir / "series.csv");
  write_surface_csv(report.surface, dir / "surface.csv");
  write_points_csv(report, dir / "points.csv");
  write_convergence_svg(report, dir / "convergence.svg");
  write_scatter_svg(report, dir / "scatter.svg");
}

namespace {

std::ifstream open_in(const std::filesystem::path& file) {
  std::ifstream in(file);
  if (!in) throw std::runtime_error("parse: cannot open " + file.string());
  return in;
}

std::vector<std::string> split_line(const std::string& line) {
  std::vector<std::string> fields;
  std::size_t start = 0;
  while (true) {
    const std::size_t comma = line.find(',', start);
    if (comma == std::string::npos) {
      fields.push_back(line.substr(start));
      return fields;
    }
    fields.push_back(line.substr(start, comma - start));
    start = comma + 1;
  }
}

[[noreturn]] void bad_row(const std::filesystem::path& file, std::size_t line_no,
                          const std::string& why) {
  throw std::runtime_error("parse: " + file.string() + " line " + std::to_string(line_no) + ": " +
                           why);
}

void expect_header(std::ifstream& in, const std::filesystem::path& file, const char* header) {
  std::string line;
  if (!std::getline(in, line) || line != header) {
    throw std::runtime_error("parse: " + file.string() + ": expected header '" + header + "'");
  }
}

int parse_int(const std::string& s, const std::filesystem::path& file, std::size_t line_no) {
  try {
    std::size_t used = 0;
    const int v = std::stoi(s, &used);
    if (used != s.size()) bad_row(file, line_no, "trailing characters in integer '" + s + "'");
    return v;
  } catch (const std::logic_error&) {
    bad_row(file, line_no, "bad integer '" + s + "'");
  }
}

}  // namespace

CoverageReport parse_coverage_csv(const std::filesystem::path& file) {
  auto in = open_in(file);
  expect_header(in, file, "metric,value");

  CoverageReport rep;
  std::string line;
  std::size_t line_no = 1;
  bool saw_fraction = false;
  while (std::getline(in, line)) {
    ++line_no;
    const auto fields = split_line(line);
    if (fields.size() != 2) bad_row(file, line_no, "expected 2 fields");
    const std::string& key = fields[0];
    if (key == "modes_hit") {
      rep.modes_hit = parse_int(fields[1], file, line_no);
    } else if (key == "total_modes") {
      rep.total_modes = parse_int(fields[1], file, line_no);
    } else if (key == "high_quality_fraction") {
      rep.high_quality_fraction = parse_double(fields[1]);
      saw_fraction = true;
    } else if (key.starts_with("mode_")) {
      const int idx = parse_int(key.substr(5), file, line_no);
      if (idx != static_cast<int>(rep.per_mode_counts.size())) {
        bad_row(file, line_no, "mode rows out of order");
      }
      rep.per_mode_counts.push_back(parse_int(fields[1], file, line_no));
    } else {
      bad_row(file, line_no, "unknown metric '" + key + "'");
    }
  }
  if (!saw_fraction) {
    throw std::runtime_error("parse: " + file.string() + ": missing high_quality_fraction");
  }
  return rep;
}

SeriesTable parse_series_csv(const std::filesystem::path& file) {
  auto in = open_in(file);
  expect_header(in, file, "iteration,u_brs,security_gen,security_clf,subgame_value");

  SeriesTable table;
  std::string line;
  std::size_t line_no = 1;
  while (std::getline(in, line)) {
    ++line_no;
    const auto fields = split_line(line);
    if (fields.size() != 5) bad_row(file, line_no, "expected 5 fields");
    if (parse_int(fields[0], file, line_no) != static_cast<int>(table.u_brs.size()) + 1) {
      bad_row(file, line_no, "iterations out of order");
    }
    table.u_brs.push_back(parse_double(fields[1]));
    table.security.emplace_back(parse_double(fields[2]), parse_double(fields[3]));
    table.subgame_value.push_back(parse_double(fields[4]));
  }
  return table;
}

SurfaceGrid parse_surface_csv(const std::filesystem::path& file) {
  auto in = open_in(file);
  expect_header(in, file, "row,col,x,y,value");

  SurfaceGrid grid;
  int row_count = 0;
  std::string line;
  std::size_t line_no = 1;
  while (std::getline(in, line)) {
    ++line_no;
    const auto fields = split_line(line);
    if (fields.size() != 5) bad_row(file, line_no, "expected 5 fields");
    const int row = parse_int(fields[0], file, line_no);
    const int col = parse_int(fields[1], file, line_no);
    const int idx = static_cast<int>(grid.values.size());

    // Row 0 fixes the resolution; later rows must follow row-major order.
    if (row == 0) {
      if (col != idx) bad_row(file, line_no, "cells out of order");
      grid.resolution = col + 1;
    } else {
      if (grid.resolution < 1 || row != idx / grid.resolution || col != idx % grid.resolution) {
        bad_row(file, line_no, "cells out of order");
      }
    }
    row_count = row + 1;

    const double x = parse_double(fields[2]);
    const double y = parse_double(fields[3]);
    grid.values.push_back(parse_double(fields[4]));
    if (row == 0 && col == 0) grid.box.min = {x, y};
    grid.box.max = {x, y};
  }
  if (row_count != grid.resolution) {
    throw std::runtime_error("parse: " + file.string() + ": cell count is not a square grid");
  }
  return grid;
}

std::pair<std::vector<Vec2>, std::vector<Vec2>> parse_points_csv(const std::filesystem::path& file) {
  auto in = open_in(file);
  expect_header(in, file, "kind,x,y");

  std::pair<std::vector<Vec2>, std::vector<Vec2>> points;
  std::string line;
  std::size_t line_no = 1;
  while (std::getline(in, line)) {
    ++line_no;
    const auto fields = split_line(line);
    if (fields.size() != 3) bad_row(file, line_no, "expected 3 fields");
    const Vec2 p{parse_double(fields[1]), parse_double(fields[2])};
    if (fields[0] == "real") {
      points.first.push_back(p);
    } else if (fields[0] == "generated") {
      points.second.push_back(p);
    } else {
      bad_row(file, line_no, "unknown point kind '" + fields[0] + "'");
    }
  }
  return points;
}

}  // namespace gangs::report
