#pragma once

#include <filesystem>
#include <span>
#include <utility>
#include <vector>

#include "gangs/baseline_gan.hpp"
#include "gangs/gang_model.hpp"
#include "gangs/pnm.hpp"
#include "gangs/rbbr.hpp"

namespace gangs::report {

/// Mode coverage of a sample set against the target mixture: each sample is
/// assigned to the nearest mode whose k-sigma ball contains it, or left
/// unassigned.
struct CoverageReport {
  int modes_hit = 0;
  int total_modes = 0;
  /// Assigned samples over total samples; 0 for an empty sample set.
  double high_quality_fraction = 0.0;
  std::vector<int> per_mode_counts;
};

CoverageReport coverage(std::span<const Vec2> samples, const data::GaussianMixture& mix,
                        double k_sigma);

/// Mean Euclidean distance from each assigned sample to its assigned mode's
/// mean; 0 when no sample is assigned. Rises when samples spread over more of
/// each mode's area instead of concentrating at the centers.
double within_mode_dispersion(std::span<const Vec2> samples, const data::GaussianMixture& mix,
                              double k_sigma);

/// Mixture-classifier outputs on a square lattice over `box`. Values live in
/// [0, 1] (convex combination of sigmoid outputs). The lattice has
/// `resolution` points per axis; both endpoints sit exactly on the box edges.
struct SurfaceGrid {
  rbbr::BoundingBox box;
  int resolution = 0;
  std::vector<double> values;  // row-major, y outer, x inner

  double at(int iy, int ix) const { return values[static_cast<std::size_t>(iy) * resolution + ix]; }
  /// Lattice coordinate for index i of `n` points spanning [lo, hi]; the last
  /// index returns hi exactly so box corners survive a save/load round trip.
  static double lattice_coord(double lo, double hi, int n, int i);
  Vec2 lattice_point(int iy, int ix) const;
};

SurfaceGrid classifier_surface(const gang::MixedNetStrategy& clf_mix, const rbbr::BoundingBox& box,
                               int resolution);

/// Everything the run artifacts are built from. The three series are indexed
/// by strategy-memory iteration; a baseline run leaves them empty.
struct Report {
  CoverageReport coverage;
  std::vector<double> u_brs_series;
  /// Per iteration: payoff each maintained mixture achieved against the
  /// best response trained against it (first generator mixture, then
  /// classifier mixture). Security in the game-theoretic sense.
  std::vector<std::pair<double, double>> security_series;
  std::vector<double> subgame_value_series;
  SurfaceGrid surface;
  std::vector<Vec2> real_points;
  std::vector<Vec2> gen_points;

  void validate() const;  // equal series lengths
};

struct EvalParams {
  int samples = 10000;  // generator draws scored for coverage and plotted
  double k_sigma = 3.0;
  int resolution = 64;
  void validate() const;
};

/// Assemble the artifacts of a finished strategy-memory run: sample the data
/// and the generator mixture, score coverage, and evaluate the classifier
/// mixture surface over the samples' bounding box. Series come straight from
/// the run history. Neural-oracle states only.
Report make_report(const gang::GangSpec& spec, const pnm::PnmState& state,
                   const EvalParams& params, Rng& rng);

/// Same artifacts for a baseline adversarial run; the two networks stand in
/// as singleton mixtures and the series stay empty.
Report make_report(const gang::GangSpec& spec, const gan::GanResult& result,
                   const EvalParams& params, Rng& rng);

/// Writes coverage.csv, series.csv, surface.csv, points.csv,
/// convergence.svg, scatter.svg into `dir` (created if absent). Overwrites;
/// byte-identical for equal reports. Column orders are fixed; see the
/// parse_* functions for the schemas.
void emit(const Report& report, const std::filesystem::path& dir);

/// Inverse readers for the CSV artifacts. Each reproduces the corresponding
/// Report fields exactly (numbers are written shortest-round-trip).
CoverageReport parse_coverage_csv(const std::filesystem::path& file);

struct SeriesTable {
  std::vector<double> u_brs;
  std::vector<std::pair<double, double>> security;
  std::vector<double> subgame_value;
};
SeriesTable parse_series_csv(const std::filesystem::path& file);

SurfaceGrid parse_surface_csv(const std::filesystem::path& file);

/// Returns (real points, generated points).
std::pair<std::vector<Vec2>, std::vector<Vec2>> parse_points_csv(const std::filesystem::path& file);

}  // namespace gangs::report
