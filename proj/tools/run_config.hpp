#pragma once

#include <cstdint>
#include <filesystem>
#include <string>

#include "gangs/baseline_gan.hpp"
#include "gangs/eval_report.hpp"
#include "gangs/gang_model.hpp"
#include "gangs/pnm.hpp"
#include "gangs/synth_data.hpp"

namespace gangs::cli {

/// Target mixture constructor. `random` realizes its modes from the run seed,
/// so the same config file plus seed always names the same distribution.
struct DataConfig {
  enum class Kind { grid, annulus, random };
  Kind kind = Kind::grid;
  int components = 9;
  double spacing = 2.0;        // grid
  double sigma = 0.05;         // grid, annulus
  double radius = 2.0;         // annulus
  double location_scale = 3.0; // random
  double cov_scale = 0.05;     // random
};

/// One fully resolved run description: every default is already applied, so
/// serializing this reproduces the run. Sections irrelevant to `mode` hold
/// their defaults and are neither read, validated, nor serialized.
struct RunConfig {
  enum class Mode { pnm, gan, solve_matrix, pnm_matrix, eval };

  Mode mode = Mode::pnm;
  std::uint64_t seed = 0;
  std::string out_dir;      // required except for solve-matrix
  std::string matrix_file;  // solve-matrix, pnm-matrix
  std::string run_dir;      // eval: checkpoint directory of a finished run

  DataConfig data;
  /// Networks, noise, and measuring function; data_dist stays empty until
  /// build_gang_spec pairs it with the mixture.
  gang::GangSpec gang;
  pnm::PnmConfig pnm_cfg;
  gan::GanConfig gan_cfg;
  report::EvalParams eval;
};

std::string to_string(RunConfig::Mode mode);
RunConfig::Mode mode_from_string(const std::string& s);

/// Reads and fully validates a config file. Every omitted key takes its
/// documented default; unknown keys are rejected by their full dotted path.
/// Parse failures report line and column.
RunConfig parse_config(const std::filesystem::path& file);

/// Same grammar from an in-memory string; `origin` names it in errors.
RunConfig parse_config_text(const std::string& text, const std::string& origin = "<config>");

/// Canonical form: fixed key order, resolved defaults, two-space indent.
/// serialize(parse(s)) is a fixed point.
std::string serialize(const RunConfig& cfg);

/// Writes serialize(cfg) to dir/resolved-config.json.
void write_resolved_config(const RunConfig& cfg, const std::filesystem::path& dir);

/// The target mixture, realized from the run seed when kind = random.
data::GaussianMixture build_mixture(const RunConfig& cfg);

/// Networks plus mixture assembled into the playable game, validated.
gang::GangSpec build_gang_spec(const RunConfig& cfg);

/// Strategy-memory settings with the run seed installed. For pnm-matrix the
/// caller still loads full_game from matrix_file.
pnm::PnmConfig build_pnm_config(const RunConfig& cfg);

}  // namespace gangs::cli
