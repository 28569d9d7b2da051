#include <doctest.h>

#include <cstdio>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <string>
#include <sys/wait.h>

namespace fs = std::filesystem;

namespace {

struct RunResult {
  int exit_code = -1;
  std::string output;
};

/// Runs the installed binary with `args`, capturing stdout and stderr.
RunResult run_cli(const std::string& args) {
  const std::string cmd = std::string(GANGS_BIN) + " " + args + " 2>&1";
  FILE* pipe = ::popen(cmd.c_str(), "r");
  REQUIRE(pipe != nullptr);
  std::string out;
  char buf[4096];
  std::size_t n = 0;
  while ((n = std::fread(buf, 1, sizeof buf, pipe)) > 0) out.append(buf, n);
  const int status = ::pclose(pipe);
  RunResult r;
  r.exit_code = WIFEXITED(status) ? WEXITSTATUS(status) : -1;
  r.output = std::move(out);
  return r;
}

fs::path temp_root() {
  const auto dir = fs::temp_directory_path() / "gangs_cli_test";
  fs::create_directories(dir);
  return dir;
}

void write_file(const fs::path& file, const std::string& text) {
  std::ofstream out(file, std::ios::trunc | std::ios::binary);
  REQUIRE(out.good());
  out << text;
}

std::string slurp(const fs::path& file) {
  std::ifstream in(file, std::ios::binary);
  REQUIRE(in.good());
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

fs::path cyclic_game_csv() {
  const auto file = temp_root() / "rps.csv";
  write_file(file, "# rows=3 cols=3 convention=u_C\n0,-1,1\n1,0,-1\n-1,1,0\n");
  return file;
}

/// Two iterations of the sample-based engine on a 4-mode grid: small enough
/// for a subprocess test, large enough to exercise every artifact writer.
fs::path tiny_pnm_config(const fs::path& out_dir) {
  const auto file = temp_root() / "tiny_pnm.json";
  write_file(file, std::string(R"({
    "mode": "pnm",
    "seed": 7,
    "outDir": ")") + out_dir.string() + R"(",
    "data": {"kind": "grid", "components": 4, "spacing": 2.0, "sigma": 0.1},
    "gang": {"genLayers": [2, 16, 2], "genActivations": ["tanh", "linear"],
             "clfLayers": [2, 16, 1], "clfActivations": ["tanh", "sigmoid"]},
    "pnm": {"maxIterations": 2, "cellSamples": 300,
            "rbbr": {"iterations": 60, "batchSize": 32, "clfSubsampleCount": 2}},
    "eval": {"samples": 400, "resolution": 16}
  })");
  return file;
}

const char* const kReportFiles[] = {"coverage.csv", "series.csv", "surface.csv",
                                    "points.csv",   "convergence.svg", "scatter.svg"};

}  // namespace

TEST_CASE("solve-matrix prints the value and uniform mixes for the cyclic game") {
  const auto r = run_cli("solve-matrix " + cyclic_game_csv().string());
  CHECK(r.exit_code == 0);
  CHECK(r.output.find("value 0\n") != std::string::npos);
  CHECK(r.output.find("exploitability 0\n") != std::string::npos);
  // Both mixes uniform: six thirds in total.
  std::size_t thirds = 0, pos = 0;
  while ((pos = r.output.find("0.3333333333333333", pos)) != std::string::npos) {
    ++thirds;
    pos += 1;
  }
  CHECK(thirds == 6);
}

TEST_CASE("pnm run emits checkpoints, report artifacts, and a resolved config") {
  const auto out = temp_root() / "pnm_run";
  fs::remove_all(out);
  const auto r = run_cli("pnm --config " + tiny_pnm_config(out).string());
  CAPTURE(r.output);
  REQUIRE(r.exit_code == 0);
  for (const char* name : {"resolved-config.json", "state.json", "history.jsonl", "subgame.csv",
                           "gen_000.params", "clf_000.params"}) {
    CAPTURE(name);
    CHECK(fs::exists(out / name));
  }
  for (const char* name : kReportFiles) {
    CAPTURE(name);
    CHECK(fs::exists(out / name));
  }
  CHECK(r.output.find("pnm: 2 iterations") != std::string::npos);
  CHECK(r.output.find("coverage:") != std::string::npos);
}

TEST_CASE("same config and seed produce byte-identical artifacts") {
  const auto out_a = temp_root() / "det_a";
  const auto out_b = temp_root() / "det_b";
  fs::remove_all(out_a);
  fs::remove_all(out_b);
  const auto cfg = tiny_pnm_config(out_a);
  REQUIRE(run_cli("pnm --config " + cfg.string()).exit_code == 0);
  REQUIRE(run_cli("pnm --config " + cfg.string() + " --out " + out_b.string()).exit_code == 0);
  // history.jsonl is excluded: it records wall-clock seconds per iteration.
  for (const char* name : {"coverage.csv", "series.csv", "surface.csv", "points.csv",
                           "subgame.csv"}) {
    CAPTURE(name);
    CHECK(slurp(out_a / name) == slurp(out_b / name));
  }
}

TEST_CASE("the seed flag overrides the config seed and changes the run") {
  const auto out_a = temp_root() / "seed_a";
  const auto out_b = temp_root() / "seed_b";
  fs::remove_all(out_a);
  fs::remove_all(out_b);
  const auto cfg = tiny_pnm_config(out_a);
  REQUIRE(run_cli("pnm --config " + cfg.string()).exit_code == 0);
  REQUIRE(run_cli("pnm --config " + cfg.string() + " --seed 8 --out " + out_b.string())
              .exit_code == 0);
  CHECK(slurp(out_b / "resolved-config.json").find("\"seed\": 8") != std::string::npos);
  CHECK(slurp(out_a / "points.csv") != slurp(out_b / "points.csv"));
}

TEST_CASE("max-iters flag caps the memory growth loop") {
  const auto out = temp_root() / "capped";
  fs::remove_all(out);
  const auto cfg = tiny_pnm_config(out);
  REQUIRE(run_cli("pnm --config " + cfg.string() + " --max-iters 1").exit_code == 0);
  const auto series = slurp(out / "series.csv");
  // Header plus exactly one iteration row.
  CHECK(std::count(series.begin(), series.end(), '\n') == 2);
}

TEST_CASE("gan run emits its training history and report") {
  const auto out = temp_root() / "gan_run";
  fs::remove_all(out);
  const auto cfg = temp_root() / "tiny_gan.json";
  write_file(cfg, std::string(R"({
    "mode": "gan",
    "seed": 7,
    "outDir": ")") + out.string() + R"(",
    "data": {"kind": "grid", "components": 4},
    "gang": {"genLayers": [2, 16, 2], "genActivations": ["tanh", "linear"],
             "clfLayers": [2, 16, 1], "clfActivations": ["tanh", "sigmoid"]},
    "ganCfg": {"iterations": 40, "batchSize": 16},
    "eval": {"samples": 400, "resolution": 16}
  })");
  const auto r = run_cli("gan --config " + cfg.string());
  CAPTURE(r.output);
  REQUIRE(r.exit_code == 0);
  for (const char* name : {"gen.params", "clf.params", "training-history.csv",
                           "resolved-config.json"}) {
    CAPTURE(name);
    CHECK(fs::exists(out / name));
  }
  for (const char* name : kReportFiles) {
    CAPTURE(name);
    CHECK(fs::exists(out / name));
  }
  const auto hist = slurp(out / "training-history.csv");
  CHECK(hist.rfind("round,clf_loss,gen_loss\n", 0) == 0);
  CHECK(std::count(hist.begin(), hist.end(), '\n') == 41);
}

TEST_CASE("eval reproduces a finished run's report byte for byte") {
  const auto run_dir = temp_root() / "eval_src";
  const auto out = temp_root() / "eval_out";
  fs::remove_all(run_dir);
  fs::remove_all(out);
  REQUIRE(run_cli("pnm --config " + tiny_pnm_config(run_dir).string()).exit_code == 0);
  const auto cfg = temp_root() / "tiny_eval.json";
  write_file(cfg, std::string(R"({
    "mode": "eval",
    "seed": 7,
    "outDir": ")") + out.string() + R"(",
    "runDir": ")" + run_dir.string() + R"(",
    "data": {"kind": "grid", "components": 4, "spacing": 2.0, "sigma": 0.1},
    "gang": {"genLayers": [2, 16, 2], "genActivations": ["tanh", "linear"],
             "clfLayers": [2, 16, 1], "clfActivations": ["tanh", "sigmoid"]},
    "eval": {"samples": 400, "resolution": 16}
  })");
  const auto r = run_cli("eval --config " + cfg.string());
  CAPTURE(r.output);
  REQUIRE(r.exit_code == 0);
  for (const char* name : {"coverage.csv", "series.csv", "surface.csv", "points.csv"}) {
    CAPTURE(name);
    CHECK(slurp(run_dir / name) == slurp(out / name));
  }
}

TEST_CASE("pnm-matrix certifies the cyclic game and writes its solution") {
  const auto out = temp_root() / "pm_run";
  fs::remove_all(out);
  const auto cfg = temp_root() / "pm.json";
  write_file(cfg, std::string(R"({"mode": "pnm-matrix", "outDir": ")") + out.string() +
                      R"(", "matrixFile": ")" + cyclic_game_csv().string() + R"("})");
  const auto r = run_cli("pnm-matrix --config " + cfg.string());
  CAPTURE(r.output);
  REQUIRE(r.exit_code == 0);
  CHECK(r.output.find("certified") != std::string::npos);
  CHECK(r.output.find("exploitability 0\n") != std::string::npos);
  CHECK(fs::exists(out / "solution.csv"));
  const auto solution = slurp(out / "solution.csv");
  CHECK(solution.rfind("quantity,index,value\n", 0) == 0);
  CHECK(solution.find("value,,0\n") != std::string::npos);
}

TEST_CASE("failures exit with the documented codes") {
  // Config problems: bad file, unknown key, subcommand/mode mismatch, bad usage.
  CHECK(run_cli("pnm --config /does/not/exist.json").exit_code == 2);
  const auto bad = temp_root() / "bad.json";
  write_file(bad, R"({"mode": "pnm", "outDir": "x", "bogus": 1})");
  CHECK(run_cli("pnm --config " + bad.string()).exit_code == 2);
  const auto out = temp_root() / "unused";
  CHECK(run_cli("gan --config " + tiny_pnm_config(out).string()).exit_code == 2);
  CHECK(run_cli("pnm").exit_code == 2);
  CHECK(run_cli("").exit_code == 2);
  // Artifact I/O problems: a payoff matrix that is not there.
  CHECK(run_cli("solve-matrix /does/not/exist.csv").exit_code == 4);
}
