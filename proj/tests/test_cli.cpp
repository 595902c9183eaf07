#include <doctest.h>

#include <sys/wait.h>

#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <string>

#include "muskat/config.hpp"
#include "muskat/rundir.hpp"
#include "muskat/snapshot.hpp"

using namespace muskat;
namespace fs = std::filesystem;

namespace {

// Scratch directory removed when the test case ends.
struct ScratchDir {
  fs::path path;
  ScratchDir() {
    path = fs::temp_directory_path() / ("muskat-cli-" + std::to_string(::getpid()) + "-" + std::to_string(counter()++));
    fs::remove_all(path);
    fs::create_directories(path);
  }
  ~ScratchDir() { fs::remove_all(path); }
  ScratchDir(const ScratchDir&) = delete;
  ScratchDir& operator=(const ScratchDir&) = delete;
  static int& counter() {
    static int n = 0;
    return n;
  }
};

struct CliResult {
  int status = -1;
  std::string output;
};

CliResult muskat_cli(const std::string& args, const fs::path& scratch) {
  const fs::path log = scratch / "cli.log";
  const std::string cmd = std::string(MUSKAT_CLI_PATH) + " " + args + " > " + log.string() + " 2>&1";
  const int raw = std::system(cmd.c_str());
  std::ifstream in(log);
  std::stringstream text;
  text << in.rdbuf();
  return {WIFEXITED(raw) ? WEXITSTATUS(raw) : -1, text.str()};
}

void write_text(const fs::path& p, const std::string& text) { std::ofstream(p) << text; }

const char* kZeroConfig = R"({
  "grid": {"nodes": 32, "extent": 3.141592653589793, "policy": "periodic"},
  "initial": {"kind": "cosine", "amplitude": 0.0, "wavevector": [1, 0]},
  "quadrature": {"R_max": 10.0, "method": "split", "split_radius": 0.8},
  "stepper": {"t_end": 1.0, "snapshot_times": [0.05, 0.1, 0.5, 1.0], "envelope_radii": [0.2, 0.4]}
})";

const char* kCosineConfig = R"({
  "grid": {"nodes": 32, "extent": 3.141592653589793, "policy": "periodic"},
  "initial": {"kind": "cosine", "amplitude": 0.001, "wavevector": [1, 0]},
  "quadrature": {"R_max": 20.0, "method": "split", "split_radius": 0.8},
  "stepper": {"t_end": 1.0, "snapshot_times": [0.05, 0.1, 0.5, 1.0], "envelope_radii": [0.2, 0.4],
              "cfl_hyperbolic": 3.0}
})";

}  // namespace

TEST_CASE("config parsing reports where the problem is") {
  CHECK_NOTHROW(parse_config_text(kZeroConfig));
  try {
    parse_config_text(R"({"grid": {"nodes": 32, "extent": 1.0, "polcy": "periodic"}, "initial": {"kind": "cosine"}})");
    FAIL("unknown key accepted");
  } catch (const ConfigError& e) {
    CHECK(e.location == "/grid/polcy");
  }
  try {
    parse_config_text("{\n  \"grid\": [1,\n}");
    FAIL("syntax error accepted");
  } catch (const ConfigError& e) {
    CHECK(e.location.find("line 3") != std::string::npos);
  }
  // Round trip through JSON.
  const RunConfig a = parse_config_text(kCosineConfig);
  const RunConfig b = parse_config(to_json(a));
  CHECK(b.grid == a.grid);
  CHECK(b.stepper.snapshot_times == a.stepper.snapshot_times);
  CHECK(b.quadrature.split_radius == a.quadrature.split_radius);
}

TEST_CASE("shipped example configs load and validate") {
  int seen = 0;
  for (const auto& entry : fs::directory_iterator(MUSKAT_CONFIG_DIR)) {
    if (entry.path().extension() != ".json") continue;
    CAPTURE(entry.path().string());
    const RunConfig c = load_config(entry.path());
    CHECK_NOTHROW(c.validate());
    ++seen;
  }
  CHECK(seen >= 4);
}

TEST_CASE("run directory round trip") {
  ScratchDir dir;
  TrajectoryRecord r;
  r.epsilon = 0.1;
  r.envelope_radii = {0.5};
  const GridField f = GridField::zeros({16, 1.6}, 0.25);
  r.snapshots = {f};
  SnapshotDiagnostics d = measure_shape(f, r.envelope_radii);
  d.tol_time = 1e-9;
  r.diagnostics = {d};
  r.dt_history = {0.01, 0.02};
  r.events = {{0.25, "slope-max-principle", 3e-7}};
  write_run(dir.path / "run", r, nlohmann::json::object());
  const StoredRun back = read_run(dir.path / "run");
  CHECK(back.record.epsilon == 0.1);
  CHECK(back.record.snapshots.size() == 1);
  CHECK(back.record.diagnostics[0].tol_time == 1e-9);
  CHECK(back.record.dt_history == r.dt_history);
  CHECK(back.record.events.at(0).kind == "slope-max-principle");
  CHECK(back.manifest.at("version").get<std::string>() == version_stamp());
  fs::remove(dir.path / "run" / "diagnostics.csv");
  CHECK_THROWS_AS(read_run(dir.path / "run"), std::runtime_error);
}

TEST_CASE("simulate and verify a zero run") {
  ScratchDir dir;
  write_text(dir.path / "zero.json", kZeroConfig);
  const fs::path run = dir.path / "zero";
  REQUIRE(muskat_cli("simulate --config " + (dir.path / "zero.json").string() + " --out " + run.string(), dir.path)
              .status == 0);
  CHECK(fs::exists(run / "manifest.json"));
  CHECK(fs::exists(run / "snapshots" / "0000.field"));
  const auto v = muskat_cli("verify " + run.string() + " --checks max-principle,growth,ellipticity", dir.path);
  CHECK(v.status == 0);
  CHECK(fs::exists(run / "verify" / "checks.csv"));
  CHECK(fs::exists(run / "verify" / "summary.txt"));
}

TEST_CASE("cosine run decays like exp(-t) and tampering is caught") {
  ScratchDir dir;
  write_text(dir.path / "cos.json", kCosineConfig);
  const fs::path run = dir.path / "cos";
  REQUIRE(muskat_cli("simulate --config " + (dir.path / "cos.json").string() + " --out " + run.string(), dir.path)
              .status == 0);
  const CsvTable diag = read_csv(run / "diagnostics.csv");
  const auto t = diag.column("t");
  const auto m = diag.column("max_value");
  for (const auto& row : diag.rows) CHECK(row[m] == doctest::Approx(1e-3 * std::exp(-row[t])).epsilon(1e-3));
  CHECK(muskat_cli("verify " + run.string() + " --checks max-principle,growth", dir.path).status == 0);

  // Inflate the last snapshot: the recomputed slope now exceeds the initial one.
  const fs::path last = run / "snapshots" / "0004.field";
  const GridField f = read_snapshot(last);
  std::vector<double> up(f.values().begin(), f.values().end());
  for (double& x : up) x *= 3.0;
  write_snapshot(last, GridField(f.geometry(), up, f.time()));
  const auto v = muskat_cli("verify " + run.string() + " --checks max-principle", dir.path);
  CHECK(v.status != 0);
  std::ifstream summary(run / "verify" / "summary.txt");
  std::string first;
  std::getline(summary, first);
  CHECK(first.find("fail") != std::string::npos);

  const fs::path plots = dir.path / "plots";
  CHECK(muskat_cli("report " + run.string() + " --out " + plots.string(), dir.path).status == 0);
  CHECK(fs::exists(plots / "slope.svg"));
}

TEST_CASE("scalar-only verification needs no run directory") {
  ScratchDir dir;
  const auto v = muskat_cli("verify --checks scalar --out " + (dir.path / "scalar").string(), dir.path);
  CHECK(v.status == 0);
  CHECK(fs::exists(dir.path / "scalar" / "checks.csv"));
}

TEST_CASE("modulus search from the command line") {
  ScratchDir dir;
  const auto ok = muskat_cli("modulus-search --A 1 --c 1 --lambda 1 --out " + (dir.path / "ms").string(), dir.path);
  CHECK(ok.status == 0);
  CHECK(fs::exists(dir.path / "ms" / "margins.csv"));
  const auto none = muskat_cli("modulus-search --A 1 --c 1 --lambda 0 --out " + (dir.path / "ms0").string(), dir.path);
  CHECK(none.status == 1);
  CHECK(none.output.find("infeasible") != std::string::npos);
}

TEST_CASE("input errors exit with status 2 and name the location") {
  ScratchDir dir;
  write_text(dir.path / "bad.json", R"({"grid": {"nodes": 32, "extent": 3.2}, "initial": {"kind": "cosine"}})");
  const auto r = muskat_cli("simulate --config " + (dir.path / "bad.json").string(), dir.path);
  CHECK(r.status == 2);
  CHECK(r.output.find("/initial/amplitude") != std::string::npos);
  CHECK(muskat_cli("verify " + (dir.path / "missing").string(), dir.path).status == 2);
}
