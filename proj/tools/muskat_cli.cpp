#include <CLI11.hpp>

#include <cstdio>
#include <fstream>
#include <iostream>
#include <optional>
#include <sstream>

#include "muskat/config.hpp"
#include "muskat/modulus.hpp"
#include "muskat/rundir.hpp"
#include "muskat/stepper.hpp"
#include "muskat/verifier.hpp"
#include "report.hpp"

namespace fs = std::filesystem;
using nlohmann::json;
using namespace muskat;

namespace {

// Exit codes: 0 success, 1 a check failed or the search was infeasible,
// 2 usage or input error, 3 the run aborted on instability.
constexpr int kFailed = 1;
constexpr int kInputError = 2;
constexpr int kAborted = 3;

std::vector<double> parse_list(const std::string& text) {
  std::vector<double> out;
  std::stringstream ss(text);
  std::string item;
  while (std::getline(ss, item, ',')) {
    if (item.empty()) continue;
    std::size_t used = 0;
    const double v = std::stod(item, &used);
    if (used != item.size()) throw std::invalid_argument("bad number in list: " + item);
    out.push_back(v);
  }
  return out;
}

json run_manifest(const RunConfig& cfg, const GridField& f0) {
  return {{"config", to_json(cfg)},
          {"initial_slope", slope_sup(f0.view())},
          {"initial_max", max_abs(f0.values())},
          {"support_radius", cfg.support_radius()}};
}

int cmd_simulate(const fs::path& config_path, std::optional<fs::path> out, const std::string& ladder_flag) {
  RunConfig cfg = load_config(config_path);
  if (out) cfg.output = *out;
  if (!ladder_flag.empty()) cfg.eps_ladder = parse_list(ladder_flag);
  if (cfg.output.empty()) throw ConfigError("/output", "no output directory (set it in the config or pass --out)");
  cfg.validate();
  const GridField f0 = build_initial(cfg.initial, cfg.grid);

  if (!cfg.eps_ladder.empty()) {
    const LadderResult ladder = viscosity_ladder(f0, cfg.eps_ladder, cfg.stepper, cfg.quadrature);
    fs::create_directories(cfg.output);
    CsvTable distances{{"rung", "epsilon_a", "epsilon_b", "sup_distance"}, {}};
    json rungs = json::array();
    for (std::size_t i = 0; i < ladder.runs.size(); ++i) {
      char name[32];
      std::snprintf(name, sizeof name, "eps_%02zu", i);
      json m = run_manifest(cfg, f0);
      m["config"]["epsilon"] = ladder.epsilons[i];
      write_run(cfg.output / name, ladder.runs[i], m);
      rungs.push_back({{"dir", name}, {"epsilon", ladder.epsilons[i]}, {"aborted", ladder.runs[i].aborted}});
    }
    for (std::size_t i = 0; i < ladder.distances.size(); ++i)
      distances.rows.push_back({static_cast<double>(i), ladder.epsilons[i], ladder.epsilons[i + 1], ladder.distances[i]});
    write_csv(cfg.output / "distances.csv", distances);
    std::ofstream(cfg.output / "manifest.json") << json{{"version", version_stamp()},
                                                        {"config", to_json(cfg)},
                                                        {"ladder", rungs},
                                                        {"distances", ladder.distances}}
                                                       .dump(2)
                                                << "\n";
    std::cout << "ladder written to " << cfg.output << "\n";
    for (std::size_t i = 0; i < ladder.distances.size(); ++i)
      std::cout << "  eps " << ladder.epsilons[i] << " -> " << ladder.epsilons[i + 1] << ": "
                << ladder.distances[i] << "\n";
    return 0;
  }

  try {
    const TrajectoryRecord rec = run(f0, cfg.epsilon, cfg.stepper, cfg.quadrature);
    write_run(cfg.output, rec, run_manifest(cfg, f0));
    std::cout << "run written to " << cfg.output << " (" << rec.snapshots.size() << " snapshots, "
              << rec.dt_history.size() << " steps, " << rec.events.size() << " events"
              << (rec.tainted ? ", tainted" : "") << ")\n";
    return 0;
  } catch (const RunAborted& e) {
    write_run(cfg.output, *e.partial, run_manifest(cfg, f0));
    std::cerr << "run aborted: " << e.what() << " (partial trajectory written to " << cfg.output << ")\n";
    return kAborted;
  }
}

struct VerifyOptions {
  std::optional<fs::path> run_dir;
  std::optional<fs::path> compare_dir;
  std::string checks;
  bool exhaustive = false;
  std::optional<fs::path> out;
};

// Shape diagnostics are recomputed from the stored fields so that a report
// always reflects the snapshots on disk; tolerances come from the run.
void refresh_shape(TrajectoryRecord& r) {
  for (std::size_t k = 0; k < r.snapshots.size(); ++k) {
    SnapshotDiagnostics fresh = measure_shape(r.snapshots[k], r.envelope_radii);
    SnapshotDiagnostics& d = r.diagnostics[k];
    d.time = fresh.time;
    d.slope_sup = fresh.slope_sup;
    d.hessian_sup = fresh.hessian_sup;
    d.max_value = fresh.max_value;
    d.min_value = fresh.min_value;
    d.directional_sup = fresh.directional_sup;
    d.envelope = fresh.envelope;
  }
}

std::string join_values(const CheckReport& r) {
  std::string s;
  for (const auto& [k, v] : r.values) {
    char buf[64];
    std::snprintf(buf, sizeof buf, "%s=%.6g", k.c_str(), v);
    s += (s.empty() ? "" : ";") + std::string(buf);
  }
  return s;
}

void write_reports(const fs::path& dir, const std::vector<CheckReport>& reports, const std::vector<std::string>& skipped) {
  fs::create_directories(dir);
  std::ofstream csv(dir / "checks.csv");
  csv << "name,verdict,margin,tolerance,tainted,witness_t,witness_x1,witness_x2,witness_y1,witness_y2,witness_radius,"
         "values\n";
  char buf[512];
  for (const auto& r : reports) {
    std::snprintf(buf, sizeof buf, "%s,%s,%.17g,%.17g,%d,%.17g,%d,%d,%d,%d,%.17g,", r.name.c_str(),
                  to_string(r.verdict).c_str(), r.margin, r.tolerance, r.tainted ? 1 : 0, r.witness.time, r.witness.x[0],
                  r.witness.x[1], r.witness.y[0], r.witness.y[1], r.witness.radius);
    csv << buf << join_values(r) << "\n";
  }
  std::ofstream summary(dir / "summary.txt");
  for (std::ostream* os : {static_cast<std::ostream*>(&summary), &std::cout}) {
    for (const auto& r : reports) {
      std::snprintf(buf, sizeof buf, "%-26s %-6s margin=% .4e tol=%.3e%s", r.name.c_str(), to_string(r.verdict).c_str(),
                    r.margin, r.tolerance, r.tainted ? " [tainted]" : "");
      *os << buf;
      if (!r.values.empty()) *os << "  " << join_values(r);
      if (!r.note.empty()) *os << "  (" << r.note << ")";
      *os << "\n";
    }
    for (const auto& s : skipped) *os << "skipped: " << s << "\n";
  }
}

std::vector<CheckReport> scalar_reports() {
  std::vector<CheckReport> out;
  for (int d : {2, 3}) out.push_back(scalar_monotonicity(d));
  for (double B : {1.0, 10.0, 100.0})
    for (int d : {2, 3}) out.push_back(check_general_comparison_constant(B, d));
  return out;
}

int cmd_verify(const VerifyOptions& opt) {
  std::vector<std::string> selected;
  bool explicit_selection = !opt.checks.empty() && opt.checks != "all";
  if (explicit_selection) {
    std::stringstream ss(opt.checks);
    std::string item;
    while (std::getline(ss, item, ','))
      if (!item.empty()) selected.push_back(item);
  }
  const bool want_scalar = !explicit_selection || std::count(selected.begin(), selected.end(), "scalar");
  std::vector<CheckReport> reports;
  std::vector<std::string> skipped;

  if (!opt.run_dir) {
    if (explicit_selection && (selected.size() != 1 || selected[0] != "scalar"))
      throw std::invalid_argument("trajectory checks need a run directory");
    reports = scalar_reports();
    write_reports(opt.out.value_or(fs::path("verify-scalar")), reports, skipped);
  } else {
    StoredRun stored = read_run(*opt.run_dir);
    TrajectoryRecord& traj = stored.record;
    if (traj.snapshots.empty()) throw std::runtime_error(opt.run_dir->string() + ": no snapshots");
    refresh_shape(traj);
    const RunConfig cfg = parse_config(stored.manifest.at("config"));
    const CheckBudgets& budgets = cfg.checks;
    PairSampling sampling = budgets.pairs;
    sampling.exhaustive = sampling.exhaustive || opt.exhaustive;

    std::vector<std::string> names = selected;
    if (!explicit_selection) {
      names = budgets.names.empty() ? trajectory_check_names() : budgets.names;
      if (opt.compare_dir) names.insert(names.end(), {"comparison", "uniqueness"});
    }
    std::optional<StoredRun> other;
    if (opt.compare_dir) {
      other = read_run(*opt.compare_dir);
      refresh_shape(other->record);
    }

    for (const auto& name : names) {
      if (name == "scalar") continue;
      try {
        if (name == "max-principle") {
          reports.push_back(check_max_principle(traj));
        } else if (name == "growth") {
          reports.push_back(check_growth(traj));
        } else if (name == "curvature-decay") {
          reports.push_back(check_curvature_decay(traj, budgets.curvature_budget));
        } else if (name == "modulus-generation") {
          const double B0 = traj.diagnostics.front().slope_sup;
          const double B = std::max(B0, 1e-6);
          const double lambda = budgets.modulus_lambda.value_or(ellipticity_constants(std::min(B, kSlopeThreshold * (1 - 1e-12))).lambda);
          const SearchResult found = search_constants({budgets.modulus_A, budgets.modulus_c, lambda});
          if (!found.feasible) throw InsufficientData("modulus-generation: no feasible (delta, gamma) for these constants");
          const OmegaBar wbar = omega_bar(found.spec, B);
          CheckReport r = check_modulus_generation(traj, wbar, sampling);
          if (B0 < B) r.note = "zero initial slope; omega_bar built for B = 1e-6";
          reports.push_back(r);
          // per-snapshot scan for the report heat map
          CsvTable scan{{"t", "ratio", "margin"}, {}};
          std::vector<double> upper;
          for (const auto& s : traj.snapshots) {
            if (s.time() <= 0.0) continue;
            const CrossingResult c = crossing_scan(s, wbar, s.time(), sampling);
            if (scan.columns.size() == 3)
              for (std::size_t b = 0; b < c.bin_upper.size(); ++b) {
                char col[48];
                std::snprintf(col, sizeof col, "margin_r%.6g", c.bin_upper[b]);
                scan.columns.emplace_back(col);
              }
            std::vector<double> row{s.time(), c.ratio, c.margin};
            for (double m : c.bin_margin) row.push_back(std::isfinite(m) ? m : std::nan(""));
            scan.rows.push_back(row);
          }
          fs::create_directories(opt.out.value_or(*opt.run_dir / "verify"));
          write_csv(opt.out.value_or(*opt.run_dir / "verify") / "modulus_scan.csv", scan);
        } else if (name == "time-regularity") {
          if (!budgets.growth) throw InsufficientData("time-regularity: no growth envelope in the config");
          reports.push_back(check_time_regularity(traj, *budgets.growth, cfg.quadrature, budgets.time_regularity_budget));
        } else if (name == "slope-decay") {
          if (!budgets.growth) throw InsufficientData("slope-decay: no growth envelope in the config");
          reports.push_back(check_slope_decay(traj, *budgets.growth, budgets.slope_decay_band));
        } else if (name == "slope-inequality") {
          if (!budgets.growth) throw InsufficientData("slope-inequality: no growth envelope in the config");
          reports.push_back(check_slope_inequality(traj, *budgets.growth));
        } else if (name == "ellipticity") {
          reports.push_back(check_ellipticity(traj));
        } else if (name == "holder") {
          reports.push_back(holder_quotients(traj));
        } else if (name == "comparison" || name == "uniqueness") {
          if (!other) throw std::invalid_argument(name + " needs --compare");
          reports.push_back(name == "comparison" ? check_comparison(traj, other->record)
                                                 : check_uniqueness(traj, other->record));
        } else {
          throw std::invalid_argument("unknown check: " + name);
        }
      } catch (const InsufficientData& e) {
        if (explicit_selection) {
          CheckReport r = make_report(name, -std::numeric_limits<double>::infinity(), 0.0);
          r.note = e.what();
          reports.push_back(r);
        } else {
          skipped.push_back(e.what());
        }
      }
    }
    if (want_scalar) {
      auto s = scalar_reports();
      reports.insert(reports.end(), s.begin(), s.end());
    }
    write_reports(opt.out.value_or(*opt.run_dir / "verify"), reports, skipped);
  }
  const bool failed = std::any_of(reports.begin(), reports.end(),
                                  [](const CheckReport& r) { return r.verdict == Verdict::fail && !r.tainted; });
  return failed ? kFailed : 0;
}

struct SearchOptions {
  double A = 1.0;
  double c = 1.0;
  std::optional<double> lambda;
  std::optional<double> B;
  fs::path out = "modulus-search";
};

int cmd_modulus_search(const SearchOptions& opt) {
  if (!opt.lambda && !opt.B) throw std::invalid_argument("pass --lambda or --B");
  const double lambda = opt.lambda ? *opt.lambda : ellipticity_constants(*opt.B).lambda;
  const SearchResult result = search_constants({opt.A, opt.c, lambda});
  fs::create_directories(opt.out);
  CsvTable margins{{"xi", "F", "quad_error", "margin"}, {}};
  for (const auto& row : result.rows) margins.rows.push_back({row.xi, row.F, row.error, row.margin});
  write_csv(opt.out / "margins.csv", margins);
  json m{{"version", version_stamp()},
         {"A", opt.A},
         {"c", opt.c},
         {"lambda", lambda},
         {"feasible", result.feasible},
         {"pairs_tried", result.pairs_tried},
         {"worst_margin", result.feasible ? json(result.worst_margin) : json(nullptr)},
         {"worst_xi", result.worst_xi}};
  if (result.spec.delta > 0.0) m["delta"] = result.spec.delta, m["gamma"] = result.spec.gamma;
  if (opt.B) {
    m["B"] = *opt.B;
    if (result.feasible) {
      try {
        m["C"] = omega_bar(result.spec, *opt.B).C();
      } catch (const AttainableRangeError& e) {
        m["C"] = nullptr;
        m["C_error"] = e.what();
      }
    }
  }
  std::ofstream(opt.out / "manifest.json") << m.dump(2) << "\n";
  if (!result.feasible) {
    std::cerr << "modulus-search: infeasible within the search budget (A=" << opt.A << ", c=" << opt.c
              << ", lambda=" << lambda << ")\n";
    return kFailed;
  }
  std::cout << "accepted delta=" << result.spec.delta << " gamma=" << result.spec.gamma
            << " worst margin=" << result.worst_margin << " at xi=" << result.worst_xi;
  if (m.contains("C") && !m["C"].is_null()) std::cout << " C=" << m["C"].get<double>();
  std::cout << "\n";
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Numerical laboratory for the stable-regime Muskat interface equation"};
  app.require_subcommand(1);

  fs::path config_path;
  std::optional<fs::path> sim_out;
  std::string ladder;
  auto* sim = app.add_subcommand("simulate", "integrate a configured run and write a run directory");
  sim->add_option("--config", config_path, "run configuration (JSON)")->required();
  sim->add_option("--out", sim_out, "output directory (overrides the config)");
  sim->add_option("--eps-ladder", ladder, "comma-separated decreasing viscosities");

  VerifyOptions vopt;
  auto* ver = app.add_subcommand("verify", "run checks on a run directory (or the scalar lemmas alone)");
  ver->add_option("run_dir", vopt.run_dir, "run directory");
  ver->add_option("--checks", vopt.checks, "comma-separated checks, 'scalar', or 'all'");
  ver->add_option("--compare", vopt.compare_dir, "second run for comparison/uniqueness");
  ver->add_flag("--exhaustive-pairs", vopt.exhaustive, "all node pairs in the modulus check (grids up to 64²)");
  ver->add_option("--out", vopt.out, "report directory (default: <run_dir>/verify)");

  SearchOptions sopt;
  auto* search = app.add_subcommand("modulus-search", "find (delta, gamma) satisfying the functional inequality");
  search->add_option("--A", sopt.A, "aggregated constant A")->check(CLI::PositiveNumber);
  search->add_option("--c", sopt.c, "dimensional constant c")->check(CLI::PositiveNumber);
  auto* lam = search->add_option("--lambda", sopt.lambda, "ellipticity constant lambda");
  search->add_option("--B", sopt.B, "slope bound; lambda defaults to lambda(B), and C is reported")->excludes(lam);
  search->add_option("--out", sopt.out, "output directory");

  std::vector<fs::path> report_dirs;
  fs::path report_out = "plots";
  auto* rep = app.add_subcommand("report", "plot diagnostics of one or more run directories as SVG");
  rep->add_option("run_dirs", report_dirs, "run directories")->required();
  rep->add_option("--out", report_out, "plot directory");

  CLI11_PARSE(app, argc, argv);

  try {
    if (*sim) return cmd_simulate(config_path, sim_out, ladder);
    if (*ver) return cmd_verify(vopt);
    if (*search) return cmd_modulus_search(sopt);
    if (*rep) return cmd_report(report_dirs, report_out);
  } catch (const ConfigError& e) {
    std::cerr << e.what() << "\n";
    return kInputError;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kInputError;
  }
  return kInputError;
}
