#include "muskat/rundir.hpp"

#include <cstdio>
#include <fstream>
#include <sstream>
#include <stdexcept>

#include "muskat/snapshot.hpp"

#ifndef MUSKAT_VERSION
#define MUSKAT_VERSION "unknown"
#endif

namespace muskat {

namespace fs = std::filesystem;
using nlohmann::json;

std::string version_stamp() { return std::string("muskat ") + MUSKAT_VERSION; }

std::vector<std::string> diagnostics_columns(const std::vector<double>& envelope_radii) {
  std::vector<std::string> c{"t", "slope_sup", "hessian_sup", "max_value", "min_value"};
  for (int e = 0; e < 8; ++e) c.push_back("dir_sup_" + std::to_string(e));
  for (std::size_t r = 0; r < envelope_radii.size(); ++r) c.push_back("envelope_" + std::to_string(r));
  for (const char* name : {"dt", "boundary_defect", "tol_stencil", "tol_quadrature", "tol_time", "tol_q", "near_sup",
                           "tail_sup", "near_error_sup", "tail_error_sup", "split_error_bound"})
    c.emplace_back(name);
  return c;
}

std::size_t CsvTable::column(const std::string& name) const {
  for (std::size_t i = 0; i < columns.size(); ++i)
    if (columns[i] == name) return i;
  throw std::runtime_error("csv: no column " + name);
}

namespace {

std::string format(double v) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

std::vector<std::string> split(const std::string& line) {
  std::vector<std::string> out;
  std::stringstream ss(line);
  std::string cell;
  while (std::getline(ss, cell, ',')) out.push_back(cell);
  if (!line.empty() && line.back() == ',') out.emplace_back();
  return out;
}

std::vector<double> diagnostics_row(const SnapshotDiagnostics& d) {
  std::vector<double> row{d.time, d.slope_sup, d.hessian_sup, d.max_value, d.min_value};
  row.insert(row.end(), d.directional_sup.begin(), d.directional_sup.end());
  row.insert(row.end(), d.envelope.begin(), d.envelope.end());
  const RhsDiagnostics& q = d.quadrature;
  for (double v : {d.dt, d.boundary_defect, d.tol_stencil, d.tol_quadrature, d.tol_time, d.tol_q(), q.near_sup,
                   q.tail_sup, q.near_error_sup, q.tail_error_sup, q.split_error_bound})
    row.push_back(v);
  return row;
}

SnapshotDiagnostics diagnostics_from_row(const CsvTable& t, const std::vector<double>& row, std::size_t radii) {
  auto get = [&](const std::string& c) { return row.at(t.column(c)); };
  SnapshotDiagnostics d;
  d.time = get("t");
  d.slope_sup = get("slope_sup");
  d.hessian_sup = get("hessian_sup");
  d.max_value = get("max_value");
  d.min_value = get("min_value");
  for (int e = 0; e < 8; ++e) d.directional_sup[e] = get("dir_sup_" + std::to_string(e));
  for (std::size_t r = 0; r < radii; ++r) d.envelope.push_back(get("envelope_" + std::to_string(r)));
  d.dt = get("dt");
  d.boundary_defect = get("boundary_defect");
  d.tol_stencil = get("tol_stencil");
  d.tol_quadrature = get("tol_quadrature");
  d.tol_time = get("tol_time");
  d.quadrature = {get("near_sup"), get("tail_sup"), get("near_error_sup"), get("tail_error_sup"),
                  get("split_error_bound")};
  return d;
}

std::string snapshot_name(std::size_t k) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%04zu.field", k);
  return buf;
}

}  // namespace

CsvTable read_csv(const fs::path& path) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("cannot open " + path.string());
  CsvTable t;
  std::string line;
  if (!std::getline(in, line)) throw std::runtime_error(path.string() + ": empty csv");
  t.columns = split(line);
  std::size_t line_no = 1;
  while (std::getline(in, line)) {
    ++line_no;
    if (line.empty()) continue;
    const auto cells = split(line);
    if (cells.size() != t.columns.size())
      throw std::runtime_error(path.string() + ":" + std::to_string(line_no) + ": wrong number of cells");
    std::vector<double> row;
    for (const auto& c : cells) row.push_back(std::stod(c));
    t.rows.push_back(std::move(row));
  }
  return t;
}

void write_csv(const fs::path& path, const CsvTable& table) {
  std::ofstream out(path);
  if (!out) throw std::runtime_error("cannot open " + path.string() + " for writing");
  for (std::size_t i = 0; i < table.columns.size(); ++i) out << (i ? "," : "") << table.columns[i];
  out << "\n";
  for (const auto& row : table.rows) {
    for (std::size_t i = 0; i < row.size(); ++i) out << (i ? "," : "") << format(row[i]);
    out << "\n";
  }
  if (!out) throw std::runtime_error("write failed: " + path.string());
}

void write_run(const fs::path& dir, const TrajectoryRecord& record, json manifest) {
  fs::create_directories(dir / "snapshots");
  CsvTable diag{diagnostics_columns(record.envelope_radii), {}};
  for (const auto& d : record.diagnostics) diag.rows.push_back(diagnostics_row(d));
  write_csv(dir / "diagnostics.csv", diag);

  CsvTable steps{{"step", "dt"}, {}};
  for (std::size_t k = 0; k < record.dt_history.size(); ++k)
    steps.rows.push_back({static_cast<double>(k), record.dt_history[k]});
  write_csv(dir / "dt_history.csv", steps);

  {
    std::ofstream ev(dir / "events.csv");
    ev << "t,kind,excess\n";
    for (const auto& e : record.events) ev << format(e.time) << "," << e.kind << "," << format(e.excess) << "\n";
  }
  for (std::size_t k = 0; k < record.snapshots.size(); ++k)
    write_snapshot(dir / "snapshots" / snapshot_name(k), record.snapshots[k]);

  manifest["version"] = version_stamp();
  manifest["epsilon"] = record.epsilon;
  manifest["envelope_radii"] = record.envelope_radii;
  manifest["snapshot_count"] = record.snapshots.size();
  manifest["step_count"] = record.dt_history.size();
  manifest["max_boundary_defect"] = record.max_boundary_defect;
  manifest["taint_threshold"] = record.taint_threshold;
  manifest["tainted"] = record.tainted;
  manifest["aborted"] = record.aborted;
  manifest["abort_reason"] = record.abort_reason;
  manifest["max_tol_q"] = record.max_tol_q();
  if (!record.diagnostics.empty()) {
    const auto& last = record.diagnostics.back();
    manifest["tolerances"] = {{"tol_stencil", last.tol_stencil},
                              {"tol_quadrature", last.tol_quadrature},
                              {"tol_time", last.tol_time},
                              {"tol_q", last.tol_q()}};
    double near = 0.0;
    double tail = 0.0;
    for (const auto& d : record.diagnostics) {
      near = std::max(near, d.quadrature.near_sup);
      tail = std::max(tail, d.quadrature.tail_sup);
    }
    manifest["near_cell_sup"] = near;
    manifest["tail_correction_sup"] = tail;
  }
  std::ofstream out(dir / "manifest.json");
  out << manifest.dump(2) << "\n";
  if (!out) throw std::runtime_error("cannot write manifest in " + dir.string());
}

StoredRun read_run(const fs::path& dir) {
  StoredRun run;
  {
    std::ifstream in(dir / "manifest.json");
    if (!in) throw std::runtime_error(dir.string() + ": missing manifest.json");
    run.manifest = json::parse(in);
  }
  TrajectoryRecord& r = run.record;
  r.epsilon = run.manifest.value("epsilon", 0.0);
  r.envelope_radii = run.manifest.value("envelope_radii", std::vector<double>{});
  r.max_boundary_defect = run.manifest.value("max_boundary_defect", 0.0);
  r.taint_threshold = run.manifest.value("taint_threshold", 0.0);
  r.tainted = run.manifest.value("tainted", false);
  r.aborted = run.manifest.value("aborted", false);
  r.abort_reason = run.manifest.value("abort_reason", std::string{});

  const CsvTable diag = read_csv(dir / "diagnostics.csv");
  for (const auto& row : diag.rows) r.diagnostics.push_back(diagnostics_from_row(diag, row, r.envelope_radii.size()));
  for (std::size_t k = 0; k < r.diagnostics.size(); ++k) {
    const fs::path p = dir / "snapshots" / snapshot_name(k);
    if (!fs::exists(p)) throw std::runtime_error(dir.string() + ": missing snapshot " + p.filename().string());
    r.snapshots.push_back(read_snapshot(p));
  }
  if (fs::exists(dir / "dt_history.csv")) {
    const CsvTable steps = read_csv(dir / "dt_history.csv");
    for (const auto& row : steps.rows) r.dt_history.push_back(row.at(1));
  }
  if (std::ifstream ev(dir / "events.csv"); ev) {
    std::string line;
    std::getline(ev, line);
    while (std::getline(ev, line)) {
      const auto cells = split(line);
      if (cells.size() == 3) r.events.push_back({std::stod(cells[0]), cells[1], std::stod(cells[2])});
    }
  }
  return run;
}

}  // namespace muskat
