#pragma once
// Run directories:
//
//   manifest.json     config echo, version stamp, tolerances, summary numbers
//   diagnostics.csv   one row per snapshot
//   events.csv        max-principle excursions flagged during the run
//   dt_history.csv    every accepted step
//   snapshots/NNNN.field

#include <filesystem>
#include <string>

#include <json.hpp>

#include "muskat/stepper.hpp"

namespace muskat {

std::string version_stamp();

struct StoredRun {
  TrajectoryRecord record;
  nlohmann::json manifest;
};

// Creates the directory if needed; overwrites files of an earlier run.
void write_run(const std::filesystem::path& dir, const TrajectoryRecord& record, nlohmann::json manifest);
// Throws std::runtime_error when the manifest, the CSV or a snapshot is missing.
StoredRun read_run(const std::filesystem::path& dir);

// Column names of diagnostics.csv for the given envelope radii.
std::vector<std::string> diagnostics_columns(const std::vector<double>& envelope_radii);

// Minimal CSV table: header row plus numeric rows.
struct CsvTable {
  std::vector<std::string> columns;
  std::vector<std::vector<double>> rows;
  std::size_t column(const std::string& name) const;  // throws when absent
};
CsvTable read_csv(const std::filesystem::path& path);
void write_csv(const std::filesystem::path& path, const CsvTable& table);

}  // namespace muskat
