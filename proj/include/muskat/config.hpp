#pragma once
// Run configuration: one JSON document covering data, grid, quadrature,
// stepping, viscosity and check budgets.

#include <cstdint>
#include <filesystem>
#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

#include <json.hpp>

#include "muskat/field.hpp"
#include "muskat/nonlocal.hpp"
#include "muskat/stepper.hpp"
#include "muskat/verifier.hpp"

namespace muskat {

// Carries the JSON pointer of the offending field, or the line and column of
// a syntax error.
struct ConfigError : std::runtime_error {
  std::string location;
  ConfigError(std::string where, const std::string& what);
};

struct CheckBudgets {
  std::vector<std::string> names;  // empty: every trajectory check
  double curvature_budget = 0.0;   // <= 0: report only
  double time_regularity_budget = 0.0;
  double slope_decay_band = 0.15;
  std::optional<GrowthEnvelope> growth;  // Omega for the slope-decay and time-regularity checks
  double modulus_A = 1.0;
  double modulus_c = 1.0;
  std::optional<double> modulus_lambda;  // default: lambda(initial slope)
  PairSampling pairs;
};

struct RunConfig {
  InitialDataSpec initial;
  GridGeometry grid;
  QuadratureConfig quadrature;
  StepperConfig stepper;
  double epsilon = 0.0;
  std::vector<double> eps_ladder;
  CheckBudgets checks;
  std::filesystem::path output;
  std::uint64_t seed = 0;

  // Radius outside which the initial data vanish (compact support), else 0.
  double support_radius() const;
  void validate() const;
};

RunConfig parse_config(const nlohmann::json& doc);
RunConfig parse_config_text(const std::string& text);
RunConfig load_config(const std::filesystem::path& path);
nlohmann::json to_json(const RunConfig& cfg);

}  // namespace muskat
