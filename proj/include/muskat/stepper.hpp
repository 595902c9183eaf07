#pragma once
// Explicit Runge-Kutta time stepping for the interface equation and its
// viscous regularisation.

#include <array>
#include <memory>
#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

#include "muskat/field.hpp"
#include "muskat/nonlocal.hpp"

namespace muskat {

enum class Scheme { rk2, rk4 };
std::string to_string(Scheme s);
Scheme parse_scheme(std::string_view s);
int order(Scheme s);

struct StepperConfig {
  Scheme scheme = Scheme::rk2;
  double cfl_hyperbolic = 0.3;  // dt <= cfl * h / Lambda_eff
  double cfl_viscous = 0.2;     // dt <= cfl * h² / (4 eps)
  double t_end = 1.0;
  double snapshot_cadence = 0.1;
  std::vector<double> snapshot_times;  // overrides the cadence when non-empty
  std::vector<double> envelope_radii;
  bool estimate_time_error = true;
  double fixed_dt = 0.0;  // > 0: use this step (still capped by snapshots)

  void validate() const;
  // t_end-inclusive, strictly increasing, excludes 0.
  std::vector<double> output_times() const;
};

// Lambda(slope) * 2π log(R_max / h).
double lambda_eff(double slope, double R_max, double spacing);
double stable_dt(const GridView& f, double epsilon, const StepperConfig& cfg, const QuadratureConfig& q);

struct StepOutcome {
  GridField field;
  double boundary_defect = 0.0;  // ring magnitude before re-zeroing (compact support)
};

struct InstabilityError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

// One explicit step. Throws InstabilityError when |f| or the slope grows past
// ten times its value at the start of the step (floors avoid zero thresholds).
StepOutcome step(const GridField& f, double dt, double epsilon, Scheme scheme, const QuadratureConfig& q);

struct SnapshotDiagnostics {
  double time = 0.0;
  double slope_sup = 0.0;
  double hessian_sup = 0.0;
  double max_value = 0.0;
  double min_value = 0.0;
  std::array<double, 8> directional_sup{};  // sup_x ∇f·e for e at angles kπ/4
  std::vector<double> envelope;
  double dt = 0.0;                // step in use when the snapshot was taken
  double boundary_defect = 0.0;   // max since the previous snapshot
  double tol_stencil = 0.0;
  double tol_quadrature = 0.0;
  double tol_time = 0.0;
  double tol_q() const { return tol_stencil + tol_quadrature + tol_time; }
  RhsDiagnostics quadrature;
};

struct TrajectoryEvent {
  double time = 0.0;
  std::string kind;
  double excess = 0.0;
};

struct TrajectoryRecord {
  double epsilon = 0.0;
  std::vector<double> envelope_radii;
  std::vector<GridField> snapshots;
  std::vector<SnapshotDiagnostics> diagnostics;
  std::vector<double> dt_history;
  std::vector<TrajectoryEvent> events;
  double max_boundary_defect = 0.0;
  double taint_threshold = 0.0;
  bool tainted = false;
  bool aborted = false;
  std::string abort_reason;

  double max_tol_q() const;
};

// Shape diagnostics only (slopes, curvature, extrema, envelope); tolerances
// and quadrature fields stay zero.
SnapshotDiagnostics measure_shape(const GridField& f, const std::vector<double>& envelope_radii);
SnapshotDiagnostics measure(const GridField& f, const std::vector<double>& envelope_radii, const QuadratureConfig& q,
                            double epsilon);

struct RunAborted : std::runtime_error {
  std::shared_ptr<const TrajectoryRecord> partial;
  RunAborted(const std::string& what, TrajectoryRecord record);
};

// Integrates to t_end, recording snapshots at the output times. Max-principle
// excursions beyond 10 tol_q are recorded as events, not errors.
TrajectoryRecord run(const GridField& f0, double epsilon, const StepperConfig& cfg, const QuadratureConfig& q);

struct LadderResult {
  std::vector<double> epsilons;
  std::vector<TrajectoryRecord> runs;
  std::vector<double> distances;  // sup_{t,x} |f_i - f_{i+1}| on the shared snapshot times
};

LadderResult viscosity_ladder(const GridField& f0, const std::vector<double>& epsilons, const StepperConfig& cfg,
                              const QuadratureConfig& q);
double sup_distance(const TrajectoryRecord& a, const TrajectoryRecord& b);

}  // namespace muskat
