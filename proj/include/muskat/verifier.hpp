#pragma once
// Post-hoc checks on trajectories. Each returns a CheckReport whose margin is
// positive when the estimate holds; simulation checks tolerate 10 tol_q.

#include <array>
#include <cstdint>
#include <string>
#include <utility>
#include <vector>

#include "muskat/field.hpp"
#include "muskat/modulus.hpp"
#include "muskat/nonlocal.hpp"
#include "muskat/stepper.hpp"

namespace muskat {

enum class Verdict { pass, fail, report_only };
std::string to_string(Verdict v);

struct Witness {
  double time = 0.0;
  std::array<int, 2> x{-1, -1};
  std::array<int, 2> y{-1, -1};  // second node, or the offset for envelope checks
  double radius = 0.0;
};

struct CheckReport {
  std::string name;
  double margin = 0.0;
  double tolerance = 0.0;
  Witness witness;
  Verdict verdict = Verdict::pass;
  bool tainted = false;
  std::string note;
  std::vector<std::pair<std::string, double>> values;  // extra reported numbers

  bool passed() const { return verdict != Verdict::fail; }
  double value(const std::string& key) const;  // throws when absent
};

// pass iff margin >= -tolerance.
CheckReport make_report(std::string name, double margin, double tolerance, Witness w = {});

// 10 * the largest tol_q reported along the trajectory.
double simulation_tolerance(const TrajectoryRecord& traj);

struct InsufficientData : std::invalid_argument {
  using std::invalid_argument::invalid_argument;
};

// min_t [slope_sup(0) - slope_sup(t)], together with the same for the sup of
// every directional derivative along the 8 lattice directions.
CheckReport check_max_principle(const TrajectoryRecord& traj);

// Ordering: margin = -max_{t,x} (f - g). Requires f0 <= g0 nodewise.
CheckReport check_comparison(const TrajectoryRecord& f, const TrajectoryRecord& g);
// margin = sup|f0 - g0| - max_t sup|f - g|.
CheckReport check_uniqueness(const TrajectoryRecord& f, const TrajectoryRecord& g);

// min_{t,R} [Omega_0(R) - Omega_t(R)] over the recorded envelope radii.
CheckReport check_growth(const TrajectoryRecord& traj);

// sup_{t >= t_min} t * hessian_sup(t); margin = budget - sup when budget > 0,
// otherwise report only. Also reports the smooth-data branch
// max_t [hessian_sup(t) - hessian_sup(0)].
CheckReport check_curvature_decay(const TrajectoryRecord& traj, double budget, double t_min = 0.0);

struct PairSampling {
  int near_radius_nodes = 8;  // every pair with lattice offset within this radius
  int far_pairs = 20000;      // plus this many uniformly random pairs
  bool exhaustive = false;    // all node pairs; grids up to 64² only
  std::uint64_t seed = 1;
};

struct CrossingResult {
  double ratio = 0.0;   // sup |∇f(x) - ∇f(y)| / omega_bar(|x - y| / t)
  double margin = 0.0;  // min omega_bar(|x - y| / t) - |∇f(x) - ∇f(y)|
  Witness worst;        // pair attaining the ratio
  Witness tightest;     // pair attaining the margin
  std::size_t pairs = 0;
  // Minimum margin per log-spaced distance bin; bin k covers distances up to bin_upper[k].
  std::vector<double> bin_upper;
  std::vector<double> bin_margin;
};

CrossingResult crossing_scan(const GridField& f, const OmegaBar& omega_bar, double t, const PairSampling& sampling);

// min over snapshots t > 0 of the crossing-scan margin.
CheckReport check_modulus_generation(const TrajectoryRecord& traj, const OmegaBar& omega_bar,
                                     const PairSampling& sampling);

// sup_x |∂t f|(t) / (-log t + ∫Omega/R²) for snapshots in (0, 1/2), with ∂t f
// from the right-hand side; the log-Lipschitz quotient is reported alongside.
CheckReport check_time_regularity(const TrajectoryRecord& traj, const GrowthEnvelope& omega,
                                  const QuadratureConfig& q, double budget);

// Least-squares decay exponent of slope_sup over the last time decade against
// (1 - alpha)/(2 - alpha); margin = band - |fit - target|.
CheckReport check_slope_decay(const TrajectoryRecord& traj, const GrowthEnvelope& omega, double band);
// slope_sup(t) <= 2 Omega(R)/R at R = 2 slope_sup(t) / hessian_sup(t).
CheckReport check_slope_inequality(const TrajectoryRecord& traj, const GrowthEnvelope& omega);

// |h|³ K(x, h) in [lambda(B), Lambda(B)] for B = each snapshot's slope, on
// sampled nodes and offsets within radius_nodes.
CheckReport check_ellipticity(const TrajectoryRecord& traj, int radius_nodes = 6, int node_stride = 3);

// Empirical Hölder quotients of ∇f in the parabolic cylinders Q_{t/4}; never
// fails. Values: sup quotient for each exponent in {0.25, 0.5, 0.75}.
CheckReport holder_quotients(const TrajectoryRecord& traj);

// The names accepted by the CLI; "scalar" selects the simulation-free checks.
const std::vector<std::string>& trajectory_check_names();

// Simulation-free checks on phi_a(t) = (t - a)/(t² + 1)^{d/2}.
double scalar_phi(double t, double a, int d);
// phi_a(s) - phi_a(t).
double comparison_gap(double t, double s, double a, int d);
CheckReport scalar_monotonicity(int d, std::size_t samples = 1000000);
double general_comparison_constant(double B, int d);
CheckReport check_general_comparison_constant(double B, int d, std::size_t samples = 1000000, std::uint64_t seed = 7);

}  // namespace muskat
