#include "muskat/stepper.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numbers>

namespace muskat {

std::string to_string(Scheme s) { return s == Scheme::rk2 ? "RK2" : "RK4"; }

Scheme parse_scheme(std::string_view s) {
  if (s == "RK2" || s == "rk2") return Scheme::rk2;
  if (s == "RK4" || s == "rk4") return Scheme::rk4;
  throw std::invalid_argument("unknown scheme: " + std::string(s));
}

int order(Scheme s) { return s == Scheme::rk2 ? 2 : 4; }

void StepperConfig::validate() const {
  if (!(cfl_hyperbolic > 0.0) || !(cfl_viscous > 0.0)) throw std::invalid_argument("CFL numbers must be positive");
  if (!(t_end > 0.0)) throw std::invalid_argument("t_end must be positive");
  if (snapshot_times.empty() && !(snapshot_cadence > 0.0)) throw std::invalid_argument("snapshot cadence must be positive");
  if (!(fixed_dt >= 0.0)) throw std::invalid_argument("fixed_dt must be >= 0");
  for (std::size_t i = 0; i < snapshot_times.size(); ++i) {
    if (!(snapshot_times[i] > 0.0) || snapshot_times[i] > t_end * (1.0 + 1e-12))
      throw std::invalid_argument("snapshot times must lie in (0, t_end]");
    if (i > 0 && !(snapshot_times[i] > snapshot_times[i - 1])) throw std::invalid_argument("snapshot times must increase");
  }
}

std::vector<double> StepperConfig::output_times() const {
  std::vector<double> out;
  if (!snapshot_times.empty()) {
    out = snapshot_times;
  } else {
    const auto count = static_cast<long>(std::floor(t_end / snapshot_cadence * (1.0 + 1e-12)));
    for (long k = 1; k <= count; ++k) out.push_back(std::min(t_end, k * snapshot_cadence));
  }
  if (out.empty() || out.back() < t_end * (1.0 - 1e-12)) out.push_back(t_end);
  out.back() = t_end;
  return out;
}

double lambda_eff(double slope, double R_max, double spacing) {
  const double B = std::min(slope, kSlopeThreshold);
  return ellipticity_constants(B).Lambda * 2.0 * std::numbers::pi * std::log(R_max / spacing);
}

double stable_dt(const GridView& f, double epsilon, const StepperConfig& cfg, const QuadratureConfig& q) {
  const double h = f.h();
  double dt = cfg.cfl_hyperbolic * h / lambda_eff(slope_sup(f), q.R_max, h);
  if (epsilon > 0.0) dt = std::min(dt, cfg.cfl_viscous * h * h / (4.0 * epsilon));
  if (cfg.snapshot_times.empty()) dt = std::min(dt, cfg.snapshot_cadence);
  return dt;
}

namespace {

std::vector<double> evaluate(const GridGeometry& g, const std::vector<double>& u, double epsilon,
                             const QuadratureConfig& q) {
  return rhs_field(GridView{g, u}, q, epsilon, false).values;
}

void axpy(std::vector<double>& out, const std::vector<double>& base, double a, const std::vector<double>& x) {
  out.resize(base.size());
  for (std::size_t k = 0; k < base.size(); ++k) out[k] = base[k] + a * x[k];
}

double stencil_discrepancy(const GridView& f) {
  const Gradient g2 = gradient(f, StencilOrder::second);
  const Gradient g4 = gradient(f, StencilOrder::fourth);
  double m = 0.0;
  for (std::size_t k = 0; k < g2.d1.size(); ++k) m = std::max(m, std::hypot(g2.d1[k] - g4.d1[k], g2.d2[k] - g4.d2[k]));
  return m;
}

}  // namespace

StepOutcome step(const GridField& f, double dt, double epsilon, Scheme scheme, const QuadratureConfig& q) {
  if (!(dt > 0.0)) throw std::invalid_argument("dt must be positive");
  const GridGeometry& g = f.geometry();
  const std::vector<double> u(f.values().begin(), f.values().end());
  std::vector<double> next;
  if (scheme == Scheme::rk2) {
    const auto k1 = evaluate(g, u, epsilon, q);
    std::vector<double> stage;
    axpy(stage, u, dt, k1);
    const auto k2 = evaluate(g, stage, epsilon, q);
    next.resize(u.size());
    for (std::size_t k = 0; k < u.size(); ++k) next[k] = u[k] + 0.5 * dt * (k1[k] + k2[k]);
  } else {
    const auto k1 = evaluate(g, u, epsilon, q);
    std::vector<double> stage;
    axpy(stage, u, 0.5 * dt, k1);
    const auto k2 = evaluate(g, stage, epsilon, q);
    axpy(stage, u, 0.5 * dt, k2);
    const auto k3 = evaluate(g, stage, epsilon, q);
    axpy(stage, u, dt, k3);
    const auto k4 = evaluate(g, stage, epsilon, q);
    next.resize(u.size());
    for (std::size_t k = 0; k < u.size(); ++k) next[k] = u[k] + dt / 6.0 * (k1[k] + 2.0 * k2[k] + 2.0 * k3[k] + k4[k]);
  }
  for (double v : next)
    if (!std::isfinite(v)) throw InstabilityError("non-finite value after step");
  StepOutcome out{GridField::zeros(g), 0.0};
  if (g.policy == BoundaryPolicy::compact_support) {
    const int N = g.nodes;
    out.boundary_defect = ring_magnitude(GridView{g, next});
    for (int i = 0; i < N; ++i)
      for (int j = 0; j < N; ++j)
        if (i < 2 || j < 2 || i >= N - 2 || j >= N - 2) next[static_cast<std::size_t>(i) * N + j] = 0.0;
  }
  const double value_before = max_abs(f.values());
  const double value_after = max_abs(next);
  if (value_after > 10.0 * value_before && value_after > 1e-300) throw InstabilityError("value blow-up beyond 10x");
  out.field = GridField(g, std::move(next), f.time() + dt);
  const double slope_before = slope_sup(f.view());
  const double slope_after = slope_sup(out.field.view());
  if (slope_after > 10.0 * slope_before && slope_after > 1e-300) throw InstabilityError("slope blow-up beyond 10x");
  return out;
}

double TrajectoryRecord::max_tol_q() const {
  double m = 0.0;
  for (const auto& d : diagnostics) m = std::max(m, d.tol_q());
  return m;
}

SnapshotDiagnostics measure_shape(const GridField& f, const std::vector<double>& radii) {
  SnapshotDiagnostics d;
  const GridView v = f.view();
  d.time = f.time();
  const Gradient g = gradient(v);
  for (std::size_t k = 0; k < g.d1.size(); ++k) d.slope_sup = std::max(d.slope_sup, std::hypot(g.d1[k], g.d2[k]));
  for (int e = 0; e < 8; ++e) {
    const double c = std::cos(e * std::numbers::pi / 4.0);
    const double s = std::sin(e * std::numbers::pi / 4.0);
    double m = -std::numeric_limits<double>::infinity();
    for (std::size_t k = 0; k < g.d1.size(); ++k) m = std::max(m, c * g.d1[k] + s * g.d2[k]);
    d.directional_sup[e] = m;
  }
  d.hessian_sup = hessian_sup(v);
  const auto [lo, hi] = std::minmax_element(f.values().begin(), f.values().end());
  d.min_value = *lo;
  d.max_value = *hi;
  if (!radii.empty()) d.envelope = increment_envelope(v, radii);
  return d;
}

SnapshotDiagnostics measure(const GridField& f, const std::vector<double>& radii, const QuadratureConfig& q,
                            double epsilon) {
  SnapshotDiagnostics d = measure_shape(f, radii);
  d.tol_stencil = stencil_discrepancy(f.view());
  d.quadrature = rhs_field(f.view(), q, epsilon, true).diagnostics;
  return d;
}

RunAborted::RunAborted(const std::string& what, TrajectoryRecord record)
    : std::runtime_error(what), partial(std::make_shared<const TrajectoryRecord>(std::move(record))) {}

namespace {

double local_time_error(const GridField& u, double dt, double epsilon, Scheme scheme, const QuadratureConfig& q) {
  const GridField full = step(u, dt, epsilon, scheme, q).field;
  const GridField half = step(step(u, 0.5 * dt, epsilon, scheme, q).field, 0.5 * dt, epsilon, scheme, q).field;
  double m = 0.0;
  for (std::size_t k = 0; k < full.values().size(); ++k) m = std::max(m, std::abs(full.values()[k] - half.values()[k]));
  return m / (std::pow(2.0, order(scheme)) - 1.0);
}

}  // namespace

TrajectoryRecord run(const GridField& f0, double epsilon, const StepperConfig& cfg, const QuadratureConfig& q) {
  cfg.validate();
  q.validate(f0.geometry());
  if (!(epsilon >= 0.0)) throw std::invalid_argument("viscosity must be >= 0");
  const double initial_slope = slope_sup(f0.view());
  if (initial_slope >= kSlopeThreshold) throw std::invalid_argument("initial slope must be below 5^{-1/2}");

  TrajectoryRecord rec;
  rec.epsilon = epsilon;
  rec.envelope_radii = cfg.envelope_radii;
  const double initial_max = max_abs(f0.values());
  rec.taint_threshold = 1e-6 * initial_max;

  GridField u = f0.at_time(0.0);
  SnapshotDiagnostics d0 = measure(u, cfg.envelope_radii, q, epsilon);
  rec.snapshots.push_back(u);
  rec.diagnostics.push_back(d0);

  auto next_dt = [&](const GridField& state) {
    return cfg.fixed_dt > 0.0 ? cfg.fixed_dt : stable_dt(state.view(), epsilon, cfg, q);
  };
  double time_error_rate = cfg.estimate_time_error ? local_time_error(u, next_dt(u), epsilon, cfg.scheme, q) : 0.0;
  double quad_rate = d0.quadrature.quadrature_error();
  double tol_quadrature = 0.0;
  double tol_time = 0.0;
  double t = 0.0;
  double interval_defect = 0.0;

  auto abort = [&](const std::string& why) {
    rec.aborted = true;
    rec.abort_reason = why;
    throw RunAborted(why, rec);
  };

  for (double target : cfg.output_times()) {
    long steps = 0;
    double last_dt = 0.0;
    while (t < target) {
      double dt = next_dt(u);
      if (t + dt >= target - 1e-12 * std::max(1.0, target)) dt = target - t;
      StepOutcome out{GridField::zeros(u.geometry()), 0.0};
      try {
        out = step(u, dt, epsilon, cfg.scheme, q);
      } catch (const InstabilityError& e) {
        abort(std::string("instability at t=") + std::to_string(t) + ": " + e.what());
      }
      const bool last = dt == target - t;
      t = last ? target : t + dt;
      u = out.field.at_time(t);
      rec.dt_history.push_back(dt);
      interval_defect = std::max(interval_defect, out.boundary_defect);
      rec.max_boundary_defect = std::max(rec.max_boundary_defect, out.boundary_defect);
      ++steps;
      last_dt = dt;
      if (max_abs(u.values()) > 10.0 * initial_max && initial_max > 0.0) abort("value exceeds 10x the initial maximum");
      if (initial_slope > 0.0 && slope_sup(u.view()) > 10.0 * initial_slope) abort("slope exceeds 10x the initial slope");
    }
    SnapshotDiagnostics d = measure(u, cfg.envelope_radii, q, epsilon);
    const double interval = target - rec.diagnostics.back().time;
    const double rate = d.quadrature.quadrature_error();
    tol_quadrature += std::max(quad_rate, rate) * interval;
    quad_rate = rate;
    if (cfg.estimate_time_error) {
      const double e_now = local_time_error(u, next_dt(u), epsilon, cfg.scheme, q);
      tol_time += std::max(time_error_rate, e_now) * static_cast<double>(steps);
      time_error_rate = e_now;
    }
    d.tol_quadrature = tol_quadrature;
    d.tol_time = tol_time;
    d.dt = last_dt;
    d.boundary_defect = interval_defect;
    interval_defect = 0.0;
    const double budget = 10.0 * d.tol_q();
    if (d.slope_sup > d0.slope_sup + budget) rec.events.push_back({t, "slope-max-principle", d.slope_sup - d0.slope_sup});
    if (d.max_value > d0.max_value + budget) rec.events.push_back({t, "value-maximum", d.max_value - d0.max_value});
    if (d.min_value < d0.min_value - budget) rec.events.push_back({t, "value-minimum", d0.min_value - d.min_value});
    for (std::size_t r = 0; r < d.envelope.size(); ++r)
      if (d.envelope[r] > d0.envelope[r] + budget)
        rec.events.push_back({t, "envelope-growth", d.envelope[r] - d0.envelope[r]});
    rec.snapshots.push_back(u);
    rec.diagnostics.push_back(std::move(d));
  }
  rec.tainted = rec.max_boundary_defect > rec.taint_threshold;
  return rec;
}

double sup_distance(const TrajectoryRecord& a, const TrajectoryRecord& b) {
  double m = 0.0;
  std::size_t j = 0;
  for (const auto& fa : a.snapshots) {
    while (j < b.snapshots.size() && b.snapshots[j].time() < fa.time() - 1e-12 * std::max(1.0, fa.time())) ++j;
    if (j == b.snapshots.size()) break;
    const auto& fb = b.snapshots[j];
    if (std::abs(fb.time() - fa.time()) > 1e-12 * std::max(1.0, fa.time())) continue;
    if (!(fa.geometry() == fb.geometry())) throw std::invalid_argument("sup_distance: mismatched grids");
    for (std::size_t k = 0; k < fa.values().size(); ++k) m = std::max(m, std::abs(fa.values()[k] - fb.values()[k]));
  }
  return m;
}

LadderResult viscosity_ladder(const GridField& f0, const std::vector<double>& epsilons, const StepperConfig& cfg,
                              const QuadratureConfig& q) {
  if (epsilons.empty()) throw std::invalid_argument("viscosity ladder needs at least one rung");
  for (std::size_t i = 0; i < epsilons.size(); ++i) {
    if (!(epsilons[i] >= 0.0)) throw std::invalid_argument("viscosities must be >= 0");
    if (i > 0 && !(epsilons[i] < epsilons[i - 1])) throw std::invalid_argument("viscosities must strictly decrease");
  }
  LadderResult out;
  out.epsilons = epsilons;
  for (double eps : epsilons) {
    try {
      out.runs.push_back(run(f0, eps, cfg, q));
    } catch (const RunAborted& e) {
      out.runs.push_back(*e.partial);
    }
  }
  for (std::size_t i = 0; i + 1 < out.runs.size(); ++i) out.distances.push_back(sup_distance(out.runs[i], out.runs[i + 1]));
  return out;
}

}  // namespace muskat
