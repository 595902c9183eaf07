#include <doctest.h>

#include <cmath>
#include <numbers>

#include "muskat/field.hpp"
#include "muskat/stepper.hpp"

using namespace muskat;

namespace {

const GridGeometry kPeriodic64{64, std::numbers::pi, BoundaryPolicy::periodic};

GridField cosine(double amplitude, const GridGeometry& g = kPeriodic64) {
  InitialDataSpec s;
  s.kind = CosineData{amplitude, {1.0, 0.0}};
  return build_initial(s, g);
}

QuadratureConfig split_quadrature() {
  QuadratureConfig q;
  q.R_max = 50.0;
  q.method = QuadratureMethod::split;
  q.split_radius = 0.8;
  return q;
}

GridField small_bump() {
  InitialDataSpec s;
  s.kind = BumpData{0.12, 0.8};
  s.cutoff_M = 1.0;
  s.mollifier_width = 0.2;
  return build_initial(s, {32, 3.2, BoundaryPolicy::compact_support});
}

QuadratureConfig bump_quadrature() {
  QuadratureConfig q;
  q.R_max = 1.2;
  return q;
}

}  // namespace

TEST_CASE("stable step formulas") {
  const GridField zero = GridField::zeros(kPeriodic64);
  StepperConfig c;
  c.snapshot_cadence = 10.0;
  const QuadratureConfig q = split_quadrature();
  const double h = zero.spacing();
  CHECK(lambda_eff(0.0, q.R_max, h) == doctest::Approx(2.0 * std::numbers::pi * std::log(q.R_max / h)));
  CHECK(stable_dt(zero.view(), 0.0, c, q) == doctest::Approx(c.cfl_hyperbolic * h / lambda_eff(0.0, q.R_max, h)));
  // Large viscosity: the parabolic cap wins and scales like h²/eps.
  const double dt = stable_dt(zero.view(), 100.0, c, q);
  CHECK(dt == doctest::Approx(c.cfl_viscous * h * h / 400.0));
  CHECK(stable_dt(zero.view(), 200.0, c, q) == doctest::Approx(dt / 2.0));
  c.snapshot_cadence = 1e-6;
  CHECK(stable_dt(zero.view(), 0.0, c, q) == 1e-6);
}

TEST_CASE("output times") {
  StepperConfig c;
  c.t_end = 1.0;
  c.snapshot_cadence = 0.3;
  const auto t = c.output_times();
  REQUIRE(t.size() == 4);
  CHECK(t.back() == 1.0);
  c.snapshot_times = {0.5, 0.2};
  CHECK_THROWS(c.validate());
  c.snapshot_times = {0.2, 0.5};
  CHECK(c.output_times() == std::vector<double>{0.2, 0.5, 1.0});
  CHECK(parse_scheme("rk4") == Scheme::rk4);
  CHECK(order(Scheme::rk2) == 2);
}

TEST_CASE("zero field is an equilibrium") {
  const GridField zero = GridField::zeros({32, 3.2});
  const StepOutcome s = step(zero, 0.01, 0.0, Scheme::rk4, bump_quadrature());
  CHECK(max_abs(s.field.values()) == 0.0);
  CHECK(s.field.time() == doctest::Approx(0.01));
  StepperConfig c;
  c.t_end = 0.2;
  const auto r = run(zero, 0.0, c, bump_quadrature());
  for (const auto& f : r.snapshots) CHECK(max_abs(f.values()) == 0.0);
  CHECK(r.events.empty());
  CHECK_FALSE(r.tainted);
}

TEST_CASE("one RK4 step of a small cosine decays by exp(-dt)") {
  const GridField f = cosine(1e-3);
  const double dt = 1e-2;
  const StepOutcome s = step(f, dt, 0.0, Scheme::rk4, split_quadrature());
  const double ratio = max_abs(s.field.values()) / max_abs(f.values());
  CHECK(std::abs(ratio / std::exp(-dt) - 1.0) <= 1e-5);
}

TEST_CASE("temporal orders by Richardson") {
  const GridField f = cosine(1e-3);
  auto final = [&](Scheme scheme, double dt) {
    StepperConfig c;
    c.scheme = scheme;
    c.t_end = 0.4;
    c.snapshot_times = {0.4};
    c.fixed_dt = dt;
    c.estimate_time_error = false;
    return run(f, 0.0, c, split_quadrature()).snapshots.back();
  };
  auto sup_gap = [](const GridField& a, const GridField& b) {
    double m = 0.0;
    for (std::size_t k = 0; k < a.values().size(); ++k) m = std::max(m, std::abs(a.values()[k] - b.values()[k]));
    return m;
  };
  for (auto [scheme, dt, expected] : {std::tuple{Scheme::rk2, 0.1, 1.9}, std::tuple{Scheme::rk4, 0.1, 3.8}}) {
    const GridField a = final(scheme, dt), b = final(scheme, dt / 2), c = final(scheme, dt / 4);
    CHECK(std::log2(sup_gap(a, b) / sup_gap(b, c)) >= expected);
  }
}

TEST_CASE("small cosine slope decays monotonically") {
  StepperConfig c;
  c.t_end = 0.5;
  c.snapshot_cadence = 0.05;
  c.cfl_hyperbolic = 3.0;
  const auto r = run(cosine(1e-3), 0.0, c, split_quadrature());
  for (std::size_t k = 1; k < r.diagnostics.size(); ++k)
    CHECK(r.diagnostics[k].slope_sup <= r.diagnostics[k - 1].slope_sup + 1e-6);
  CHECK(r.diagnostics.back().max_value == doctest::Approx(1e-3 * std::exp(-0.5)).epsilon(1e-3));
}

TEST_CASE("bump run bookkeeping") {
  StepperConfig c;
  c.t_end = 0.2;
  c.snapshot_cadence = 0.05;
  c.envelope_radii = {0.2, 0.4, 0.8};
  const auto r = run(small_bump(), 0.0, c, bump_quadrature());
  REQUIRE(r.snapshots.size() == 5);
  CHECK(r.snapshots.back().time() == 0.2);
  CHECK(r.diagnostics.front().envelope.size() == 3);
  for (std::size_t k = 1; k < r.diagnostics.size(); ++k) {
    CHECK(r.diagnostics[k].slope_sup <= r.diagnostics[k - 1].slope_sup + 10.0 * r.max_tol_q());
    CHECK(r.diagnostics[k].tol_time >= r.diagnostics[k - 1].tol_time);
  }
  CHECK(r.max_tol_q() > 0.0);
  CHECK_FALSE(r.dt_history.empty());
}

TEST_CASE("identical inputs reproduce identical diagnostics") {
  StepperConfig c;
  c.t_end = 0.1;
  c.snapshot_cadence = 0.05;
  const auto a = run(small_bump(), 0.0, c, bump_quadrature());
  const auto b = run(small_bump(), 0.0, c, bump_quadrature());
  REQUIRE(a.diagnostics.size() == b.diagnostics.size());
  for (std::size_t k = 0; k < a.diagnostics.size(); ++k) {
    CHECK(a.diagnostics[k].slope_sup == b.diagnostics[k].slope_sup);
    CHECK(a.diagnostics[k].tol_q() == b.diagnostics[k].tol_q());
  }
}

TEST_CASE("oversized steps are reported as instability") {
  CHECK_THROWS_AS(step(small_bump(), 50.0, 0.0, Scheme::rk2, bump_quadrature()), InstabilityError);
}

TEST_CASE("viscosity ladder") {
  StepperConfig c;
  c.t_end = 0.5;
  c.snapshot_cadence = 0.25;
  c.cfl_hyperbolic = 3.0;
  SUBCASE("zero data") {
    const auto l = viscosity_ladder(GridField::zeros(kPeriodic64), {0.2, 0.1, 0.0}, c, split_quadrature());
    for (double d : l.distances) CHECK(d == 0.0);
  }
  SUBCASE("cosine data follow the linear closed form") {
    // Amplitude a e^{-(1+eps)t}; the sup over shared times is attained at t_end.
    const std::vector<double> eps{0.4, 0.2, 0.1, 0.0};
    const auto l = viscosity_ladder(cosine(1e-3), eps, c, split_quadrature());
    REQUIRE(l.distances.size() == 3);
    for (std::size_t k = 0; k < 3; ++k) {
      double expected = 0.0;
      for (double t : {0.25, 0.5})
        expected = std::max(expected, 1e-3 * std::abs(std::exp(-(1 + eps[k]) * t) - std::exp(-(1 + eps[k + 1]) * t)));
      CHECK(l.distances[k] == doctest::Approx(expected).epsilon(0.02));
    }
  }
}
