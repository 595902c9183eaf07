#include <doctest.h>

#include <cmath>
#include <numbers>

#include "muskat/field.hpp"
#include "muskat/stepper.hpp"
#include "muskat/verifier.hpp"

using namespace muskat;

namespace {

const GridGeometry kGrid{32, std::numbers::pi, BoundaryPolicy::periodic};

QuadratureConfig quadrature() {
  QuadratureConfig q;
  q.R_max = 20.0;
  q.method = QuadratureMethod::split;
  q.split_radius = 0.8;
  return q;
}

StepperConfig decade_stepper() {
  StepperConfig c;
  c.t_end = 1.0;
  c.snapshot_times = {0.05, 0.1, 0.2, 0.3, 0.5, 0.7, 1.0};
  c.envelope_radii = {0.2, 0.4, 0.8, 1.6, 2.4};
  c.cfl_hyperbolic = 3.0;
  return c;
}

GridField cosine(double amplitude) {
  InitialDataSpec s;
  s.kind = CosineData{amplitude, {1.0, 1.0}};
  return build_initial(s, kGrid);
}

const TrajectoryRecord& cosine_run() {
  static const TrajectoryRecord r = run(cosine(1e-3), 0.0, decade_stepper(), quadrature());
  return r;
}

const TrajectoryRecord& zero_run() {
  static const TrajectoryRecord r = run(GridField::zeros(kGrid), 0.0, decade_stepper(), quadrature());
  return r;
}

// A record built from given snapshots, with shape diagnostics only.
TrajectoryRecord synthetic(std::vector<GridField> snaps, std::vector<double> radii = {0.2, 0.4}) {
  TrajectoryRecord r;
  r.envelope_radii = radii;
  for (auto& s : snaps) r.diagnostics.push_back(measure_shape(s, radii));
  r.snapshots = std::move(snaps);
  return r;
}

}  // namespace

TEST_CASE("zero trajectory") {
  const auto& r = zero_run();
  CHECK(check_max_principle(r).margin == 0.0);
  CHECK(check_growth(r).margin == 0.0);
  CHECK(check_curvature_decay(r, 1.0).value("sup_t_hessian") == 0.0);
  const OmegaBar w = omega_bar({0.25, 0.25}, 0.1);
  const CrossingResult c = crossing_scan(r.snapshots.back(), w, 1.0, {});
  CHECK(c.ratio == 0.0);
  CHECK(c.margin > 0.0);
}

TEST_CASE("linear-regime cosine run passes the trajectory checks") {
  const auto& r = cosine_run();
  CHECK(check_max_principle(r).margin >= -1e-6);
  CHECK(check_growth(r).margin >= -1e-6);
  const CheckReport curv = check_curvature_decay(r, 1.0, 0.05);
  CHECK(curv.passed());
  CHECK(curv.value("smooth_branch_excess") <= 1e-9);
  // Slope follows e^{-|k| t} with |k| = √2.
  CHECK(r.diagnostics.back().slope_sup ==
        doctest::Approx(r.diagnostics.front().slope_sup * std::exp(-std::numbers::sqrt2)).epsilon(2e-3));
  const auto omega = GrowthEnvelope::power_law(2e-3, 0.0);
  CHECK(check_slope_inequality(r, omega).passed());
  const CheckReport tr = check_time_regularity(r, omega, quadrature(), 0.0);
  CHECK(std::isfinite(tr.value("sup_ratio")));
  const CheckReport el = check_ellipticity(r);
  CHECK(el.passed());
  CHECK(el.value("min_scaled_K") == doctest::Approx(1.0).epsilon(1e-3));
  CHECK(holder_quotients(r).verdict == Verdict::report_only);
  const OmegaBar w = omega_bar({0.25, 0.25}, 2e-3);
  const CheckReport mg = check_modulus_generation(r, w, {});
  CHECK(mg.passed());
  CHECK(mg.value("saturation_ratio") < 1.0);
}

TEST_CASE("inflated snapshot fails the maximum principle") {
  const GridField f = cosine(1e-3);
  std::vector<double> up(f.values().begin(), f.values().end());
  for (double& v : up) v *= 1.5;
  const TrajectoryRecord r = synthetic({f, GridField(kGrid, up, 0.5)});
  const CheckReport mp = check_max_principle(r);
  CHECK_FALSE(mp.passed());
  CHECK(mp.witness.time == 0.5);
  CHECK_FALSE(check_growth(r).passed());
}

TEST_CASE("comparison and uniqueness") {
  const GridField f = cosine(1e-3);
  std::vector<double> shifted(f.values().begin(), f.values().end());
  for (double& v : shifted) v += 1.0;
  StepperConfig c = decade_stepper();
  c.snapshot_times = {0.1, 0.2};
  c.t_end = 0.2;
  const auto a = run(f, 0.0, c, quadrature());
  const auto b = run(GridField(kGrid, shifted), 0.0, c, quadrature());
  const CheckReport cmp = check_comparison(a, b);
  CHECK(cmp.passed());
  CHECK(cmp.value("max_f_minus_g") == doctest::Approx(-1.0).epsilon(1e-9));
  CHECK_THROWS_AS(check_comparison(b, a), std::invalid_argument);
  const CheckReport same = check_uniqueness(a, a);
  CHECK(same.value("max_sup_difference") == 0.0);
}

TEST_CASE("curvature decay needs a time decade") {
  const GridField f = cosine(1e-3);
  const TrajectoryRecord r = synthetic({f, f.at_time(0.5), f.at_time(1.0)});
  CHECK_THROWS_AS(check_curvature_decay(r, 1.0, 0.5), InsufficientData);
}

TEST_CASE("crossing scan on a small cosine is far from saturation") {
  const OmegaBar w = omega_bar({0.25, 0.25}, 1e-3);
  const GridField f = cosine(1e-3);
  PairSampling exhaustive;
  exhaustive.exhaustive = true;
  const CrossingResult all = crossing_scan(f, w, 1.0, exhaustive);
  const CrossingResult sampled = crossing_scan(f, w, 1.0, {});
  CHECK(all.ratio < 0.1);
  CHECK(all.pairs > sampled.pairs);
  CHECK(sampled.ratio <= all.ratio + 1e-15);
  CHECK(all.bin_upper.size() == all.bin_margin.size());
}

TEST_CASE("scalar profile identities") {
  CHECK(scalar_phi(-0.3, 0.4, 3) == doctest::Approx(-0.7 / std::pow(1.09, 1.5)));
  CHECK(scalar_phi(-0.3, 0.4, 3) == doctest::Approx(-0.6150).epsilon(1e-4));
  CHECK(scalar_phi(0.1, 0.4, 3) == doctest::Approx(-0.2956).epsilon(1e-4));
  CHECK(scalar_phi(-0.3, 0.4, 3) <= scalar_phi(0.1, 0.4, 3));
  CHECK(scalar_phi(-0.2, 0.0, 2) <= scalar_phi(0.0, 0.0, 2));
  CHECK(scalar_phi(0.0, 0.0, 2) == 0.0);
  CHECK(scalar_phi(0.0, 0.0, 2) <= scalar_phi(0.2, 0.0, 2));
  CHECK(comparison_gap(0.3, 0.3, 0.1, 3) == 0.0);
  // Derivative numerator (1 - d) t² + a d t + 1 at the interval ends.
  const double t = 1.0 / std::sqrt(5.0);
  for (double a : {-t, 0.0, t}) {
    CHECK((1 - 3) * t * t + a * 3 * t + 1 >= -1e-15);
    CHECK((1 - 3) * t * t - a * 3 * t + 1 >= -1e-15);
  }
}

TEST_CASE("scalar checks") {
  for (int d : {2, 3}) CHECK(scalar_monotonicity(d, 20000).margin >= -1e-12);
  const double c = general_comparison_constant(10.0, 3);
  CHECK(c == doctest::Approx(10.0 / (2.0 * std::pow(101.0, 1.5))));
  CHECK(c == doctest::Approx(4.926e-3).epsilon(1e-4));
  CHECK(comparison_gap(-10.0, -c, c, 3) >= 0.0);  // extremal triple
  const CheckReport r = check_general_comparison_constant(10.0, 3, 20000);
  CHECK(r.passed());
  CHECK(r.margin >= -1e-12);
}

TEST_CASE("report helpers") {
  const CheckReport ok = make_report("x", -0.5, 1.0);
  CHECK(ok.passed());
  CHECK_FALSE(make_report("x", -1.5, 1.0).passed());
  CHECK_THROWS(ok.value("missing"));
  CHECK(std::find(trajectory_check_names().begin(), trajectory_check_names().end(), "max-principle") !=
        trajectory_check_names().end());
}
