#include <doctest.h>

#include <cmath>
#include <cstdlib>
#include <numbers>

#include "muskat/field.hpp"
#include "muskat/nonlocal.hpp"

using namespace muskat;

namespace {

GridField cosine_field(int n, double amplitude = 1e-3) {
  InitialDataSpec s;
  s.kind = CosineData{amplitude, {1.0, 0.0}};
  return build_initial(s, {n, std::numbers::pi, BoundaryPolicy::periodic});
}

GridField bump_field() {
  InitialDataSpec s;
  s.kind = BumpData{0.2, 1.2};
  s.cutoff_M = 1.5;
  s.mollifier_width = 0.3;
  return build_initial(s, {40, 4.0, BoundaryPolicy::compact_support});
}

QuadratureConfig wide_periodic() {
  QuadratureConfig q;
  q.R_max = 50.0;
  return q;
}

}  // namespace

TEST_CASE("ellipticity closed form") {
  const auto flat = ellipticity_constants(0.0);
  CHECK(flat.lambda == 1.0);
  CHECK(flat.Lambda == 1.0);
  const auto e = ellipticity_constants(0.2);
  CHECK(e.lambda == doctest::Approx(0.72527).epsilon(1e-5));
  CHECK(e.Lambda == doctest::Approx(1.23077).epsilon(1e-5));
  CHECK(ellipticity_constants(kSlopeThreshold).lambda == doctest::Approx(0.0).epsilon(1e-12));
  CHECK_THROWS_AS(ellipticity_constants(0.5), std::invalid_argument);
  // Property: lambda decreases, Lambda increases, lambda <= Lambda.
  double lo = 2.0, hi = 0.0;
  for (double B = 0.0; B <= kSlopeThreshold; B += 0.01) {
    const auto b = ellipticity_constants(B);
    CHECK(b.lambda <= lo);
    CHECK(b.Lambda >= hi);
    CHECK(b.lambda <= b.Lambda);
    lo = b.lambda;
    hi = b.Lambda;
  }
}

TEST_CASE("kernel on flat and sloped data") {
  const GridField zero = GridField::zeros({16, 1.6});
  const double h = zero.spacing();
  for (auto [a, b] : {std::pair{1, 0}, std::pair{2, 3}, std::pair{-4, 1}})
    CHECK(kernel_K(zero.view(), 8, 8, a, b) * std::pow(h * std::hypot(a, b), 3) == doctest::Approx(1.0));
  CHECK_THROWS(kernel_K(zero.view(), 8, 8, 0, 0));

  InitialDataSpec s;
  s.kind = RidgeData{kSlopeThreshold * 0.999, 1.0};
  s.target_slope = kSlopeThreshold * 0.9999;
  const GridField ridge = build_initial(s, {64, std::numbers::pi, BoundaryPolicy::periodic});
  double least = 1.0;
  for (int i = 0; i < 64; i += 2)
    for (int a = -4; a <= 4; ++a)
      for (int b = -4; b <= 4; ++b) {
        if (a == 0 && b == 0) continue;
        const double r = ridge.spacing() * std::hypot(a, b);
        least = std::min(least, kernel_K(ridge.view(), i, 10, a, b) * r * r * r);
      }
  CHECK(least >= -1e-3);
}

TEST_CASE("zero data give zero right-hand side and drift") {
  const GridField zero = GridField::zeros({32, 3.2});
  QuadratureConfig q;
  q.R_max = 1.0;
  CHECK(rhs_at(zero.view(), 16, 16, q) == 0.0);
  const auto d = drift_at(zero.view(), 16, 16, q);
  CHECK(d[0] == 0.0);
  CHECK(d[1] == 0.0);
  const RhsField r = rhs_field(zero.view(), q);
  CHECK(max_abs(r.values) == 0.0);
}

TEST_CASE("affine data at the origin give a vanishing right-hand side") {
  const GridGeometry g{64, 3.2, BoundaryPolicy::compact_support};
  std::vector<double> v(g.size());
  for (int i = 0; i < 64; ++i)
    for (int j = 0; j < 64; ++j) v[i * 64 + j] = 0.2 * g.coord(i) - 0.1 * g.coord(j);
  QuadratureConfig q;
  q.R_max = 1.5;
  REQUIRE(g.coord(32) == 0.0);
  CHECK(std::abs(rhs_at(GridView{g, v}, 32, 32, q)) <= 1e-12);
}

TEST_CASE("small cosine follows the half-Laplacian") {
  const GridField f = cosine_field(256);
  const auto q = wide_periodic();
  for (int i : {0, 40, 100}) {
    const double exact = -1e-3 * std::cos(f.geometry().coord(i));
    if (std::abs(exact) < 1e-4) continue;
    CHECK(rhs_at(f.view(), i, 7, q) == doctest::Approx(exact).epsilon(0.01));
  }
}

TEST_CASE("split evaluation agrees with the direct sum") {
  const GridField f = cosine_field(64, 0.05);
  QuadratureConfig direct;
  direct.R_max = 6.0;
  QuadratureConfig split = direct;
  split.method = QuadratureMethod::split;
  split.split_radius = 0.8;
  const RhsField a = rhs_field(f.view(), direct);
  const RhsField b = rhs_field(f.view(), split);
  double gap = 0.0;
  for (std::size_t k = 0; k < a.values.size(); ++k) gap = std::max(gap, std::abs(a.values[k] - b.values[k]));
  CHECK(gap <= std::max(1e-10, 2.0 * b.diagnostics.split_error_bound + a.diagnostics.quadrature_error()));
}

TEST_CASE("even data give even output") {
  const GridField f = bump_field();
  QuadratureConfig q;
  q.R_max = 1.6;
  const RhsField r = rhs_field(f.view(), q);
  const int n = f.n();
  double asym = 0.0;
  for (int i = 1; i < n; ++i)
    for (int j = 1; j < n; ++j)
      asym = std::max(asym, std::abs(r.values[i * n + j] - r.values[(n - i) * n + (n - j)]));
  CHECK(asym <= 1e-10);
  // Drift of data even in x1 has no x1 component at x1 = 0.
  CHECK(std::abs(drift_at(f.view(), n / 2, n / 2 + 3, q)[0]) <= 1e-10);
}

TEST_CASE("worker count does not change the result") {
  const GridField f = bump_field();
  QuadratureConfig q;
  q.R_max = 1.6;
  setenv("MUSKAT_WORKERS", "1", 1);
  const RhsField one = rhs_field(f.view(), q);
  setenv("MUSKAT_WORKERS", "3", 1);
  const RhsField three = rhs_field(f.view(), q);
  unsetenv("MUSKAT_WORKERS");
  CHECK(one.values == three.values);
}

TEST_CASE("viscous right-hand side") {
  const GridField f = cosine_field(128);
  QuadratureConfig q;
  q.R_max = 20.0;
  CHECK(viscous_rhs_at(f.view(), 3, 3, 0.0, q) == rhs_at(f.view(), 3, 3, q));
  const double x = f.geometry().coord(3);
  CHECK(viscous_rhs_at(f.view(), 3, 3, 0.1, q) == doctest::Approx(-1.1e-3 * std::cos(x)).epsilon(0.01));

  const GridGeometry g{32, 3.2, BoundaryPolicy::compact_support};
  std::vector<double> v(g.size());
  for (int i = 0; i < 32; ++i)
    for (int j = 0; j < 32; ++j) v[i * 32 + j] = 0.5 * (g.coord(i) * g.coord(i) + g.coord(j) * g.coord(j));
  QuadratureConfig small;
  small.R_max = 0.8;
  const GridView quad{g, v};
  CHECK(viscous_rhs_at(quad, 16, 16, 1.0, small) - rhs_at(quad, 16, 16, small) == doctest::Approx(2.0).epsilon(1e-12));
}

TEST_CASE("drift of a small cosine is small") {
  const GridField f = cosine_field(128);
  QuadratureConfig q;
  q.R_max = 10.0;
  for (int i : {5, 30, 77}) {
    const auto d = drift_at(f.view(), i, 4, q);
    CHECK(std::hypot(d[0], d[1]) <= 1e-3);
  }
}

TEST_CASE("quadrature config validation") {
  const GridGeometry g{32, 3.2, BoundaryPolicy::compact_support};
  QuadratureConfig q;
  q.R_max = 0.3;  // below two spacings
  CHECK_THROWS(q.validate(g));
  q.R_max = 2.0;
  CHECK_NOTHROW(q.validate(g));
  CHECK_THROWS(q.validate(g, 2.0));  // reaches past the window
  CHECK(parse_quadrature_method(to_string(QuadratureMethod::split)) == QuadratureMethod::split);
  CHECK(parse_near_cell_policy(to_string(NearCellPolicy::skip_with_bound)) == NearCellPolicy::skip_with_bound);
  CHECK_THROWS(parse_tail_correction("sometimes"));
}
