#include <doctest.h>

#include <cmath>
#include <random>

#include "muskat/modulus.hpp"

using namespace muskat;

namespace {

const SearchResult& unit_search() {
  static const SearchResult r = search_constants({1.0, 1.0, 1.0});
  return r;
}

}  // namespace

TEST_CASE("omega closed form") {
  const ModulusSpec s{0.25, 0.1};
  CHECK(omega(s, 0.0) == 0.0);
  CHECK(omega(s, 0.01) == doctest::Approx(0.009).epsilon(1e-14));
  const double at = s.delta - std::pow(s.delta, 1.5);
  CHECK(std::abs(omega(s, s.delta * (1 + 1e-15)) - at) <= 1e-12);
  CHECK(omega_prime(s, 0.04) == doctest::Approx(1.0 - 1.5 * 0.2));
  CHECK(omega_prime(s, 1.0) == doctest::Approx(0.1 / (4.0 + std::log(4.0))));
  CHECK_THROWS(omega(s, -1.0));
  CHECK(omega_at_log(s, std::log(3.0)) == doctest::Approx(omega(s, 3.0)).epsilon(1e-13));
  CHECK(std::isfinite(omega_at_log(s, 1e6)));
}

TEST_CASE("spec validation") {
  CHECK_THROWS(validate(ModulusSpec{0.5, 0.1}));   // delta >= 4/9
  CHECK_THROWS(validate(ModulusSpec{0.25, 0.0}));  // gamma > 0
  CHECK_FALSE(is_concave(ModulusSpec{0.25, 1.0}));  // gamma/(4 delta) > 1 - 1.5 sqrt(delta)
  CHECK(is_concave(ModulusSpec{0.25, 0.25}));
}

TEST_CASE("property: omega is concave and nondecreasing") {
  std::mt19937_64 rng(5);
  std::uniform_real_distribution<double> logr(-12.0, 12.0);
  const ModulusSpec s{0.0625, 0.05};
  for (int k = 0; k < 2000; ++k) {
    const double r = std::exp(logr(rng));
    const double e = 1e-3 * r;
    CHECK(omega(s, r + e) >= omega(s, r));
    CHECK(omega(s, r) >= 0.5 * (omega(s, r - e) + omega(s, r + e)) - 1e-14);
  }
}

TEST_CASE("rescaled modulus") {
  const ModulusSpec s{0.25, 0.25};
  const double B = 0.2;
  const OmegaBar w = omega_bar(s, B);
  CHECK(w(w.inverse(2.0 * B)) == doctest::Approx(2.0 * B).epsilon(1e-10));
  const double r_max = w.inverse(2.0 * B);
  double worst = 1.0;
  for (double r = r_max * 1e-9; r <= r_max; r *= 1.05) worst = std::min(worst, w(r) - r);
  CHECK(worst >= -1e-12);
  CHECK(w.C() > 0.0);
  // A bounded modulus whose sup is below 2B.
  CHECK_THROWS_AS(omega_bar(ModulusSpec{1e-4, 1e-6}, 0.4), AttainableRangeError);
}

TEST_CASE("rearrangement terms") {
  const LinearProfile line;
  for (double xi : {0.01, 1.0, 30.0}) {
    const auto [near, far] = rearrangement_integral(line, xi);
    CHECK(std::abs(near.value) <= near.error + 1e-12);
    CHECK(std::abs(far.value) <= far.error + 1e-12);
  }
  const OmegaProfile g(ModulusSpec{0.25, 0.25});
  for (double xi : xi_grid(0.25)) {
    const auto [near, far] = rearrangement_integral(g, xi);
    CHECK(near.value <= near.error);
    CHECK(far.value <= far.error);
    if (xi >= 0.25) CHECK(far.value <= -g.value(xi) / (2.0 * xi) + far.error);
  }
}

TEST_CASE("time-derivative bound is the functional minus g' g") {
  const OmegaProfile g(ModulusSpec{0.25, 0.25});
  const InequalityConstants k{1.0, 1.0, 1.0};
  for (double xi : {1e-5, 0.1, 0.26, 3.0, 1e4}) {  // at the kink itself F is -inf
    const Estimate F = functional_F(g, xi, k);
    const Estimate T = timederiv_bound(g, xi, k);
    CHECK(std::abs(F.value - g.derivative(xi) * g.value(xi) - T.value) <= 2.0 * (F.error + T.error) + 1e-15);
  }
}

TEST_CASE("scaling identity") {
  const OmegaProfile g(ModulusSpec{0.25, 0.25});
  const InequalityConstants k{1.0, 1.0, 1.0};
  for (double R : {0.5, 2.0, 10.0})
    for (double xi : {1e-4, 0.3, 50.0}) {
      const Estimate lhs = functional_F(g.rescaled(R), xi, k);
      const Estimate rhs = functional_F(g, R * xi, k);
      CHECK(std::abs(lhs.value - R * rhs.value) <= lhs.error + R * rhs.error);
    }
}

TEST_CASE("xi grid") {
  const auto grid = xi_grid(0.25);
  REQUIRE(grid.size() == 61);
  CHECK(std::is_sorted(grid.begin(), grid.end()));
  CHECK(std::find(grid.begin(), grid.end(), 0.25) != grid.end());
  CHECK(grid.front() == doctest::Approx(0.25e-6));
  CHECK(grid.back() == doctest::Approx(0.25e6));
}

TEST_CASE("constant search for unit constants") {
  const SearchResult& r = unit_search();
  REQUIRE(r.feasible);
  CHECK(is_concave(r.spec));
  CHECK(r.spec.gamma / (4.0 * r.spec.delta) <= 1.0 - 1.5 * std::sqrt(r.spec.delta));
  REQUIRE(r.rows.size() == 61);
  for (const auto& row : r.rows) {
    CHECK(row.F < 0.0);
    CHECK(row.margin > 0.0);
  }
  // Halving gamma keeps every margin positive.
  for (const auto& row : margin_table({r.spec.delta, r.spec.gamma / 2.0}, {1.0, 1.0, 1.0})) CHECK(row.margin > 0.0);
  // Accepted modulus obeys the strict time-derivative inequality.
  const OmegaProfile g(r.spec);
  for (double xi : xi_grid(r.spec.delta)) {
    const Estimate T = timederiv_bound(g, xi, {1.0, 1.0, 1.0});
    CHECK(T.value + T.error < -g.derivative(xi) * g.value(xi));
  }
}

TEST_CASE("larger drift constant shrinks the accepted delta") {
  const SearchResult doubled = search_constants({2.0, 1.0, 1.0});
  REQUIRE(doubled.feasible);
  CHECK(doubled.spec.delta <= unit_search().spec.delta);
}

TEST_CASE("no diffusion means no feasible modulus") {
  const SearchResult r = search_constants({1.0, 1.0, 0.0}, SearchLimits{8, 4});
  CHECK_FALSE(r.feasible);
  CHECK(r.worst_margin < 0.0);
  CHECK_THROWS(search_constants({1.0, 1.0, -1.0}));
}
