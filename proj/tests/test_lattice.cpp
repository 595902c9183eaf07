#include <doctest.h>

#include <cmath>
#include <numbers>

#include "muskat/lattice.hpp"

using namespace muskat;

TEST_CASE("inverse-cube mass outside the central cell") {
  // ∫ |y|^{-3} over the plane minus the unit square is 8√2.
  for (double radius : {2.0, 5.5, 12.0}) {
    const auto t = lattice_tables(radius);
    double summed = 0.0;
    for (const auto& n : t->half) summed += 2.0 * cell_integral_inverse_cube(n.a, n.b);
    CAPTURE(radius);
    CHECK(summed + t->outer_mass == doctest::Approx(8.0 * std::numbers::sqrt2).epsilon(1e-9));
  }
}

TEST_CASE("cell integrals approach point values far out and respect symmetry") {
  CHECK(cell_integral_inverse_cube(20, 0) == doctest::Approx(1.0 / 8000.0).epsilon(1e-3));
  CHECK(cell_integral_inverse_cube(3, 2) == doctest::Approx(cell_integral_inverse_cube(2, 3)).epsilon(1e-12));
  CHECK(cell_integral_inverse_cube(-3, 2) == doctest::Approx(cell_integral_inverse_cube(3, -2)).epsilon(1e-12));
  CHECK(cell_integral_harmonic(0, 1, 1) > 0.0);
}

TEST_CASE("central cell harmonics") {
  // ∫ over the unit square of 1/|y| is 4 log(1 + √2).
  CHECK(central_cell_harmonic(0) == doctest::Approx(4.0 * std::log(1.0 + std::numbers::sqrt2)).epsilon(1e-10));
  // cos(j θ) with j not divisible by 4 averages out on the square.
  CHECK(std::abs(central_cell_harmonic(2)) <= 1e-12);
}

TEST_CASE("offset tables") {
  CHECK_THROWS_AS(lattice_tables(1.5), std::invalid_argument);
  const auto t = lattice_tables(4.0);
  CHECK(lattice_tables(4.0) == t);  // cached
  long prev = 0;
  for (const auto& n : t->half) {
    CHECK(n.norm2() >= prev);
    CHECK(n.norm2() <= 16);
    CHECK(n.norm2() > 0);
    prev = n.norm2();
  }
  // Half of the nonzero lattice points in the closed disk of radius 4.
  CHECK(t->half.size() == 24);
}
