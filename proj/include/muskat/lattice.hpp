#pragma once
// Unit-lattice geometry shared by the quadrature kernels: offset tables, the
// angular correction weights for the h^{-1}-singular part of the integrand,
// and the exact |y|^{-3} mass outside the summed cells.

#include <array>
#include <memory>
#include <vector>

namespace muskat {

struct Offset {
  int a = 0;
  int b = 0;
  long norm2() const { return static_cast<long>(a) * a + static_cast<long>(b) * b; }
};

inline constexpr int kNearAngles = 64;
inline constexpr int kDefectHarmonics = 5;  // cos(j theta), j = 0, 4, ..., 16

struct LatticeTables {
  double radius = 0.0;              // lattice units; offsets with |n| <= radius are summed
  std::vector<Offset> half;         // one of each ±n pair, sorted by (|n|², a, b)
  std::array<double, kDefectHarmonics> defects{};      // D_j
  std::array<double, kNearAngles> near_weights{};      // W_k at theta_k = 2 pi k / 64
  std::array<double, kNearAngles> angle_cos{};
  std::array<double, kNearAngles> angle_sin{};
  double outer_mass = 0.0;          // ∫ |y|^{-3} over the plane minus the summed cells
};

// Cached per radius. Throws std::invalid_argument unless radius >= 2.
std::shared_ptr<const LatticeTables> lattice_tables(double radius);

// ∫ over the unit cell centred at n of |y|^{-3}, and of cos(j arg y)/|y| (n != 0).
double cell_integral_inverse_cube(int a, int b);
double cell_integral_harmonic(int j, int a, int b);
// ∫ over the central unit cell of cos(j arg y)/|y|.
double central_cell_harmonic(int j);

}  // namespace muskat
