#pragma once
// Principal-value right-hand side of the interface equation on a lattice.
//
// The nonlocal operator is normalised so that its linearisation about a flat
// interface is -(-Δ)^{1/2}: the lattice integral is scaled by 1/(2π).

#include <array>
#include <string>
#include <string_view>
#include <vector>

#include "muskat/field.hpp"

namespace muskat {

enum class NearCellPolicy { quadratic_model, skip_with_bound };
enum class TailCorrection { analytic, none };
// direct: full lattice summation. split: linear part by FFT convolution over
// |h| <= R_max, nonlinear remainder summed directly over |h| <= split_radius.
enum class QuadratureMethod { direct, split };

std::string to_string(NearCellPolicy p);
std::string to_string(TailCorrection t);
std::string to_string(QuadratureMethod m);
NearCellPolicy parse_near_cell_policy(std::string_view s);
TailCorrection parse_tail_correction(std::string_view s);
QuadratureMethod parse_quadrature_method(std::string_view s);

struct QuadratureConfig {
  double R_max = 1.0;
  NearCellPolicy near_cell = NearCellPolicy::quadratic_model;
  TailCorrection tail = TailCorrection::analytic;
  QuadratureMethod method = QuadratureMethod::direct;
  double split_radius = 0.0;

  // Requires R_max > 2 spacing. Under compact support also
  // R_max <= extent - support_radius (pass 0 when unknown).
  void validate(const GridGeometry& g, double support_radius = 0.0) const;
};

inline constexpr double kRhsNormalization = 0.15915494309189535;  // 1/(2π)

struct EllipticityBounds {
  double B = 0.0;
  double lambda = 1.0;
  double Lambda = 1.0;
};

// Closed form for 0 <= B <= 5^{-1/2}; throws std::invalid_argument otherwise.
EllipticityBounds ellipticity_constants(double B);

struct RhsDiagnostics {
  double near_sup = 0.0;          // sup |near-cell contribution|
  double tail_sup = 0.0;          // sup |tail contribution|
  double near_error_sup = 0.0;    // estimated error of the near-cell model
  double tail_error_sup = 0.0;    // size of the first neglected tail term
  double split_error_bound = 0.0; // bound on the omitted nonlinear remainder (split only)
  double quadrature_error() const { return near_error_sup + tail_error_sup + split_error_bound; }
};

struct RhsField {
  std::vector<double> values;
  RhsDiagnostics diagnostics;
};

struct NonInteriorNode : std::invalid_argument {
  using std::invalid_argument::invalid_argument;
};

// Single-node direct evaluation of the normalised nonlocal term.
double rhs_at(const GridView& f, int i1, int i2, const QuadratureConfig& q);
// rhs_at + epsilon * (5-point Laplacian).
double viscous_rhs_at(const GridView& f, int i1, int i2, double epsilon, const QuadratureConfig& q);
// Whole-field evaluation; the result does not depend on the worker count.
// Ring nodes are evaluated too (with zero extension); the stepper reports
// what lands there as boundary defect.
// With estimate_errors = false the near-cell error estimate is skipped.
RhsField rhs_field(const GridView& f, const QuadratureConfig& q, double epsilon = 0.0, bool estimate_errors = true);

// K(x, h) for the lattice offset (a, b) (in nodes), unnormalised:
// (δ² + |h|²)^{-3/2} (1 - 3 δ (δ - ∇f·h) / (δ² + |h|²)).
double kernel_K(const GridView& f, int i1, int i2, int a, int b);

// Symmetrised, normalised ∫ -h (δ_h f² + |h|²)^{-3/2} dh.
std::array<double, 2> drift_at(const GridView& f, int i1, int i2, const QuadratureConfig& q);

// Normalised contribution of the central cell for curvature A and slope g.
double near_cell_term(const std::array<double, 2>& g, const Hessian& A, double h, double lattice_radius);

}  // namespace muskat
