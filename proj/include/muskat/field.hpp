#pragma once
// Interface height samples on a uniform square lattice, discrete derivatives,
// increment envelopes and initial-data construction.

#include <array>
#include <cstdint>
#include <span>
#include <stdexcept>
#include <string>
#include <string_view>
#include <utility>
#include <variant>
#include <vector>

namespace muskat {

enum class BoundaryPolicy { compact_support, periodic };

std::string to_string(BoundaryPolicy policy);
BoundaryPolicy parse_boundary_policy(std::string_view text);

// Nodes x = -extent + i * spacing, i in [0, nodes), on both axes.
struct GridGeometry {
  int nodes = 0;
  double extent = 0.0;
  BoundaryPolicy policy = BoundaryPolicy::compact_support;

  double spacing() const { return 2.0 * extent / nodes; }
  double coord(int i) const { return -extent + i * spacing(); }
  std::size_t size() const { return static_cast<std::size_t>(nodes) * static_cast<std::size_t>(nodes); }
  bool operator==(const GridGeometry&) const = default;
  void validate() const;
};

// Read-only lattice data without the zero-ring requirement; used for stage
// values and for diagnostics on arbitrary (e.g. affine) samples.
struct GridView {
  GridGeometry geometry;
  std::span<const double> values;

  int n() const { return geometry.nodes; }
  double h() const { return geometry.spacing(); }
  double operator()(int i1, int i2) const { return values[static_cast<std::size_t>(i1) * n() + i2]; }
  // Periodic wrap, or zero extension outside the window under compact support.
  double extended(int i1, int i2) const;
  bool periodic() const { return geometry.policy == BoundaryPolicy::periodic; }
};

class GridField {
 public:
  // Throws std::invalid_argument on size mismatch, non-finite values, or
  // nonzero values on the two outer rings under compact support.
  GridField(GridGeometry geometry, std::vector<double> values, double time = 0.0);
  static GridField zeros(GridGeometry geometry, double time = 0.0);

  const GridGeometry& geometry() const { return geometry_; }
  int n() const { return geometry_.nodes; }
  double spacing() const { return geometry_.spacing(); }
  double extent() const { return geometry_.extent; }
  BoundaryPolicy policy() const { return geometry_.policy; }
  double time() const { return time_; }
  std::span<const double> values() const { return values_; }
  double operator()(int i1, int i2) const { return values_[static_cast<std::size_t>(i1) * n() + i2]; }
  GridView view() const { return {geometry_, values_}; }
  GridField at_time(double t) const { return GridField(geometry_, values_, t); }

 private:
  GridGeometry geometry_;
  std::vector<double> values_;
  double time_;
};

// Largest |value| on the two outermost node rings.
double ring_magnitude(const GridView& f);
// Nodes at least two rings from the edge under compact support; every node
// under periodic policy.
bool is_interior(const GridGeometry& g, int i1, int i2);
double max_abs(std::span<const double> values);

enum class StencilOrder { second = 2, fourth = 4 };

struct Gradient {
  std::vector<double> d1;
  std::vector<double> d2;
};

struct Hessian {
  double xx = 0.0;
  double xy = 0.0;
  double yy = 0.0;
  double spectral_radius() const;
};

// Centered differences; one-sided second order on the outermost compact-support
// nodes. Fourth order falls back to second order within two nodes of the edge.
std::array<double, 2> gradient_at(const GridView& f, int i1, int i2, StencilOrder order = StencilOrder::second);
Gradient gradient(const GridView& f, StencilOrder order = StencilOrder::second);
double slope_sup(const GridView& f, StencilOrder order = StencilOrder::second);
// Second-order stencils; mixed term by centered cross differences.
Hessian hessian_at(const GridView& f, int i1, int i2);
// Same stencils at lattice distance 2 (for Richardson error estimates).
Hessian hessian_wide_at(const GridView& f, int i1, int i2);
double hessian_sup(const GridView& f);
double laplacian_at(const GridView& f, int i1, int i2);

// For each radius, sup over node pairs (x, x + h) inside the window (wrapped for
// periodic) with lattice offset |h| <= radius of |f(x+h) - f(x)|.
// Throws std::invalid_argument when a radius exceeds the extent.
std::vector<double> increment_envelope(const GridView& f, std::span<const double> radii);

// Omega(R) = omega0 * R^alpha, or a concave table extrapolated by R^alpha_tail.
class GrowthEnvelope {
 public:
  struct PowerLaw {
    double omega0 = 0.0;
    double alpha = 0.0;
  };
  struct Table {
    std::vector<std::pair<double, double>> samples;  // (R, Omega), R increasing, R > 0
    double alpha_tail = 0.0;
  };

  static GrowthEnvelope power_law(double omega0, double alpha);
  static GrowthEnvelope table(std::vector<std::pair<double, double>> samples, double alpha_tail);
  // Least concave majorant (through the origin) of measured samples.
  static GrowthEnvelope concave_majorant(std::span<const double> radii, std::span<const double> values,
                                         double alpha_tail = 0.0);

  double operator()(double R) const;
  // ∫_1^∞ Omega(R)/R² dR
  double tail_integral() const;
  bool is_power_law() const { return std::holds_alternative<PowerLaw>(data_); }
  const std::variant<PowerLaw, Table>& data() const { return data_; }

 private:
  explicit GrowthEnvelope(std::variant<PowerLaw, Table> d) : data_(std::move(d)) {}
  std::variant<PowerLaw, Table> data_;
};

// ---------------------------------------------------------------------------
// Initial data

struct CosineData {
  double amplitude = 0.0;
  std::array<double, 2> wavevector{1.0, 0.0};
};
struct BumpData {
  double amplitude = 0.0;
  double width = 1.0;  // support radius
};
struct RidgeData {
  double slope = 0.0;
  double plateau = 1.0;  // plateau width; shoulders fall to zero at |x1| = plateau
};
struct RoughData {
  std::uint64_t seed = 0;
  std::vector<double> wavenumbers;
  std::vector<double> amplitudes;  // one per wavenumber, rescaled to fit the slope budget
};
using InitialKind = std::variant<CosineData, BumpData, RidgeData, RoughData>;

struct InitialDataSpec {
  InitialKind kind;
  double target_slope = 0.4;
  double cutoff_M = 1.0;
  double mollifier_width = 0.0;
};

struct DomainTooSmall : std::invalid_argument {
  using std::invalid_argument::invalid_argument;
};
struct SlopeExceedsThreshold : std::runtime_error {
  double measured;
  explicit SlopeExceedsThreshold(double m);
};

inline constexpr double kSlopeThreshold = 0.44721359549995793;  // 5^{-1/2}

// Smooth radial cutoff, 1 on |x| <= 1/2 and 0 for |x| >= 1.
double cutoff(double radius);
// sup |d/dr cutoff|, computed once numerically.
double cutoff_gradient_bound();
// Normalized bump exp(-1/(1-|x|^2)) on the unit disk (unnormalized profile).
double mollifier_profile(double radius);

// Analytic data before cutoff and mollification.
double initial_profile(const InitialKind& kind, double x1, double x2);
// Increment bound of the uncut data and its sup-norm (on the whole plane).
double profile_envelope(const InitialKind& kind, double r);
double profile_sup(const InitialKind& kind);
// Right side of the cutoff increment bound: Omega(r) + sup|f0| * min(1, C r / M).
double cutoff_envelope(const InitialDataSpec& spec, double r);

// f0 * cutoff(x / M), convolved with the mollifier of radius mollifier_width.
// Periodic geometry skips the cutoff and the domain-size precondition and
// mollifies with wrap-around. Random-rough amplitudes are first rescaled so
// the per-scale slope budget plus the cutoff contribution stays below
// target_slope.
GridField build_initial(const InitialDataSpec& spec, const GridGeometry& geometry);
InitialDataSpec normalized(const InitialDataSpec& spec);

}  // namespace muskat
