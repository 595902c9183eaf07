#pragma once
// Explicit modulus of continuity, its rescalings, and the integro-differential
// functional used to certify that the modulus is preserved.

#include <limits>
#include <memory>
#include <optional>
#include <string>
#include <vector>

namespace muskat {

struct ModulusSpec {
  double delta = 0.0;
  double gamma = 0.0;
};

// Throws std::invalid_argument unless 0 < delta < 4/9, gamma > 0 and the
// derivative drop at delta keeps the modulus concave.
void validate(const ModulusSpec& spec);
bool is_concave(const ModulusSpec& spec);

double omega(const ModulusSpec& spec, double r);
double omega_prime(const ModulusSpec& spec, double r);   // left derivative at delta
double omega_second(const ModulusSpec& spec, double r);
// omega evaluated at r = exp(log_r); usable far beyond the double range of r.
double omega_at_log(const ModulusSpec& spec, double log_r);

// Concave nondecreasing profile g with g(0) = 0.
class Profile {
 public:
  virtual ~Profile() = default;
  virtual double value(double r) const = 0;
  virtual double derivative(double r) const = 0;
  virtual double second_derivative(double r) const = 0;
  // g(x + r) - g(x), overridable where a cancellation-free form exists.
  virtual double increment(double x, double r) const { return value(x + r) - value(x); }
  // Points where g' jumps.
  virtual std::vector<double> kinks() const { return {}; }
  // Bound on r * g'(r) for large r (controls truncated tails); may be +inf.
  virtual double tail_slope() const = 0;
  // Natural length scale used to place the truncation radius.
  virtual double scale() const = 0;
};

// g(r) = omega(exp(log_stretch) * r).
class OmegaProfile final : public Profile {
 public:
  explicit OmegaProfile(ModulusSpec spec, double log_stretch = 0.0);
  double value(double r) const override;
  double derivative(double r) const override;
  double second_derivative(double r) const override;
  double increment(double x, double r) const override;
  std::vector<double> kinks() const override;
  double tail_slope() const override { return spec_.gamma / 4.0; }
  double scale() const override;
  const ModulusSpec& spec() const { return spec_; }
  double log_stretch() const { return log_stretch_; }
  OmegaProfile rescaled(double factor) const;

 private:
  ModulusSpec spec_;
  double log_stretch_;
};

class LinearProfile final : public Profile {
 public:
  double value(double r) const override { return r; }
  double derivative(double) const override { return 1.0; }
  double second_derivative(double) const override { return 0.0; }
  double tail_slope() const override { return std::numeric_limits<double>::infinity(); }
  double scale() const override { return 1.0; }
};

// omega_bar(r) = omega(C r) with C = omega^{-1}(2B) / (2B), stored as log C.
struct OmegaBar {
  ModulusSpec spec;
  double slope_bound = 0.0;
  double log_C = 0.0;
  double C() const;  // may overflow to +inf
  double operator()(double r) const;
  double inverse(double value) const;
};

struct AttainableRangeError : std::exception {
  double attainable_sup;
  std::string message;
  explicit AttainableRangeError(double sup);
  const char* what() const noexcept override { return message.c_str(); }
};

// Bracketing bisection on the log radius; throws AttainableRangeError when
// 2B exceeds the values omega reaches for radii up to exp(1e300).
OmegaBar omega_bar(const ModulusSpec& spec, double slope_bound);
// Inverse of omega on its log-radius axis, bisection to 1e-12 relative.
double omega_inverse_log(const ModulusSpec& spec, double value);

struct InequalityConstants {
  double A = 1.0;
  double c = 1.0;
  double lambda = 1.0;
};

struct Estimate {
  double value = 0.0;
  double error = 0.0;
};

struct FunctionalTerms {
  Estimate drift_bracket;     // ∫0^ξ g/r + ξ ∫ξ^∞ g/r²
  Estimate growth_integral;   // ∫ξ^∞ (g(ξ+r) - g(ξ))/r²
  Estimate near;              // first rearrangement component
  Estimate far;               // second rearrangement component
  Estimate total;             // full functional
  Estimate without_product;   // total minus g'(ξ) g(ξ)
};

FunctionalTerms functional_terms(const Profile& g, double xi, const InequalityConstants& k);
Estimate functional_F(const Profile& g, double xi, const InequalityConstants& k);
Estimate timederiv_bound(const Profile& g, double xi, const InequalityConstants& k);
std::pair<Estimate, Estimate> rearrangement_integral(const Profile& g, double xi);

// 60 log-spaced points on [1e-6 delta, 1e6 delta] plus delta itself, sorted.
std::vector<double> xi_grid(double delta);

struct MarginRow {
  double xi;
  double F;
  double error;
  double margin;  // -F - 3 * error
};

struct SearchResult {
  bool feasible = false;
  ModulusSpec spec;
  double worst_margin = -std::numeric_limits<double>::infinity();
  double worst_xi = 0.0;
  std::vector<MarginRow> rows;
  int pairs_tried = 0;
};

struct SearchLimits {
  int max_delta_exponent = 40;
  int max_gamma_halvings = 40;
};

std::vector<MarginRow> margin_table(const ModulusSpec& spec, const InequalityConstants& k,
                                    bool stop_at_first_failure = false);
SearchResult search_constants(const InequalityConstants& k, SearchLimits limits = {});

}  // namespace muskat
