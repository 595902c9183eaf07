#include <cmath>
#include <limits>
#include <random>

#include "muskat/verifier.hpp"

namespace muskat {

double scalar_phi(double t, double a, int d) { return (t - a) / std::pow(t * t + 1.0, 0.5 * d); }

double comparison_gap(double t, double s, double a, int d) { return scalar_phi(s, a, d) - scalar_phi(t, a, d); }

double general_comparison_constant(double B, int d) { return B / (2.0 * std::pow(B * B + 1.0, 0.5 * d)); }

namespace {

void require_dimension(int d) {
  if (d != 2 && d != 3) throw std::invalid_argument("dimension must be 2 or 3");
}

}  // namespace

CheckReport scalar_monotonicity(int d, std::size_t samples) {
  require_dimension(d);
  const double T = 1.0 / std::sqrt(2.0 * d - 1.0);
  // n values of a times n(n-1)/2 ordered pairs (t1, t2) covers the sample count.
  const auto n = static_cast<std::size_t>(std::ceil(std::cbrt(2.0 * static_cast<double>(samples)))) + 1;
  auto node = [&](std::size_t k) { return -T + 2.0 * T * static_cast<double>(k) / static_cast<double>(n - 1); };
  double pair_margin = std::numeric_limits<double>::infinity();
  double derivative_margin = std::numeric_limits<double>::infinity();
  double wa = 0.0, wt1 = 0.0, wt2 = 0.0;
  for (std::size_t ia = 0; ia < n; ++ia) {
    const double a = node(ia);
    // min over i < j of phi(t_j) - phi(t_i) via the running maximum.
    double best = -std::numeric_limits<double>::infinity();
    double best_t = 0.0;
    for (std::size_t j = 0; j < n; ++j) {
      const double t = node(j);
      const double phi = scalar_phi(t, a, d);
      if (j > 0 && phi - best < pair_margin) {
        pair_margin = phi - best;
        wa = a, wt1 = best_t, wt2 = t;
      }
      if (phi > best) best = phi, best_t = t;
      derivative_margin = std::min(derivative_margin, (1.0 - d) * t * t + a * d * t + 1.0);
    }
  }
  CheckReport r = make_report("scalar-monotonicity-d" + std::to_string(d), std::min(pair_margin, derivative_margin), 1e-12);
  r.values = {{"pair_margin", pair_margin},
              {"derivative_margin", derivative_margin},
              {"tuples", static_cast<double>(n) * static_cast<double>(n) * static_cast<double>(n - 1) / 2.0},
              {"witness_a", wa},
              {"witness_t1", wt1},
              {"witness_t2", wt2}};
  return r;
}

CheckReport check_general_comparison_constant(double B, int d, std::size_t samples, std::uint64_t seed) {
  require_dimension(d);
  if (!(B > 0.0)) throw std::invalid_argument("B must be positive");
  const double c = general_comparison_constant(B, d);
  double margin = comparison_gap(-B, -c, c, d);  // extremal triple
  double wt = -B, ws = -c, wa = c;
  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<double> unit(0.0, 1.0);
  for (std::size_t k = 0; k < samples; ++k) {
    const double a = c * (2.0 * unit(rng) - 1.0);
    const double s = c * (2.0 * unit(rng) - 1.0);
    const double t = -B + (s + B) * unit(rng);
    const double gap = comparison_gap(t, s, a, d);
    if (gap < margin) margin = gap, wt = t, ws = s, wa = a;
  }
  CheckReport r = make_report("general-comparison-B" + std::to_string(static_cast<int>(B)) + "-d" + std::to_string(d),
                              margin, 1e-12);
  r.values = {{"c", c}, {"tuples", static_cast<double>(samples + 1)}, {"witness_t", wt}, {"witness_s", ws},
              {"witness_a", wa}};
  return r;
}

}  // namespace muskat
