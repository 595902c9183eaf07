#pragma once
// Adaptive Gauss-Kronrod on a finite interval with endpoint substitutions.

#include <cmath>
#include <functional>
#include <stdexcept>

#include <boost/math/quadrature/gauss_kronrod.hpp>

#include "muskat/modulus.hpp"

namespace muskat::detail {

enum class Map { plain, root_left, root_right, logarithmic };

inline Estimate gk(const std::function<double(double)>& f, double a, double b) {
  using Rule = boost::math::quadrature::gauss_kronrod<double, 31>;
  double err = 0.0;
  double l1 = 0.0;
  const double v = Rule::integrate(f, a, b, 12, 1e-10, &err, &l1);
  if (!std::isfinite(v) || !std::isfinite(err)) throw std::runtime_error("quadrature failed: non-finite result");
  return {v, err + 4e-16 * l1};
}

// ∫_a^b f(r) dr. root_left suits √(r - a) behaviour, root_right √(b - r);
// logarithmic suits integrands decaying like powers of r over wide ranges.
inline Estimate integrate(const std::function<double(double)>& f, double a, double b, Map map) {
  if (!(b > a)) return {0.0, 0.0};
  switch (map) {
    case Map::plain:
      return gk(f, a, b);
    case Map::root_left: {
      const double w = b - a;
      return gk([&](double u) { return f(a + w * u * u) * 2.0 * w * u; }, 0.0, 1.0);
    }
    case Map::root_right: {
      const double w = b - a;
      return gk([&](double u) { return f(b - w * u * u) * 2.0 * w * u; }, 0.0, 1.0);
    }
    case Map::logarithmic: {
      const double la = std::log(a);
      const double lb = std::log(b);
      const int chunks = std::max(1, static_cast<int>(std::ceil((lb - la) / 1.5)));
      Estimate total;
      for (int i = 0; i < chunks; ++i) {
        const double s0 = la + (lb - la) * i / chunks;
        const double s1 = (i + 1 == chunks) ? lb : la + (lb - la) * (i + 1) / chunks;
        const Estimate e = gk(
            [&](double s) {
              const double r = std::exp(s);
              return f(r) * r;
            },
            s0, s1);
        total.value += e.value;
        total.error += e.error;
      }
      return total;
    }
  }
  return {0.0, 0.0};
}

}  // namespace muskat::detail
