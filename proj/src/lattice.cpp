#include "muskat/lattice.hpp"

#include <algorithm>
#include <cmath>
#include <map>
#include <mutex>
#include <numbers>
#include <stdexcept>

#include <boost/math/quadrature/gauss.hpp>
#include <boost/math/quadrature/gauss_kronrod.hpp>

namespace muskat {

namespace {

constexpr int kExactCells = 256;  // cells beyond this radius use the leading Taylor defect

double harmonic(int j, double y1, double y2) {
  if (j == 0) return 1.0;
  const double r = std::hypot(y1, y2);
  // cos(j theta) via Chebyshev recursion on cos(theta)
  const double c = y1 / r;
  double t0 = 1.0;
  double t1 = c;
  for (int k = 2; k <= j; ++k) {
    const double t2 = 2.0 * c * t1 - t0;
    t0 = t1;
    t1 = t2;
  }
  return t1;
}

template <class F>
double cell_quadrature(F&& f, int a, int b) {
  using boost::math::quadrature::gauss;
  const int inf_norm = std::max(std::abs(a), std::abs(b));
  if (inf_norm <= 4) {
    // 4x4 subcells with 10-point Gauss-Legendre per axis
    using G = gauss<double, 10>;
    const auto& x = G::abscissa();
    const auto& w = G::weights();
    double acc = 0.0;
    const int S = 4;
    for (int s1 = 0; s1 < S; ++s1)
      for (int s2 = 0; s2 < S; ++s2) {
        const double c1 = a - 0.5 + (s1 + 0.5) / S;
        const double c2 = b - 0.5 + (s2 + 0.5) / S;
        const double half = 0.5 / S;
        for (std::size_t p = 0; p < x.size(); ++p)
          for (int sp = (x[p] == 0.0 ? 1 : -1); sp <= 1; sp += 2)
            for (std::size_t q = 0; q < x.size(); ++q)
              for (int sq = (x[q] == 0.0 ? 1 : -1); sq <= 1; sq += 2)
                acc += w[p] * w[q] * f(c1 + sp * half * x[p], c2 + sq * half * x[q]) * half * half;
      }
    return acc;
  }
  using G = gauss<double, 3>;
  const auto& x = G::abscissa();
  const auto& w = G::weights();
  double acc = 0.0;
  for (std::size_t p = 0; p < x.size(); ++p)
    for (int sp = (x[p] == 0.0 ? 1 : -1); sp <= 1; sp += 2)
      for (std::size_t q = 0; q < x.size(); ++q)
        for (int sq = (x[q] == 0.0 ? 1 : -1); sq <= 1; sq += 2)
          acc += w[p] * w[q] * f(a + 0.5 * sp * x[p], b + 0.5 * sq * x[q]) * 0.25;
  return acc;
}

std::shared_ptr<const LatticeTables> build(double radius) {
  auto t = std::make_shared<LatticeTables>();
  t->radius = radius;
  const double r2max = radius * radius * (1.0 + 1e-12);
  const int K = static_cast<int>(std::floor(radius + 1e-9));
  for (int a = 0; a <= K; ++a)
    for (int b = -K; b <= K; ++b) {
      if (a == 0 && b <= 0) continue;
      const Offset o{a, b};
      if (static_cast<double>(o.norm2()) <= r2max) t->half.push_back(o);
    }
  std::sort(t->half.begin(), t->half.end(), [](const Offset& x, const Offset& y) {
    if (x.norm2() != y.norm2()) return x.norm2() < y.norm2();
    if (x.a != y.a) return x.a < y.a;
    return x.b < y.b;
  });

  std::array<double, kDefectHarmonics> D{};
  for (int m = 0; m < kDefectHarmonics; ++m) D[m] = central_cell_harmonic(4 * m);
  double summed_mass = 0.0;
  // Each half offset stands for itself and its mirror; every integrand here is even.
  for (const auto& o : t->half) {
    const double r = std::sqrt(static_cast<double>(o.norm2()));
    if (r <= kExactCells) {
      summed_mass += 2.0 * cell_integral_inverse_cube(o.a, o.b);
      for (int m = 0; m < kDefectHarmonics; ++m) {
        const int j = 4 * m;
        D[m] += 2.0 * (cell_integral_harmonic(j, o.a, o.b) - harmonic(j, o.a, o.b) / r);
      }
    } else {
      // ∫cell g - g(n) ≈ Δg(n)/24 with Δ(r^p cos jθ) = (p² - j²) r^{p-2} cos jθ
      const double r3 = r * r * r;
      summed_mass += 2.0 * (1.0 / r3 + 9.0 / (24.0 * r3 * r * r));
      for (int m = 0; m < kDefectHarmonics; ++m) {
        const int j = 4 * m;
        D[m] += 2.0 * (1.0 - j * j) / 24.0 * harmonic(j, o.a, o.b) / r3;
      }
    }
  }
  t->defects = D;
  t->outer_mass = 8.0 * std::numbers::sqrt2 - summed_mass;
  for (int k = 0; k < kNearAngles; ++k) {
    const double th = 2.0 * std::numbers::pi * k / kNearAngles;
    t->angle_cos[k] = std::cos(th);
    t->angle_sin[k] = std::sin(th);
    double w = D[0];
    for (int m = 1; m < kDefectHarmonics; ++m) w += 2.0 * D[m] * std::cos(4.0 * m * th);
    t->near_weights[k] = w / kNearAngles;
  }
  return t;
}

}  // namespace

double cell_integral_inverse_cube(int a, int b) {
  if (a == 0 && b == 0) throw std::invalid_argument("central cell integral of |y|^-3 diverges");
  return cell_quadrature([](double y1, double y2) {
    const double s = y1 * y1 + y2 * y2;
    return 1.0 / (s * std::sqrt(s));
  }, a, b);
}

double cell_integral_harmonic(int j, int a, int b) {
  if (a == 0 && b == 0) return central_cell_harmonic(j);
  return cell_quadrature([j](double y1, double y2) { return harmonic(j, y1, y2) / std::hypot(y1, y2); }, a, b);
}

double central_cell_harmonic(int j) {
  if (j % 4 != 0) return 0.0;
  // eight symmetric octants: ∫_0^{π/4} cos(jθ) / (2 cos θ) dθ each
  using GK = boost::math::quadrature::gauss_kronrod<double, 31>;
  const double v = GK::integrate([j](double th) { return std::cos(j * th) / (2.0 * std::cos(th)); }, 0.0,
                                 std::numbers::pi / 4.0, 10, 1e-15);
  return 8.0 * v;
}

std::shared_ptr<const LatticeTables> lattice_tables(double radius) {
  if (!(radius >= 2.0) || !std::isfinite(radius)) throw std::invalid_argument("lattice radius must be >= 2 cells");
  static std::mutex mutex;
  static std::map<long long, std::shared_ptr<const LatticeTables>> cache;
  const long long key = std::llround(radius * 1e9);
  std::lock_guard lock(mutex);
  auto it = cache.find(key);
  if (it != cache.end()) return it->second;
  auto t = build(radius);
  cache.emplace(key, t);
  return t;
}

}  // namespace muskat
