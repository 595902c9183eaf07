#include "muskat/field.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numbers>
#include <random>
#include <sstream>

#include "muskat/parallel.hpp"

namespace muskat {

std::string to_string(BoundaryPolicy p) {
  return p == BoundaryPolicy::periodic ? "periodic" : "compact-support";
}

BoundaryPolicy parse_boundary_policy(std::string_view s) {
  if (s == "periodic") return BoundaryPolicy::periodic;
  if (s == "compact-support" || s == "compact_support" || s == "compact") return BoundaryPolicy::compact_support;
  throw std::invalid_argument("unknown boundary policy: " + std::string(s));
}

void GridGeometry::validate() const {
  if (nodes < 8) throw std::invalid_argument("grid needs at least 8 nodes per axis");
  if (!(extent > 0.0) || !std::isfinite(extent)) throw std::invalid_argument("grid extent must be positive");
}

double GridView::extended(int i1, int i2) const {
  const int N = n();
  if (periodic()) {
    i1 = ((i1 % N) + N) % N;
    i2 = ((i2 % N) + N) % N;
    return (*this)(i1, i2);
  }
  if (i1 < 0 || i2 < 0 || i1 >= N || i2 >= N) return 0.0;
  return (*this)(i1, i2);
}

GridField::GridField(GridGeometry geometry, std::vector<double> values, double time)
    : geometry_(geometry), values_(std::move(values)), time_(time) {
  geometry_.validate();
  if (values_.size() != geometry_.size()) throw std::invalid_argument("field size does not match geometry");
  if (!(time_ >= 0.0) || !std::isfinite(time_)) throw std::invalid_argument("field time must be finite and >= 0");
  for (double v : values_)
    if (!std::isfinite(v)) throw std::invalid_argument("field values must be finite");
  if (geometry_.policy == BoundaryPolicy::compact_support && ring_magnitude(view()) != 0.0)
    throw std::invalid_argument("compact-support field must vanish on the two outer rings");
}

GridField GridField::zeros(GridGeometry geometry, double time) {
  return GridField(geometry, std::vector<double>(geometry.size(), 0.0), time);
}

double ring_magnitude(const GridView& f) {
  const int N = f.n();
  double m = 0.0;
  for (int i = 0; i < N; ++i)
    for (int j = 0; j < N; ++j)
      if (i < 2 || j < 2 || i >= N - 2 || j >= N - 2) m = std::max(m, std::abs(f(i, j)));
  return m;
}

bool is_interior(const GridGeometry& g, int i1, int i2) {
  if (i1 < 0 || i2 < 0 || i1 >= g.nodes || i2 >= g.nodes) return false;
  if (g.policy == BoundaryPolicy::periodic) return true;
  return i1 >= 2 && i2 >= 2 && i1 <= g.nodes - 3 && i2 <= g.nodes - 3;
}

double max_abs(std::span<const double> v) {
  double m = 0.0;
  for (double x : v) m = std::max(m, std::abs(x));
  return m;
}

// ---------------------------------------------------------------------------
// Stencils

namespace {

double diff_second(const GridView& f, int i1, int i2, int axis) {
  const int N = f.n();
  const double h = f.h();
  const int i = axis == 0 ? i1 : i2;
  auto at = [&](int k) { return axis == 0 ? f.extended(i1 + k, i2) : f.extended(i1, i2 + k); };
  if (!f.periodic()) {
    if (i == 0) return (-3.0 * at(0) + 4.0 * at(1) - at(2)) / (2.0 * h);
    if (i == N - 1) return (3.0 * at(0) - 4.0 * at(-1) + at(-2)) / (2.0 * h);
  }
  return (at(1) - at(-1)) / (2.0 * h);
}

double diff_fourth(const GridView& f, int i1, int i2, int axis) {
  const int N = f.n();
  const int i = axis == 0 ? i1 : i2;
  if (!f.periodic() && (i < 2 || i > N - 3)) return diff_second(f, i1, i2, axis);
  auto at = [&](int k) { return axis == 0 ? f.extended(i1 + k, i2) : f.extended(i1, i2 + k); };
  return (-at(2) + 8.0 * at(1) - 8.0 * at(-1) + at(-2)) / (12.0 * f.h());
}

Hessian hessian_step(const GridView& f, int i1, int i2, int s) {
  const double hs = f.h() * s;
  const double c = f.extended(i1, i2);
  Hessian H;
  H.xx = (f.extended(i1 + s, i2) - 2.0 * c + f.extended(i1 - s, i2)) / (hs * hs);
  H.yy = (f.extended(i1, i2 + s) - 2.0 * c + f.extended(i1, i2 - s)) / (hs * hs);
  H.xy = (f.extended(i1 + s, i2 + s) - f.extended(i1 + s, i2 - s) - f.extended(i1 - s, i2 + s) +
          f.extended(i1 - s, i2 - s)) /
         (4.0 * hs * hs);
  return H;
}

}  // namespace

double Hessian::spectral_radius() const {
  const double mean = 0.5 * (xx + yy);
  const double rad = std::hypot(0.5 * (xx - yy), xy);
  return std::max(std::abs(mean + rad), std::abs(mean - rad));
}

std::array<double, 2> gradient_at(const GridView& f, int i1, int i2, StencilOrder order) {
  if (order == StencilOrder::fourth) return {diff_fourth(f, i1, i2, 0), diff_fourth(f, i1, i2, 1)};
  return {diff_second(f, i1, i2, 0), diff_second(f, i1, i2, 1)};
}

Gradient gradient(const GridView& f, StencilOrder order) {
  const int N = f.n();
  Gradient g{std::vector<double>(f.geometry.size()), std::vector<double>(f.geometry.size())};
  parallel_for(N, [&](std::size_t b, std::size_t e) {
    for (int i = static_cast<int>(b); i < static_cast<int>(e); ++i)
      for (int j = 0; j < N; ++j) {
        const auto d = gradient_at(f, i, j, order);
        g.d1[static_cast<std::size_t>(i) * N + j] = d[0];
        g.d2[static_cast<std::size_t>(i) * N + j] = d[1];
      }
  });
  return g;
}

double slope_sup(const GridView& f, StencilOrder order) {
  const Gradient g = gradient(f, order);
  double m = 0.0;
  for (std::size_t k = 0; k < g.d1.size(); ++k) m = std::max(m, std::hypot(g.d1[k], g.d2[k]));
  return m;
}

Hessian hessian_at(const GridView& f, int i1, int i2) { return hessian_step(f, i1, i2, 1); }
Hessian hessian_wide_at(const GridView& f, int i1, int i2) { return hessian_step(f, i1, i2, 2); }

double hessian_sup(const GridView& f) {
  const int N = f.n();
  std::vector<double> rows(N, 0.0);
  parallel_for(N, [&](std::size_t b, std::size_t e) {
    for (int i = static_cast<int>(b); i < static_cast<int>(e); ++i)
      for (int j = 0; j < N; ++j) rows[i] = std::max(rows[i], hessian_at(f, i, j).spectral_radius());
  });
  return *std::max_element(rows.begin(), rows.end());
}

double laplacian_at(const GridView& f, int i1, int i2) {
  const double h = f.h();
  return (f.extended(i1 + 1, i2) + f.extended(i1 - 1, i2) + f.extended(i1, i2 + 1) + f.extended(i1, i2 - 1) -
          4.0 * f.extended(i1, i2)) /
         (h * h);
}

std::vector<double> increment_envelope(const GridView& f, std::span<const double> radii) {
  const int N = f.n();
  const double h = f.h();
  double rmax = 0.0;
  for (double r : radii) {
    if (r < 0.0) throw std::invalid_argument("envelope radius must be >= 0");
    if (r > f.geometry.extent * (1.0 + 1e-12)) throw std::invalid_argument("envelope radius exceeds the domain extent");
    rmax = std::max(rmax, r);
  }
  const int K = std::min(N - 1, static_cast<int>(std::floor(rmax / h + 1e-9)));
  // half-plane offsets: a > 0, or a == 0 and b > 0
  struct Off {
    int a, b;
    double r;
  };
  std::vector<Off> offs;
  for (int a = 0; a <= K; ++a)
    for (int b = -K; b <= K; ++b) {
      if (a == 0 && b <= 0) continue;
      const double r = h * std::sqrt(static_cast<double>(a * a + b * b));
      if (r <= rmax * (1.0 + 1e-12)) offs.push_back({a, b, r});
    }
  std::vector<double> best(offs.size(), 0.0);
  parallel_for(offs.size(), [&](std::size_t lo, std::size_t hi) {
    for (std::size_t k = lo; k < hi; ++k) {
      const auto [a, b, r] = offs[k];
      double m = 0.0;
      if (f.periodic()) {
        for (int i = 0; i < N; ++i)
          for (int j = 0; j < N; ++j) m = std::max(m, std::abs(f.extended(i + a, j + b) - f(i, j)));
      } else {
        for (int i = 0; i + a < N; ++i)
          for (int j = std::max(0, -b); j < N && j + b < N; ++j) m = std::max(m, std::abs(f(i + a, j + b) - f(i, j)));
      }
      best[k] = m;
    }
  });
  std::vector<double> out;
  out.reserve(radii.size());
  for (double R : radii) {
    double m = 0.0;
    for (std::size_t k = 0; k < offs.size(); ++k)
      if (offs[k].r <= R * (1.0 + 1e-12)) m = std::max(m, best[k]);
    out.push_back(m);
  }
  return out;
}

// ---------------------------------------------------------------------------
// Growth envelopes

GrowthEnvelope GrowthEnvelope::power_law(double omega0, double alpha) {
  if (!(omega0 >= 0.0) || !(alpha >= 0.0 && alpha < 1.0)) throw std::invalid_argument("power law needs omega0 >= 0, alpha in [0,1)");
  return GrowthEnvelope(PowerLaw{omega0, alpha});
}

GrowthEnvelope GrowthEnvelope::table(std::vector<std::pair<double, double>> s, double alpha_tail) {
  if (s.empty()) throw std::invalid_argument("growth table is empty");
  if (!(alpha_tail >= 0.0 && alpha_tail < 1.0)) throw std::invalid_argument("alpha_tail must lie in [0,1)");
  double prev_r = 0.0;
  double prev_v = 0.0;
  double prev_slope = std::numeric_limits<double>::infinity();
  for (const auto& [r, v] : s) {
    if (!(r > prev_r)) throw std::invalid_argument("growth table radii must increase from 0");
    if (v < prev_v) throw std::invalid_argument("growth table must be nondecreasing");
    const double slope = (v - prev_v) / (r - prev_r);
    if (slope > prev_slope * (1.0 + 1e-12) + 1e-15) throw std::invalid_argument("growth table must be concave");
    prev_slope = slope;
    prev_r = r;
    prev_v = v;
  }
  return GrowthEnvelope(Table{std::move(s), alpha_tail});
}

GrowthEnvelope GrowthEnvelope::concave_majorant(std::span<const double> radii, std::span<const double> values,
                                                double alpha_tail) {
  if (radii.size() != values.size() || radii.empty()) throw std::invalid_argument("concave majorant: bad samples");
  std::vector<std::pair<double, double>> pts{{0.0, 0.0}};
  for (std::size_t i = 0; i < radii.size(); ++i)
    if (radii[i] > 0.0) pts.emplace_back(radii[i], values[i]);
  std::sort(pts.begin(), pts.end());
  // make nondecreasing, then take the upper hull
  for (std::size_t i = 1; i < pts.size(); ++i) pts[i].second = std::max(pts[i].second, pts[i - 1].second);
  std::vector<std::pair<double, double>> hull;
  for (const auto& p : pts) {
    while (hull.size() >= 2) {
      const auto& a = hull[hull.size() - 2];
      const auto& b = hull.back();
      const double cross = (b.first - a.first) * (p.second - a.second) - (b.second - a.second) * (p.first - a.first);
      if (cross >= 0.0) hull.pop_back(); else break;
    }
    hull.push_back(p);
  }
  hull.erase(hull.begin());
  if (hull.empty()) hull.emplace_back(radii.back() > 0 ? radii.back() : 1.0, 0.0);
  return table(std::move(hull), alpha_tail);
}

double GrowthEnvelope::operator()(double R) const {
  if (R <= 0.0) return 0.0;
  if (const auto* p = std::get_if<PowerLaw>(&data_)) return p->omega0 * std::pow(R, p->alpha);
  const auto& t = std::get<Table>(data_);
  const auto& s = t.samples;
  if (R >= s.back().first) return s.back().second * std::pow(R / s.back().first, t.alpha_tail);
  double r0 = 0.0;
  double v0 = 0.0;
  for (const auto& [r, v] : s) {
    if (R <= r) return v0 + (v - v0) * (R - r0) / (r - r0);
    r0 = r;
    v0 = v;
  }
  return s.back().second;
}

double GrowthEnvelope::tail_integral() const {
  if (const auto* p = std::get_if<PowerLaw>(&data_)) return p->omega0 / (1.0 - p->alpha);
  const auto& t = std::get<Table>(data_);
  const auto& s = t.samples;
  const double Rl = s.back().first;
  const double Vl = s.back().second;
  double acc = 0.0;
  // piecewise linear v0 + m (R - r0) between samples
  double r0 = 0.0;
  double v0 = 0.0;
  for (const auto& [r, v] : s) {
    const double a = std::max(r0, 1.0);
    if (r > a) {
      const double m = (v - v0) / (r - r0);
      const double c = v0 - m * r0;
      acc += c * (1.0 / a - 1.0 / r) + m * std::log(r / a);
    }
    r0 = r;
    v0 = v;
  }
  const double start = std::max(Rl, 1.0);
  const double at_start = Vl * std::pow(start / Rl, t.alpha_tail);
  acc += at_start / ((1.0 - t.alpha_tail) * start);
  return acc;
}

// ---------------------------------------------------------------------------
// Initial data

SlopeExceedsThreshold::SlopeExceedsThreshold(double m)
    : std::runtime_error([m] {
        std::ostringstream os;
        os << "measured slope " << m << " exceeds the target slope after mollification";
        return os.str();
      }()),
      measured(m) {}

namespace {

double smooth_step(double t) {
  if (t <= 0.0) return 0.0;
  if (t >= 1.0) return 1.0;
  const double a = std::exp(-1.0 / t);
  const double b = std::exp(-1.0 / (1.0 - t));
  return a / (a + b);
}

}  // namespace

double cutoff(double r) { return smooth_step(2.0 * (1.0 - r)); }

double cutoff_gradient_bound() {
  static const double bound = [] {
    double m = 0.0;
    const int n = 20000;
    for (int i = 0; i < n; ++i) {
      const double r0 = 0.5 + 0.5 * i / n;
      const double r1 = 0.5 + 0.5 * (i + 1) / n;
      m = std::max(m, std::abs(cutoff(r1) - cutoff(r0)) / (r1 - r0));
    }
    return m * (1.0 + 1e-6);
  }();
  return bound;
}

double mollifier_profile(double r) { return r < 1.0 ? std::exp(-1.0 / (1.0 - r * r)) : 0.0; }

double initial_profile(const InitialKind& kind, double x1, double x2) {
  return std::visit(
      [&](const auto& d) -> double {
        using T = std::decay_t<decltype(d)>;
        if constexpr (std::is_same_v<T, CosineData>) {
          return d.amplitude * std::cos(d.wavevector[0] * x1 + d.wavevector[1] * x2);
        } else if constexpr (std::is_same_v<T, BumpData>) {
          const double q = (x1 * x1 + x2 * x2) / (d.width * d.width);
          return q < 1.0 ? d.amplitude * std::exp(1.0 - 1.0 / (1.0 - q)) : 0.0;
        } else if constexpr (std::is_same_v<T, RidgeData>) {
          return d.slope * std::min(0.5 * d.plateau, std::max(0.0, d.plateau - std::abs(x1)));
        } else {
          std::mt19937_64 rng(d.seed);
          std::uniform_real_distribution<double> angle(0.0, 2.0 * std::numbers::pi);
          double v = 0.0;
          for (std::size_t j = 0; j < d.wavenumbers.size(); ++j) {
            const double theta = angle(rng);
            const double phase = angle(rng);
            const double k = d.wavenumbers[j];
            v += d.amplitudes[j] * std::cos(k * (std::cos(theta) * x1 + std::sin(theta) * x2) + phase);
          }
          return v;
        }
      },
      kind);
}

double profile_sup(const InitialKind& kind) {
  return std::visit(
      [](const auto& d) -> double {
        using T = std::decay_t<decltype(d)>;
        if constexpr (std::is_same_v<T, CosineData>) return std::abs(d.amplitude);
        else if constexpr (std::is_same_v<T, BumpData>) return std::abs(d.amplitude);
        else if constexpr (std::is_same_v<T, RidgeData>) return std::abs(d.slope) * 0.5 * d.plateau;
        else {
          double s = 0.0;
          for (double a : d.amplitudes) s += std::abs(a);
          return s;
        }
      },
      kind);
}

double profile_envelope(const InitialKind& kind, double r) {
  return std::visit(
      [r](const auto& d) -> double {
        using T = std::decay_t<decltype(d)>;
        if constexpr (std::is_same_v<T, CosineData>) {
          const double k = std::hypot(d.wavevector[0], d.wavevector[1]);
          return std::abs(d.amplitude) * std::min(k * r, 2.0);
        } else if constexpr (std::is_same_v<T, BumpData>) {
          // sup |grad| of the bump profile: numerically from the radial derivative
          double g = 0.0;
          for (int i = 1; i < 4000; ++i) {
            const double s0 = (i - 1) / 4000.0;
            const double s1 = i / 4000.0;
            auto prof = [](double s) { return s < 1.0 ? std::exp(1.0 - 1.0 / (1.0 - s * s)) : 0.0; };
            g = std::max(g, std::abs(prof(s1) - prof(s0)) * 4000.0);
          }
          g *= std::abs(d.amplitude) / d.width * 1.001;
          return std::min(g * r, std::abs(d.amplitude));
        } else if constexpr (std::is_same_v<T, RidgeData>) {
          return std::abs(d.slope) * std::min(r, 0.5 * d.plateau);
        } else {
          double s = 0.0;
          for (std::size_t j = 0; j < d.wavenumbers.size(); ++j)
            s += std::abs(d.amplitudes[j]) * std::min(d.wavenumbers[j] * r, 2.0);
          return s;
        }
      },
      kind);
}

double cutoff_envelope(const InitialDataSpec& spec, double r) {
  const double C = cutoff_gradient_bound();
  return profile_envelope(spec.kind, r) + profile_sup(spec.kind) * std::min(1.0, C * r / spec.cutoff_M);
}

InitialDataSpec normalized(const InitialDataSpec& spec) {
  InitialDataSpec out = spec;
  if (auto* rough = std::get_if<RoughData>(&out.kind)) {
    if (rough->wavenumbers.size() != rough->amplitudes.size())
      throw std::invalid_argument("random-rough data needs one amplitude per wavenumber");
    double budget = 0.0;
    double sup = 0.0;
    for (std::size_t j = 0; j < rough->wavenumbers.size(); ++j) {
      if (!(rough->wavenumbers[j] > 0.0)) throw std::invalid_argument("wavenumbers must be positive");
      budget += std::abs(rough->amplitudes[j]) * rough->wavenumbers[j];
      sup += std::abs(rough->amplitudes[j]);
    }
    budget += sup * cutoff_gradient_bound() / spec.cutoff_M;
    if (budget > spec.target_slope) {
      const double scale = spec.target_slope / budget;
      for (double& a : rough->amplitudes) a *= scale;
    }
  }
  return out;
}

GridField build_initial(const InitialDataSpec& raw, const GridGeometry& g) {
  g.validate();
  if (!(raw.target_slope > 0.0 && raw.target_slope < kSlopeThreshold))
    throw std::invalid_argument("target slope must lie in (0, 5^{-1/2})");
  if (!(raw.cutoff_M > 0.0)) throw std::invalid_argument("cutoff radius must be positive");
  if (!(raw.mollifier_width >= 0.0)) throw std::invalid_argument("mollifier width must be >= 0");
  const bool periodic = g.policy == BoundaryPolicy::periodic;
  if (!periodic && !(g.extent > 2.0 * raw.cutoff_M + 2.0 * raw.mollifier_width))
    throw DomainTooSmall("grid extent must exceed 2*cutoff_M + 2*mollifier_width");
  const InitialDataSpec spec = normalized(raw);
  const int N = g.nodes;
  const double h = g.spacing();

  std::vector<double> cut(g.size());
  for (int i = 0; i < N; ++i)
    for (int j = 0; j < N; ++j) {
      const double x1 = g.coord(i);
      const double x2 = g.coord(j);
      double v = initial_profile(spec.kind, x1, x2);
      if (!periodic) v *= cutoff(std::hypot(x1, x2) / spec.cutoff_M);
      cut[static_cast<std::size_t>(i) * N + j] = v;
    }

  // discrete mollifier, normalized to unit sum
  const int K = static_cast<int>(std::floor(spec.mollifier_width / h));
  struct Tap {
    int a, b;
    double w;
  };
  std::vector<Tap> taps;
  double total = 0.0;
  for (int a = -K; a <= K; ++a)
    for (int b = -K; b <= K; ++b) {
      const double w = K == 0 ? 1.0 : mollifier_profile(h * std::hypot(a, b) / spec.mollifier_width);
      if (w > 0.0) {
        taps.push_back({a, b, w});
        total += w;
      }
    }
  for (auto& t : taps) t.w /= total;

  const GridView src{g, cut};
  std::vector<double> out(g.size());
  parallel_for(N, [&](std::size_t lo, std::size_t hi) {
    for (int i = static_cast<int>(lo); i < static_cast<int>(hi); ++i)
      for (int j = 0; j < N; ++j) {
        double acc = 0.0;
        for (const auto& t : taps) acc += t.w * src.extended(i + t.a, j + t.b);
        out[static_cast<std::size_t>(i) * N + j] = acc;
      }
  });
  if (!periodic) {
    const double support = spec.cutoff_M + spec.mollifier_width;
    for (int i = 0; i < N; ++i)
      for (int j = 0; j < N; ++j) {
        const bool ring = i < 2 || j < 2 || i >= N - 2 || j >= N - 2;
        if (ring || std::hypot(g.coord(i), g.coord(j)) >= support) out[static_cast<std::size_t>(i) * N + j] = 0.0;
      }
  }
  GridField field(g, std::move(out), 0.0);
  const double measured = slope_sup(field.view());
  if (measured > spec.target_slope) throw SlopeExceedsThreshold(measured);
  return field;
}

}  // namespace muskat
