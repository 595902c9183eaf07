#include "muskat/modulus.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <sstream>
#include <stdexcept>

#include "quadrature.hpp"

namespace muskat {

namespace {

constexpr double kLog4 = 1.3862943611198906;
constexpr double kLogCap = 1e300;  // largest admissible log radius

double omega_at_delta(const ModulusSpec& s) { return s.delta - std::pow(s.delta, 1.5); }

}  // namespace

bool is_concave(const ModulusSpec& s) {
  return s.gamma / (4.0 * s.delta) <= 1.0 - 1.5 * std::sqrt(s.delta);
}

void validate(const ModulusSpec& s) {
  if (!(s.delta > 0.0 && s.delta < 4.0 / 9.0)) throw std::invalid_argument("modulus delta must lie in (0, 4/9)");
  if (!(s.gamma > 0.0)) throw std::invalid_argument("modulus gamma must be positive");
  if (!is_concave(s)) throw std::invalid_argument("modulus violates concavity: gamma/(4 delta) > 1 - 1.5 sqrt(delta)");
}

double omega(const ModulusSpec& s, double r) {
  if (r < 0.0) throw std::invalid_argument("omega: negative radius");
  if (r <= s.delta) return r - r * std::sqrt(r);
  return omega_at_delta(s) + s.gamma * (std::log(4.0 + std::log(r / s.delta)) - kLog4);
}

double omega_prime(const ModulusSpec& s, double r) {
  if (r < 0.0) throw std::invalid_argument("omega_prime: negative radius");
  if (r <= s.delta) return 1.0 - 1.5 * std::sqrt(r);
  return s.gamma / (r * (4.0 + std::log(r / s.delta)));
}

double omega_second(const ModulusSpec& s, double r) {
  if (r < 0.0) throw std::invalid_argument("omega_second: negative radius");
  if (r == 0.0) return -std::numeric_limits<double>::infinity();
  if (r <= s.delta) return -0.75 / std::sqrt(r);
  const double L = std::log(r / s.delta);
  return -s.gamma * (5.0 + L) / (r * r * (4.0 + L) * (4.0 + L));
}

double omega_at_log(const ModulusSpec& s, double log_r) {
  const double log_delta = std::log(s.delta);
  if (log_r <= log_delta) {
    const double r = std::exp(log_r);
    return r - r * std::sqrt(r);
  }
  return omega_at_delta(s) + s.gamma * (std::log(4.0 + (log_r - log_delta)) - kLog4);
}

OmegaProfile::OmegaProfile(ModulusSpec spec, double log_stretch) : spec_(spec), log_stretch_(log_stretch) {
  validate(spec_);
}

double OmegaProfile::value(double r) const {
  if (r < 0.0) throw std::invalid_argument("profile: negative radius");
  if (r == 0.0) return 0.0;
  return omega_at_log(spec_, log_stretch_ + std::log(r));
}

double OmegaProfile::derivative(double r) const {
  const double s = log_stretch_ + std::log(r);
  const double log_delta = std::log(spec_.delta);
  if (s <= log_delta) {
    const double stretch = std::exp(log_stretch_);
    return stretch * (1.0 - 1.5 * std::sqrt(std::exp(s)));
  }
  return spec_.gamma / (r * (4.0 + (s - log_delta)));
}

double OmegaProfile::second_derivative(double r) const {
  const double s = log_stretch_ + std::log(r);
  const double log_delta = std::log(spec_.delta);
  if (s <= log_delta) return -0.75 * std::exp(1.5 * log_stretch_) / std::sqrt(r);
  const double L = s - log_delta;
  return -spec_.gamma * (5.0 + L) / (r * r * (4.0 + L) * (4.0 + L));
}

double OmegaProfile::increment(double x, double r) const {
  if (x <= 0.0) return value(x + r);
  const double y = x + r;
  if (y <= 0.0) return -value(x);
  const double log_delta = std::log(spec_.delta);
  const double s0 = log_stretch_ + std::log(x);
  const double s1 = log_stretch_ + std::log(y);
  const double u = r / x;
  if (s0 <= log_delta && s1 <= log_delta) {
    const double sx = std::exp(s0);
    return sx * u - sx * std::sqrt(sx) * std::expm1(1.5 * std::log1p(u));
  }
  if (s0 > log_delta && s1 > log_delta) {
    return spec_.gamma * std::log1p(std::log1p(u) / (4.0 + (s0 - log_delta)));
  }
  return value(y) - value(x);
}

std::vector<double> OmegaProfile::kinks() const {
  const double k = std::exp(std::log(spec_.delta) - log_stretch_);
  if (k > 0.0 && std::isfinite(k)) return {k};
  return {};
}

double OmegaProfile::scale() const {
  const double k = std::exp(std::log(spec_.delta) - log_stretch_);
  return std::clamp(k, 1e-300, 1e300);
}

OmegaProfile OmegaProfile::rescaled(double factor) const {
  if (!(factor > 0.0)) throw std::invalid_argument("rescale factor must be positive");
  return OmegaProfile(spec_, log_stretch_ + std::log(factor));
}

AttainableRangeError::AttainableRangeError(double sup) : attainable_sup(sup) {
  std::ostringstream os;
  os << "2B is not attained by omega; attainable supremum is " << sup;
  message = os.str();
}

double omega_inverse_log(const ModulusSpec& s, double value) {
  validate(s);
  if (value <= 0.0) return -std::numeric_limits<double>::infinity();
  const double sup = omega_at_log(s, kLogCap);
  if (value >= sup) throw AttainableRangeError(sup);
  const double log_delta = std::log(s.delta);
  double lo;
  double hi;
  if (value <= omega_at_delta(s)) {
    lo = std::log(value) - 1.0;  // omega(r) <= r
    hi = log_delta;
  } else {
    lo = log_delta;
    double width = 1.0;
    hi = log_delta + width;
    while (omega_at_log(s, hi) < value) {
      lo = hi;
      width *= 2.0;
      hi = std::min(log_delta + width, kLogCap);
    }
  }
  for (int it = 0; it < 4000; ++it) {
    const double mid = 0.5 * (lo + hi);
    if (hi - lo <= 1e-12 * std::max(1.0, std::abs(mid))) break;
    if (omega_at_log(s, mid) < value) lo = mid; else hi = mid;
  }
  return 0.5 * (lo + hi);
}

double OmegaBar::C() const { return std::exp(log_C); }

double OmegaBar::operator()(double r) const {
  if (r < 0.0) throw std::invalid_argument("omega_bar: negative radius");
  if (r == 0.0) return 0.0;
  return omega_at_log(spec, log_C + std::log(r));
}

double OmegaBar::inverse(double value) const { return std::exp(omega_inverse_log(spec, value) - log_C); }

OmegaBar omega_bar(const ModulusSpec& spec, double slope_bound) {
  if (!(slope_bound > 0.0 && slope_bound < 1.0 / std::sqrt(5.0)))
    throw std::invalid_argument("omega_bar: slope bound must lie in (0, 5^{-1/2})");
  OmegaBar out{spec, slope_bound, 0.0};
  const double target = 2.0 * slope_bound;
  out.log_C = omega_inverse_log(spec, target) - std::log(target);
  return out;
}

// ---------------------------------------------------------------------------
// Functional

namespace {

using detail::integrate;
using detail::Map;

void check_profile(const Profile& g) {
  const double sc = g.scale();
  if (g.value(0.0) != 0.0) throw std::invalid_argument("profile must vanish at 0");
  double prev_r = 0.0;
  double prev_v = 0.0;
  double prev_slope = std::numeric_limits<double>::infinity();
  for (int i = 0; i <= 48; ++i) {
    const double r = sc * std::pow(10.0, -8.0 + i / 3.0);
    const double v = g.value(r);
    if (v < prev_v - 1e-14 * std::abs(prev_v)) throw std::invalid_argument("non-monotone profile");
    const double slope = (v - prev_v) / (r - prev_r);
    if (slope > prev_slope * (1.0 + 1e-9) + 1e-300) throw std::invalid_argument("non-concave profile");
    prev_slope = slope;
    prev_r = r;
    prev_v = v;
  }
}

double truncation_radius(const Profile& g, double xi) { return 1e6 * std::max(xi, g.scale()); }

// Sorted interior breakpoints in (a, b).
std::vector<double> cuts(std::vector<double> pts, double a, double b) {
  std::vector<double> out;
  for (double p : pts) if (p > a * (1 + 1e-12) && p < b * (1 - 1e-12)) out.push_back(p);
  std::sort(out.begin(), out.end());
  return out;
}

Map wide_or_plain(double a, double b) { return (a > 0.0 && b / a > 4.0) ? Map::logarithmic : Map::plain; }

void add(Estimate& acc, const Estimate& e) {
  acc.value += e.value;
  acc.error += e.error;
}

// ∫0^ξ g/r dr
Estimate inner_average(const Profile& g, double xi) {
  auto f = [&](double r) { return r > 0.0 ? g.value(r) / r : g.derivative(1e-300); };
  std::vector<double> pts{0.0};
  for (double c : cuts(g.kinks(), 0.0, xi)) pts.push_back(c);
  pts.push_back(xi);
  Estimate acc;
  for (std::size_t i = 0; i + 1 < pts.size(); ++i) {
    const Map m = (i == 0) ? Map::root_left : wide_or_plain(pts[i], pts[i + 1]);
    add(acc, integrate(f, pts[i], pts[i + 1], m));
  }
  return acc;
}

// ∫ξ^Rt g/r² dr plus tail bound
Estimate outer_average(const Profile& g, double xi) {
  const double Rt = truncation_radius(g, xi);
  auto f = [&](double r) { return g.value(r) / (r * r); };
  std::vector<double> pts{xi};
  for (double c : cuts(g.kinks(), xi, Rt)) pts.push_back(c);
  pts.push_back(Rt);
  Estimate acc;
  for (std::size_t i = 0; i + 1 < pts.size(); ++i) add(acc, integrate(f, pts[i], pts[i + 1], wide_or_plain(pts[i], pts[i + 1])));
  acc.error += (g.value(Rt) + g.tail_slope()) / Rt;
  return acc;
}

// ∫ξ^Rt (g(ξ+r) - g(ξ))/r² dr plus tail bound
Estimate growth_integral(const Profile& g, double xi) {
  const double Rt = truncation_radius(g, xi);
  auto f = [&](double r) { return g.increment(xi, r) / (r * r); };
  std::vector<double> kinks;
  for (double k : g.kinks()) kinks.push_back(k - xi);
  std::vector<double> pts{xi};
  for (double c : cuts(kinks, xi, Rt)) pts.push_back(c);
  pts.push_back(Rt);
  Estimate acc;
  for (std::size_t i = 0; i + 1 < pts.size(); ++i) add(acc, integrate(f, pts[i], pts[i + 1], wide_or_plain(pts[i], pts[i + 1])));
  acc.error += (g.value(xi + Rt) + g.tail_slope()) / Rt * (1.0 + xi / Rt);
  return acc;
}

// ∫0^ξ (g(ξ+r) + g(ξ-r) - 2 g(ξ))/r² dr
Estimate near_rearrangement(const Profile& g, double xi) {
  double gap = std::numeric_limits<double>::infinity();
  double kink_at = -1.0;
  for (double k : g.kinks()) {
    if (k > 0.0 && k < 2.0 * xi && std::abs(xi - k) < gap) {
      gap = std::abs(xi - k);
      kink_at = k;
    }
  }
  if (gap <= 1e-9 * xi) {
    const double jump = g.derivative(kink_at * (1.0 + 1e-12)) - g.derivative(kink_at);
    if (jump < -1e-14 * std::abs(g.derivative(kink_at))) {
      // second difference ~ jump * r near r = 0: log-divergent to -inf
      return {-std::numeric_limits<double>::infinity(), 0.0};
    }
    gap = std::numeric_limits<double>::infinity();
  }
  const double ell = std::min(xi, gap);
  const double rs = 1e-5 * ell;
  const double g2 = g.second_derivative(xi);
  Estimate acc{g2 * rs, std::abs(g2) * rs * 1e-8};
  auto f = [&](double r) { return (g.increment(xi, r) + g.increment(xi, -r)) / (r * r); };
  std::vector<double> pts{rs};
  if (gap < xi && gap > rs) pts.push_back(gap);
  if (0.5 * xi > pts.back()) pts.push_back(0.5 * xi);
  pts.push_back(xi);
  for (std::size_t i = 0; i + 1 < pts.size(); ++i) {
    const bool last = (i + 2 == pts.size());
    add(acc, integrate(f, pts[i], pts[i + 1], last ? Map::root_right : wide_or_plain(pts[i], pts[i + 1])));
  }
  return acc;
}

// ∫ξ^Rt (g(r+ξ) - g(r-ξ) - 2 g(ξ))/r² dr plus tail bound
Estimate far_rearrangement(const Profile& g, double xi) {
  const double Rt = truncation_radius(g, xi);
  const double gx = g.value(xi);
  auto f = [&](double r) { return (g.value(r + xi) - g.value(r - xi) - 2.0 * gx) / (r * r); };
  std::vector<double> kinks;
  for (double k : g.kinks()) {
    kinks.push_back(k + xi);
    kinks.push_back(k - xi);
  }
  std::vector<double> pts{xi};
  const double first = std::min(2.0 * xi, Rt);
  for (double c : cuts(kinks, xi, Rt)) if (c < first) pts.push_back(c);
  pts.push_back(first);
  for (double c : cuts(kinks, first, Rt)) pts.push_back(c);
  pts.push_back(Rt);
  Estimate acc;
  for (std::size_t i = 0; i + 1 < pts.size(); ++i) {
    const Map m = (i == 0) ? Map::root_left : wide_or_plain(pts[i], pts[i + 1]);
    add(acc, integrate(f, pts[i], pts[i + 1], m));
  }
  const double tau = g.tail_slope();
  acc.error += (2.0 * gx + 4.0 * xi * tau / Rt) / Rt;
  return acc;
}

}  // namespace

FunctionalTerms functional_terms(const Profile& g, double xi, const InequalityConstants& k) {
  if (!(xi > 0.0)) throw std::invalid_argument("functional: xi must be positive");
  if (!(k.A > 0.0 && k.c > 0.0 && k.lambda >= 0.0)) throw std::invalid_argument("functional: invalid constants");
  check_profile(g);
  const double gx = g.value(xi);
  const double gp = g.derivative(xi);
  FunctionalTerms t{};
  const Estimate inner = inner_average(g, xi);
  const Estimate outer = outer_average(g, xi);
  t.drift_bracket = {inner.value + xi * outer.value, inner.error + xi * outer.error};
  t.growth_integral = growth_integral(g, xi);
  t.near = near_rearrangement(g, xi);
  t.far = far_rearrangement(g, xi);
  const double cl = k.c * k.lambda;
  const double parts[] = {k.A * gp * t.drift_bracket.value, k.A * gx * t.growth_integral.value, cl * t.near.value,
                          cl * t.far.value};
  double sum = 0.0;
  double mag = 0.0;
  for (double p : parts) {
    sum += p;
    mag += std::abs(p);
  }
  double err = k.A * std::abs(gp) * t.drift_bracket.error + k.A * gx * t.growth_integral.error +
               cl * (t.near.error + t.far.error);
  if (std::isfinite(mag)) err += 1e-15 * mag;
  if (!std::isfinite(err) && std::isfinite(sum)) throw std::runtime_error("functional: quadrature failed its error target");
  t.without_product = {sum, err};
  t.total = {sum + gp * gx, err + 1e-16 * std::abs(gp * gx)};
  return t;
}

Estimate functional_F(const Profile& g, double xi, const InequalityConstants& k) {
  return functional_terms(g, xi, k).total;
}

Estimate timederiv_bound(const Profile& g, double xi, const InequalityConstants& k) {
  return functional_terms(g, xi, k).without_product;
}

std::pair<Estimate, Estimate> rearrangement_integral(const Profile& g, double xi) {
  if (!(xi > 0.0)) throw std::invalid_argument("rearrangement: xi must be positive");
  check_profile(g);
  return {near_rearrangement(g, xi), far_rearrangement(g, xi)};
}

std::vector<double> xi_grid(double delta) {
  std::vector<double> grid;
  grid.reserve(61);
  for (int i = 0; i < 60; ++i) grid.push_back(delta * std::pow(10.0, -6.0 + 12.0 * i / 59.0));
  grid.push_back(delta);
  std::sort(grid.begin(), grid.end());
  return grid;
}

std::vector<MarginRow> margin_table(const ModulusSpec& spec, const InequalityConstants& k, bool stop_at_first_failure) {
  const OmegaProfile g(spec);
  std::vector<double> grid = xi_grid(spec.delta);
  if (stop_at_first_failure) {
    // most failures sit near the case boundary
    std::stable_sort(grid.begin(), grid.end(), [&](double a, double b) {
      return std::abs(std::log(a / spec.delta)) < std::abs(std::log(b / spec.delta));
    });
  }
  std::vector<MarginRow> rows;
  rows.reserve(grid.size());
  for (double xi : grid) {
    const Estimate F = functional_F(g, xi, k);
    const double margin = -F.value - 3.0 * F.error;
    rows.push_back({xi, F.value, F.error, margin});
    if (stop_at_first_failure && !(margin > 0.0)) break;
  }
  return rows;
}

namespace {

bool all_positive(const std::vector<MarginRow>& rows, std::size_t expected) {
  if (rows.size() != expected) return false;
  return std::all_of(rows.begin(), rows.end(), [](const MarginRow& r) { return r.margin > 0.0; });
}

}  // namespace

SearchResult search_constants(const InequalityConstants& k, SearchLimits limits) {
  if (!(k.A > 0.0 && k.c > 0.0 && k.lambda >= 0.0))
    throw std::invalid_argument("search: A and c must be positive and lambda nonnegative");
  SearchResult best;
  const std::size_t n_xi = xi_grid(1.0).size();
  for (int j = 2; j <= limits.max_delta_exponent; ++j) {
    const double delta = std::ldexp(1.0, -j);
    const double cap = 4.0 * delta * (1.0 - 1.5 * std::sqrt(delta));
    int m_min = 0;
    while (4.0 * delta * std::ldexp(1.0, -m_min) > cap) ++m_min;
    const int m_max = m_min + limits.max_gamma_halvings;
    // smallest gamma first: if it fails, no gamma at this delta will do
    {
      const ModulusSpec probe{delta, 4.0 * delta * std::ldexp(1.0, -m_max)};
      ++best.pairs_tried;
      const auto rows = margin_table(probe, k, true);
      if (!all_positive(rows, n_xi)) {
        if (!rows.empty() && rows.back().margin > best.worst_margin && !best.feasible) {
          best.worst_margin = rows.back().margin;
          best.worst_xi = rows.back().xi;
          best.spec = probe;
        }
        continue;
      }
    }
    for (int m = m_min; m <= m_max; ++m) {
      const ModulusSpec spec{delta, 4.0 * delta * std::ldexp(1.0, -m)};
      ++best.pairs_tried;
      if (!all_positive(margin_table(spec, k, true), n_xi)) continue;
      best.feasible = true;
      best.spec = spec;
      best.rows = margin_table(spec, k, false);
      const auto worst = std::min_element(best.rows.begin(), best.rows.end(),
                                          [](const MarginRow& a, const MarginRow& b) { return a.margin < b.margin; });
      best.worst_margin = worst->margin;
      best.worst_xi = worst->xi;
      return best;
    }
  }
  if (best.spec.delta > 0.0) best.rows = margin_table(best.spec, k, false);
  return best;
}

}  // namespace muskat
