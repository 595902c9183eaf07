#include "muskat/verifier.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <random>

#include "muskat/parallel.hpp"

namespace muskat {

namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();

void require_snapshots(const TrajectoryRecord& traj, std::size_t count, const char* check) {
  if (traj.snapshots.size() < count || traj.diagnostics.size() != traj.snapshots.size())
    throw InsufficientData(std::string(check) + ": needs at least " + std::to_string(count) + " snapshots");
}

void require_same_run_layout(const TrajectoryRecord& f, const TrajectoryRecord& g) {
  if (f.snapshots.empty() || f.snapshots.size() != g.snapshots.size())
    throw std::invalid_argument("trajectories must share snapshot times");
  for (std::size_t k = 0; k < f.snapshots.size(); ++k) {
    if (!(f.snapshots[k].geometry() == g.snapshots[k].geometry()))
      throw std::invalid_argument("trajectories must share the grid");
    if (std::abs(f.snapshots[k].time() - g.snapshots[k].time()) > 1e-12 * std::max(1.0, f.snapshots[k].time()))
      throw std::invalid_argument("trajectories must share snapshot times");
  }
}

std::array<int, 2> node_of(std::size_t k, int n) {
  return {static_cast<int>(k / static_cast<std::size_t>(n)), static_cast<int>(k % static_cast<std::size_t>(n))};
}

}  // namespace

std::string to_string(Verdict v) {
  switch (v) {
    case Verdict::pass: return "pass";
    case Verdict::fail: return "fail";
    case Verdict::report_only: return "report";
  }
  return "?";
}

double CheckReport::value(const std::string& key) const {
  for (const auto& [k, v] : values)
    if (k == key) return v;
  throw std::out_of_range("report " + name + " has no value " + key);
}

CheckReport make_report(std::string name, double margin, double tolerance, Witness w) {
  CheckReport r;
  r.name = std::move(name);
  r.margin = margin;
  r.tolerance = tolerance;
  r.witness = w;
  r.verdict = margin >= -tolerance ? Verdict::pass : Verdict::fail;
  return r;
}

double simulation_tolerance(const TrajectoryRecord& traj) { return 10.0 * traj.max_tol_q(); }

CheckReport check_max_principle(const TrajectoryRecord& traj) {
  require_snapshots(traj, 2, "max-principle");
  const auto& d0 = traj.diagnostics.front();
  double slope_margin = kInf;
  double direction_margin = kInf;
  Witness w;
  auto note = [&](double m, double time, int direction) {
    if (m < std::min(slope_margin, direction_margin)) w = {time, {-1, -1}, {-1, -1}, static_cast<double>(direction)};
  };
  for (const auto& d : traj.diagnostics) {
    const double m = d0.slope_sup - d.slope_sup;
    note(m, d.time, -1);
    slope_margin = std::min(slope_margin, m);
    for (int e = 0; e < 8; ++e) {
      const double me = d0.directional_sup[e] - d.directional_sup[e];
      note(me, d.time, e);
      direction_margin = std::min(direction_margin, me);
    }
  }
  CheckReport r = make_report("max-principle", std::min(slope_margin, direction_margin), simulation_tolerance(traj), w);
  r.tainted = traj.tainted;
  r.values = {{"slope_margin", slope_margin}, {"direction_margin", direction_margin},
              {"slope_sup_0", d0.slope_sup}};
  return r;
}

CheckReport check_comparison(const TrajectoryRecord& f, const TrajectoryRecord& g) {
  require_same_run_layout(f, g);
  const auto f0 = f.snapshots.front().values();
  const auto g0 = g.snapshots.front().values();
  for (std::size_t k = 0; k < f0.size(); ++k)
    if (f0[k] > g0[k]) throw std::invalid_argument("comparison: initial data are not ordered (f0 > g0 somewhere)");
  double worst = -kInf;
  Witness w;
  for (const auto& fs : f.snapshots) {
    const auto& gs = g.snapshots[static_cast<std::size_t>(&fs - f.snapshots.data())];
    for (std::size_t k = 0; k < fs.values().size(); ++k) {
      const double d = fs.values()[k] - gs.values()[k];
      if (d > worst) {
        worst = d;
        w.time = fs.time();
        w.x = node_of(k, fs.n());
      }
    }
  }
  CheckReport r = make_report("comparison", -worst, std::max(simulation_tolerance(f), simulation_tolerance(g)), w);
  r.tainted = f.tainted || g.tainted;
  r.values = {{"max_f_minus_g", worst}};
  return r;
}

CheckReport check_uniqueness(const TrajectoryRecord& f, const TrajectoryRecord& g) {
  require_same_run_layout(f, g);
  auto sup_diff = [](const GridField& a, const GridField& b, std::size_t* where) {
    double m = 0.0;
    for (std::size_t k = 0; k < a.values().size(); ++k) {
      const double d = std::abs(a.values()[k] - b.values()[k]);
      if (d > m) {
        m = d;
        if (where) *where = k;
      }
    }
    return m;
  };
  const double initial = sup_diff(f.snapshots.front(), g.snapshots.front(), nullptr);
  double worst = 0.0;
  Witness w;
  for (std::size_t s = 0; s < f.snapshots.size(); ++s) {
    std::size_t k = 0;
    const double d = sup_diff(f.snapshots[s], g.snapshots[s], &k);
    if (d > worst) {
      worst = d;
      w.time = f.snapshots[s].time();
      w.x = node_of(k, f.snapshots[s].n());
    }
  }
  CheckReport r =
      make_report("uniqueness", initial - worst, std::max(simulation_tolerance(f), simulation_tolerance(g)), w);
  r.tainted = f.tainted || g.tainted;
  r.values = {{"initial_sup_difference", initial}, {"max_sup_difference", worst}};
  return r;
}

CheckReport check_growth(const TrajectoryRecord& traj) {
  require_snapshots(traj, 1, "growth");
  const auto& e0 = traj.diagnostics.front().envelope;
  if (e0.empty()) throw InsufficientData("growth: no envelope radii recorded");
  double margin = kInf;
  Witness w;
  for (const auto& d : traj.diagnostics)
    for (std::size_t r = 0; r < e0.size(); ++r) {
      const double m = e0[r] - d.envelope.at(r);
      if (m < margin) {
        margin = m;
        w.time = d.time;
        w.radius = traj.envelope_radii.at(r);
      }
    }
  CheckReport r = make_report("growth", margin, simulation_tolerance(traj), w);
  r.tainted = traj.tainted;
  return r;
}

CheckReport check_curvature_decay(const TrajectoryRecord& traj, double budget, double t_min) {
  require_snapshots(traj, 2, "curvature-decay");
  double first = kInf;
  double last = 0.0;
  double sup = 0.0;
  double branch = -kInf;
  const double h0 = traj.diagnostics.front().hessian_sup;
  Witness w;
  std::vector<std::pair<double, double>> pts;
  for (const auto& d : traj.diagnostics) {
    branch = std::max(branch, d.hessian_sup - h0);
    if (d.time <= 0.0 || d.time < t_min) continue;
    first = std::min(first, d.time);
    last = std::max(last, d.time);
    const double v = d.time * d.hessian_sup;
    if (v > sup) {
      sup = v;
      w.time = d.time;
    }
    if (d.hessian_sup > 0.0) pts.emplace_back(std::log(d.time), std::log(d.hessian_sup));
  }
  if (!(last >= 10.0 * first)) throw InsufficientData("curvature-decay: snapshots must cover a time decade");
  double slope = 0.0;
  if (pts.size() >= 2) {
    double mx = 0.0, my = 0.0;
    for (const auto& [x, y] : pts) mx += x, my += y;
    mx /= pts.size();
    my /= pts.size();
    double sxy = 0.0, sxx = 0.0;
    for (const auto& [x, y] : pts) sxy += (x - mx) * (y - my), sxx += (x - mx) * (x - mx);
    slope = sxx > 0.0 ? sxy / sxx : 0.0;
  }
  const double tol = simulation_tolerance(traj);
  CheckReport r = budget > 0.0 ? make_report("curvature-decay", budget - sup, tol, w)
                               : make_report("curvature-decay", 0.0, tol, w);
  if (budget <= 0.0) r.verdict = Verdict::report_only;
  r.tainted = traj.tainted;
  r.values = {{"sup_t_hessian", sup}, {"hessian_0", h0}, {"smooth_branch_excess", branch},
              {"fitted_exponent", -slope}};
  return r;
}

CrossingResult crossing_scan(const GridField& f, const OmegaBar& omega_bar, double t, const PairSampling& sampling) {
  if (!(t > 0.0)) throw std::invalid_argument("crossing_scan: t must be positive");
  const int N = f.n();
  const double h = f.spacing();
  const bool periodic = f.policy() == BoundaryPolicy::periodic;
  const Gradient g = gradient(f.view());
  const double period = 2.0 * f.extent();

  constexpr int kBins = 16;
  const double d_min = h;
  const double d_max = 2.0 * std::sqrt(2.0) * f.extent();
  auto bin_of = [&](double dist) {
    const double u = std::log(std::max(dist, d_min) / d_min) / std::log(d_max / d_min);
    return std::clamp(static_cast<int>(u * kBins), 0, kBins - 1);
  };

  struct Partial {
    double ratio = 0.0;
    double margin = kInf;
    Witness worst, tightest;
    std::size_t pairs = 0;
    std::array<double, kBins> bins;
    Partial() { bins.fill(kInf); }
    void add(double d, double w, std::array<int, 2> x, std::array<int, 2> y, double dist, double time, int bin) {
      ++pairs;
      bins[bin] = std::min(bins[bin], w - d);
      const double ratio_here = d / w;
      if (ratio_here > ratio) {
        ratio = ratio_here;
        worst = {time, x, y, dist};
      }
      if (w - d < margin) {
        margin = w - d;
        tightest = {time, x, y, dist};
      }
    }
    void merge(const Partial& o) {
      pairs += o.pairs;
      for (int b = 0; b < kBins; ++b) bins[b] = std::min(bins[b], o.bins[b]);
      if (o.ratio > ratio) ratio = o.ratio, worst = o.worst;
      if (o.margin < margin) margin = o.margin, tightest = o.tightest;
    }
  };
  auto grad_diff = [&](std::size_t p, std::size_t q) { return std::hypot(g.d1[p] - g.d1[q], g.d2[p] - g.d2[q]); };
  auto distance = [&](std::array<int, 2> x, std::array<int, 2> y) {
    double d1 = std::abs(x[0] - y[0]) * h;
    double d2 = std::abs(x[1] - y[1]) * h;
    if (periodic) d1 = std::min(d1, period - d1), d2 = std::min(d2, period - d2);
    return std::hypot(d1, d2);
  };
  auto index = [N](int i, int j) { return static_cast<std::size_t>(i) * N + j; };

  std::vector<Partial> rows(static_cast<std::size_t>(N));
  if (sampling.exhaustive) {
    if (N > 64) throw std::invalid_argument("exhaustive pair mode is limited to grids up to 64²");
    parallel_for(static_cast<std::size_t>(N), [&](std::size_t b, std::size_t e) {
      for (std::size_t i = b; i < e; ++i)
        for (int j = 0; j < N; ++j) {
          const std::size_t p = index(static_cast<int>(i), j);
          for (std::size_t q = p + 1; q < f.values().size(); ++q) {
            const auto y = node_of(q, N);
            const double dist = distance({static_cast<int>(i), j}, y);
            rows[i].add(grad_diff(p, q), omega_bar(dist / t), {static_cast<int>(i), j}, y, dist, t, bin_of(dist));
          }
        }
    });
  } else {
    struct Near {
      int a, b;
      double w, dist;
      int bin;
    };
    std::vector<Near> offsets;
    const int R = sampling.near_radius_nodes;
    for (int a = 0; a <= R; ++a)
      for (int b = -R; b <= R; ++b) {
        if (a == 0 && b <= 0) continue;
        if (a * a + b * b > R * R) continue;
        const double dist = h * std::hypot(a, b);
        offsets.push_back({a, b, omega_bar(dist / t), dist, bin_of(dist)});
      }
    parallel_for(static_cast<std::size_t>(N), [&](std::size_t b, std::size_t e) {
      for (std::size_t i = b; i < e; ++i)
        for (int j = 0; j < N; ++j)
          for (const Near& o : offsets) {
            int yi = static_cast<int>(i) + o.a;
            int yj = j + o.b;
            if (periodic) {
              yi = (yi % N + N) % N;
              yj = (yj % N + N) % N;
            } else if (yi >= N || yj < 0 || yj >= N) {
              continue;
            }
            rows[i].add(grad_diff(index(static_cast<int>(i), j), index(yi, yj)), o.w, {static_cast<int>(i), j},
                        {yi, yj}, o.dist, t, o.bin);
          }
    });
  }
  Partial total;
  for (const auto& p : rows) total.merge(p);
  if (!sampling.exhaustive && sampling.far_pairs > 0) {
    std::mt19937_64 rng(sampling.seed);
    std::uniform_int_distribution<std::size_t> pick(0, f.values().size() - 1);
    for (int s = 0; s < sampling.far_pairs; ++s) {
      const std::size_t p = pick(rng);
      const std::size_t q = pick(rng);
      if (p == q) continue;
      const auto x = node_of(p, N);
      const auto y = node_of(q, N);
      const double dist = distance(x, y);
      if (dist <= 0.0) continue;
      total.add(grad_diff(p, q), omega_bar(dist / t), x, y, dist, t, bin_of(dist));
    }
  }
  CrossingResult out{total.ratio, total.margin, total.worst, total.tightest, total.pairs, {}, {}};
  for (int b = 0; b < kBins; ++b) {
    out.bin_upper.push_back(d_min * std::pow(d_max / d_min, (b + 1.0) / kBins));
    out.bin_margin.push_back(total.bins[b]);
  }
  return out;
}

CheckReport check_modulus_generation(const TrajectoryRecord& traj, const OmegaBar& omega_bar,
                                     const PairSampling& sampling) {
  require_snapshots(traj, 2, "modulus-generation");
  double margin = kInf;
  double ratio = 0.0;
  Witness w;
  std::size_t pairs = 0;
  for (const auto& s : traj.snapshots) {
    if (s.time() <= 0.0) continue;
    const CrossingResult c = crossing_scan(s, omega_bar, s.time(), sampling);
    pairs += c.pairs;
    ratio = std::max(ratio, c.ratio);
    if (c.margin < margin) {
      margin = c.margin;
      w = c.tightest;
    }
  }
  CheckReport r = make_report("modulus-generation", margin, simulation_tolerance(traj), w);
  r.tainted = traj.tainted;
  r.values = {{"saturation_ratio", ratio}, {"pairs", static_cast<double>(pairs)}, {"C", omega_bar.C()},
              {"delta", omega_bar.spec.delta}, {"gamma", omega_bar.spec.gamma}};
  return r;
}

CheckReport check_time_regularity(const TrajectoryRecord& traj, const GrowthEnvelope& omega,
                                  const QuadratureConfig& q, double budget) {
  const double I = omega.tail_integral();
  double ratio = 0.0;
  double quotient = 0.0;
  Witness w;
  int used = 0;
  for (const auto& s : traj.snapshots) {
    const double t = s.time();
    if (!(t > 0.0 && t < 0.5)) continue;
    ++used;
    const GridView v = s.view();
    const auto dt = rhs_field(v, q, traj.epsilon, false).values;
    const double weight = -std::log(t) + I;
    const double sup = max_abs(dt);
    if (sup / weight > ratio) {
      ratio = sup / weight;
      w.time = t;
    }
    const int N = s.n();
    const double h = s.spacing();
    const int R = std::min(8, static_cast<int>(std::floor(0.5 * t / h)));
    for (int i = 0; i < N; ++i)
      for (int j = 0; j < N; ++j)
        for (int a = 0; a <= R; ++a)
          for (int b = -R; b <= R; ++b) {
            if ((a == 0 && b <= 0) || a * a + b * b > R * R) continue;
            int yi = i + a;
            int yj = j + b;
            if (v.periodic()) {
              yi %= N;
              yj = (yj % N + N) % N;
            } else if (yi >= N || yj < 0 || yj >= N) {
              continue;
            }
            const double r = h * std::hypot(a, b);
            const double denom = (r / t) * (-std::log(r / t) - std::log(t) + I);
            const double qv =
                std::abs(dt[static_cast<std::size_t>(i) * N + j] - dt[static_cast<std::size_t>(yi) * N + yj]) / denom;
            quotient = std::max(quotient, qv);
          }
  }
  if (used == 0) throw InsufficientData("time-regularity: no snapshots in (0, 1/2)");
  CheckReport r = budget > 0.0 ? make_report("time-regularity", budget - ratio, 0.0, w)
                               : make_report("time-regularity", 0.0, 0.0, w);
  if (budget <= 0.0) r.verdict = Verdict::report_only;
  r.tainted = traj.tainted;
  r.values = {{"sup_ratio", ratio}, {"log_lipschitz_quotient", quotient}, {"omega_tail_integral", I}};
  return r;
}

CheckReport check_slope_decay(const TrajectoryRecord& traj, const GrowthEnvelope& omega, double band) {
  const auto* law = std::get_if<GrowthEnvelope::PowerLaw>(&omega.data());
  if (!law) throw std::invalid_argument("slope-decay: needs a power-law envelope");
  require_snapshots(traj, 3, "slope-decay");
  const double t_last = traj.diagnostics.back().time;
  double t_first = kInf;
  std::vector<std::pair<double, double>> pts;
  for (const auto& d : traj.diagnostics) {
    if (d.time <= 0.0) continue;
    t_first = std::min(t_first, d.time);
    if (d.time >= t_last / 10.0 * (1.0 - 1e-12) && d.slope_sup > 0.0)
      pts.emplace_back(std::log(d.time), std::log(d.slope_sup));
  }
  if (pts.size() < 3 || !(t_last >= 10.0 * t_first * (1.0 - 1e-12)))
    throw InsufficientData("slope-decay: need at least three snapshots spanning the last time decade");
  double mx = 0.0, my = 0.0;
  for (const auto& [x, y] : pts) mx += x, my += y;
  mx /= pts.size();
  my /= pts.size();
  double sxy = 0.0, sxx = 0.0;
  for (const auto& [x, y] : pts) sxy += (x - mx) * (y - my), sxx += (x - mx) * (x - mx);
  const double fitted = -sxy / sxx;
  const double target = (1.0 - law->alpha) / (2.0 - law->alpha);
  Witness w;
  w.time = t_last;
  CheckReport r = make_report("slope-decay", band - std::abs(fitted - target), 0.0, w);
  r.tainted = traj.tainted;
  r.values = {{"fitted_exponent", fitted}, {"target_exponent", target}, {"band", band},
              {"fit_points", static_cast<double>(pts.size())}};
  return r;
}

CheckReport check_slope_inequality(const TrajectoryRecord& traj, const GrowthEnvelope& omega) {
  require_snapshots(traj, 2, "slope-inequality");
  double margin = kInf;
  Witness w;
  for (const auto& d : traj.diagnostics) {
    if (d.time <= 0.0 || !(d.hessian_sup > 0.0) || !(d.slope_sup > 0.0)) continue;
    const double R = 2.0 * d.slope_sup / d.hessian_sup;
    const double m = 2.0 * omega(R) / R - d.slope_sup;
    if (m < margin) {
      margin = m;
      w.time = d.time;
      w.radius = R;
    }
  }
  if (margin == kInf) margin = 0.0;
  CheckReport r = make_report("slope-inequality", margin, simulation_tolerance(traj), w);
  r.tainted = traj.tainted;
  return r;
}

CheckReport check_ellipticity(const TrajectoryRecord& traj, int radius_nodes, int node_stride) {
  require_snapshots(traj, 1, "ellipticity");
  double margin = kInf;
  double lo = kInf, hi = -kInf;
  double tol = 0.0;
  Witness w;
  for (std::size_t s = 0; s < traj.snapshots.size(); ++s) {
    const GridField& f = traj.snapshots[s];
    const auto& d = traj.diagnostics[s];
    if (d.slope_sup >= kSlopeThreshold) continue;
    tol = std::max(tol, d.tol_q());
    const EllipticityBounds e = ellipticity_constants(d.slope_sup);
    const GridView v = f.view();
    const int N = f.n();
    const double h = f.spacing();
    for (int i = 0; i < N; i += node_stride)
      for (int j = 0; j < N; j += node_stride)
        for (int a = -radius_nodes; a <= radius_nodes; ++a)
          for (int b = -radius_nodes; b <= radius_nodes; ++b) {
            if ((a == 0 && b == 0) || a * a + b * b > radius_nodes * radius_nodes) continue;
            const double r = h * std::hypot(a, b);
            const double val = r * r * r * kernel_K(v, i, j, a, b);
            lo = std::min(lo, val);
            hi = std::max(hi, val);
            const double m = std::min(val - e.lambda, e.Lambda - val);
            if (m < margin) {
              margin = m;
              w = {f.time(), {i, j}, {a, b}, r};
            }
          }
  }
  if (margin == kInf) margin = 0.0;
  // Floor for rounding in r³ K, which is O(1).
  CheckReport r = make_report("ellipticity", margin, std::max(tol, 1e-12), w);
  r.tainted = traj.tainted;
  r.values = {{"min_scaled_K", lo}, {"max_scaled_K", hi}};
  return r;
}

CheckReport holder_quotients(const TrajectoryRecord& traj) {
  constexpr std::array<double, 3> exponents{0.25, 0.5, 0.75};
  std::array<double, 3> sup{0.0, 0.0, 0.0};
  std::vector<Gradient> grads;
  for (const auto& s : traj.snapshots) grads.push_back(gradient(s.view()));
  for (std::size_t k = 0; k < traj.snapshots.size(); ++k) {
    const GridField& f = traj.snapshots[k];
    const double t = f.time();
    if (t <= 0.0) continue;
    const int N = f.n();
    const double h = f.spacing();
    const int R = std::min(8, static_cast<int>(std::floor(0.25 * t / h)));
    auto update = [&](double diff, double rho) {
      for (std::size_t e = 0; e < exponents.size(); ++e) sup[e] = std::max(sup[e], diff / std::pow(rho, exponents[e]));
    };
    const Gradient& g = grads[k];
    for (int i = 0; i < N; ++i)
      for (int j = 0; j < N; ++j) {
        const std::size_t p = static_cast<std::size_t>(i) * N + j;
        for (int a = 0; a <= R; ++a)
          for (int b = -R; b <= R; ++b) {
            if ((a == 0 && b <= 0) || a * a + b * b > R * R) continue;
            const int yi = i + a, yj = j + b;
            if (yi >= N || yj < 0 || yj >= N) continue;
            const std::size_t q = static_cast<std::size_t>(yi) * N + yj;
            update(std::hypot(g.d1[p] - g.d1[q], g.d2[p] - g.d2[q]), h * std::hypot(a, b));
          }
        for (std::size_t m = 0; m < k; ++m) {
          const double s = traj.snapshots[m].time();
          if (s <= 0.75 * t) continue;
          const Gradient& gm = grads[m];
          update(std::hypot(g.d1[p] - gm.d1[p], g.d2[p] - gm.d2[p]), t - s);
        }
      }
  }
  CheckReport r = make_report("holder", 0.0, 0.0);
  r.verdict = Verdict::report_only;
  r.tainted = traj.tainted;
  for (std::size_t e = 0; e < exponents.size(); ++e)
    r.values.emplace_back("quotient_alpha_" + std::to_string(exponents[e]).substr(0, 4), sup[e]);
  return r;
}

const std::vector<std::string>& trajectory_check_names() {
  static const std::vector<std::string> names{"max-principle",   "growth",          "curvature-decay",
                                              "modulus-generation", "time-regularity", "slope-decay",
                                              "slope-inequality", "ellipticity",     "holder"};
  return names;
}

}  // namespace muskat
