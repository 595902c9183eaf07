#include "muskat/nonlocal.hpp"

#include <algorithm>
#include <cmath>
#include <complex>
#include <map>
#include <memory>
#include <mutex>
#include <numbers>
#include <tuple>

#include <fftw3.h>

#if defined(__AVX512F__)
#include <immintrin.h>
#endif

#include "muskat/lattice.hpp"
#include "muskat/parallel.hpp"

namespace muskat {

std::string to_string(NearCellPolicy p) { return p == NearCellPolicy::quadratic_model ? "quadratic-model" : "skip-with-bound"; }
std::string to_string(TailCorrection t) { return t == TailCorrection::analytic ? "analytic" : "none"; }
std::string to_string(QuadratureMethod m) { return m == QuadratureMethod::direct ? "direct" : "split"; }

NearCellPolicy parse_near_cell_policy(std::string_view s) {
  if (s == "quadratic-model") return NearCellPolicy::quadratic_model;
  if (s == "skip-with-bound") return NearCellPolicy::skip_with_bound;
  throw std::invalid_argument("unknown near_cell_policy: " + std::string(s));
}
TailCorrection parse_tail_correction(std::string_view s) {
  if (s == "analytic") return TailCorrection::analytic;
  if (s == "none") return TailCorrection::none;
  throw std::invalid_argument("unknown tail_correction: " + std::string(s));
}
QuadratureMethod parse_quadrature_method(std::string_view s) {
  if (s == "direct") return QuadratureMethod::direct;
  if (s == "split") return QuadratureMethod::split;
  throw std::invalid_argument("unknown quadrature method: " + std::string(s));
}

void QuadratureConfig::validate(const GridGeometry& g, double support_radius) const {
  g.validate();
  const double h = g.spacing();
  if (!(R_max > 2.0 * h) || !std::isfinite(R_max)) throw std::invalid_argument("R_max must exceed two grid spacings");
  if (g.policy == BoundaryPolicy::compact_support && R_max > g.extent - support_radius + 1e-12 * g.extent)
    throw std::invalid_argument("R_max exceeds the safe radius extent - support radius");
  if (method == QuadratureMethod::split && !(split_radius > 2.0 * h))
    throw std::invalid_argument("split_radius must exceed two grid spacings");
}

EllipticityBounds ellipticity_constants(double B) {
  if (!(B >= 0.0) || B > kSlopeThreshold * (1.0 + 1e-15)) throw std::invalid_argument("slope bound must lie in [0, 5^{-1/2}]");
  const double b2 = B * B;
  const double ratio = 6.0 * b2 / (b2 + 1.0);
  EllipticityBounds e;
  e.B = B;
  e.lambda = std::max(0.0, (1.0 - ratio) / std::pow(b2 + 1.0, 1.5));
  e.Lambda = 1.0 + ratio;
  return e;
}

namespace {

double lattice_radius(const QuadratureConfig& q, double h) { return q.R_max / h; }

// ---- homogeneous near-cell models --------------------------------------

double near_sum(const LatticeTables& t, const std::array<double, 2>& g, const Hessian& A) {
  double acc = 0.0;
  for (int k = 0; k < kNearAngles; ++k) {
    const double c = t.angle_cos[k];
    const double s = t.angle_sin[k];
    const double gu = g[0] * c + g[1] * s;
    const double den = 1.0 + gu * gu;
    const double quad = 0.5 * (A.xx * c * c + 2.0 * A.xy * c * s + A.yy * s * s);
    acc += t.near_weights[k] * quad / (den * std::sqrt(den));
  }
  return acc;
}

double near_abs_sum(const LatticeTables& t, const std::array<double, 2>& g, const Hessian& A) {
  double acc = 0.0;
  for (int k = 0; k < kNearAngles; ++k) {
    const double c = t.angle_cos[k];
    const double s = t.angle_sin[k];
    const double gu = g[0] * c + g[1] * s;
    const double den = 1.0 + gu * gu;
    const double quad = 0.5 * (A.xx * c * c + 2.0 * A.xy * c * s + A.yy * s * s);
    acc += std::abs(t.near_weights[k] * quad) / (den * std::sqrt(den));
  }
  return acc;
}

std::array<double, 2> drift_near_sum(const LatticeTables& t, const std::array<double, 2>& g, const Hessian& A) {
  std::array<double, 2> acc{0.0, 0.0};
  for (int k = 0; k < kNearAngles; ++k) {
    const double c = t.angle_cos[k];
    const double s = t.angle_sin[k];
    const double gu = g[0] * c + g[1] * s;
    const double den = 1.0 + gu * gu;
    const double quad = A.xx * c * c + 2.0 * A.xy * c * s + A.yy * s * s;
    const double common = t.near_weights[k] * 1.5 * gu * quad / (den * den * std::sqrt(den));
    acc[0] += common * c;
    acc[1] += common * s;
  }
  return acc;
}

struct LocalTerms {
  double near = 0.0;
  double near_error = 0.0;
  double tail = 0.0;
  double tail_error = 0.0;
};

LocalTerms local_terms(const GridView& f, int i1, int i2, const LatticeTables& t, const QuadratureConfig& q,
                       double far_value, const std::array<double, 2>& g, bool estimate_errors = true) {
  const double h = f.h();
  LocalTerms out;
  const Hessian A = hessian_at(f, i1, i2);
  if (q.near_cell == NearCellPolicy::quadratic_model) {
    out.near = h * near_sum(t, g, A);
    if (estimate_errors) {
      const double wide = h * near_sum(t, g, hessian_wide_at(f, i1, i2));
      out.near_error = std::abs(out.near - wide) / 3.0;
    }
  } else {
    out.near_error = h * near_abs_sum(t, g, A);
  }
  const double delta = far_value - f(i1, i2);
  const double mass = t.outer_mass / h;
  if (q.tail == TailCorrection::analytic) {
    const double R = t.radius * h;
    const double cubic = std::numbers::pi * delta * delta * delta / (R * R * R);
    out.tail = delta * mass - cubic;
    const double d5 = std::pow(std::abs(delta), 5);
    out.tail_error = 0.75 * std::numbers::pi * d5 / std::pow(R, 5) + std::abs(cubic) * 2.0 * h / R;
  } else {
    out.tail_error = std::abs(delta) * mass;
  }
  return out;
}

double far_field_value(const GridView& f) {
  if (!f.periodic()) return 0.0;
  double s = 0.0;
  for (double v : f.values) s += v;
  return s / static_cast<double>(f.values.size());
}

// ---- padded storage ----------------------------------------------------

struct Padded {
  int pad = 0;
  int width = 0;
  std::vector<double> data;
  const double* row(int i) const { return data.data() + static_cast<std::size_t>(i + pad) * width + pad; }
};

Padded make_padded(const GridView& f, int pad) {
  Padded p;
  p.pad = pad;
  p.width = f.n() + 2 * pad;
  p.data.assign(static_cast<std::size_t>(p.width) * p.width, 0.0);
  for (int i = -pad; i < f.n() + pad; ++i)
    for (int j = -pad; j < f.n() + pad; ++j)
      p.data[static_cast<std::size_t>(i + pad) * p.width + (j + pad)] = f.extended(i, j);
  return p;
}

// ---- lattice pair kernel -------------------------------------------------

#if defined(__AVX512F__)
inline __m512d inverse_three_halves(__m512d s) {
  __m512d y = _mm512_rsqrt14_pd(s);
  const __m512d three_halves = _mm512_set1_pd(1.5);
  const __m512d hs = _mm512_mul_pd(_mm512_set1_pd(0.5), s);
  y = _mm512_mul_pd(y, _mm512_fnmadd_pd(hs, _mm512_mul_pd(y, y), three_halves));
  y = _mm512_mul_pd(y, _mm512_fnmadd_pd(hs, _mm512_mul_pd(y, y), three_halves));
  return _mm512_mul_pd(y, _mm512_mul_pd(y, y));
}
#endif

inline double inverse_three_halves(double s) { return 1.0 / (s * std::sqrt(s)); }

// acc[node] += Σ_pairs (δ+ - g·h) s+^{-3/2} + (δ- + g·h) s-^{-3/2}, optionally minus the
// linearisation (δ+ + δ-) / |h|³, for rows [row_begin, row_end).
template <bool RemainderOnly>
void accumulate_pairs(const Padded& p, const GridView& f, const Gradient& g, const std::vector<Offset>& offsets,
                      double h, int row_begin, int row_end, double* acc) {
  const int N = f.n();
  for (const Offset& o : offsets) {
    const double ha = h * o.a;
    const double hb = h * o.b;
    const double r2 = ha * ha + hb * hb;
    const double inv_r3 = 1.0 / (r2 * std::sqrt(r2));
    for (int i = row_begin; i < row_end; ++i) {
      const double* plus = p.row(i + o.a) + o.b;
      const double* minus = p.row(i - o.a) - o.b;
      const std::size_t base = static_cast<std::size_t>(i) * N;
      const double* fr = f.values.data() + base;
      const double* g1 = g.d1.data() + base;
      const double* g2 = g.d2.data() + base;
      double* out = acc + base;
#if defined(__AVX512F__)
      const __m512d R2 = _mm512_set1_pd(r2);
      const __m512d HA = _mm512_set1_pd(ha);
      const __m512d HB = _mm512_set1_pd(hb);
      const __m512d IR3 = _mm512_set1_pd(inv_r3);
      for (int j = 0; j < N; j += 8) {
        const __mmask8 m = (j + 8 <= N) ? static_cast<__mmask8>(0xFF) : static_cast<__mmask8>((1u << (N - j)) - 1u);
        const __m512d F = _mm512_maskz_loadu_pd(m, fr + j);
        const __m512d dp = _mm512_sub_pd(_mm512_maskz_loadu_pd(m, plus + j), F);
        const __m512d dm = _mm512_sub_pd(_mm512_maskz_loadu_pd(m, minus + j), F);
        const __m512d gh =
            _mm512_fmadd_pd(_mm512_maskz_loadu_pd(m, g1 + j), HA, _mm512_mul_pd(_mm512_maskz_loadu_pd(m, g2 + j), HB));
        const __m512d ip = inverse_three_halves(_mm512_fmadd_pd(dp, dp, R2));
        const __m512d im = inverse_three_halves(_mm512_fmadd_pd(dm, dm, R2));
        __m512d v = _mm512_fmadd_pd(_mm512_sub_pd(dp, gh), ip, _mm512_mul_pd(_mm512_add_pd(dm, gh), im));
        if constexpr (RemainderOnly) v = _mm512_fnmadd_pd(_mm512_add_pd(dp, dm), IR3, v);
        _mm512_mask_storeu_pd(out + j, m, _mm512_add_pd(_mm512_maskz_loadu_pd(m, out + j), v));
      }
#else
      for (int j = 0; j < N; ++j) {
        const double F = fr[j];
        const double dp = plus[j] - F;
        const double dm = minus[j] - F;
        const double gh = g1[j] * ha + g2[j] * hb;
        double v = (dp - gh) * inverse_three_halves(dp * dp + r2) + (dm + gh) * inverse_three_halves(dm * dm + r2);
        if constexpr (RemainderOnly) v -= (dp + dm) * inv_r3;
        out[j] += v;
      }
#endif
    }
  }
}

// ---- FFT convolution for the linear part ------------------------------------

struct FftwFree {
  void operator()(void* p) const { fftw_free(p); }
};
using RealBuffer = std::unique_ptr<double[], FftwFree>;
using ComplexBuffer = std::unique_ptr<fftw_complex[], FftwFree>;

std::mutex& fftw_planner_mutex() {
  static std::mutex m;
  return m;
}

class LinearConvolution {
 public:
  LinearConvolution(int N, int P, double h, const LatticeTables& t, bool periodic) : N_(N), P_(P) {
    const std::size_t real_size = static_cast<std::size_t>(P) * P;
    const std::size_t complex_size = static_cast<std::size_t>(P) * (P / 2 + 1);
    RealBuffer kernel(fftw_alloc_real(real_size));
    std::fill(kernel.get(), kernel.get() + real_size, 0.0);
    spectrum_.reset(fftw_alloc_complex(complex_size));
    auto wrap = [P](int k) { return ((k % P) + P) % P; };
    for (const Offset& o : t.half) {
      const double r = std::sqrt(static_cast<double>(o.norm2()));
      const double w = 1.0 / (h * r * r * r);
      kernel[static_cast<std::size_t>(wrap(o.a)) * P + wrap(o.b)] += w;
      kernel[static_cast<std::size_t>(wrap(-o.a)) * P + wrap(-o.b)] += w;
      total_ += 2.0 * w;
    }
    (void)periodic;
    RealBuffer scratch(fftw_alloc_real(real_size));
    ComplexBuffer cscratch(fftw_alloc_complex(complex_size));
    std::lock_guard lock(fftw_planner_mutex());
    forward_ = fftw_plan_dft_r2c_2d(P, P, scratch.get(), cscratch.get(), FFTW_ESTIMATE);
    backward_ = fftw_plan_dft_c2r_2d(P, P, cscratch.get(), scratch.get(), FFTW_ESTIMATE);
    fftw_execute_dft_r2c(forward_, kernel.get(), spectrum_.get());
  }
  ~LinearConvolution() {
    std::lock_guard lock(fftw_planner_mutex());
    fftw_destroy_plan(forward_);
    fftw_destroy_plan(backward_);
  }
  LinearConvolution(const LinearConvolution&) = delete;
  LinearConvolution& operator=(const LinearConvolution&) = delete;

  // out[node] = Σ_n w_n (f(x + n) - f(x)) over the summed lattice offsets.
  void apply(const GridView& f, double* out) const {
    const int P = P_;
    const std::size_t real_size = static_cast<std::size_t>(P) * P;
    const std::size_t complex_size = static_cast<std::size_t>(P) * (P / 2 + 1);
    RealBuffer in(fftw_alloc_real(real_size));
    std::fill(in.get(), in.get() + real_size, 0.0);
    for (int i = 0; i < N_; ++i)
      for (int j = 0; j < N_; ++j) in[static_cast<std::size_t>(i) * P + j] = f(i, j);
    ComplexBuffer spec(fftw_alloc_complex(complex_size));
    fftw_execute_dft_r2c(forward_, in.get(), spec.get());
    for (std::size_t k = 0; k < complex_size; ++k) {
      const double re = spec[k][0] * spectrum_[k][0] - spec[k][1] * spectrum_[k][1];
      const double im = spec[k][0] * spectrum_[k][1] + spec[k][1] * spectrum_[k][0];
      spec[k][0] = re;
      spec[k][1] = im;
    }
    fftw_execute_dft_c2r(backward_, spec.get(), in.get());
    const double scale = 1.0 / static_cast<double>(real_size);
    for (int i = 0; i < N_; ++i)
      for (int j = 0; j < N_; ++j)
        out[static_cast<std::size_t>(i) * N_ + j] = in[static_cast<std::size_t>(i) * P + j] * scale - total_ * f(i, j);
  }

 private:
  int N_;
  int P_;
  double total_ = 0.0;
  ComplexBuffer spectrum_;
  fftw_plan forward_ = nullptr;
  fftw_plan backward_ = nullptr;
};

int fft_size_at_least(int n) {
  int best = 1 << 30;
  for (int p2 = 1; p2 < 2 * n + 2; p2 *= 2)
    for (int p3 = p2; p3 < 2 * n + 2; p3 *= 3)
      for (int p5 = p3; p5 < 2 * n + 2; p5 *= 5)
        if (p5 >= n) best = std::min(best, p5);
  return best;
}

std::shared_ptr<const LinearConvolution> linear_convolution(const GridView& f, double radius) {
  static std::mutex mutex;
  static std::map<std::tuple<int, long long, long long, bool>, std::shared_ptr<const LinearConvolution>> cache;
  const int N = f.n();
  const bool periodic = f.periodic();
  const auto key = std::make_tuple(N, std::llround(f.h() * 1e12), std::llround(radius * 1e9), periodic);
  {
    std::lock_guard lock(mutex);
    if (auto it = cache.find(key); it != cache.end()) return it->second;
  }
  const auto tables = lattice_tables(radius);
  const int P = periodic ? N : fft_size_at_least(N + static_cast<int>(std::ceil(radius)) + 1);
  auto conv = std::make_shared<const LinearConvolution>(N, P, f.h(), *tables, periodic);
  std::lock_guard lock(mutex);
  cache.emplace(key, conv);
  return conv;
}

// Bound on Σ over split_radius < |h| <= R_max of the nonlinear remainder, using
// |δ| <= min(osc, B |h|) and |remainder| <= 1.5 (|δ| + B|h|) δ² / |h|^5.
double split_remainder_bound(double slope, double osc, double inner) {
  if (slope <= 0.0 || osc <= 0.0) return 0.0;
  const double knee = osc / slope;
  double acc = 0.0;
  if (inner < knee) acc += 2.0 * std::numbers::pi * 3.0 * slope * slope * slope * std::log(knee / inner);
  const double r0 = std::max(inner, knee);
  acc += 2.0 * std::numbers::pi * 1.5 * osc * osc * (osc / (3.0 * r0 * r0 * r0) + slope / (2.0 * r0 * r0));
  return acc;
}

void check_node(const GridView& f, int i1, int i2) {
  if (!is_interior(f.geometry, i1, i2)) throw NonInteriorNode("node is not interior");
}

}  // namespace

double near_cell_term(const std::array<double, 2>& g, const Hessian& A, double h, double radius) {
  return kRhsNormalization * h * near_sum(*lattice_tables(radius), g, A);
}

double rhs_at(const GridView& f, int i1, int i2, const QuadratureConfig& q) {
  q.validate(f.geometry);
  check_node(f, i1, i2);
  const double h = f.h();
  const auto tables = lattice_tables(lattice_radius(q, h));
  const auto g = gradient_at(f, i1, i2);
  const double F = f(i1, i2);
  double acc = 0.0;
  for (const Offset& o : tables->half) {
    const double ha = h * o.a;
    const double hb = h * o.b;
    const double r2 = ha * ha + hb * hb;
    const double dp = f.extended(i1 + o.a, i2 + o.b) - F;
    const double dm = f.extended(i1 - o.a, i2 - o.b) - F;
    const double gh = g[0] * ha + g[1] * hb;
    acc += (dp - gh) * inverse_three_halves(dp * dp + r2) + (dm + gh) * inverse_three_halves(dm * dm + r2);
  }
  const LocalTerms local = local_terms(f, i1, i2, *tables, q, far_field_value(f), g);
  return kRhsNormalization * (h * h * acc + local.near + local.tail);
}

double viscous_rhs_at(const GridView& f, int i1, int i2, double epsilon, const QuadratureConfig& q) {
  if (!(epsilon >= 0.0)) throw std::invalid_argument("viscosity must be >= 0");
  const double base = rhs_at(f, i1, i2, q);
  if (epsilon == 0.0) return base;
  return base + epsilon * laplacian_at(f, i1, i2);
}

RhsField rhs_field(const GridView& f, const QuadratureConfig& q, double epsilon, bool estimate_errors) {
  q.validate(f.geometry);
  if (!(epsilon >= 0.0)) throw std::invalid_argument("viscosity must be >= 0");
  const int N = f.n();
  const double h = f.h();
  const double radius = lattice_radius(q, h);
  const auto tables = lattice_tables(radius);
  const Gradient g = gradient(f);
  const double far_value = far_field_value(f);

  RhsField out;
  out.values.assign(f.geometry.size(), 0.0);
  double* acc = out.values.data();

  const bool split = q.method == QuadratureMethod::split && q.split_radius < q.R_max;
  std::shared_ptr<const LatticeTables> pair_tables = tables;
  if (split) pair_tables = lattice_tables(q.split_radius / h);
  const Padded padded = make_padded(f, static_cast<int>(std::floor(pair_tables->radius + 1e-9)));

  const int workers = worker_count();
  const std::size_t chunks = static_cast<std::size_t>(std::min(N, std::max(1, workers)));
  std::vector<LocalTerms> row_max(N);
  parallel_for(chunks, [&](std::size_t cb, std::size_t ce) {
    for (std::size_t c = cb; c < ce; ++c) {
      const int rb = static_cast<int>(N * c / chunks);
      const int re = static_cast<int>(N * (c + 1) / chunks);
      if (split) accumulate_pairs<true>(padded, f, g, pair_tables->half, h, rb, re, acc);
      else accumulate_pairs<false>(padded, f, g, pair_tables->half, h, rb, re, acc);
    }
  }, workers);

  std::vector<double> linear;
  if (split) {
    linear.assign(f.geometry.size(), 0.0);
    linear_convolution(f, radius)->apply(f, linear.data());
  }

  parallel_for(N, [&](std::size_t b, std::size_t e) {
    for (int i = static_cast<int>(b); i < static_cast<int>(e); ++i) {
      LocalTerms mx;
      for (int j = 0; j < N; ++j) {
        const std::size_t k = static_cast<std::size_t>(i) * N + j;
        const LocalTerms t = local_terms(f, i, j, *tables, q, far_value, {g.d1[k], g.d2[k]}, estimate_errors);
        double v = h * h * acc[k] + t.near + t.tail;
        if (split) v += linear[k];
        v *= kRhsNormalization;
        if (epsilon > 0.0) v += epsilon * laplacian_at(f, i, j);
        acc[k] = v;
        mx.near = std::max(mx.near, std::abs(t.near));
        mx.tail = std::max(mx.tail, std::abs(t.tail));
        mx.near_error = std::max(mx.near_error, t.near_error);
        mx.tail_error = std::max(mx.tail_error, t.tail_error);
      }
      row_max[i] = mx;
    }
  });
  for (const auto& r : row_max) {
    out.diagnostics.near_sup = std::max(out.diagnostics.near_sup, kRhsNormalization * r.near);
    out.diagnostics.tail_sup = std::max(out.diagnostics.tail_sup, kRhsNormalization * r.tail);
    out.diagnostics.near_error_sup = std::max(out.diagnostics.near_error_sup, kRhsNormalization * r.near_error);
    out.diagnostics.tail_error_sup = std::max(out.diagnostics.tail_error_sup, kRhsNormalization * r.tail_error);
  }
  if (split) {
    double slope = 0.0;
    for (std::size_t k = 0; k < g.d1.size(); ++k) slope = std::max(slope, std::hypot(g.d1[k], g.d2[k]));
    const auto [lo, hi] = std::minmax_element(f.values.begin(), f.values.end());
    out.diagnostics.split_error_bound = kRhsNormalization * split_remainder_bound(slope, *hi - *lo, q.split_radius);
  }
  return out;
}

double kernel_K(const GridView& f, int i1, int i2, int a, int b) {
  if (a == 0 && b == 0) throw std::invalid_argument("kernel_K: zero offset");
  const double h = f.h();
  const auto g = gradient_at(f, i1, i2);
  const double delta = f.extended(i1 + a, i2 + b) - f.extended(i1, i2);
  const double gh = g[0] * h * a + g[1] * h * b;
  const double s = delta * delta + h * h * (static_cast<double>(a) * a + static_cast<double>(b) * b);
  return (1.0 - 3.0 * delta * (delta - gh) / s) / (s * std::sqrt(s));
}

std::array<double, 2> drift_at(const GridView& f, int i1, int i2, const QuadratureConfig& q) {
  q.validate(f.geometry);
  check_node(f, i1, i2);
  const double h = f.h();
  const auto tables = lattice_tables(lattice_radius(q, h));
  const double F = f(i1, i2);
  std::array<double, 2> acc{0.0, 0.0};
  for (const Offset& o : tables->half) {
    const double ha = h * o.a;
    const double hb = h * o.b;
    const double r2 = ha * ha + hb * hb;
    const double dp = f.extended(i1 + o.a, i2 + o.b) - F;
    const double dm = f.extended(i1 - o.a, i2 - o.b) - F;
    const double diff = inverse_three_halves(dp * dp + r2) - inverse_three_halves(dm * dm + r2);
    acc[0] -= ha * diff;
    acc[1] -= hb * diff;
  }
  std::array<double, 2> out{h * h * acc[0], h * h * acc[1]};
  if (q.near_cell == NearCellPolicy::quadratic_model) {
    const auto near = drift_near_sum(*tables, gradient_at(f, i1, i2), hessian_at(f, i1, i2));
    out[0] += h * near[0];
    out[1] += h * near[1];
  }
  return {kRhsNormalization * out[0], kRhsNormalization * out[1]};
}

}  // namespace muskat
