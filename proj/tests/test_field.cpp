#include <doctest.h>

#include <cmath>
#include <numbers>
#include <random>
#include <sstream>

#include "muskat/field.hpp"
#include "muskat/snapshot.hpp"

using namespace muskat;

namespace {

GridGeometry periodic_grid(int n) { return {n, std::numbers::pi, BoundaryPolicy::periodic}; }

// Samples g(x1, x2) on every node of the geometry.
template <class F>
std::vector<double> sample(const GridGeometry& g, F&& fn) {
  std::vector<double> v(g.size());
  for (int i = 0; i < g.nodes; ++i)
    for (int j = 0; j < g.nodes; ++j) v[static_cast<std::size_t>(i) * g.nodes + j] = fn(g.coord(i), g.coord(j));
  return v;
}

}  // namespace

TEST_CASE("grid field rejects bad input") {
  const GridGeometry g{16, 1.0, BoundaryPolicy::compact_support};
  CHECK_THROWS_AS(GridField(g, std::vector<double>(10)), std::invalid_argument);
  std::vector<double> v(g.size(), 0.0);
  v[5] = 1.0;  // first row is a ring node
  CHECK_THROWS_AS(GridField(g, v), std::invalid_argument);
  v[5] = 0.0;
  v[8 * 16 + 8] = std::nan("");
  CHECK_THROWS_AS(GridField(g, v), std::invalid_argument);
  v[8 * 16 + 8] = 1.0;
  CHECK_NOTHROW(GridField(g, v));
  CHECK_THROWS(GridGeometry{0, 1.0}.validate());
}

TEST_CASE("zero cosine gives the zero field") {
  InitialDataSpec s;
  s.kind = CosineData{0.0, {3.0, 1.0}};
  const GridField f = build_initial(s, periodic_grid(32));
  CHECK(max_abs(f.values()) == 0.0);
}

TEST_CASE("small cosine has slope a|k|") {
  InitialDataSpec s;
  s.kind = CosineData{1e-3, {1.0, 0.0}};
  const GridField f = build_initial(s, periodic_grid(256));
  CHECK(std::abs(slope_sup(f.view(), StencilOrder::fourth) - 1e-3) <= 1e-6);
  CHECK(std::abs(slope_sup(f.view()) - 1e-3) <= 1e-6);
}

TEST_CASE("ridge cutoff stays below its increment bound") {
  InitialDataSpec s;
  s.kind = RidgeData{0.4, 1.0};
  s.target_slope = 0.44;
  s.cutoff_M = 2.8;
  s.mollifier_width = 0.4;
  const GridField f = build_initial(s, {64, 6.4, BoundaryPolicy::compact_support});
  CHECK(slope_sup(f.view()) < kSlopeThreshold);
  const std::vector<double> radii{0.2, 0.4, 0.8, 1.6, 3.2};
  const auto env = increment_envelope(f.view(), radii);
  for (std::size_t k = 0; k < radii.size(); ++k) {
    CAPTURE(radii[k]);
    CHECK(env[k] <= cutoff_envelope(s, radii[k]) + 1e-12);
  }
}

TEST_CASE("domain precondition and slope threshold") {
  InitialDataSpec s;
  s.kind = BumpData{0.2, 1.0};
  s.cutoff_M = 2.8;
  s.mollifier_width = 0.4;
  CHECK_THROWS_AS(build_initial(s, {32, 3.0, BoundaryPolicy::compact_support}), DomainTooSmall);
  s.kind = BumpData{2.0, 1.0};
  CHECK_THROWS_AS(build_initial(s, {64, 6.4, BoundaryPolicy::compact_support}), SlopeExceedsThreshold);
}

TEST_CASE("gradient stencils") {
  const GridGeometry g{32, 2.0, BoundaryPolicy::compact_support};
  SUBCASE("constant data") {
    const auto v = sample(g, [](double, double) { return 2.5; });
    const GridView f{g, v};
    const auto d = gradient(f);
    CHECK(max_abs(d.d1) == 0.0);
    CHECK(max_abs(d.d2) == 0.0);
  }
  SUBCASE("affine data is exact at every node") {
    const auto v = sample(g, [](double x, double y) { return 0.3 * x - 0.7 * y + 1.0; });
    const GridView f{g, v};
    for (int i = 0; i < g.nodes; i += 5)
      for (int j = 0; j < g.nodes; j += 3)
        for (auto order : {StencilOrder::second, StencilOrder::fourth}) {
          const auto d = gradient_at(f, i, j, order);
          CHECK(d[0] == doctest::Approx(0.3).epsilon(1e-12));
          CHECK(d[1] == doctest::Approx(-0.7).epsilon(1e-12));
        }
  }
  SUBCASE("cosine error is second order") {
    double prev = 0.0;
    for (int n : {32, 64, 128}) {
      const GridGeometry p = periodic_grid(n);
      const auto v = sample(p, [](double x, double) { return std::cos(x); });
      const GridView f{p, v};
      double err = 0.0;
      for (int i = 0; i < n; ++i) err = std::max(err, std::abs(gradient_at(f, i, 0)[0] + std::sin(p.coord(i))));
      const double h = p.spacing();
      CHECK(err <= h * h / 6.0 * 1.0001);
      if (prev > 0.0) CHECK(std::log2(prev / err) == doctest::Approx(2.0).epsilon(0.02));
      prev = err;
    }
  }
}

TEST_CASE("hessian stencils") {
  const GridGeometry g{32, 2.0, BoundaryPolicy::compact_support};
  const auto affine = sample(g, [](double x, double y) { return 0.3 * x - 0.7 * y; });
  for (int i = 2; i < 30; i += 3)
    for (int j = 2; j < 30; j += 5) CHECK(hessian_at(GridView{g, affine}, i, j).spectral_radius() <= 1e-12);
  const auto quad = sample(g, [](double x, double y) { return 0.5 * (x * x + y * y); });
  CHECK(hessian_at(GridView{g, quad}, 16, 16).spectral_radius() == doctest::Approx(1.0).epsilon(1e-12));
  CHECK(laplacian_at(GridView{g, quad}, 10, 20) == doctest::Approx(2.0).epsilon(1e-12));
  const GridGeometry p = periodic_grid(128);
  const auto c = sample(p, [](double x, double) { return std::cos(x); });
  CHECK(std::abs(hessian_sup(GridView{p, c}) - 1.0) <= p.spacing() * p.spacing());
}

TEST_CASE("increment envelope") {
  const std::vector<double> radii{0.25, 0.5, 1.0};
  SUBCASE("zero field") {
    const GridField f = GridField::zeros({16, 1.0});
    for (double e : increment_envelope(f.view(), radii)) CHECK(e == 0.0);
  }
  SUBCASE("linear data on the full window") {
    const GridGeometry g{16, 1.0, BoundaryPolicy::compact_support};
    const auto v = sample(g, [](double x, double) { return 0.3 * x; });
    const auto env = increment_envelope(GridView{g, v}, radii);
    for (std::size_t k = 0; k < radii.size(); ++k) CHECK(env[k] == doctest::Approx(0.3 * radii[k]).epsilon(1e-12));
  }
  SUBCASE("bump saturates at its height") {
    InitialDataSpec s;
    s.kind = BumpData{0.1, 0.8};
    s.cutoff_M = 1.0;
    const GridField f = build_initial(s, {32, 3.2, BoundaryPolicy::compact_support});
    const double H = *std::max_element(f.values().begin(), f.values().end());
    const std::vector<double> wide{2.0};
    CHECK(increment_envelope(f.view(), wide)[0] == doctest::Approx(H).epsilon(1e-12));
  }
  SUBCASE("radius beyond the window throws") {
    const GridField f = GridField::zeros({16, 1.0});
    const std::vector<double> big{1.5};
    CHECK_THROWS_AS(increment_envelope(f.view(), big), std::invalid_argument);
  }
}

TEST_CASE("property: envelope is nondecreasing and subadditive on random fields") {
  std::mt19937_64 rng(11);
  std::normal_distribution<double> noise(0.0, 1.0);
  const GridGeometry g{24, 2.4, BoundaryPolicy::periodic};
  const std::vector<double> radii{0.2, 0.4, 0.6, 0.8, 1.2};
  for (int trial = 0; trial < 5; ++trial) {
    std::vector<double> v(g.size());
    for (double& x : v) x = noise(rng);
    const auto env = increment_envelope(GridView{g, v}, radii);
    for (std::size_t k = 1; k < env.size(); ++k) CHECK(env[k] >= env[k - 1]);
    CHECK(env[4] <= env[3] + env[1] + 1e-12);  // 1.2 = 0.8 + 0.4
  }
}

TEST_CASE("growth envelopes") {
  const auto p = GrowthEnvelope::power_law(2.0, 0.5);
  CHECK(p(4.0) == doctest::Approx(4.0));
  CHECK(p.tail_integral() == doctest::Approx(4.0));  // 2 / (1 - 1/2)
  const std::vector<double> r{0.5, 1.0, 2.0, 4.0};
  const std::vector<double> w{0.4, 0.5, 1.2, 1.3};
  const auto m = GrowthEnvelope::concave_majorant(r, w);
  for (std::size_t k = 0; k < r.size(); ++k) CHECK(m(r[k]) >= w[k] - 1e-15);
  // Concavity on a fine sample.
  for (double x = 0.1; x < 6.0; x += 0.1) CHECK(m(x) >= 0.5 * (m(x - 0.05) + m(x + 0.05)) - 1e-12);
}

TEST_CASE("cutoff profile") {
  CHECK(cutoff(0.0) == 1.0);
  CHECK(cutoff(0.5) == 1.0);
  CHECK(cutoff(1.0) == 0.0);
  for (double r = 0.5; r < 1.0; r += 0.05) CHECK(cutoff(r + 0.05) <= cutoff(r));
  CHECK(cutoff_gradient_bound() > 2.0);
}

TEST_CASE("rough data are rescaled into the slope budget") {
  InitialDataSpec s;
  RoughData r;
  r.seed = 3;
  r.wavenumbers = {1.0, 2.0, 4.0, 8.0};
  r.amplitudes = {1.0, 0.7, 0.5, 0.35};
  s.kind = r;
  s.target_slope = 0.3;
  s.cutoff_M = 2.8;
  s.mollifier_width = 0.4;
  const GridField f = build_initial(s, {64, 6.4, BoundaryPolicy::compact_support});
  CHECK(slope_sup(f.view()) <= 0.3);
  const GridField again = build_initial(s, {64, 6.4, BoundaryPolicy::compact_support});
  CHECK(std::equal(f.values().begin(), f.values().end(), again.values().begin()));
}

TEST_CASE("snapshot round trip") {
  InitialDataSpec s;
  s.kind = CosineData{0.01, {1.0, 2.0}};
  const GridField f = build_initial(s, periodic_grid(16)).at_time(0.375);
  for (auto enc : {SnapshotEncoding::binary, SnapshotEncoding::csv}) {
    std::stringstream io;
    write_snapshot(io, f, enc);
    const GridField g = read_snapshot(io);
    CHECK(g.geometry() == f.geometry());
    CHECK(g.time() == f.time());
    CHECK(std::equal(f.values().begin(), f.values().end(), g.values().begin()));
  }
  std::stringstream io;
  write_snapshot(io, f);
  const std::string text = io.str();
  std::stringstream truncated(text.substr(0, text.size() - 9));
  CHECK_THROWS_AS(read_snapshot(truncated), std::runtime_error);
}
