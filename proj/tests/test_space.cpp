#include <catch2/catch_amalgamated.hpp>

#include <cstring>
#include <map>
#include <random>
#include <sstream>

#include "fbz/diagnostics.hpp"
#include "fbz/energy.hpp"
#include "fbz/fractal.hpp"
#include "fbz/io.hpp"
#include "fbz/space.hpp"

using namespace fbz;

namespace {

// independent linear-scan ball oracle
std::vector<int> ball_oracle(const DiscreteSpace& s, int c, double r) {
  std::vector<int> out;
  for (int j = 0; j < s.size(); ++j)
    if (s.dist(c, j) < r) out.push_back(j);
  return out;
}

int vertex_at(const DiscreteSpace& s, double x, double y = 0.0) {
  for (int i = 0; i < s.size(); ++i) {
    double dx = s.coord(i)[0] - x, dy = s.coord(i)[1] - y;
    if (std::abs(dx) < 1e-12 && std::abs(dy) < 1e-12) return i;
  }
  FAIL("vertex not found");
  return -1;
}

}  // namespace

TEST_CASE("interval level 10 has 1025 points of total mass 1") {
  auto f = build_fractal(FractalKind::interval, 10);
  CHECK(f.space.size() == 1025);
  CHECK(f.space.total_mass() == Catch::Approx(1.0).epsilon(1e-12));
  CHECK(f.cells.size() == 1024);
}

TEST_CASE("gasket vertex count follows 3(3^n+1)/2") {
  long expect = 3;
  for (int n = 0; n <= 5; ++n) {
    auto f = build_fractal(FractalKind::gasket, n);
    long formula = 3 * ((long)std::llround(std::pow(3.0, n)) + 1) / 2;
    CHECK(f.space.size() == formula);
    CHECK(f.space.size() == expect);
    expect = 3 * expect - 3;
    CHECK(f.space.total_mass() == Catch::Approx(1.0).epsilon(1e-12));
  }
}

TEST_CASE("vicsek level 1: 5 cells, Euclidean diameter sqrt(2)") {
  auto f = build_fractal(FractalKind::vicsek, 1);
  CHECK(f.cells.size() == 5);
  CHECK(f.space.size() == 16);
  double d = 0.0;
  for (int i = 0; i < f.space.size(); ++i)
    for (int j = 0; j < f.space.size(); ++j) d = std::max(d, f.space.dist(i, j));
  CHECK(d == Catch::Approx(std::sqrt(2.0)).epsilon(1e-12));
  CHECK(f.space.diameter() == Catch::Approx(std::sqrt(2.0)).epsilon(1e-12));
}

TEST_CASE("carpet and square counts") {
  auto c = build_fractal(FractalKind::carpet, 2);
  CHECK(c.cells.size() == 64);
  auto q = build_fractal(FractalKind::square, 3);
  CHECK(q.space.size() == 81);
  CHECK(q.cells.size() == 64);
}

TEST_CASE("point cap produces a sizing error naming the count") {
  try {
    build_fractal(FractalKind::square, 10, MetricMode::euclidean, 1000);
    FAIL("expected length_error");
  } catch (const std::length_error& e) {
    CHECK(std::string(e.what()).find("cap 1000") != std::string::npos);
  }
}

TEST_CASE("ball matches linear-scan oracle and is strict") {
  auto f = build_fractal(FractalKind::interval, 4);
  auto& s = f.space;
  int c = vertex_at(s, 0.5);

  auto b = s.ball(c, 0.13);
  auto expect = ball_oracle(s, c, 0.13);
  CHECK(b == expect);
  std::vector<double> xs;
  for (int v : b) xs.push_back(s.coord(v)[0]);
  std::sort(xs.begin(), xs.end());
  CHECK(xs == std::vector<double>({0.375, 0.4375, 0.5, 0.5625, 0.625}));

  // strictness: r equal to an exact lattice distance excludes the shell
  auto b2 = s.ball(c, 0.125);
  for (int v : b2) CHECK(s.dist(c, v) < 0.125);
  CHECK(b2.size() == 3);

  // r beyond diameter returns everything; r below min spacing only the centre
  CHECK((int)s.ball(c, 2.0).size() == s.size());
  CHECK(s.ball(c, 0.5 * s.min_spacing()) == std::vector<int>({c}));

  // randomized cross-check on the gasket
  auto g = build_fractal(FractalKind::gasket, 4);
  std::mt19937_64 rng(7);
  std::uniform_int_distribution<int> pick(0, g.space.size() - 1);
  std::uniform_real_distribution<double> rad(0.0, 1.2);
  for (int it = 0; it < 50; ++it) {
    int x = pick(rng);
    double r = rad(rng);
    CHECK(g.space.ball(x, r) == ball_oracle(g.space, x, r));
  }
}

TEST_CASE("net: greedy maximal separated set with brute-force certificate") {
  auto f = build_fractal(FractalKind::interval, 10);
  auto& s = f.space;

  auto net = s.net(0.25);
  std::vector<double> xs;
  for (int v : net) xs.push_back(s.coord(v)[0]);
  CHECK(xs == std::vector<double>({0.0, 0.25, 0.5, 0.75, 1.0}));

  auto check_net = [](const DiscreteSpace& sp, const std::vector<int>& sel, double delta) {
    std::vector<char> in(sp.size(), 0);
    for (int v : sel) in[v] = 1;
    for (std::size_t a = 0; a < sel.size(); ++a)
      for (std::size_t b = a + 1; b < sel.size(); ++b)
        REQUIRE(sp.dist(sel[a], sel[b]) >= delta);
    for (int v = 0; v < sp.size(); ++v) {
      if (in[v]) continue;
      bool blocked = false;
      for (int w : sel)
        if (sp.dist(v, w) < delta) { blocked = true; break; }
      REQUIRE(blocked);  // maximality
    }
  };
  check_net(s, net, 0.25);

  auto g = build_fractal(FractalKind::gasket, 4);
  for (double delta : {0.3, 0.11, 0.05}) check_net(g.space, g.space.net(delta), delta);

  // delta > diam -> singleton {first point}; delta <= min spacing -> all points
  CHECK(s.net(5.0) == std::vector<int>({0}));
  CHECK((int)s.net(0.5 * s.min_spacing()).size() == s.size());
}

TEST_CASE("triangle inequality on sampled triples") {
  for (auto kind : {FractalKind::gasket, FractalKind::vicsek, FractalKind::carpet}) {
    auto f = build_fractal(kind, 3);
    auto& s = f.space;
    std::mt19937_64 rng(11);
    std::uniform_int_distribution<int> pick(0, s.size() - 1);
    double slack = 1e-12 * s.diameter();
    for (int it = 0; it < 300; ++it) {
      int x = pick(rng), y = pick(rng), z = pick(rng);
      REQUIRE(s.dist(x, z) <= s.dist(x, y) + s.dist(y, z) + slack);
      REQUIRE(s.dist(x, y) == s.dist(y, x));
    }
    REQUIRE(s.dist(0, 0) == 0.0);
  }
}

TEST_CASE("levels refine: vertices nest bit-exactly and cell masses refine") {
  for (auto kind : {FractalKind::interval, FractalKind::square, FractalKind::vicsek,
                    FractalKind::gasket, FractalKind::carpet}) {
    auto f0 = build_fractal(kind, 2);
    auto f1 = build_fractal(kind, 3);
    std::map<std::pair<double, double>, int> fine;
    for (int v = 0; v < f1.space.size(); ++v)
      fine[{f1.space.coord(v)[0], f1.space.coord(v)[1]}] = v;
    for (int v = 0; v < f0.space.size(); ++v) {
      auto key = std::make_pair(f0.space.coord(v)[0], f0.space.coord(v)[1]);
      REQUIRE(fine.count(key) == 1);  // exact coordinate match
    }
    // parent cell mass = sum of child cell masses (M children of mass M^-(k+1))
    double parent = std::pow((double)f0.maps, -f0.level);
    double child = std::pow((double)f1.maps, -f1.level);
    CHECK(parent == Catch::Approx(child * f0.maps).epsilon(1e-12));
    CHECK(f1.cells.size() == f0.cells.size() * f0.maps);
  }
}

TEST_CASE("geodesic metric: interval matches euclidean, gasket is comparable") {
  auto f = build_fractal(FractalKind::interval, 6, MetricMode::geodesic_graph);
  auto e = build_fractal(FractalKind::interval, 6);
  for (int i = 0; i < f.space.size(); i += 7)
    CHECK(f.space.dist(0, i) == Catch::Approx(e.space.dist(0, i)).margin(1e-12));

  auto g = build_fractal(FractalKind::gasket, 4, MetricMode::geodesic_graph);
  auto ge = build_fractal(FractalKind::gasket, 4);
  for (int i = 0; i < g.space.size(); i += 17) {
    double dg = g.space.dist(0, i), de = ge.space.dist(0, i);
    CHECK(dg >= de - 1e-12);
    if (de > 0) CHECK(dg / de <= 2.5);  // bi-Lipschitz within a modest constant
  }
  auto b = g.space.ball(0, 0.3);
  for (int v : b) CHECK(g.space.dist(0, v) < 0.3);
}

TEST_CASE("diagnostics: dimensions, doubling, uniform perfectness") {
  SECTION("square level 8 fits Q near 2") {
    auto f = build_fractal(FractalKind::square, 8);
    auto d = diagnostics(f, 256, 42);
    CHECK(d.ahlfors.Q > 1.9);
    CHECK(d.ahlfors.Q < 2.1);
    CHECK(d.doubling_const >= 1.0);
    CHECK(d.ahlfors.C_AR >= 1.0);
  }
  SECTION("vicsek level 5 fits Q near log5/log3") {
    auto f = build_fractal(FractalKind::vicsek, 5);
    auto d = diagnostics(f, 256, 42);
    double q = std::log(5.0) / std::log(3.0);
    CHECK(std::abs(d.ahlfors.Q - q) < 0.1);
  }
  SECTION("interval uniform perfectness at least 1/2") {
    auto f = build_fractal(FractalKind::interval, 8);
    auto d = diagnostics(f, 256, 1);
    CHECK(d.uniform_perfect_sigma >= 0.5);
    CHECK(d.uniform_perfect_sigma <= 1.0);
    CHECK(d.chain_const >= 1.0 - 1e-9);
    CHECK(d.chain_const < 4.0);
  }
  SECTION("deterministic: same seed, identical bits") {
    auto f = build_fractal(FractalKind::gasket, 4);
    auto a = diagnostics(f, 64, 99);
    auto b = diagnostics(f, 64, 99);
    auto bits_equal = [](double x, double y) {
      return std::memcmp(&x, &y, sizeof(double)) == 0;
    };
    CHECK(bits_equal(a.doubling_const, b.doubling_const));
    CHECK(bits_equal(a.ahlfors.Q, b.ahlfors.Q));
    CHECK(bits_equal(a.ahlfors.C_AR, b.ahlfors.C_AR));
    CHECK(bits_equal(a.ahlfors.residual, b.ahlfors.residual));
    CHECK(bits_equal(a.rvd_Q, b.rvd_Q));
    CHECK(bits_equal(a.rvd_c1, b.rvd_c1));
    CHECK(bits_equal(a.chain_const, b.chain_const));
    CHECK(bits_equal(a.uniform_perfect_sigma, b.uniform_perfect_sigma));
  }
  SECTION("degenerate space rejected") {
    auto s = DiscreteSpace::make({{0.0, 0.0, 0.0}}, 1, {1.0});
    CHECK_THROWS_AS(diagnostics(s, {}, 64, 0), std::invalid_argument);
  }
}

TEST_CASE("space serialization round-trips bit-exactly") {
  auto f = build_fractal(FractalKind::gasket, 3);
  std::stringstream ss;
  save_space(f.space, ss);
  auto s2 = load_space(ss);
  REQUIRE(s2.size() == f.space.size());
  REQUIRE(s2.dim() == f.space.dim());
  REQUIRE(s2.metric_mode() == f.space.metric_mode());
  for (int i = 0; i < s2.size(); ++i) {
    for (int k = 0; k < s2.dim(); ++k) {
      REQUIRE(std::memcmp(&s2.coord(i)[k], &f.space.coord(i)[k], sizeof(double)) == 0);
    }
    REQUIRE(std::memcmp(&s2.weights()[i], &f.space.weights()[i], sizeof(double)) == 0);
  }

  // geodesic spaces carry their graph through the file
  auto g = build_fractal(FractalKind::interval, 4, MetricMode::geodesic_graph);
  std::stringstream gs;
  save_space(g.space, gs);
  auto g2 = load_space(gs);
  REQUIRE(g2.metric_mode() == MetricMode::geodesic_graph);
  CHECK(g2.dist(0, g2.size() - 1) == Catch::Approx(1.0).epsilon(1e-12));
}

TEST_CASE("precomputed metric spaces") {
  std::vector<DiscreteSpace::Point> pts = {{0, 0, 0}, {1, 0, 0}};
  auto s = DiscreteSpace::make(pts, 1, {0.5, 0.5}, MetricMode::precomputed);
  s.set_precomputed({0.0, 1.0, 1.0, 0.0});
  CHECK(s.dist(0, 1) == 1.0);
  CHECK(s.ball(0, 2.0).size() == 2);
  CHECK(s.ball(0, 1.0).size() == 1);  // strict
  std::stringstream ss;
  save_space(s, ss);
  auto s2 = load_space(ss);
  CHECK(s2.dist(0, 1) == 1.0);
}

TEST_CASE("form serialization round-trips bit-exactly") {
  auto f = build_fractal(FractalKind::gasket, 3);
  auto form = build_form(f, 2.5, WeightMode::renormalized, 0.55);
  std::stringstream ss;
  save_form(form, ss);
  std::string header;
  {
    std::stringstream probe(ss.str());
    std::getline(probe, header);
  }
  CHECK(header.rfind("fbz-form v1 p=2.5 E=", 0) == 0);
  auto f2 = load_form(ss);
  REQUIRE(f2.vertex_count() == form.vertex_count());
  REQUIRE(f2.edges().size() == form.edges().size());
  REQUIRE(f2.p() == form.p());
  for (std::size_t k = 0; k < f2.edges().size(); ++k) {
    CHECK(f2.edges()[k].i == form.edges()[k].i);
    CHECK(f2.edges()[k].j == form.edges()[k].j);
    CHECK(std::memcmp(&f2.edges()[k].w, &form.edges()[k].w, sizeof(double)) == 0);
  }
  std::vector<double> u(form.vertex_count());
  for (int v = 0; v < form.vertex_count(); ++v) u[v] = std::sin(v * 0.37);
  CHECK(f2.energy(u) == form.energy(u));
}
