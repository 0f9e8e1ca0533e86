#include <doctest.h>

#include <algorithm>
#include <cmath>

#include "gffil/graph.hpp"
#include "gffil/potential.hpp"
#include "gffil/rng.hpp"

using namespace gffil;

TEST_CASE("lattice window counts and weights") {
  const auto g = build_lattice(3, 1);
  CHECK(g.vertex_count() == 27);
  CHECK(g.edge_count() == 54);
  const Vertex c = g.find_vertex({0, 0, 0});
  CHECK(g.vertex_weights[c] == doctest::Approx(6.0));
  CHECK(!g.on_frontier(c));

  const auto g5 = build_lattice(3, 5);
  CHECK(g5.vertex_count() == 11 * 11 * 11);

  const auto g4 = build_lattice(4, 2);
  const Vertex c4 = g4.find_vertex({0, 0, 0, 0});
  CHECK(g4.vertex_weights[c4] == doctest::Approx(8.0));

  CHECK_THROWS_AS(build_lattice(2, 3), std::invalid_argument);
}

TEST_CASE("gasket factor and product counts") {
  std::vector<int> coords;
  std::vector<std::array<Vertex, 2>> edges;
  build_gasket_factor(1, coords, edges);
  CHECK(coords.size() / 2 == 6);
  CHECK(edges.size() == 9);
  build_gasket_factor(3, coords, edges);
  CHECK(coords.size() / 2 == 3 * (27 + 1) / 2);  // 3 (3^n + 1) / 2
  CHECK(edges.size() == 81);                     // 3^(n+1)

  const auto gp = build_gasket_product(1, 1);
  CHECK(gp.vertex_count() == 18);

  // interior product vertex degree = gasket degree + 2
  const auto gp2 = build_gasket_product(2, 3);
  bool checked = false;
  for (Vertex v = 0; v < gp2.vertex_count(); ++v) {
    if (gp2.on_frontier(v)) continue;
    const std::uint32_t gi = gp2.vertex_gasket_index[v];
    CHECK(gp2.degree(v) == gp2.gasket_adj[gi].size() + 2);
    checked = true;
  }
  CHECK(checked);
}

TEST_CASE("carpet cell counts") {
  CHECK(build_carpet(3, 1).vertex_count() == 26);
  CHECK(build_carpet(3, 2).vertex_count() == 676);
  CHECK(build_carpet(4, 1).vertex_count() == 80);
  CHECK_THROWS_AS(build_carpet(2, 1), std::invalid_argument);
}

TEST_CASE("metric distances") {
  const auto z = build_lattice(3, 4);
  const auto mz = MetricSpec::for_family(z);
  const Vertex a = z.find_vertex({0, 0, 0});
  CHECK(metric_distance(z, mz, a, a) == 0.0);
  CHECK(metric_distance(z, mz, a, z.find_vertex({1, 1, 0})) == 2.0);

  const auto gp = build_gasket_product(2, 5);
  const auto mp = MetricSpec::for_family(gp);
  const Vertex x = gp.find_vertex({1, 1, 0});
  const Vertex y = gp.find_vertex({1, 1, 4});
  const double expected = std::pow(4.0, 2.0 * std::log(2.0) / std::log(5.0));
  CHECK(metric_distance(gp, mp, x, y) == doctest::Approx(expected).epsilon(1e-12));
  // product exponents
  CHECK(mp.alpha == doctest::Approx(std::log(45.0) / (2.0 * std::log(2.0))));

  // symmetry and zero only on the diagonal
  for (const auto* g : {&z, &gp}) {
    const auto m = MetricSpec::for_family(*g);
    Rng rng(3, StreamId::Generic);
    for (int t = 0; t < 200; ++t) {
      const Vertex p = static_cast<Vertex>(rng.below(g->vertex_count()));
      const Vertex q = static_cast<Vertex>(rng.below(g->vertex_count()));
      const double d1 = metric_distance(*g, m, p, q);
      CHECK(d1 == metric_distance(*g, m, q, p));
      CHECK((d1 == 0.0) == (p == q));
    }
  }
}

TEST_CASE("balls") {
  const auto z = build_lattice(3, 4);
  const auto m = MetricSpec::for_family(z);
  const Vertex c = z.find_vertex({0, 0, 0});
  CHECK(ball(z, m, c, 0.0).members == std::vector<Vertex>{c});
  CHECK(ball(z, m, c, 1.0).members.size() == 7);
  CHECK(!ball(z, m, c, 3.0).window_clipped);
  CHECK(ball(z, m, c, 4.0).window_clipped);
}

TEST_CASE("approximate lattice cover and packing") {
  const auto z = build_lattice(3, 5);
  const auto m = MetricSpec::for_family(z);
  for (double L : {1.0, 2.0, 3.5}) {
    const auto lat = approximate_lattice(z, m, L);
    const auto lat2 = approximate_lattice(z, m, L);
    CHECK(lat == lat2);  // deterministic
    for (std::size_t i = 0; i < lat.size(); ++i)
      for (std::size_t j = i + 1; j < lat.size(); ++j)
        CHECK(metric_distance(z, m, lat[i], lat[j]) > L);
    for (Vertex v = 0; v < z.vertex_count(); ++v) {
      double best = 1e300;
      for (Vertex y : lat) best = std::min(best, metric_distance(z, m, v, y));
      CHECK(best <= L);
    }
  }
  // packing count stays below a fitted multiple of N^alpha
  const auto lat = approximate_lattice(z, m, 2.0);
  const Vertex c = z.find_vertex({0, 0, 0});
  for (double n : {1.0, 2.0}) {
    std::size_t cnt = 0;
    for (Vertex y : lat)
      if (metric_distance(z, m, c, y) <= 2.0 * n) ++cnt;
    CHECK(static_cast<double>(cnt) <= 16.0 * std::pow(n, m.alpha));
  }
}

TEST_CASE("external boundary") {
  const auto z = build_lattice(3, 4);
  const Vertex c = z.find_vertex({0, 0, 0});
  CHECK(external_boundary(z, {}).members.empty());

  const auto one = external_boundary(z, {c});
  CHECK(one.members.size() == 6);
  CHECK(!one.window_clipped);

  const auto seg = external_boundary(
      z, {z.find_vertex({0, 0, 0}), z.find_vertex({1, 0, 0})});
  CHECK(seg.members.size() == 10);

  std::vector<Vertex> a{z.find_vertex({0, 0, 0}), z.find_vertex({0, 1, 0}),
                        z.find_vertex({0, 0, 1})};
  const auto b = external_boundary(z, a);
  for (Vertex v : b.members) {
    CHECK(std::find(a.begin(), a.end(), v) == a.end());
    bool adjacent = false;
    for (std::uint32_t k = z.offsets[v]; k < z.offsets[v + 1]; ++k)
      if (std::find(a.begin(), a.end(), z.adj[k]) != a.end()) adjacent = true;
    CHECK(adjacent);
  }
}

TEST_CASE("controlled weights per family") {
  CHECK(build_lattice(3, 2).min_transition_probability() ==
        doctest::Approx(1.0 / 6.0));
  CHECK(build_carpet(3, 1).min_transition_probability() >=
        doctest::Approx(1.0 / 6.0));
  const auto gp = build_gasket_product(2, 2);
  CHECK(gp.min_transition_probability() >= doctest::Approx(1.0 / 6.0));
}

TEST_CASE("subdivision") {
  const auto z = build_lattice(3, 2);

  const auto s1 = subdivide(z, 1);
  CHECK(s1.graph.vertex_count() == z.vertex_count());
  CHECK(s1.graph.edge_count() == z.edge_count());

  const auto s2 = subdivide(z, 2);
  CHECK(s2.graph.vertex_count() == z.vertex_count() + z.edge_count());
  const Vertex mid = s2.midpoint(0);
  CHECK(s2.graph.vertex_weights[mid] == doctest::Approx(4.0));
  const Vertex c = z.find_vertex({0, 0, 0});
  CHECK(s2.graph.vertex_weights[c] == doctest::Approx(2.0 * z.vertex_weights[c]));

  // killed Green restriction identity on a lattice block
  const auto m = MetricSpec::for_family(z);
  const auto a = ball(z, m, c, 1.0).members;
  const auto g_base = killed_green(z, a);
  const auto s3 = subdivide(z, 3);
  std::vector<Vertex> dom = killed_mesh_domain(s3, a);
  const auto g_mesh = killed_green(s3.graph, dom);
  for (Vertex x : a)
    for (Vertex y : a)
      CHECK(g_mesh.entry(x, y) == doctest::Approx(g_base.entry(x, y)).epsilon(1e-10));
}

TEST_CASE("volume growth fit runs on interior windows") {
  const auto z = build_lattice(3, 17);
  const auto m = MetricSpec::for_family(z);
  const auto fit = verify_volume_growth(z, m, m.alpha);
  CHECK(fit.radii.size() >= 4);
  CHECK(fit.slope > 2.5);
  CHECK(fit.slope < 3.1);
  CHECK(fit.c_low > 0.0);
  CHECK(fit.c_low <= fit.c_high);

  const auto tiny = build_lattice(3, 3);
  CHECK_THROWS(verify_volume_growth(tiny, m, m.alpha));
}

TEST_CASE("graph json config") {
  const auto g = build_from_json(R"({"family":"zd","dim":3,"radius":1})");
  CHECK(g.vertex_count() == 27);
  CHECK_THROWS_AS(build_from_json(R"({"family":"unknown"})"),
                  std::invalid_argument);
}
