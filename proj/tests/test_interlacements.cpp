#include <doctest.h>

#include <cmath>

#include "gffil/interlacements.hpp"
#include "gffil/stats.hpp"
#include "test_util.hpp"

using namespace gffil;

namespace {

InterlacementOptions loose_opts() {
  InterlacementOptions o;
  o.kill.min_sep_factor = 0.0;
  return o;
}

}  // namespace

TEST_CASE("zero intensity") {
  const auto z = build_lattice(3, 4);
  const auto m = MetricSpec::for_family(z);
  const auto k = ball(z, m, z.find_vertex({0, 0, 0}), 1.0).members;
  InterlacementSampler sampler(z, k, loose_opts());
  const auto s = sampler.sample(0.0, 1, 0);
  CHECK(s.trajectories.empty());
  for (Vertex v = 0; v < z.vertex_count(); ++v) CHECK(s.visit_counts[v] == 0);
  CHECK(vacant_set(z, s).size() == s.active.size());
}

TEST_CASE("poisson count, occupation normalization, vacancy law") {
  const auto z = build_lattice(3, 7);
  const auto m = MetricSpec::for_family(z);
  const Vertex x0 = z.find_vertex({0, 0, 0});
  const auto k = ball(z, m, x0, 1.0).members;
  InterlacementSampler sampler(z, k, loose_opts());
  const double u = 0.4;
  const std::size_t n = 4000;
  std::vector<double> counts(n), occup(n);
  std::size_t empty_hits = 0;
  for (std::size_t i = 0; i < n; ++i) {
    const auto s = sampler.sample(u, 3, i);
    counts[i] = static_cast<double>(s.trajectories.size());
    occup[i] = s.visit_counts[x0] / z.vertex_weights[x0];
    bool any = false;
    for (Vertex v : k)
      if (s.visited(v)) any = true;
    if (!any) ++empty_hits;
    // disjoint union of vacant and visited over the active window
    const auto vac = vacant_set(z, s);
    std::size_t visited = 0;
    for (Vertex v : s.active)
      if (s.visited(v)) ++visited;
    CHECK(vac.size() + visited == s.active.size());
  }
  const double cap = sampler.cap();
  const auto mc = mean_stderr(counts);
  CHECK(std::fabs(mc.mean - u * cap) < 3.0 * mc.stderr_);
  const auto mo = mean_stderr(occup);
  CHECK(std::fabs(mo.mean - u) < 3.0 * mo.stderr_);
  const auto fr = binomial_freq(empty_hits, n);
  CHECK(std::fabs(fr.mean - std::exp(-u * cap)) < 3.0 * fr.stderr_);
}

TEST_CASE("label coupling is pathwise monotone") {
  const auto z = build_lattice(3, 5);
  const auto m = MetricSpec::for_family(z);
  const auto k = ball(z, m, z.find_vertex({0, 0, 0}), 2.0).members;
  InterlacementSampler sampler(z, k, loose_opts());
  const auto s = sampler.sample(1.0, 5, 0);
  const auto lo = visit_counts_at_level(z, s, 0.3);
  const auto hi = visit_counts_at_level(z, s, 0.8);
  for (Vertex v = 0; v < z.vertex_count(); ++v) {
    CHECK(lo[v] <= hi[v]);
    CHECK(hi[v] <= s.visit_counts[v]);
  }
}

TEST_CASE("determinism across repetition and thread counts") {
  const auto z = build_lattice(3, 5);
  const auto m = MetricSpec::for_family(z);
  const auto k = ball(z, m, z.find_vertex({0, 0, 0}), 2.0).members;
  auto o1 = loose_opts();
  o1.threads = 1;
  auto o2 = loose_opts();
  o2.threads = 2;
  InterlacementSampler s1(z, k, o1), s2(z, k, o2);
  const auto a = s1.sample(0.7, 9, 4);
  const auto b = s2.sample(0.7, 9, 4);
  CHECK(a.visit_counts == b.visit_counts);
  CHECK(a.edge_traversed == b.edge_traversed);
  CHECK(a.trajectories.size() == b.trajectories.size());
  for (std::size_t i = 0; i < a.trajectories.size(); ++i)
    CHECK(a.trajectories[i].path == b.trajectories[i].path);
}

TEST_CASE("subdivision compatibility") {
  const auto z = build_lattice(3, 5);
  const auto m = MetricSpec::for_family(z);
  const Vertex x0 = z.find_vertex({0, 0, 0});
  const auto k = ball(z, m, x0, 1.0).members;
  const auto sub = subdivide(z, 2);

  InterlacementSampler base(z, k, loose_opts());
  InterlacementSampler mesh(sub.graph, k, loose_opts());
  CHECK(base.cap() == doctest::Approx(mesh.cap()).epsilon(1e-9));

  const double u = 0.5;
  const std::size_t n = 4000;
  std::size_t hit_base = 0, hit_mesh = 0;
  for (std::size_t i = 0; i < n; ++i) {
    if (base.sample(u, 11, i).visited(x0)) ++hit_base;
    if (mesh.sample(u, 12, i).visited(x0)) ++hit_mesh;
  }
  const auto fb = binomial_freq(hit_base, n);
  const auto fm = binomial_freq(hit_mesh, n);
  CHECK(std::fabs(fb.mean - fm.mean) <
        3.0 * std::sqrt(fb.stderr_ * fb.stderr_ + fm.stderr_ * fm.stderr_));
}

TEST_CASE("kill separation validation") {
  const auto z = build_lattice(3, 5);
  const auto m = MetricSpec::for_family(z);
  const auto k = ball(z, m, z.find_vertex({0, 0, 0}), 2.0).members;
  InterlacementOptions strict;
  strict.kill.min_sep_factor = 4.0;  // frontier at distance 3, diam 4
  CHECK_THROWS_AS(InterlacementSampler(z, k, strict), std::invalid_argument);
}

TEST_CASE("excursion decomposition") {
  const auto z = build_lattice(3, 6);
  const auto m = MetricSpec::for_family(z);
  const Vertex x0 = z.find_vertex({0, 0, 0});
  const auto b = ball(z, m, x0, 1.0).members;
  std::vector<Vertex> v;
  {
    const auto outer = ball(z, m, x0, 4.0).members;
    const auto inner = ball(z, m, x0, 3.0).members;
    std::vector<std::uint8_t> in(z.vertex_count(), 0);
    for (Vertex w : inner) in[w] = 1;
    for (Vertex w : outer)
      if (!in[w]) v.push_back(w);
  }

  // a walk started on the frontier dies immediately: no excursions
  Vertex on_frontier = 0;
  for (Vertex w = 0; w < z.vertex_count(); ++w)
    if (z.on_frontier(w)) {
      on_frontier = w;
      break;
    }
  CHECK(excursion_process(z, b, v, on_frontier, 1, 0).empty());

  // every excursion starts on the inner boundary of B and ends on V
  ExcursionKernel kernel(z, b, v);
  std::vector<std::uint8_t> in_v(z.vertex_count(), 0);
  for (Vertex w : v) in_v[w] = 1;
  for (std::size_t i = 0; i < 200; ++i) {
    Rng rng(13, StreamId::Generic, i);
    const Vertex start = kernel.sample_entrance(rng);
    for (const auto& e : excursion_process(z, b, v, start, 13, i)) {
      CHECK_NOTHROW(kernel.boundary_index(e.path.front()));
      CHECK(e.reached_v);
      CHECK(in_v[e.path.back()] == 1);
    }
  }
}

TEST_CASE("mean excursion count against the exact chain solve") {
  const auto z = build_lattice(3, 6);
  const auto m = MetricSpec::for_family(z);
  const Vertex x0 = z.find_vertex({0, 0, 0});
  const auto b = ball(z, m, x0, 1.0).members;
  std::vector<Vertex> v;
  {
    const auto outer = ball(z, m, x0, 4.0).members;
    const auto inner = ball(z, m, x0, 3.0).members;
    std::vector<std::uint8_t> in(z.vertex_count(), 0);
    for (Vertex w : inner) in[w] = 1;
    for (Vertex w : outer)
      if (!in[w]) v.push_back(w);
  }
  ExcursionKernel kernel(z, b, v);

  // endpoint distribution of an excursion from x: P_x(Z_{H_V} = y)
  // solved exactly, then m(y) = sum_x h(y,x) (1 + sum_y' end(x,y') m(y'))
  const auto& boundary = kernel.boundary();
  std::vector<Vertex> dom;  // interior minus V: excursions live here
  std::vector<std::uint8_t> in_v(z.vertex_count(), 0);
  for (Vertex w : v) in_v[w] = 1;
  for (Vertex w = 0; w < z.vertex_count(); ++w)
    if (!z.on_frontier(w) && !in_v[w]) dom.push_back(w);
  KilledOperator op(z, dom);
  // end[xi][yi]: solve one system per endpoint y in V
  std::vector<std::vector<double>> end(boundary.size(),
                                       std::vector<double>(v.size(), 0.0));
  for (std::size_t yi = 0; yi < v.size(); ++yi) {
    std::vector<double> rhs(dom.size(), 0.0);
    for (std::uint32_t kk = z.offsets[v[yi]]; kk < z.offsets[v[yi] + 1]; ++kk) {
      const Vertex w = z.adj[kk];
      if (op.contains(w)) rhs[op.index(w)] += z.edge_weight(z.adj_edge[kk]);
    }
    const auto col = op.solve(rhs);
    for (std::size_t xi = 0; xi < boundary.size(); ++xi)
      end[xi][yi] = col[op.index(boundary[xi])];
  }
  // normalize: from x the walk reaches V almost surely
  for (std::size_t xi = 0; xi < boundary.size(); ++xi) {
    double s = 0.0;
    for (double p : end[xi]) s += p;
    CHECK(s == doctest::Approx(1.0).epsilon(1e-8));
  }
  // m(y) = q(y) (1 + sum over next endpoints), solved by fixed-point iteration
  std::vector<double> mexp(v.size(), 0.0);
  for (int it = 0; it < 4000; ++it) {
    std::vector<double> next(v.size(), 0.0);
    for (std::size_t yi = 0; yi < v.size(); ++yi) {
      double acc = 0.0;
      for (std::size_t xi = 0; xi < boundary.size(); ++xi) {
        const double h = kernel.hit_probability(v[yi], xi);
        double cont = 1.0;
        for (std::size_t y2 = 0; y2 < v.size(); ++y2)
          cont += end[xi][y2] * mexp[y2];
        acc += h * cont;
      }
      next[yi] = acc;
    }
    mexp.swap(next);
  }
  // start the chain from the entrance law
  double expected = 0.0;
  {
    // entrance law realized by sampling: average m over many draws
    Rng rng(31, StreamId::Generic);
    const std::size_t nd = 200000;
    std::vector<std::size_t> counts(v.size(), 0);
    std::vector<std::size_t> vpos(z.vertex_count(), 0);
    for (std::size_t i = 0; i < v.size(); ++i) vpos[v[i]] = i;
    for (std::size_t i = 0; i < nd; ++i)
      ++counts[vpos[kernel.sample_entrance(rng)]];
    for (std::size_t i = 0; i < v.size(); ++i)
      expected += mexp[i] * counts[i] / static_cast<double>(nd);
  }

  const std::size_t n = 20000;
  std::vector<double> observed(n);
  for (std::size_t i = 0; i < n; ++i) {
    Rng rng(17, StreamId::Generic, i);
    const Vertex start = kernel.sample_entrance(rng);
    observed[i] = static_cast<double>(
        excursion_process(z, b, v, start, 18, i).size());
  }
  const auto mo = mean_stderr(observed);
  CHECK(std::fabs(mo.mean - expected) < 3.5 * mo.stderr_ + 1e-3);
}

TEST_CASE("soft local time agrees with the direct oracle") {
  const auto p5 = testutil::make_path(7);
  ExcursionKernel kernel(p5, {3}, {1, 5});
  const std::size_t n = 60000;
  const auto mom = soft_local_time_moments(kernel, n, 5);
  // exact value on this path: 0.5 expected excursion starts at the center
  CHECK(std::fabs(mom.pi[0] - 0.5) < 4.0 * mom.pi_stderr[0]);
  const auto direct = direct_excursion_counts(kernel, n, 6);
  CHECK(std::fabs(direct[0] - 0.5) < 0.02);
  // second moment bounded by a small multiple of pi^2
  CHECK(mom.m2[0] <= 8.0 * mom.pi[0] * mom.pi[0]);
  // exponential-type tail: decreasing, eventually small
  CHECK(mom.tail_prob[0] >= mom.tail_prob[1]);
  CHECK(mom.tail_prob[1] >= mom.tail_prob[2]);
  CHECK(mom.tail_prob[3] < 0.05);
}

TEST_CASE("soft local time chain has the direct chain law") {
  const auto z = build_lattice(3, 5);
  const auto m = MetricSpec::for_family(z);
  const Vertex x0 = z.find_vertex({0, 0, 0});
  const auto b = ball(z, m, x0, 1.0).members;
  std::vector<Vertex> v;
  {
    const auto outer = ball(z, m, x0, 3.0).members;
    const auto inner = ball(z, m, x0, 2.0).members;
    std::vector<std::uint8_t> in(z.vertex_count(), 0);
    for (Vertex w : inner) in[w] = 1;
    for (Vertex w : outer)
      if (!in[w]) v.push_back(w);
  }
  ExcursionKernel kernel(z, b, v);
  const std::size_t n = 30000;
  std::vector<double> slt_len(n), dir_len(n);
  for (std::size_t i = 0; i < n; ++i) {
    slt_len[i] = static_cast<double>(soft_local_time(kernel, 21, i).chain_starts.size());
    Rng rng(22, StreamId::Generic, i);
    const Vertex start = kernel.sample_entrance(rng);
    dir_len[i] = static_cast<double>(
        excursion_process(z, b, v, start, 23, i).size() + 1);  // + cemetery step
  }
  const auto ms = mean_stderr(slt_len);
  const auto md = mean_stderr(dir_len);
  CHECK(std::fabs(ms.mean - md.mean) <
        3.0 * std::sqrt(ms.stderr_ * ms.stderr_ + md.stderr_ * md.stderr_));
}

TEST_CASE("accumulated soft local time satisfies the Wald identity") {
  const auto p7 = testutil::make_path(7);
  ExcursionKernel kernel(p7, {3}, {1, 5});
  const double u = 2.0;
  const double mean_theta = u * kernel.cap_v();
  const std::size_t n = 20000;
  std::vector<double> total(n);
  for (std::size_t i = 0; i < n; ++i) {
    Rng rng(29, StreamId::Generic, i);
    const std::uint64_t theta = rng.poisson(mean_theta);
    double acc = 0.0;
    for (std::uint64_t k = 0; k < theta; ++k)
      acc += soft_local_time(kernel, 30 + i, k).f1[0];
    total[i] = acc;
  }
  const auto mt = mean_stderr(total);
  CHECK(std::fabs(mt.mean - mean_theta * 0.5) < 3.0 * mt.stderr_);
}
