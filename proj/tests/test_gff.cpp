#include <doctest.h>

#include <cmath>

#include "gffil/gff.hpp"
#include "gffil/parallel.hpp"
#include "gffil/stats.hpp"
#include "test_util.hpp"

using namespace gffil;
using testutil::make_star;

TEST_CASE("sampler reproducibility and thread invariance") {
  const auto z = build_lattice(3, 3);
  const auto sampler = make_cholesky_sampler(z, window_interior(z));
  const auto a = sampler->sample(42, 7);
  const auto b = sampler->sample(42, 7);
  CHECK(a.values == b.values);

  // batch through the parallel driver vs the serial reference: bit-identical
  const std::size_t n = 16;
  std::vector<std::vector<double>> par(n), ser(n);
  auto body_par = [&](std::int64_t i) { par[i] = sampler->sample(1, i).values; };
  auto body_ser = [&](std::int64_t i) { ser[i] = sampler->sample(1, i).values; };
  parallel_for(n, body_par, 2);
  serial_for(n, body_ser);
  CHECK(par == ser);
}

TEST_CASE("single-vertex and star variances") {
  const auto z = build_lattice(3, 2);
  const Vertex x = z.find_vertex({0, 0, 0});
  const auto sampler = make_cholesky_sampler(z, {x});
  std::vector<double> vals(20000);
  for (std::size_t i = 0; i < vals.size(); ++i)
    vals[i] = sampler->sample(5, i).values[x] * sampler->sample(5, i).values[x];
  const auto ms = mean_stderr(vals);
  CHECK(std::fabs(ms.mean - 1.0 / 6.0) < 4.0 * ms.stderr_);

  const auto star = make_star(3);
  const auto s2 = make_cholesky_sampler(star, {0});
  std::vector<double> v2(20000);
  for (std::size_t i = 0; i < v2.size(); ++i) {
    const double phi = s2->sample(6, i).values[0];
    v2[i] = phi * phi;
  }
  const auto m2 = mean_stderr(v2);
  CHECK(std::fabs(m2.mean - 1.0 / 3.0) < 4.0 * m2.stderr_);
}

TEST_CASE("empirical covariance matches the killed Green table") {
  const auto z = build_lattice(3, 2);
  const auto interior = window_interior(z);
  const auto table = killed_green(z, interior);
  const auto chol = make_cholesky_sampler(z, interior);
  const auto spec = make_spectral_sampler(z);

  const Vertex x = z.find_vertex({0, 0, 0});
  const Vertex y = z.find_vertex({1, 0, 0});
  const std::size_t n = 100000;
  std::vector<double> cxy_c(n), cxy_s(n);
  for (std::size_t i = 0; i < n; ++i) {
    const auto fc = chol->sample(9, i);
    const auto fs = spec->sample(10, i);
    cxy_c[i] = fc.values[x] * fc.values[y];
    cxy_s[i] = fs.values[x] * fs.values[y];
  }
  const double truth = table.entry(x, y);
  const auto mc = mean_stderr(cxy_c);
  const auto msp = mean_stderr(cxy_s);
  CHECK(std::fabs(mc.mean - truth) < 4.0 * mc.stderr_);
  CHECK(std::fabs(msp.mean - truth) < 4.0 * msp.stderr_);
}

TEST_CASE("subdivision consistency of the field law") {
  const auto z = build_lattice(3, 2);
  const auto sub = subdivide(z, 2);
  const auto base_sampler = make_cholesky_sampler(z, window_interior(z));
  const auto mesh_sampler =
      make_cholesky_sampler(sub.graph, window_interior(sub.graph));
  const Vertex x = z.find_vertex({0, 0, 0});
  const Vertex y = z.find_vertex({1, 0, 0});
  const std::size_t n = 100000;
  std::vector<double> base_prod(n), mesh_prod(n);
  for (std::size_t i = 0; i < n; ++i) {
    base_prod[i] = base_sampler->sample(3, i).values[x] *
                   base_sampler->sample(3, i).values[y];
    const auto f = mesh_sampler->sample(4, i);
    mesh_prod[i] = f.values[x] * f.values[y];
  }
  const auto mb = mean_stderr(base_prod);
  const auto mm = mean_stderr(mesh_prod);
  CHECK(std::fabs(mb.mean - mm.mean) <
        4.0 * std::sqrt(mb.stderr_ * mb.stderr_ + mm.stderr_ * mm.stderr_));
}

TEST_CASE("markov decomposition") {
  const auto z = build_lattice(3, 3);
  const auto interior = window_interior(z);
  const auto sampler = make_cholesky_sampler(z, interior);
  const auto m = MetricSpec::for_family(z);
  const auto k = ball(z, m, z.find_vertex({0, 0, 0}), 1.0).members;

  const auto f = sampler->sample(11, 0);
  const auto d = markov_decompose(z, f, k);
  // matches on K, harmonic off K, bulk vanishes on K
  for (Vertex v : k) {
    CHECK(d.harmonic[v] == doctest::Approx(f.values[v]));
    CHECK(d.bulk[v] == doctest::Approx(0.0).epsilon(1e-12));
  }
  double scale = 0.0;
  for (Vertex v : interior) scale = std::max(scale, std::fabs(d.harmonic[v]));
  for (Vertex v : interior) {
    if (std::binary_search(k.begin(), k.end(), v)) continue;
    double lf = 0.0;
    for (std::uint32_t i = z.offsets[v]; i < z.offsets[v + 1]; ++i)
      lf += z.edge_weight(z.adj_edge[i]) * (d.harmonic[z.adj[i]] - d.harmonic[v]);
    CHECK(std::fabs(lf / z.vertex_weights[v]) < 1e-9 * scale);
  }

  // trivial splits
  const auto dk = markov_decompose(z, f, interior);
  for (Vertex v : interior) CHECK(dk.bulk[v] == 0.0);
  const auto d0 = markov_decompose(z, f, {});
  for (Vertex v : interior) CHECK(d0.harmonic[v] == 0.0);

  // independence of the bulk from the K-values (cross covariance)
  const Vertex probe = z.find_vertex({2, 0, 0});
  const Vertex anchor = k[0];
  const std::size_t n = 40000;
  std::vector<double> cross(n);
  for (std::size_t i = 0; i < n; ++i) {
    const auto fi = sampler->sample(12, i);
    const auto di = markov_decompose(z, fi, k);
    cross[i] = di.bulk[probe] * fi.values[anchor];
  }
  const auto mc = mean_stderr(cross);
  CHECK(std::fabs(mc.mean) < 4.0 * mc.stderr_);
}

TEST_CASE("mesh star variance after decomposition") {
  // conditional variance of the center given the edge midpoints is 1/(2 lambda)
  const auto z = build_lattice(3, 2);
  const auto sub = subdivide(z, 2);
  const auto sampler = make_cholesky_sampler(sub.graph, window_interior(sub.graph));
  const Vertex x = z.find_vertex({0, 0, 0});
  std::vector<Vertex> mids;
  for (std::uint32_t k = z.offsets[x]; k < z.offsets[x + 1]; ++k)
    mids.push_back(sub.midpoint(z.adj_edge[k]));
  std::sort(mids.begin(), mids.end());
  const std::size_t n = 50000;
  std::vector<double> var(n);
  for (std::size_t i = 0; i < n; ++i) {
    const auto f = sampler->sample(13, i);
    const auto d = markov_decompose(sub.graph, f, mids);
    var[i] = d.bulk[x] * d.bulk[x];
  }
  const auto ms = mean_stderr(var);
  CHECK(std::fabs(ms.mean - 1.0 / (2.0 * z.vertex_weights[x])) <
        4.0 * ms.stderr_);
}

TEST_CASE("bridge barrier probability") {
  CHECK(bridge_stays_above(1.0, 1.0, 0.5, 0.0) ==
        doctest::Approx(1.0 - std::exp(-2.0)).epsilon(1e-12));
  CHECK(bridge_stays_above(0.3, 0.7, 2.0, 0.1) ==
        bridge_stays_above(0.7, 0.3, 2.0, 0.1));
  CHECK(bridge_stays_above(-0.5, 1.0, 1.0, 0.5) == 0.0);  // endpoint on barrier
  CHECK(bridge_stays_above(0.2, 0.4, 1.0, 1e9) == doctest::Approx(1.0));

  // Monte Carlo oracle: discretized variance-2 bridge of length 1/(4 lambda)
  const double lambda = 0.5, a = 1.0, b = 1.0, h = 0.0;
  const double t_total = 1.0 / (4.0 * lambda);
  const int steps = 2000;
  const std::size_t paths = 200000;
  std::size_t stay = 0;
  const double dt = t_total / steps;
  for (std::size_t p = 0; p < paths; ++p) {
    Rng rng(77, StreamId::Bridge, p);
    // build the bridge from a free walk pinned at both ends
    double w = 0.0;
    bool ok = true;
    std::vector<double> walk(steps + 1);
    walk[0] = 0.0;
    for (int s = 1; s <= steps; ++s) {
      w += std::sqrt(2.0 * dt) * rng.gauss();
      walk[s] = w;
    }
    for (int s = 0; s <= steps && ok; ++s) {
      const double t = static_cast<double>(s) / steps;
      const double val = a * (1.0 - t) + b * t + walk[s] - t * walk[steps];
      if (val < -h) ok = false;
    }
    if (ok) ++stay;
  }
  const auto freq = binomial_freq(stay, paths);
  const double formula = bridge_stays_above(a, b, lambda, h);
  // discretization skips excursions below the barrier, so allow a small bias
  CHECK(std::fabs(freq.mean - formula) < 3.0 * freq.stderr_ + 0.004);
}

TEST_CASE("level sets") {
  const auto z = build_lattice(3, 2);
  const auto interior = window_interior(z);
  const auto sampler = make_cholesky_sampler(z, interior);
  const auto f = sampler->sample(21, 0);
  double lo = 1e300, hi = -1e300;
  for (Vertex v : interior) {
    lo = std::min(lo, f.values[v]);
    hi = std::max(hi, f.values[v]);
  }
  CHECK(level_set(f, lo - 1.0).size() == interior.size());
  CHECK(level_set(f, hi + 1.0).empty());
  const auto s1 = level_set(f, -0.3);
  const auto s2 = level_set(f, 0.3);
  for (Vertex v : s2) CHECK(std::binary_search(s1.begin(), s1.end(), v));

  // sign symmetry: mean size of the nonnegative set is half the domain
  const std::size_t n = 20000;
  std::vector<double> sizes(n);
  for (std::size_t i = 0; i < n; ++i)
    sizes[i] = static_cast<double>(level_set(sampler->sample(22, i), 0.0).size());
  const auto ms = mean_stderr(sizes);
  CHECK(std::fabs(ms.mean - interior.size() / 2.0) < 4.0 * ms.stderr_);
}
