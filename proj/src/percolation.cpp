#include "gffil/percolation.hpp"

#include <algorithm>
#include <cmath>
#include <deque>
#include <map>
#include <stdexcept>

#include "gffil/parallel.hpp"
#include "gffil/stats.hpp"
#include "gffil/union_find.hpp"

namespace gffil {

std::vector<std::vector<Vertex>> components(const WeightedGraph& g,
                                            const std::vector<Vertex>& s) {
  std::vector<Vertex> sorted(s);
  std::sort(sorted.begin(), sorted.end());
  sorted.erase(std::unique(sorted.begin(), sorted.end()), sorted.end());
  std::vector<std::uint8_t> in(g.vertex_count(), 0);
  for (Vertex v : sorted) in[v] = 1;
  UnionFind uf(g.vertex_count());
  for (Vertex v : sorted)
    for (std::uint32_t k = g.offsets[v]; k < g.offsets[v + 1]; ++k)
      if (in[g.adj[k]]) uf.merge(v, g.adj[k]);
  std::map<Vertex, std::vector<Vertex>> blocks;  // keyed by root: stable order
  for (Vertex v : sorted) blocks[uf.find(v)].push_back(v);
  std::vector<std::vector<Vertex>> out;
  out.reserve(blocks.size());
  for (auto& [root, block] : blocks) out.push_back(std::move(block));
  std::sort(out.begin(), out.end(),
            [](const auto& a, const auto& b) { return a.front() < b.front(); });
  return out;
}

ClusterReport cluster_report(const WeightedGraph& g, const MetricSpec& m,
                             const std::vector<Vertex>& s) {
  ClusterReport r;
  r.components = components(g, s);
  r.diameters.reserve(r.components.size());
  for (const auto& block : r.components)
    r.diameters.push_back(metric_diameter(g, m, block));
  return r;
}

bool crossing_event(const WeightedGraph& g, const MetricSpec& m,
                    const std::vector<Vertex>& s, Vertex x, double L) {
  const BallResult big = ball(g, m, x, 2.0 * L);
  if (big.window_clipped)
    throw std::invalid_argument("crossing_event: window too small");
  std::vector<std::uint8_t> in_big(g.vertex_count(), 0);
  for (Vertex v : big.members) in_big[v] = 1;
  std::vector<std::uint8_t> in_s(g.vertex_count(), 0);
  for (Vertex v : s) in_s[v] = 1;

  // inner boundary of the big ball
  std::vector<std::uint8_t> target(g.vertex_count(), 0);
  for (Vertex v : big.members)
    for (std::uint32_t k = g.offsets[v]; k < g.offsets[v + 1]; ++k)
      if (!in_big[g.adj[k]]) {
        target[v] = 1;
        break;
      }

  const BallResult small = ball(g, m, x, L);
  std::vector<std::uint8_t> seen(g.vertex_count(), 0);
  std::deque<Vertex> q;
  for (Vertex v : small.members)
    if (in_s[v]) {
      if (target[v]) return true;
      seen[v] = 1;
      q.push_back(v);
    }
  while (!q.empty()) {
    const Vertex v = q.front();
    q.pop_front();
    for (std::uint32_t k = g.offsets[v]; k < g.offsets[v + 1]; ++k) {
      const Vertex w = g.adj[k];
      if (seen[w] || !in_big[w] || !in_s[w]) continue;
      if (target[w]) return true;
      seen[w] = 1;
      q.push_back(w);
    }
  }
  return false;
}

HbarEvents hbar_events(const WeightedGraph& g, const MetricSpec& m,
                       const std::vector<double>& field_values,
                       const std::vector<Vertex>& field_domain, Vertex x,
                       double L, double h, double c5) {
  HbarEvents r;
  const BallResult inner = ball(g, m, x, L);
  if (inner.window_clipped)
    throw std::invalid_argument("hbar_events: window too small");

  std::vector<std::uint8_t> in_dom(g.vertex_count(), 0);
  for (Vertex v : field_domain) in_dom[v] = 1;

  std::vector<Vertex> level_inner;
  for (Vertex v : inner.members)
    if (in_dom[v] && field_values[v] >= h) level_inner.push_back(v);

  const auto blocks = components(g, level_inner);
  r.no_big_component = true;
  std::vector<std::size_t> big_blocks;
  for (std::size_t i = 0; i < blocks.size(); ++i) {
    if (diameter_at_least(g, m, blocks[i], L / 5.0)) r.no_big_component = false;
    if (diameter_at_least(g, m, blocks[i], L / 10.0)) big_blocks.push_back(i);
  }
  if (big_blocks.size() < 2) return r;

  // connectivity of the big blocks within the larger ball, clipped to the
  // window when it does not fit
  BallResult outer = ball(g, m, x, 2.0 * c5 * L);
  r.window_clipped = outer.window_clipped;
  std::vector<std::uint8_t> in_outer(g.vertex_count(), 0);
  for (Vertex v : outer.members) in_outer[v] = 1;
  UnionFind uf(g.vertex_count());
  for (Vertex v : outer.members) {
    if (!in_dom[v] || field_values[v] < h) continue;
    for (std::uint32_t k = g.offsets[v]; k < g.offsets[v + 1]; ++k) {
      const Vertex w = g.adj[k];
      if (in_outer[w] && in_dom[w] && field_values[w] >= h) uf.merge(v, w);
    }
  }
  const std::uint32_t root0 = uf.find(blocks[big_blocks[0]].front());
  for (std::size_t j = 1; j < big_blocks.size(); ++j)
    if (uf.find(blocks[big_blocks[j]].front()) != root0) {
      r.big_components_disconnected = true;
      break;
    }
  return r;
}

ScanResult scan_levels(const std::vector<double>& parameters,
                       const std::vector<double>& l_grid, std::size_t nsamples,
                       const std::function<bool(std::size_t, double, double)>&
                           indicator,
                       int threads) {
  if (parameters.empty() || l_grid.empty() || nsamples == 0)
    throw std::invalid_argument("scan_levels: empty grid");
  ScanResult out;
  const std::size_t np = parameters.size(), nl = l_grid.size();
  std::vector<std::uint32_t> hits(np * nl, 0);
  {
    std::vector<std::vector<std::uint8_t>> per_sample(
        nsamples, std::vector<std::uint8_t>(np * nl, 0));
    parallel_for(
        static_cast<std::int64_t>(nsamples),
        [&](std::int64_t s) {
          for (std::size_t pi = 0; pi < np; ++pi)
            for (std::size_t li = 0; li < nl; ++li)
              per_sample[s][pi * nl + li] =
                  indicator(static_cast<std::size_t>(s), parameters[pi],
                            l_grid[li])
                      ? 1
                      : 0;
        },
        threads);
    for (std::size_t s = 0; s < nsamples; ++s)
      for (std::size_t i = 0; i < np * nl; ++i) hits[i] += per_sample[s][i];
  }
  for (std::size_t pi = 0; pi < np; ++pi)
    for (std::size_t li = 0; li < nl; ++li) {
      const auto f = binomial_freq(hits[pi * nl + li], nsamples);
      out.curve.push_back(
          {parameters[pi], l_grid[li], f.mean, f.stderr_, nsamples});
    }

  // threshold: where the largest-L curve crosses 1/2, linear interpolation
  auto cross = [&](std::size_t li, double& value) {
    double prev_p = parameters[0];
    double prev_f = out.curve[0 * nl + li].p_hat;
    for (std::size_t pi = 1; pi < np; ++pi) {
      const double f = out.curve[pi * nl + li].p_hat;
      const double par = parameters[pi];
      if ((prev_f - 0.5) * (f - 0.5) <= 0.0 && prev_f != f) {
        value = prev_p + (0.5 - prev_f) / (f - prev_f) * (par - prev_p);
        return true;
      }
      prev_p = par;
      prev_f = f;
    }
    return false;
  };
  out.threshold_found = cross(nl - 1, out.threshold);
  if (nl >= 2) cross(nl - 2, out.threshold_second);

  // monotonicity along the parameter at the largest L, tolerant to noise
  for (std::size_t pi = 1; pi < np; ++pi) {
    const auto& a = out.curve[(pi - 1) * nl + (nl - 1)];
    const auto& b = out.curve[pi * nl + (nl - 1)];
    if (b.p_hat > a.p_hat + 4.0 * std::sqrt(a.stderr_ * a.stderr_ +
                                            b.stderr_ * b.stderr_)) {
      out.monotone = false;
      out.note = "non-monotone curve beyond noise";
    }
  }
  return out;
}

}  // namespace gffil
