#include "gffil/renorm.hpp"

#include <algorithm>
#include <cmath>
#include <deque>
#include <stdexcept>

#include "gffil/parallel.hpp"
#include "gffil/percolation.hpp"
#include "gffil/stats.hpp"
#include "gffil/union_find.hpp"

namespace gffil {

void default_scale_ratios(const MetricSpec& m, const FamilyConstants& fc,
                          double& lbar, double& ratio) {
  lbar = 22.0 * fc.c6 * fc.c5;
  ratio = std::max({std::pow(8.0, 1.0 / m.nu()),
                    std::pow(fc.c_lambda, -1.0 / (2.0 * m.alpha)),
                    (8.0 + 4.0 * fc.c_eta) * lbar});
}

ScaleHierarchy scales(const WeightedGraph& g, const MetricSpec& m, double l0,
                      double ratio, double lbar, int n_max,
                      const FamilyConstants& fc, bool strict) {
  ScaleHierarchy h;
  h.l0 = l0;
  h.ratio = ratio;
  h.lbar = lbar;

  auto check = [&](const std::string& name, double lhs, double rhs) {
    ScaleCheck c{name, lhs, rhs, lhs >= rhs};
    h.checks.push_back(c);
    if (!c.ok) h.valid = false;
  };
  check("base scale >= metric step", l0, fc.c4);
  check("neighborhood multiplier >= 2", lbar, 2.0);
  check("ratio >= 8^(1/nu)", ratio, std::pow(8.0, 1.0 / m.nu()));
  check("ratio >= packing term", ratio, std::pow(fc.c_lambda, -1.0 / (2.0 * m.alpha)));
  check("ratio >= separation term", ratio, (8.0 + 4.0 * fc.c_eta) * lbar);
  if (strict && !h.valid)
    throw std::invalid_argument("scales: parameter inequalities violated");

  double length = l0;
  for (int n = 0; n <= n_max; ++n) {
    ScaleLevel level;
    level.length = length;
    level.lattice = approximate_lattice(g, m, length);
    h.levels.push_back(std::move(level));
    length *= ratio;
  }
  return h;
}

CascadeEvaluator::CascadeEvaluator(const WeightedGraph& g, const MetricSpec& m,
                                   const ScaleHierarchy& h,
                                   std::vector<std::uint8_t> site_events,
                                   bool memoize)
    : g_(g), m_(m), h_(h), site_(std::move(site_events)), memoize_(memoize) {
  if (site_.size() != h_.levels.at(0).lattice.size())
    throw std::invalid_argument("cascade: site events misaligned with the lattice");
  memo_.resize(h_.levels.size());
  index_.resize(h_.levels.size());
  for (std::size_t n = 0; n < h_.levels.size(); ++n) {
    memo_[n].assign(h_.levels[n].lattice.size(), -1);
    index_[n].assign(g.vertex_count(), static_cast<std::size_t>(-1));
    for (std::size_t i = 0; i < h_.levels[n].lattice.size(); ++i)
      index_[n][h_.levels[n].lattice[i]] = i;
  }
}

bool CascadeEvaluator::evaluate(Vertex x, int level) {
  const std::size_t xi = index_.at(level)[x];
  if (xi == static_cast<std::size_t>(-1))
    throw std::invalid_argument("cascade: x is not on the level lattice");
  if (memoize_ && memo_[level][xi] >= 0) return memo_[level][xi] != 0;
  bool result;
  if (level == 0) {
    result = site_[xi] != 0;
  } else {
    result = false;
    const double ln = h_.levels[level].length;
    std::vector<Vertex> near;
    for (Vertex y : h_.levels[level - 1].lattice)
      if (metric_distance(g_, m_, x, y) <= h_.lbar * ln) near.push_back(y);
    for (std::size_t i = 0; i < near.size() && !result; ++i)
      for (std::size_t j = 0; j < near.size(); ++j) {
        if (i == j) continue;
        if (metric_distance(g_, m_, near[i], near[j]) < ln) continue;
        if (evaluate(near[i], level - 1) && evaluate(near[j], level - 1)) {
          result = true;
          break;
        }
      }
  }
  if (memoize_) memo_[level][xi] = result ? 1 : 0;
  return result;
}

GoodMap classify_good(const CouplingMachine& machine, const CoupledSample& c,
                      const MetricSpec& m, const std::vector<Vertex>& vertices,
                      double l0, double k_level, double p,
                      const FamilyConstants& fc) {
  const WeightedGraph& base = machine.base();
  const Subdivision& sub = machine.mesh();
  if (c.bern.empty() || c.p != p)
    throw std::invalid_argument("classify_good: sample lacks the marking field");

  GoodMap map;
  map.l0 = l0;
  map.u = c.u;
  map.k_level = k_level;
  map.p = p;

  const double r_wide = 2.0 * fc.c5 * (l0 + fc.c4) + fc.c4;
  const double r_conn = 2.0 * fc.c5 * (l0 + fc.c4);

  for (Vertex x : vertices) {
    const BallResult wide = ball(base, m, x, r_wide);
    if (wide.window_clipped) {
      map.skipped.push_back(x);
      continue;
    }
    map.vertices.push_back(x);

    // (i) auxiliary field bounded below on the wide cable ball
    bool c_ev = true;
    for (Vertex v : cable_ball(sub, wide.members))
      if (c.gamma.values[v] < -k_level) {
        c_ev = false;
        break;
      }

    // (ii) local interlacement presence and connectivity
    const BallResult b0 = ball(base, m, x, l0);
    bool present = false;
    for (Vertex v : b0.members)
      if (c.ri.visit_counts[v] > 0) {
        present = true;
        break;
      }
    bool d_ev = present;
    if (present) {
      // mesh points of the interlacement inside the inner cable ball must be
      // pairwise joined by traversed mesh edges inside the connectivity ball
      const auto inner_ball = ball(base, m, x, l0 + fc.c4);
      const auto conn_ball = ball(base, m, x, r_conn);
      const auto inner = cable_ball(sub, inner_ball.members);
      const auto conn = cable_ball(sub, conn_ball.members);
      std::vector<std::uint8_t> in_conn(sub.graph.vertex_count(), 0);
      for (Vertex v : conn) in_conn[v] = 1;
      UnionFind uf(sub.graph.vertex_count());
      for (std::uint32_t e = 0; e < sub.graph.edge_count(); ++e) {
        if (!c.ri.edge_traversed[e]) continue;
        const Vertex a = sub.graph.edges[e][0], b = sub.graph.edges[e][1];
        if (in_conn[a] && in_conn[b]) uf.merge(a, b);
      }
      Vertex first = kNoVertex;
      for (Vertex v : inner) {
        if (c.ri.visit_counts[v] == 0) continue;
        if (first == kNoVertex) {
          first = v;
          continue;
        }
        if (!uf.connected(first, v)) {
          d_ev = false;
          break;
        }
      }
    }

    // (iii) large sign components of the auxiliary field meet the
    // interlacement inside B(x, L0)
    bool e_ev = true;
    {
      std::vector<Vertex> pos, neg;
      for (Vertex v : b0.members) {
        if (v >= sub.base_vertices) continue;
        if (c.gamma.values[v] > 0.0) pos.push_back(v);
        if (c.gamma.values[v] < 0.0) neg.push_back(v);
      }
      for (const auto* side : {&pos, &neg}) {
        for (const auto& block : components(base, *side)) {
          if (!diameter_at_least(base, m, block, l0 / 4.0)) continue;
          bool meets = false;
          for (Vertex v : block)
            if (c.ri.visit_counts[v] > 0) {
              meets = true;
              break;
            }
          if (!meets) {
            e_ev = false;
            break;
          }
        }
        if (!e_ev) break;
      }
    }

    // (iv) marking field identically one on the connectivity ball
    bool f_ev = true;
    for (Vertex v : ball(base, m, x, r_conn).members)
      if (c.bern[v] == 0) {
        f_ev = false;
        break;
      }

    map.c_event.push_back(c_ev);
    map.d_event.push_back(d_ev);
    map.e_event.push_back(e_ev);
    map.f_event.push_back(f_ev);
    map.good.push_back(c_ev && d_ev && e_ev && f_ev);
  }
  return map;
}

bool bad_r_path_search(const WeightedGraph& g, const MetricSpec& m,
                       const GoodMap& map, double r, Vertex x, double n) {
  const auto it = std::find(map.vertices.begin(), map.vertices.end(), x);
  if (it == map.vertices.end())
    throw std::invalid_argument("bad_r_path_search: x not classified");
  const std::size_t xi = it - map.vertices.begin();
  if (map.good[xi]) return false;
  if (n <= r) return true;  // the one-vertex path already escapes

  std::vector<std::size_t> stack{xi};
  std::vector<std::uint8_t> seen(map.vertices.size(), 0);
  seen[xi] = 1;
  while (!stack.empty()) {
    const std::size_t cur = stack.back();
    stack.pop_back();
    if (metric_distance(g, m, x, map.vertices[cur]) > n) return true;
    for (std::size_t j = 0; j < map.vertices.size(); ++j) {
      if (seen[j] || map.good[j]) continue;
      if (metric_distance(g, m, map.vertices[cur], map.vertices[j]) <= r) {
        seen[j] = 1;
        stack.push_back(j);
      }
    }
  }
  return false;
}

bool good_path_connect(const WeightedGraph& g, const MetricSpec& m,
                       const GoodMap& map, Vertex x, int level,
                       const ScaleHierarchy& h,
                       const std::vector<std::vector<Vertex>>& comps,
                       const FamilyConstants& fc) {
  if (comps.size() < 2) return true;
  const double ln = h.levels.at(level).length;
  const BallResult reach = ball(g, m, x, 30.0 * fc.c6 * fc.c5 * ln);

  std::vector<std::uint8_t> goodness(g.vertex_count(), 0);
  for (std::size_t i = 0; i < map.vertices.size(); ++i)
    if (map.good[i]) goodness[map.vertices[i]] = 1;
  std::vector<std::uint8_t> in_reach(g.vertex_count(), 0);
  for (Vertex v : reach.members) in_reach[v] = 1;

  // grow the good region; a component counts as linked when some good vertex
  // inside the reach ball touches it
  UnionFind uf(g.vertex_count());
  for (Vertex v : reach.members) {
    if (!goodness[v]) continue;
    for (std::uint32_t k = g.offsets[v]; k < g.offsets[v + 1]; ++k) {
      const Vertex w = g.adj[k];
      if (in_reach[w] && goodness[w]) uf.merge(v, w);
    }
  }
  // anchor of each component: the set of good-cluster roots adjacent to it
  std::vector<std::vector<std::uint32_t>> anchors(comps.size());
  for (std::size_t ci = 0; ci < comps.size(); ++ci) {
    for (Vertex v : comps[ci]) {
      if (in_reach[v] && goodness[v]) anchors[ci].push_back(uf.find(v));
      for (std::uint32_t k = g.offsets[v]; k < g.offsets[v + 1]; ++k) {
        const Vertex w = g.adj[k];
        if (in_reach[w] && goodness[w]) anchors[ci].push_back(uf.find(w));
      }
    }
    std::sort(anchors[ci].begin(), anchors[ci].end());
    anchors[ci].erase(std::unique(anchors[ci].begin(), anchors[ci].end()),
                      anchors[ci].end());
    if (anchors[ci].empty()) return false;
  }
  for (std::size_t ci = 1; ci < comps.size(); ++ci) {
    bool linked = false;
    for (std::uint32_t a : anchors[0]) {
      if (std::binary_search(anchors[ci].begin(), anchors[ci].end(), a)) {
        linked = true;
        break;
      }
    }
    if (!linked) return false;
  }
  return true;
}

namespace {

bool event_holds_field(const DecouplingEvent& e,
                       const std::vector<double>& values, double shift) {
  for (Vertex v : e.support)
    if (values[v] + shift < e.level) return false;
  return true;
}

bool event_holds_vacant(const DecouplingEvent& e,
                        const std::vector<std::uint32_t>& counts) {
  for (Vertex v : e.support)
    if (counts[v] > 0) return false;
  return true;
}

DecouplingResult reduce_decoupling(const std::vector<double>& joint,
                                   const std::vector<double>& m1,
                                   const std::vector<double>& m2,
                                   double separation) {
  DecouplingResult r;
  r.separation = separation;
  const MeanStderr js = mean_stderr(joint);
  const MeanStderr a = mean_stderr(m1);
  const MeanStderr b = mean_stderr(m2);
  r.lhs = js.mean;
  r.lhs_stderr = js.stderr_;
  r.rhs = a.mean * b.mean;
  r.rhs_stderr = std::sqrt(a.stderr_ * a.stderr_ * b.mean * b.mean +
                           b.stderr_ * b.stderr_ * a.mean * a.mean);
  r.gap = r.lhs - r.rhs;
  r.gap_stderr = std::sqrt(r.lhs_stderr * r.lhs_stderr +
                           r.rhs_stderr * r.rhs_stderr);
  return r;
}

}  // namespace

DecouplingResult decoupling_check_gff(
    const WeightedGraph& g, const MetricSpec& m, const GffSampler& sampler,
    const DecouplingEvent& e1, const DecouplingEvent& e2, double epsilon,
    std::size_t nsamples, std::uint64_t seed, int threads) {
  if (e1.kind != DecouplingEvent::Kind::FieldAllAbove ||
      e2.kind != DecouplingEvent::Kind::FieldAllAbove)
    throw std::invalid_argument("decoupling_check_gff: field events expected");
  double sep = std::numeric_limits<double>::infinity();
  for (Vertex a : e1.support)
    for (Vertex b : e2.support)
      sep = std::min(sep, metric_distance(g, m, a, b));

  std::vector<double> joint(nsamples), f1(nsamples), f2(nsamples);
  parallel_for(
      static_cast<std::int64_t>(nsamples),
      [&](std::int64_t i) {
        const FieldSample f = sampler.sample(seed, i);
        const bool a0 = event_holds_field(e1, f.values, 0.0);
        const bool b0 = event_holds_field(e2, f.values, 0.0);
        joint[i] = (a0 && b0) ? 1.0 : 0.0;
        // increasing events: sprinkle the field up by epsilon
        f1[i] = event_holds_field(e1, f.values, epsilon) ? 1.0 : 0.0;
        f2[i] = event_holds_field(e2, f.values, epsilon) ? 1.0 : 0.0;
      },
      threads);
  return reduce_decoupling(joint, f1, f2, sep);
}

DecouplingResult decoupling_check_ri(
    const WeightedGraph& g, const MetricSpec& m,
    const InterlacementSampler& sampler, const DecouplingEvent& e1,
    const DecouplingEvent& e2, double u, double epsilon, std::size_t nsamples,
    std::uint64_t seed, int threads) {
  if (e1.kind != DecouplingEvent::Kind::VacantAll ||
      e2.kind != DecouplingEvent::Kind::VacantAll)
    throw std::invalid_argument("decoupling_check_ri: vacancy events expected");
  double sep = std::numeric_limits<double>::infinity();
  for (Vertex a : e1.support)
    for (Vertex b : e2.support)
      sep = std::min(sep, metric_distance(g, m, a, b));

  std::vector<double> joint(nsamples), f1(nsamples), f2(nsamples);
  parallel_for(
      static_cast<std::int64_t>(nsamples),
      [&](std::int64_t i) {
        // one run at the sprinkled-up intensity carries all levels
        const InterlacementSample s =
            sampler.sample(u * (1.0 + epsilon), seed, i);
        const auto at_u = visit_counts_at_level(g, s, u);
        const auto at_up = s.visit_counts;  // u (1 + epsilon)
        joint[i] = (event_holds_vacant(e1, at_u) && event_holds_vacant(e2, at_u))
                       ? 1.0
                       : 0.0;
        // decreasing events: sprinkle the intensity up
        f1[i] = event_holds_vacant(e1, at_up) ? 1.0 : 0.0;
        f2[i] = event_holds_vacant(e2, at_up) ? 1.0 : 0.0;
      },
      threads);
  return reduce_decoupling(joint, f1, f2, sep);
}

AdmissibleParams admissible_flip_params(double u, double lambda_min,
                                        double lambda_max, double c15,
                                        double k_need) {
  AdmissibleParams a;
  const double h = std::sqrt(2.0 * u);
  if (h <= 0.0 || lambda_max <= 0.0) return a;
  a.k_max = c15 / (lambda_max * h);
  a.k_min = std::max(h * (1.0 + 1e-12), k_need);
  if (a.k_min >= a.k_max) return a;
  a.feasible = true;
  a.k_mid = 0.5 * (a.k_min + a.k_max);
  a.p_max = normal_cdf(std::sqrt(2.0 * lambda_min) * (a.k_mid - h));
  return a;
}

}  // namespace gffil
