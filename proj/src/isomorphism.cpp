#include "gffil/isomorphism.hpp"

#include <algorithm>
#include <cmath>
#include <map>
#include <mutex>
#include <stdexcept>

#include "gffil/parallel.hpp"
#include "gffil/stats.hpp"
#include "gffil/union_find.hpp"

namespace gffil {

namespace {

// Gauss-Legendre nodes/weights on [-1,1], cached per order.
struct GlRule {
  std::vector<double> x, w;
};

const GlRule& gl_rule(int n) {
  static std::map<int, GlRule> cache;
  static std::mutex mu;
  std::lock_guard<std::mutex> lock(mu);
  auto it = cache.find(n);
  if (it != cache.end()) return it->second;
  GlRule r;
  r.x.resize(n);
  r.w.resize(n);
  for (int i = 0; i < n; ++i) {
    double x = std::cos(M_PI * (i + 0.75) / (n + 0.5));
    double dp = 0.0;
    for (int iter = 0; iter < 100; ++iter) {
      double p0 = 1.0, p1 = x;
      for (int k = 2; k <= n; ++k) {
        const double p2 = ((2.0 * k - 1.0) * x * p1 - (k - 1.0) * p0) / k;
        p0 = p1;
        p1 = p2;
      }
      dp = n * (x * p1 - p0) / (x * x - 1.0);
      const double dx = p1 / dp;
      x -= dx;
      if (std::fabs(dx) < 1e-15) break;
    }
    r.x[i] = x;
    r.w[i] = 2.0 / ((1.0 - x * x) * dp * dp);
  }
  return cache.emplace(n, std::move(r)).first->second;
}

double barrier_integral(double beta, double sigma, double s_sum, double h,
                        int order) {
  // int_{-h}^{hi} N(beta, sigma^2)(t) (1 - exp(-4 S (t+h))) dt
  const double lo = -h;
  const double hi = std::max(beta, -h) + 16.0 * sigma;
  if (hi <= lo) return 0.0;
  const GlRule& r = gl_rule(order);
  const double mid = 0.5 * (hi + lo), half = 0.5 * (hi - lo);
  const double inv = 1.0 / (sigma * std::sqrt(2.0 * M_PI));
  double acc = 0.0;
  for (int i = 0; i < order; ++i) {
    const double t = mid + half * r.x[i];
    const double z = (t - beta) / sigma;
    const double dens = inv * std::exp(-0.5 * z * z);
    acc += r.w[i] * dens * (-std::expm1(-4.0 * s_sum * (t + h)));
  }
  return half * acc;
}

}  // namespace

FlipProbs conditional_event_probs(const FlipInput& in,
                                  const QuadratureOptions& q) {
  if (in.psi.size() != in.edge_weights.size() || in.psi.empty())
    throw std::invalid_argument("conditional_event_probs: bad star input");
  FlipProbs f;
  const double h = std::sqrt(2.0 * in.u);
  double lambda_x = 0.0, dot = 0.0, s_sum = 0.0;
  bool sbar = true;
  for (std::size_t i = 0; i < in.psi.size(); ++i) {
    lambda_x += in.edge_weights[i];
    dot += in.edge_weights[i] * in.psi[i];
    if (in.psi[i] >= -h) s_sum += in.edge_weights[i] * (in.psi[i] + h);
    if (in.psi[i] < -in.k_level) sbar = false;
  }
  f.beta = dot / lambda_x;
  f.sbar = sbar;
  const double sigma = 1.0 / std::sqrt(2.0 * lambda_x);
  f.f2 = normal_sf((-h - f.beta) / sigma);
  f.f3 = normal_sf((h - f.beta) / sigma);

  if (s_sum <= 0.0) {
    f.f1 = 0.0;
  } else {
    double prev = -1.0;
    bool stable = false;
    for (int order : q.orders) {
      const double val = barrier_integral(f.beta, sigma, s_sum, h, order);
      f.quad_points = order;
      if (prev >= 0.0 && std::fabs(val - prev) <= q.tolerance) {
        f.f1 = val;
        stable = true;
        break;
      }
      prev = val;
      f.f1 = val;
    }
    if (!stable)
      throw std::runtime_error(
          "conditional_event_probs: quadrature failed to stabilize");
  }
  const double mark = (sbar ? 1.0 : 0.0) * in.p;
  f.f6 = mark;
  f.f4 = f.f1 * mark;
  f.f5 = f.f2 * mark;
  return f;
}

bool flip_condition_holds(double k_level, double lambda_x, double u,
                          double c15) {
  return k_level * lambda_x * std::sqrt(2.0 * u) <= c15;
}

CouplingMachine::CouplingMachine(const WeightedGraph& base, int mesh_factor)
    : base_(base) {
  if (mesh_factor < 2 || mesh_factor % 2 != 0)
    throw std::invalid_argument("coupling: mesh factor must be even and >= 2");
  sub_ = subdivide(base, mesh_factor);
  gff_ = make_cholesky_sampler(sub_.graph, window_interior(sub_.graph));
  InterlacementOptions opts;
  opts.kill.kind = KillSpec::Kind::Frontier;
  opts.kill.min_sep_factor = 0.0;  // the target is the whole interior
  ri_ = std::make_unique<InterlacementSampler>(sub_.graph,
                                               window_interior(sub_.graph), opts);
}

FieldSample CouplingMachine::reference_field(std::uint64_t seed,
                                             std::uint64_t index) const {
  return gff_->sample(seed, index);
}

CoupledSample CouplingMachine::sample(double u, std::uint64_t seed,
                                      std::uint64_t index, double p) const {
  FieldSample gamma = gff_->sample(seed, index);
  InterlacementSample ri = ri_->sample(u, seed, index);
  CoupledSample c = build_coupling(sub_, std::move(gamma), std::move(ri), u);
  if (p > 0.0) {
    c.p = p;
    c.bern.resize(sub_.base_vertices);
    for (Vertex v = 0; v < sub_.base_vertices; ++v) {
      Rng r(seed, StreamId::Coupling, index, 0xBE0000000000ULL + v);
      c.bern[v] = r.u01() < p ? 1 : 0;
    }
  }
  return c;
}

CoupledSample build_coupling(const Subdivision& sub, FieldSample gamma,
                             InterlacementSample ri, double u) {
  const WeightedGraph& g = sub.graph;
  if (gamma.values.size() != g.vertex_count() ||
      ri.visit_counts.size() != g.vertex_count())
    throw std::invalid_argument("build_coupling: domain mismatch");
  CoupledSample c;
  c.u = u;
  c.ell = occupation_field(g, ri);
  c.gamma = std::move(gamma);
  c.ri = std::move(ri);

  const std::size_t n = g.vertex_count();
  std::vector<std::uint8_t> open(n, 0);
  for (Vertex v = 0; v < n; ++v) {
    const double gv = c.gamma.values[v];
    open[v] = (2.0 * c.ell[v] + gv * gv) > 0.0 ? 1 : 0;
  }
  UnionFind uf(n);
  for (std::uint32_t e = 0; e < g.edge_count(); ++e)
    if (open[g.edges[e][0]] && open[g.edges[e][1]])
      uf.merge(g.edges[e][0], g.edges[e][1]);
  std::vector<std::uint8_t> meets(n, 0);
  for (Vertex v = 0; v < n; ++v)
    if (c.ell[v] > 0.0) meets[uf.find(v)] = 1;
  c.in_c.assign(n, 0);
  for (Vertex v = 0; v < n; ++v)
    c.in_c[v] = open[v] && meets[uf.find(v)];

  const double shift = std::sqrt(2.0 * u);
  c.phi.resize(n);
  for (Vertex v = 0; v < n; ++v) {
    const double gv = c.gamma.values[v];
    c.phi[v] = c.in_c[v] ? -shift + std::sqrt(2.0 * c.ell[v] + gv * gv)
                         : -shift + gv;
  }
  return c;
}

InclusionReport verify_inclusions(const Subdivision& sub,
                                  const CoupledSample& c) {
  InclusionReport r;
  const double h = std::sqrt(2.0 * c.u);
  const WeightedGraph& g = sub.graph;
  for (Vertex v = 0; v < g.vertex_count(); ++v) {
    if (g.on_frontier(v)) continue;
    ++r.checked;
    if (c.ell[v] > 0.0 && !(c.phi[v] > -h)) ++r.interlacement_violations;
    if (c.phi[v] < -h && (c.ell[v] > 0.0 || c.gamma.values[v] >= 0.0))
      ++r.vacant_violations;
  }
  return r;
}

double isomorphism_residual(const Subdivision& sub, const CoupledSample& c) {
  const double h = std::sqrt(2.0 * c.u);
  double worst = 0.0;
  for (Vertex v = 0; v < sub.graph.vertex_count(); ++v) {
    const double lhs = 0.5 * (c.phi[v] + h) * (c.phi[v] + h);
    const double rhs = c.ell[v] + 0.5 * c.gamma.values[v] * c.gamma.values[v];
    worst = std::max(worst, std::fabs(lhs - rhs));
  }
  return worst;
}

MarginalTest gff_marginal_test(const std::vector<std::vector<double>>& a,
                               const std::vector<std::vector<double>>& b,
                               const std::vector<Vertex>& panel,
                               double ks_alpha) {
  if (a.size() < 2 || b.size() < 2)
    throw std::invalid_argument("gff_marginal_test: batch too small");
  MarginalTest t;
  t.panel = panel;
  t.ks_threshold = ks_critical(a.size(), b.size(), ks_alpha);
  std::vector<double> col_a(a.size()), col_b(b.size());
  for (std::size_t pi = 0; pi < panel.size(); ++pi) {
    for (std::size_t i = 0; i < a.size(); ++i) col_a[i] = a[i][pi];
    for (std::size_t i = 0; i < b.size(); ++i) col_b[i] = b[i][pi];
    const MeanStderr ma = mean_stderr(col_a);
    const MeanStderr mb = mean_stderr(col_b);
    t.mean_a.push_back(ma.mean);
    t.mean_b.push_back(mb.mean);
    t.var_a.push_back(ma.stderr_ * ma.stderr_ * a.size());
    t.var_b.push_back(mb.stderr_ * mb.stderr_ * b.size());
    t.mean_z.push_back((ma.mean - mb.mean) /
                       std::sqrt(ma.stderr_ * ma.stderr_ +
                                 mb.stderr_ * mb.stderr_));
    t.ks.push_back(ks_statistic(col_a, col_b));
  }
  return t;
}

FlipInput star_input(const CouplingMachine& machine, const CoupledSample& c,
                     Vertex x, double k_level, double p) {
  const WeightedGraph& base = machine.base();
  const Subdivision& sub = machine.mesh();
  FlipInput in;
  in.u = c.u;
  in.k_level = k_level;
  in.p = p;
  for (std::uint32_t k = base.offsets[x]; k < base.offsets[x + 1]; ++k) {
    const std::uint32_t e = base.adj_edge[k];
    in.psi.push_back(c.phi[sub.midpoint(e)]);
    in.edge_weights.push_back(base.edge_weight(e));
  }
  return in;
}

namespace {

// mesh vertices and sub-edge ids of the half-edge from x along base edge e
void half_edge_elements(const Subdivision& sub, Vertex x, std::uint32_t e,
                        std::vector<Vertex>& verts,
                        std::vector<std::uint32_t>& edges) {
  const int m = sub.factor;
  verts.clear();
  edges.clear();
  verts.push_back(x);
  if (sub.base_edges[e][0] == x) {
    for (int k = 0; k < m / 2; ++k) {
      verts.push_back(sub.chain[e][k]);
      edges.push_back(e * m + k);
    }
  } else {
    for (int k = 0; k < m / 2; ++k) {
      verts.push_back(sub.chain[e][m - 2 - k]);
      edges.push_back(e * m + m - 1 - k);
    }
  }
}

}  // namespace

bool half_edge_event(const CouplingMachine& machine, const CoupledSample& c,
                     Vertex x, std::uint64_t seed) {
  const WeightedGraph& base = machine.base();
  const Subdivision& sub = machine.mesh();
  const double h = std::sqrt(2.0 * c.u);
  std::vector<Vertex> verts;
  std::vector<std::uint32_t> edges;
  for (std::uint32_t k = base.offsets[x]; k < base.offsets[x + 1]; ++k) {
    const std::uint32_t e = base.adj_edge[k];
    half_edge_elements(sub, x, e, verts, edges);
    bool stays = true;
    for (Vertex v : verts)
      if (c.phi[v] < -h) {
        stays = false;
        break;
      }
    if (stays) {
      const double len = 1.0 / (2.0 * sub.factor * base.edge_weight(e));
      for (std::size_t i = 0; i < edges.size(); ++i) {
        if (c.ri.edge_traversed[edges[i]]) continue;  // covered by a trajectory
        const double prob =
            segment_stays_above(c.phi[verts[i]], c.phi[verts[i + 1]], len, h);
        Rng r(seed, StreamId::Bridge, x, edges[i]);
        if (r.u01() >= prob) {
          stays = false;
          break;
        }
      }
    }
    if (stays) return true;
  }
  return false;
}

EightSetCalibration calibrate_eight_sets(const CouplingMachine& machine,
                                         double u, std::size_t nsamples,
                                         std::uint64_t seed, int threads) {
  const Subdivision& sub = machine.mesh();
  EightSetCalibration cal;
  cal.u = u;
  for (Vertex v = 0; v < sub.base_vertices; ++v)
    if (!machine.base().on_frontier(v)) cal.vertices.push_back(v);

  const std::size_t nv = cal.vertices.size();
  std::vector<std::array<std::uint32_t, 4>> n0(nv, {0, 0, 0, 0}),
      n1(nv, {0, 0, 0, 0});
  const double h = std::sqrt(2.0 * u);
  // serial over samples: counts are tiny compared to the sampling cost
  for (std::size_t s = 0; s < nsamples; ++s) {
    const CoupledSample c = machine.sample(u, seed, s);
    for (std::size_t i = 0; i < nv; ++i) {
      const Vertex x = cal.vertices[i];
      const double phi = c.phi[x];
      if (phi <= -h) continue;  // forced class, nothing to learn
      const bool vac = c.ri.visit_counts[x] == 0;
      const bool neg = c.gamma.values[x] <= 0.0;
      const int cell = (vac ? 2 : 0) + (neg ? 1 : 0);
      if (phi <= h)
        ++n0[i][cell];
      else
        ++n1[i][cell];
    }
  }
  (void)threads;
  cal.cls0.resize(nv);
  cal.cls1.resize(nv);
  auto normalize = [](const std::array<std::uint32_t, 4>& n,
                      std::array<double, 4>& p) {
    double total = n[0] + n[1] + n[2] + n[3];
    if (total == 0) {
      p = {0.0, 0.0, 0.0, 1.0};  // unseen class: vacant and negative
      return;
    }
    for (int j = 0; j < 4; ++j) p[j] = n[j] / total;
  };
  for (std::size_t i = 0; i < nv; ++i) {
    normalize(n0[i], cal.cls0[i]);
    normalize(n1[i], cal.cls1[i]);
  }
  return cal;
}

EightSets eight_set_coupling(const CouplingMachine& machine,
                             const CoupledSample& c, double k_level, double p,
                             const EightSetCalibration& calib,
                             std::uint64_t seed, double c15) {
  const WeightedGraph& base = machine.base();
  const Subdivision& sub = machine.mesh();
  const double u = c.u;
  const double h = std::sqrt(2.0 * u);
  if (!(k_level > h))
    throw std::invalid_argument("eight_set_coupling: need K > sqrt(2u)");
  if (c.bern.empty() || c.p != p)
    throw std::invalid_argument("eight_set_coupling: sample lacks the marking field");

  EightSets out;
  for (Vertex v = 0; v < sub.base_vertices; ++v)
    if (!base.on_frontier(v)) out.vertices.push_back(v);
  const std::size_t nv = out.vertices.size();
  if (calib.vertices != out.vertices || calib.u != u)
    throw std::invalid_argument("eight_set_coupling: calibration mismatch");

  for (std::size_t i = 0; i < nv; ++i) {
    const Vertex x = out.vertices[i];
    const double lam = base.vertex_weights[x];
    if (!flip_condition_holds(k_level, lam, u, c15))
      throw std::invalid_argument(
          "eight_set_coupling: smallness condition violated");
    if (p > normal_cdf(std::sqrt(2.0 * lam) * (k_level - h)))
      throw std::invalid_argument("eight_set_coupling: p too large for (K, u)");
  }

  out.iu.resize(nv);
  out.h.resize(nv);
  out.hbar.resize(nv);
  out.rbar.resize(nv);
  out.e_minus.resize(nv);
  out.e_plus.resize(nv);
  out.vbar.resize(nv);
  out.e_gamma.resize(nv);

  const std::uint64_t mixed = splitmix64(seed ^ (c.gamma.index * 0x9e37ULL + 1));
  for (std::size_t i = 0; i < nv; ++i) {
    const Vertex x = out.vertices[i];
    // direct sets from the sample
    const bool iu = c.ri.visit_counts[x] > 0;
    bool sk = true, sbar = true;
    for (std::uint32_t k = base.offsets[x]; k < base.offsets[x + 1]; ++k) {
      const Vertex mid = sub.midpoint(base.adj_edge[k]);
      if (c.gamma.values[mid] < -k_level + h) sk = false;
      if (c.phi[mid] < -k_level) sbar = false;
    }
    const bool mark = c.bern[x] != 0;
    const bool hset = sk && mark;
    const bool hbar = sbar && mark;
    const bool rbar = half_edge_event(machine, c, x, mixed);
    const bool em = c.phi[x] >= -h;

    // conditional probabilities of the six local events given the midpoints
    const FlipProbs f =
        conditional_event_probs(star_input(machine, c, x, k_level, p));

    // recoupled uniform confined to the region matching the observed triple
    double lo = 0.0, hi = 1.0;
    if (rbar && hbar) {
      lo = 0.0;
      hi = f.f4;
    } else if (rbar && !hbar) {
      lo = f.f4;
      hi = f.f1;
    } else if (!rbar && hbar && em) {
      lo = f.f1;
      hi = f.f1 + f.f5 - f.f4;
    } else if (!rbar && !hbar && em) {
      lo = f.f1 + f.f5 - f.f4;
      hi = f.f2;
    } else if (!rbar && hbar && !em) {
      lo = f.f2;
      hi = f.f2 + f.f6 - f.f5;
    } else {
      lo = f.f2 + f.f6 - f.f5;
      hi = 1.0;
    }
    Rng r(mixed, StreamId::EightSet, x);
    const double width = std::max(hi - lo, 0.0);
    const double ux = lo + width * r.u01();
    const bool ep = ux < f.f3;

    bool vb, eg;
    if (ep) {
      vb = true;
      eg = true;
    } else {
      const auto& cell = em ? calib.cls0[i] : calib.cls1[i];
      const double pick = r.u01();
      double acc2 = 0.0;
      int j = 3;
      for (int t = 0; t < 4; ++t) {
        acc2 += cell[t];
        if (pick < acc2) {
          j = t;
          break;
        }
      }
      vb = (j & 2) != 0;
      eg = (j & 1) != 0;
    }

    out.iu[i] = iu;
    out.h[i] = hset;
    out.hbar[i] = hbar;
    out.rbar[i] = rbar;
    out.e_minus[i] = em;
    out.e_plus[i] = ep;
    out.vbar[i] = vb;
    out.e_gamma[i] = eg;

    const bool a1 = iu && hset, a2 = iu && hbar, a3 = rbar && hbar, a4 = ep,
               a5 = vb && eg;
    if ((a1 && !a2) || (a2 && !a3) || (a3 && !a4) || (a4 && !a5))
      ++out.chain_violations;
  }
  return out;
}

}  // namespace gffil
