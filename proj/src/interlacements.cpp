#include "gffil/interlacements.hpp"

#include <algorithm>
#include <cmath>
#include <deque>
#include <stdexcept>

#include "gffil/parallel.hpp"
#include "gffil/stats.hpp"

namespace gffil {

namespace {

// weighted neighbor step; uniform graphs take the cheap path
inline Vertex step(const WeightedGraph& g, Vertex v, Rng& rng) {
  const std::uint32_t off = g.offsets[v];
  const std::uint32_t deg = g.offsets[v + 1] - off;
  if (g.edge_weights.empty())
    return g.adj[off + rng.below(deg)];
  const double target = rng.u01() * g.vertex_weights[v];
  double acc = 0.0;
  for (std::uint32_t k = 0; k < deg; ++k) {
    acc += g.edge_weight(g.adj_edge[off + k]);
    if (target < acc) return g.adj[off + k];
  }
  return g.adj[off + deg - 1];
}

inline std::uint32_t step_edge(const WeightedGraph& g, Vertex v, Vertex w) {
  for (std::uint32_t k = g.offsets[v]; k < g.offsets[v + 1]; ++k)
    if (g.adj[k] == w) return g.adj_edge[k];
  throw std::logic_error("step_edge: not adjacent");
}

std::vector<Vertex> kill_set_of(const WeightedGraph& g,
                                const std::vector<Vertex>& k,
                                const KillSpec& spec) {
  std::vector<Vertex> kill;
  if (spec.kind == KillSpec::Kind::Frontier) {
    for (Vertex v = 0; v < g.vertex_count(); ++v)
      if (g.on_frontier(v)) kill.push_back(v);
    return kill;
  }
  // shell: graph distance from K of at least shell_radius, or the frontier
  std::vector<int> dist(g.vertex_count(), -1);
  std::deque<Vertex> q;
  for (Vertex v : k) {
    dist[v] = 0;
    q.push_back(v);
  }
  while (!q.empty()) {
    const Vertex v = q.front();
    q.pop_front();
    for (std::uint32_t i = g.offsets[v]; i < g.offsets[v + 1]; ++i)
      if (dist[g.adj[i]] < 0) {
        dist[g.adj[i]] = dist[v] + 1;
        q.push_back(g.adj[i]);
      }
  }
  for (Vertex v = 0; v < g.vertex_count(); ++v)
    if (g.on_frontier(v) || dist[v] < 0 || dist[v] >= spec.shell_radius)
      kill.push_back(v);
  return kill;
}

}  // namespace

InterlacementSampler::InterlacementSampler(const WeightedGraph& g,
                                           const std::vector<Vertex>& k,
                                           const InterlacementOptions& opts)
    : g_(g), opts_(opts) {
  target_.assign(k.begin(), k.end());
  std::sort(target_.begin(), target_.end());

  std::vector<Vertex> kill = kill_set_of(g, target_, opts.kill);
  killed_.assign(g.vertex_count(), 0);
  for (Vertex v : kill) killed_[v] = 1;
  for (Vertex v : target_)
    if (killed_[v])
      throw std::invalid_argument("interlacement: target meets the kill set");
  active_.reserve(g.vertex_count() - kill.size());
  for (Vertex v = 0; v < g.vertex_count(); ++v)
    if (!killed_[v]) active_.push_back(v);

  if (opts.kill.min_sep_factor > 0.0) {
    // graph-distance proxies for d(K, kill) and diam(K)
    std::vector<int> dist(g.vertex_count(), -1);
    std::deque<Vertex> q;
    for (Vertex v : target_) {
      dist[v] = 0;
      q.push_back(v);
    }
    int dk = -1;
    int diam = 0;
    while (!q.empty()) {
      const Vertex v = q.front();
      q.pop_front();
      if (killed_[v]) {
        dk = dist[v];
        break;
      }
      for (std::uint32_t i = g.offsets[v]; i < g.offsets[v + 1]; ++i)
        if (dist[g.adj[i]] < 0) {
          dist[g.adj[i]] = dist[v] + 1;
          q.push_back(g.adj[i]);
        }
    }
    for (std::size_t i = 0; i < target_.size(); ++i)
      for (std::size_t j = i + 1; j < target_.size(); ++j) {
        int d = 0;
        const int* a = g.coord(target_[i]);
        const int* b = g.coord(target_[j]);
        for (int t = 0; t < g.coord_dim; ++t) d += std::abs(a[t] - b[t]);
        diam = std::max(diam, d);
      }
    if (dk >= 0 && dk < opts.kill.min_sep_factor * std::max(diam, 1))
      throw std::invalid_argument(
          "interlacement: kill shell too close to the target "
          "(d(K, kill) < factor * diam(K))");
  }

  const EquilibriumMeasure eq = equilibrium_measure(g, target_, active_);
  cap_ = eq.capacity;
  support_ = eq.support;
  entrance_cdf_.resize(eq.mass.size());
  double acc = 0.0;
  for (std::size_t i = 0; i < eq.mass.size(); ++i) {
    acc += eq.mass[i];
    entrance_cdf_[i] = acc;
  }
}

InterlacementSample InterlacementSampler::sample(double u, std::uint64_t seed,
                                                 std::uint64_t index) const {
  if (u < 0.0) throw std::invalid_argument("interlacement: u must be >= 0");
  const WeightedGraph& g = g_;
  InterlacementSample s;
  s.u = u;
  s.seed = seed;
  s.index = index;
  s.target = target_;
  s.active = active_;
  s.killed = killed_;
  s.cap = cap_;
  const std::vector<double>& cdf = entrance_cdf_;
  const double acc = cdf.empty() ? 0.0 : cdf.back();

  Rng count_rng(seed, StreamId::Interlacement, index, ~0ULL);
  const std::uint64_t n_traj = count_rng.poisson(u * s.cap);
  s.trajectories.resize(n_traj);

  const int nt = resolve_threads(opts_.threads);
  std::vector<std::vector<std::uint32_t>> counts(
      nt, std::vector<std::uint32_t>(g.vertex_count(), 0));
  std::vector<std::vector<std::uint8_t>> marks(
      nt, std::vector<std::uint8_t>(g.edge_count(), 0));
  std::vector<std::uint8_t> capped(nt, 0);

#ifdef _OPENMP
#pragma omp parallel for schedule(dynamic, 1) num_threads(nt)
#endif
  for (std::int64_t t = 0; t < static_cast<std::int64_t>(n_traj); ++t) {
#ifdef _OPENMP
    const int tid = omp_get_thread_num();
#else
    const int tid = 0;
#endif
    auto& cnt = counts[tid];
    auto& mrk = marks[tid];
    Rng rng(seed, StreamId::Interlacement, index, static_cast<std::uint64_t>(t));
    Trajectory& traj = s.trajectories[t];
    traj.label = u * rng.u01_open0();
    // entrance ~ normalized equilibrium measure
    const double pick = rng.u01() * acc;
    const std::size_t ei =
        std::lower_bound(cdf.begin(), cdf.end(), pick) - cdf.begin();
    Vertex v = support_[std::min(ei, cdf.size() - 1)];
    traj.entrance = v;
    traj.cause = KillCause::Shell;
    std::uint64_t steps = 0;
    while (!s.killed[v]) {
      traj.path.push_back(v);
      ++cnt[v];
      if (++steps > opts_.step_cap) {
        traj.cause = KillCause::StepCap;
        capped[tid] = 1;
        break;
      }
      const Vertex w = step(g, v, rng);
      mrk[step_edge(g, v, w)] = 1;
      v = w;
    }
  }

  s.visit_counts.assign(g.vertex_count(), 0);
  for (int t = 0; t < nt; ++t)
    for (std::size_t v = 0; v < g.vertex_count(); ++v)
      s.visit_counts[v] += counts[t][v];
  s.edge_traversed.assign(g.edge_count(), 0);
  for (int t = 0; t < nt; ++t)
    for (std::size_t e = 0; e < g.edge_count(); ++e)
      s.edge_traversed[e] |= marks[t][e];
  for (int t = 0; t < nt; ++t) s.step_cap_hit |= (capped[t] != 0);
  if (s.step_cap_hit)
    throw std::runtime_error("interlacement: step cap exceeded");
  return s;
}

InterlacementSample sample_interlacement(const WeightedGraph& g, double u,
                                         const std::vector<Vertex>& k,
                                         std::uint64_t seed,
                                         std::uint64_t index,
                                         const InterlacementOptions& opts) {
  return InterlacementSampler(g, k, opts).sample(u, seed, index);
}

std::vector<double> occupation_field(const WeightedGraph& g,
                                     const InterlacementSample& s) {
  std::vector<double> ell(g.vertex_count(), 0.0);
  for (Vertex v = 0; v < g.vertex_count(); ++v)
    if (s.visit_counts[v] > 0)
      ell[v] = static_cast<double>(s.visit_counts[v]) / g.vertex_weights[v];
  return ell;
}

std::vector<Vertex> vacant_set(const WeightedGraph& g,
                               const InterlacementSample& s) {
  std::vector<Vertex> out;
  for (Vertex v : s.active)
    if (s.visit_counts[v] == 0) out.push_back(v);
  return out;
}

std::vector<std::uint32_t> visit_counts_at_level(const WeightedGraph& g,
                                                 const InterlacementSample& s,
                                                 double level) {
  std::vector<std::uint32_t> counts(g.vertex_count(), 0);
  for (const Trajectory& t : s.trajectories) {
    if (t.label > level) continue;
    for (Vertex v : t.path) ++counts[v];
  }
  return counts;
}

std::vector<Excursion> excursion_process(const WeightedGraph& g,
                                         const std::vector<Vertex>& b,
                                         const std::vector<Vertex>& v,
                                         Vertex start, std::uint64_t seed,
                                         std::uint64_t index) {
  std::vector<std::uint8_t> in_b(g.vertex_count(), 0), in_v(g.vertex_count(), 0);
  for (Vertex x : b) in_b[x] = 1;
  for (Vertex x : v) {
    if (in_b[x]) throw std::invalid_argument("excursion_process: B and V overlap");
    in_v[x] = 1;
  }
  std::vector<Excursion> out;
  Rng rng(seed, StreamId::SoftLocal, index, 0x52);
  Vertex cur = start;
  bool inside = false;  // currently recording an excursion
  Excursion e;
  while (!g.on_frontier(cur)) {
    if (!inside && in_b[cur]) {
      inside = true;
      e.path.clear();
    }
    if (inside) {
      e.path.push_back(cur);
      if (in_v[cur]) {  // excursion complete
        out.push_back(e);
        inside = false;
      }
    }
    cur = step(g, cur, rng);
  }
  if (inside) {
    e.reached_v = false;
    out.push_back(e);
  }
  return out;
}

struct ExcursionKernel::Impl {
  const WeightedGraph* g = nullptr;
  std::vector<Vertex> b, v;
  std::vector<Vertex> boundary;
  std::vector<std::size_t> bpos;       // vertex id -> boundary index (+1), 0 = absent
  std::vector<double> hit;             // |v| x (nb + 1)
  std::vector<std::size_t> vpos;       // vertex id -> row (+1)
  std::vector<double> entrance_cdf;    // over v
  double cap_v = 0.0;
};

ExcursionKernel::ExcursionKernel(const WeightedGraph& g, std::vector<Vertex> b,
                                 std::vector<Vertex> v)
    : impl_(new Impl) {
  impl_->g = &g;
  std::sort(b.begin(), b.end());
  std::sort(v.begin(), v.end());
  impl_->b = b;
  impl_->v = v;

  std::vector<std::uint8_t> in_b(g.vertex_count(), 0), in_v(g.vertex_count(), 0);
  for (Vertex x : b) in_b[x] = 1;
  for (Vertex x : v) {
    if (in_b[x]) throw std::invalid_argument("excursion kernel: B and V overlap");
    in_v[x] = 1;
  }

  // V must separate B from the frontier: the component of B in G \ V avoids it
  {
    std::vector<std::uint8_t> seen(g.vertex_count(), 0);
    std::deque<Vertex> q;
    for (Vertex x : b) {
      seen[x] = 1;
      q.push_back(x);
    }
    while (!q.empty()) {
      const Vertex x = q.front();
      q.pop_front();
      if (g.on_frontier(x))
        throw std::invalid_argument("excursion kernel: V does not separate B");
      for (std::uint32_t i = g.offsets[x]; i < g.offsets[x + 1]; ++i) {
        const Vertex w = g.adj[i];
        if (!seen[w] && !in_v[w]) {
          seen[w] = 1;
          q.push_back(w);
        }
      }
    }
  }

  // inner boundary of B
  for (Vertex x : b)
    for (std::uint32_t i = g.offsets[x]; i < g.offsets[x + 1]; ++i)
      if (!in_b[g.adj[i]]) {
        impl_->boundary.push_back(x);
        break;
      }
  const std::size_t nb = impl_->boundary.size();
  impl_->bpos.assign(g.vertex_count(), 0);
  for (std::size_t i = 0; i < nb; ++i) impl_->bpos[impl_->boundary[i]] = i + 1;

  // hitting distributions: harmonic solves on interior \ B, absorbing at B
  // (split by target) and at the frontier (cemetery)
  std::vector<Vertex> dom;
  for (Vertex x = 0; x < g.vertex_count(); ++x)
    if (!g.on_frontier(x) && !in_b[x]) dom.push_back(x);
  KilledOperator op(g, dom);

  impl_->vpos.assign(g.vertex_count(), 0);
  for (std::size_t i = 0; i < impl_->v.size(); ++i)
    impl_->vpos[impl_->v[i]] = i + 1;
  impl_->hit.assign(impl_->v.size() * (nb + 1), 0.0);
  for (std::size_t xi = 0; xi < nb; ++xi) {
    const Vertex x = impl_->boundary[xi];
    std::vector<double> rhs(dom.size(), 0.0);
    for (std::uint32_t i = g.offsets[x]; i < g.offsets[x + 1]; ++i) {
      const Vertex y = g.adj[i];
      if (op.contains(y)) rhs[op.index(y)] += g.edge_weight(g.adj_edge[i]);
    }
    const auto col = op.solve(rhs);
    for (std::size_t vi = 0; vi < impl_->v.size(); ++vi) {
      const Vertex y = impl_->v[vi];
      impl_->hit[vi * (nb + 1) + xi] = col[op.index(y)];
    }
  }
  // cemetery column and normalization: the solves above give
  // h_x(y) = P_y(hit B at x before the frontier) directly
  for (std::size_t vi = 0; vi < impl_->v.size(); ++vi) {
    double s = 0.0;
    for (std::size_t xi = 0; xi < nb; ++xi) s += impl_->hit[vi * (nb + 1) + xi];
    impl_->hit[vi * (nb + 1) + nb] = std::max(0.0, 1.0 - s);
  }

  // entrance law on V relative to the frontier
  std::vector<Vertex> interior;
  for (Vertex x = 0; x < g.vertex_count(); ++x)
    if (!g.on_frontier(x)) interior.push_back(x);
  const EquilibriumMeasure eq = equilibrium_measure(g, impl_->v, interior);
  impl_->cap_v = eq.capacity;
  impl_->entrance_cdf.resize(eq.mass.size());
  double acc = 0.0;
  for (std::size_t i = 0; i < eq.mass.size(); ++i) {
    acc += eq.mass[i];
    impl_->entrance_cdf[i] = acc;
  }
}

ExcursionKernel::~ExcursionKernel() = default;
ExcursionKernel::ExcursionKernel(ExcursionKernel&&) noexcept = default;

const WeightedGraph& ExcursionKernel::graph() const { return *impl_->g; }
const std::vector<Vertex>& ExcursionKernel::b_set() const { return impl_->b; }
const std::vector<Vertex>& ExcursionKernel::v_set() const { return impl_->v; }
const std::vector<Vertex>& ExcursionKernel::boundary() const {
  return impl_->boundary;
}
double ExcursionKernel::cap_v() const { return impl_->cap_v; }

double ExcursionKernel::hit_probability(Vertex y, std::size_t x_index) const {
  const std::size_t row = impl_->vpos[y];
  if (row == 0) throw std::out_of_range("hit_probability: y not in V");
  return impl_->hit[(row - 1) * (impl_->boundary.size() + 1) + x_index];
}

std::size_t ExcursionKernel::boundary_index(Vertex x) const {
  const std::size_t i = impl_->bpos[x];
  if (i == 0) throw std::out_of_range("boundary_index: not a boundary vertex");
  return i - 1;
}

Vertex ExcursionKernel::sample_entrance(Rng& rng) const {
  const double total = impl_->entrance_cdf.back();
  const double pick = rng.u01() * total;
  const std::size_t i =
      std::lower_bound(impl_->entrance_cdf.begin(), impl_->entrance_cdf.end(),
                       pick) -
      impl_->entrance_cdf.begin();
  return impl_->v[std::min(i, impl_->v.size() - 1)];
}

SoftLocalTimeRun soft_local_time(const ExcursionKernel& kernel,
                                 std::uint64_t seed, std::uint64_t index) {
  const WeightedGraph& g = kernel.graph();
  const auto& boundary = kernel.boundary();
  const std::size_t nb = boundary.size();

  std::vector<std::uint8_t> in_v(g.vertex_count(), 0);
  for (Vertex x : kernel.v_set()) in_v[x] = 1;

  SoftLocalTimeRun run;
  run.f1.assign(nb + 1, 0.0);

  // per-start-point Poisson arrival streams on [0, inf)
  std::vector<double> next_arrival(nb + 1);
  std::vector<Rng> arrival_rng;
  arrival_rng.reserve(nb + 1);
  for (std::size_t i = 0; i <= nb; ++i) {
    arrival_rng.emplace_back(seed, StreamId::SoftLocal, index, 0x100 + i);
    next_arrival[i] = arrival_rng.back().exponential();
  }
  Rng chain_rng(seed, StreamId::SoftLocal, index, 0x0);

  Vertex y = kernel.sample_entrance(chain_rng);  // sigma_0 endpoint
  while (true) {
    // xi_n = min over start points of (arrival - Gamma) / p(y, .)
    double best = std::numeric_limits<double>::infinity();
    std::size_t best_i = nb;
    for (std::size_t i = 0; i <= nb; ++i) {
      const double p = kernel.hit_probability(y, i);
      if (p <= 0.0) continue;
      const double xi = (next_arrival[i] - run.f1[i]) / p;
      if (xi < best) {
        best = xi;
        best_i = i;
      }
    }
    for (std::size_t i = 0; i <= nb; ++i)
      run.f1[i] += best * kernel.hit_probability(y, i);
    // consume the selected point
    next_arrival[best_i] += arrival_rng[best_i].exponential();
    ++run.t_b;
    if (best_i == nb) {  // cemetery selected: chain over
      run.chain_starts.push_back(kNoVertex);
      break;
    }
    // sample the actual excursion from the selected start to V
    Vertex cur = boundary[best_i];
    run.chain_starts.push_back(cur);
    while (!in_v[cur]) {
      Vertex nxt;
      {
        const std::uint32_t off = g.offsets[cur];
        const std::uint32_t deg = g.offsets[cur + 1] - off;
        if (g.edge_weights.empty()) {
          nxt = g.adj[off + chain_rng.below(deg)];
        } else {
          const double target = chain_rng.u01() * g.vertex_weights[cur];
          double acc = 0.0;
          nxt = g.adj[off];
          for (std::uint32_t k = 0; k < deg; ++k) {
            acc += g.edge_weight(g.adj_edge[off + k]);
            if (target < acc) {
              nxt = g.adj[off + k];
              break;
            }
          }
        }
      }
      cur = nxt;
    }
    run.chain_ends.push_back(cur);
    y = cur;
  }
  return run;
}

SoftLocalMoments soft_local_time_moments(const ExcursionKernel& kernel,
                                         std::size_t nsamples,
                                         std::uint64_t seed, int threads) {
  const std::size_t nb = kernel.boundary().size();
  std::vector<std::vector<double>> f1s(nsamples);
  std::vector<double> tbs(nsamples);
  parallel_for(
      static_cast<std::int64_t>(nsamples),
      [&](std::int64_t i) {
        const auto run = soft_local_time(kernel, seed, i);
        f1s[i] = run.f1;
        tbs[i] = run.t_b;
      },
      threads);

  SoftLocalMoments m;
  m.boundary = kernel.boundary();
  m.pi.assign(nb, 0.0);
  m.pi_stderr.assign(nb, 0.0);
  m.m2.assign(nb, 0.0);
  std::vector<double> col(nsamples);
  for (std::size_t x = 0; x < nb; ++x) {
    for (std::size_t i = 0; i < nsamples; ++i) col[i] = f1s[i][x];
    const MeanStderr ms = mean_stderr(col);
    m.pi[x] = ms.mean;
    m.pi_stderr[x] = ms.stderr_;
    for (std::size_t i = 0; i < nsamples; ++i) col[i] = f1s[i][x] * f1s[i][x];
    m.m2[x] = mean_stderr(col).mean;
  }
  m.tail_prob.assign(m.tail_v.size(), 0.0);
  std::size_t denom = 0;
  for (std::size_t x = 0; x < nb; ++x) {
    if (m.pi[x] <= 0.0) continue;
    denom += nsamples;
    for (std::size_t i = 0; i < nsamples; ++i)
      for (std::size_t t = 0; t < m.tail_v.size(); ++t)
        if (f1s[i][x] >= m.pi[x] * m.tail_v[t]) m.tail_prob[t] += 1.0;
  }
  for (double& p : m.tail_prob) p /= std::max<std::size_t>(denom, 1);
  m.mean_t_b = mean_stderr(tbs).mean;
  return m;
}

std::vector<double> direct_excursion_counts(const ExcursionKernel& kernel,
                                            std::size_t nsamples,
                                            std::uint64_t seed, int threads) {
  const WeightedGraph& g = kernel.graph();
  const std::size_t nb = kernel.boundary().size();
  const int nt = resolve_threads(threads);
  std::vector<std::vector<double>> acc(nt, std::vector<double>(nb, 0.0));

#ifdef _OPENMP
#pragma omp parallel for schedule(dynamic, 1) num_threads(nt)
#endif
  for (std::int64_t i = 0; i < static_cast<std::int64_t>(nsamples); ++i) {
#ifdef _OPENMP
    const int tid = omp_get_thread_num();
#else
    const int tid = 0;
#endif
    Rng rng(seed, StreamId::SoftLocal, static_cast<std::uint64_t>(i), 0x51);
    const Vertex start = kernel.sample_entrance(rng);
    const auto exc = excursion_process(g, kernel.b_set(), kernel.v_set(), start,
                                       seed, static_cast<std::uint64_t>(i));
    for (const auto& e : exc)
      if (!e.path.empty())
        acc[tid][kernel.boundary_index(e.path.front())] += 1.0;
  }
  std::vector<double> pi(nb, 0.0);
  for (int t = 0; t < nt; ++t)
    for (std::size_t x = 0; x < nb; ++x) pi[x] += acc[t][x];
  for (double& p : pi) p /= static_cast<double>(nsamples);
  return pi;
}

}  // namespace gffil
