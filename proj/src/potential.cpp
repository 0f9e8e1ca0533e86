#include "gffil/potential.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

#include <Eigen/Dense>
#include <Eigen/Sparse>

#include "gffil/parallel.hpp"
#include "gffil/stats.hpp"

namespace gffil {

namespace {

std::size_t sorted_index(const std::vector<Vertex>& dom, Vertex v) {
  const auto it = std::lower_bound(dom.begin(), dom.end(), v);
  if (it == dom.end() || *it != v)
    throw std::out_of_range("vertex not in domain");
  return static_cast<std::size_t>(it - dom.begin());
}

void check_domain(const WeightedGraph& g, const std::vector<Vertex>& a) {
  if (a.empty()) throw std::invalid_argument("domain is empty");
  if (!std::is_sorted(a.begin(), a.end()))
    throw std::invalid_argument("domain must be sorted");
  for (Vertex v : a) {
    if (v >= g.vertex_count()) throw std::out_of_range("vertex not in window");
    if (g.on_frontier(v))
      throw std::invalid_argument("domain touches the window frontier");
  }
}

}  // namespace

struct KilledOperator::Impl {
  std::vector<Vertex> domain;
  std::vector<std::int64_t> pos;  // vertex id -> domain index, -1 outside
  Eigen::SparseMatrix<double> q;
  Eigen::SimplicialLDLT<Eigen::SparseMatrix<double>> solver;
  // iterative fallback for domains too large to factor
  Eigen::ConjugateGradient<Eigen::SparseMatrix<double>,
                           Eigen::Lower | Eigen::Upper>
      cg;
  bool use_cg = false;
};

KilledOperator::KilledOperator(const WeightedGraph& g,
                               const std::vector<Vertex>& domain)
    : impl_(new Impl) {
  check_domain(g, domain);
  impl_->domain = domain;
  impl_->pos.assign(g.vertex_count(), -1);
  for (std::size_t i = 0; i < domain.size(); ++i)
    impl_->pos[domain[i]] = static_cast<std::int64_t>(i);

  const std::size_t n = domain.size();
  std::vector<Eigen::Triplet<double>> trip;
  trip.reserve(n * 7);
  for (std::size_t i = 0; i < n; ++i) {
    const Vertex v = domain[i];
    trip.emplace_back(i, i, g.vertex_weights[v]);
    for (std::uint32_t k = g.offsets[v]; k < g.offsets[v + 1]; ++k) {
      const std::int64_t j = impl_->pos[g.adj[k]];
      if (j >= 0)
        trip.emplace_back(i, j, -g.edge_weight(g.adj_edge[k]));
    }
  }
  impl_->q.resize(n, n);
  impl_->q.setFromTriplets(trip.begin(), trip.end());
  impl_->use_cg = n > 60000;
  if (impl_->use_cg) {
    impl_->cg.setTolerance(1e-13);
    impl_->cg.setMaxIterations(200000);
    impl_->cg.compute(impl_->q);
  } else {
    impl_->solver.compute(impl_->q);
    if (impl_->solver.info() != Eigen::Success)
      throw std::runtime_error("killed operator factorization failed");
  }
}

KilledOperator::~KilledOperator() = default;
KilledOperator::KilledOperator(KilledOperator&&) noexcept = default;

const std::vector<Vertex>& KilledOperator::domain() const { return impl_->domain; }

std::size_t KilledOperator::index(Vertex v) const {
  const std::int64_t p = impl_->pos[v];
  if (p < 0) throw std::out_of_range("vertex not in domain");
  return static_cast<std::size_t>(p);
}

bool KilledOperator::contains(Vertex v) const {
  return v < impl_->pos.size() && impl_->pos[v] >= 0;
}

std::vector<double> KilledOperator::solve(const std::vector<double>& rhs) const {
  Eigen::Map<const Eigen::VectorXd> b(rhs.data(), rhs.size());
  Eigen::VectorXd z =
      impl_->use_cg ? impl_->cg.solve(b).eval() : impl_->solver.solve(b).eval();
  return std::vector<double>(z.data(), z.data() + z.size());
}

std::vector<double> KilledOperator::green_column(Vertex y) const {
  std::vector<double> rhs(impl_->domain.size(), 0.0);
  rhs[index(y)] = 1.0;
  return solve(rhs);
}

double KilledOperator::residual(const std::vector<double>& rhs,
                                const std::vector<double>& z) const {
  Eigen::Map<const Eigen::VectorXd> b(rhs.data(), rhs.size());
  Eigen::Map<const Eigen::VectorXd> x(z.data(), z.size());
  return (impl_->q * x - b).cwiseAbs().maxCoeff();
}

std::size_t GreenTable::index(Vertex v) const { return sorted_index(domain, v); }

std::vector<Vertex> window_interior(const WeightedGraph& g) {
  std::vector<Vertex> out;
  out.reserve(g.vertex_count());
  for (Vertex v = 0; v < g.vertex_count(); ++v)
    if (!g.on_frontier(v)) out.push_back(v);
  return out;
}

GreenTable killed_green(const WeightedGraph& g, const std::vector<Vertex>& a) {
  check_domain(g, a);
  const std::size_t n = a.size();
  if (n > 6000)
    throw std::invalid_argument("killed_green: domain too large for a dense table");

  Eigen::MatrixXd q = Eigen::MatrixXd::Zero(n, n);
  std::vector<std::int64_t> pos(g.vertex_count(), -1);
  for (std::size_t i = 0; i < n; ++i) pos[a[i]] = static_cast<std::int64_t>(i);
  for (std::size_t i = 0; i < n; ++i) {
    const Vertex v = a[i];
    q(i, i) = g.vertex_weights[v];
    for (std::uint32_t k = g.offsets[v]; k < g.offsets[v + 1]; ++k) {
      const std::int64_t j = pos[g.adj[k]];
      if (j >= 0) q(i, j) = -g.edge_weight(g.adj_edge[k]);
    }
  }
  Eigen::LLT<Eigen::MatrixXd> llt(q);
  if (llt.info() != Eigen::Success)
    throw std::runtime_error("killed_green: factorization failed");
  Eigen::MatrixXd green = llt.solve(Eigen::MatrixXd::Identity(n, n));
  // symmetrize away the solver noise and record it
  GreenTable t;
  t.domain = a;
  t.values.resize(n * n);
  double asym = 0.0;
  for (std::size_t i = 0; i < n; ++i)
    for (std::size_t j = 0; j < n; ++j) {
      asym = std::max(asym, std::fabs(green(i, j) - green(j, i)));
      t.values[i * n + j] = 0.5 * (green(i, j) + green(j, i));
    }
  const double res = (q * green - Eigen::MatrixXd::Identity(n, n)).cwiseAbs().maxCoeff();
  t.solver_residual = std::max(res, asym);
  return t;
}

GreenEstimate green_estimate(const WeightedGraph& g, const MetricSpec& m,
                             Vertex x, Vertex y,
                             const std::vector<Vertex>& outer, double c2) {
  KilledOperator op(g, outer);
  const auto col = op.green_column(y);
  GreenEstimate e;
  e.value = col[op.index(x)];
  // distance from {x,y} to the complement of `outer`
  double dist = std::numeric_limits<double>::infinity();
  std::vector<std::uint8_t> in(g.vertex_count(), 0);
  for (Vertex v : outer) in[v] = 1;
  for (Vertex v = 0; v < g.vertex_count(); ++v) {
    if (in[v]) continue;
    dist = std::min(dist, std::min(metric_distance(g, m, x, v),
                                   metric_distance(g, m, y, v)));
  }
  e.error_bound = c2 * std::pow(dist, -m.nu());
  return e;
}

HeatKernelResult heat_kernel(const WeightedGraph& g, Vertex x, int n,
                             double clip_tolerance) {
  if (n < 0) throw std::invalid_argument("heat_kernel: n must be >= 0");
  HeatKernelResult r;
  r.source = x;
  r.steps = n;
  const std::size_t nv = g.vertex_count();
  std::vector<double> v(nv, 0.0), w(nv, 0.0);
  v[x] = 1.0;
  for (int step = 0; step < n; ++step) {
    std::fill(w.begin(), w.end(), 0.0);
    for (Vertex a = 0; a < nv; ++a) {
      if (v[a] == 0.0 || g.on_frontier(a)) continue;  // frontier absorbs
      const double inv = v[a] / g.vertex_weights[a];
      for (std::uint32_t k = g.offsets[a]; k < g.offsets[a + 1]; ++k)
        w[g.adj[k]] += inv * g.edge_weight(g.adj_edge[k]);
    }
    v.swap(w);
  }
  double live = 0.0;
  r.values.resize(nv);
  for (Vertex a = 0; a < nv; ++a) {
    if (g.on_frontier(a) && n > 0) {
      r.values[a] = 0.0;
      continue;
    }
    live += v[a];
    r.values[a] = v[a] / g.vertex_weights[a];
  }
  r.absorbed_mass = 1.0 - live;
  r.window_clipped = r.absorbed_mass > clip_tolerance;
  return r;
}

EquilibriumMeasure equilibrium_measure(const WeightedGraph& g,
                                       const std::vector<Vertex>& a,
                                       const std::vector<Vertex>& u) {
  check_domain(g, u);
  std::vector<std::uint8_t> in_u(g.vertex_count(), 0), in_a(g.vertex_count(), 0);
  for (Vertex v : u) in_u[v] = 1;
  for (Vertex v : a) {
    if (!in_u[v]) throw std::invalid_argument("equilibrium_measure: A not inside U");
    in_a[v] = 1;
  }

  // escape probabilities h(y) = P_y(exit U before hitting A) on U \ A
  std::vector<Vertex> free;
  for (Vertex v : u)
    if (!in_a[v]) free.push_back(v);

  std::vector<double> h(g.vertex_count(), 0.0);
  if (!free.empty()) {
    KilledOperator op(g, free);
    std::vector<double> rhs(free.size(), 0.0);
    for (std::size_t i = 0; i < free.size(); ++i) {
      const Vertex v = free[i];
      for (std::uint32_t k = g.offsets[v]; k < g.offsets[v + 1]; ++k)
        if (!in_u[g.adj[k]]) rhs[i] += g.edge_weight(g.adj_edge[k]);
    }
    const auto z = op.solve(rhs);
    for (std::size_t i = 0; i < free.size(); ++i) h[free[i]] = z[i];
  }
  for (Vertex v = 0; v < g.vertex_count(); ++v)
    if (!in_u[v]) h[v] = 1.0;  // already outside U
  // h stays 0 on A

  EquilibriumMeasure e;
  e.support.assign(a.begin(), a.end());
  std::sort(e.support.begin(), e.support.end());
  e.mass.resize(e.support.size());
  for (std::size_t i = 0; i < e.support.size(); ++i) {
    const Vertex x = e.support[i];
    double s = 0.0;
    for (std::uint32_t k = g.offsets[x]; k < g.offsets[x + 1]; ++k)
      s += g.edge_weight(g.adj_edge[k]) * h[g.adj[k]];
    e.mass[i] = s;  // lambda_x * sum_y p_xy h(y)
    e.capacity += s;
  }
  return e;
}

CapacityResult capacity(const WeightedGraph& g, const std::vector<Vertex>& a,
                        const std::vector<Vertex>& u) {
  CapacityResult r;
  r.equilibrium = equilibrium_measure(g, a, u);
  r.capacity = r.equilibrium.capacity;

  // variational route: cap = 1^T G_A^{-1} 1 with G_A the killed Green matrix
  // of U restricted to A
  std::vector<Vertex> a_sorted(a.begin(), a.end());
  std::sort(a_sorted.begin(), a_sorted.end());
  KilledOperator op(g, u);
  const std::size_t n = a_sorted.size();
  Eigen::MatrixXd green(n, n);
  for (std::size_t j = 0; j < n; ++j) {
    const auto col = op.green_column(a_sorted[j]);
    for (std::size_t i = 0; i < n; ++i) green(i, j) = col[op.index(a_sorted[i])];
  }
  green = 0.5 * (green + green.transpose()).eval();
  Eigen::LLT<Eigen::MatrixXd> llt(green);
  if (llt.info() != Eigen::Success)
    throw std::runtime_error("capacity: singular Green matrix on A");
  const Eigen::VectorXd w = llt.solve(Eigen::VectorXd::Ones(n));
  r.variational = w.sum();
  return r;
}

ExitTimeStats exit_time_stats(const WeightedGraph& g, const MetricSpec& m,
                              Vertex x, double radius, std::size_t nsamples,
                              std::uint64_t seed, int threads) {
  const BallResult b = ball(g, m, x, radius);
  if (b.window_clipped)
    throw std::invalid_argument("exit_time_stats: ball touches the frontier");

  ExitTimeStats r;
  {
    KilledOperator op(g, b.members);
    const auto col = op.green_column(x);  // g_B(., x) = g_B(x, .)
    double s = 0.0;
    for (std::size_t i = 0; i < b.members.size(); ++i)
      s += g.vertex_weights[b.members[i]] * col[i];
    r.exact_mean = s;
  }

  std::vector<std::uint8_t> in(g.vertex_count(), 0);
  for (Vertex v : b.members) in[v] = 1;

  std::vector<double> times(nsamples);
  // alias-free neighbor sampling: cumulative weights per vertex would cost
  // memory; weights are near-uniform here so inverse-cdf over the star is fine
  parallel_for(
      static_cast<std::int64_t>(nsamples),
      [&](std::int64_t i) {
        Rng rng(seed, StreamId::ExitTime, static_cast<std::uint64_t>(i));
        Vertex v = x;
        std::uint64_t t = 0;
        while (in[v]) {
          const double target = rng.u01() * g.vertex_weights[v];
          double acc = 0.0;
          Vertex nxt = g.adj[g.offsets[v]];
          for (std::uint32_t k = g.offsets[v]; k < g.offsets[v + 1]; ++k) {
            acc += g.edge_weight(g.adj_edge[k]);
            if (target < acc) {
              nxt = g.adj[k];
              break;
            }
          }
          v = nxt;
          ++t;
        }
        times[i] = static_cast<double>(t);
      },
      threads);

  const MeanStderr ms = mean_stderr(times);
  r.mean = ms.mean;
  r.stderr_ = ms.stderr_;
  std::vector<double> sorted(times);
  std::sort(sorted.begin(), sorted.end());
  for (double q : {0.5, 1.0, 2.0, 4.0, 8.0}) {
    const double t = q * r.exact_mean;
    const auto it = std::upper_bound(sorted.begin(), sorted.end(), t);
    r.tail_times.push_back(t);
    r.tail_probs.push_back(static_cast<double>(sorted.end() - it) /
                           static_cast<double>(nsamples));
  }
  return r;
}

double harnack_ratio(const WeightedGraph& g, const std::vector<Vertex>& u1,
                     const std::vector<Vertex>& u2,
                     const std::vector<double>& f_values) {
  // harmonicity check on u2
  double scale = 0.0;
  for (Vertex v : u2) scale = std::max(scale, std::fabs(f_values[v]));
  if (scale == 0.0) scale = 1.0;
  for (Vertex v : u2) {
    double lf = 0.0;
    for (std::uint32_t k = g.offsets[v]; k < g.offsets[v + 1]; ++k)
      lf += g.edge_weight(g.adj_edge[k]) * (f_values[g.adj[k]] - f_values[v]);
    if (std::fabs(lf / g.vertex_weights[v]) > 1e-9 * scale)
      throw std::invalid_argument("harnack_ratio: f is not harmonic on U2");
  }
  double lo = std::numeric_limits<double>::infinity(), hi = 0.0;
  for (Vertex v : u1) {
    if (f_values[v] < 0.0)
      throw std::invalid_argument("harnack_ratio: f has a negative value");
    lo = std::min(lo, f_values[v]);
    hi = std::max(hi, f_values[v]);
  }
  if (lo == 0.0) return std::numeric_limits<double>::infinity();
  return hi / lo;
}

std::vector<double> harmonic_extension(const WeightedGraph& g,
                                       const std::vector<Vertex>& domain,
                                       const std::vector<double>& boundary) {
  KilledOperator op(g, domain);
  std::vector<std::uint8_t> in(g.vertex_count(), 0);
  for (Vertex v : domain) in[v] = 1;
  std::vector<double> rhs(domain.size(), 0.0);
  for (std::size_t i = 0; i < domain.size(); ++i) {
    const Vertex v = domain[i];
    for (std::uint32_t k = g.offsets[v]; k < g.offsets[v + 1]; ++k)
      if (!in[g.adj[k]])
        rhs[i] += g.edge_weight(g.adj_edge[k]) * boundary[g.adj[k]];
  }
  const auto z = op.solve(rhs);
  std::vector<double> out(boundary);
  for (std::size_t i = 0; i < domain.size(); ++i) out[domain[i]] = z[i];
  return out;
}

}  // namespace gffil
