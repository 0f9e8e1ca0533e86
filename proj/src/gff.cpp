#include "gffil/gff.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

#include <Eigen/Dense>
#include <Eigen/Sparse>

namespace gffil {

namespace {

class CholeskySampler final : public GffSampler {
 public:
  CholeskySampler(const WeightedGraph& g, std::vector<Vertex> domain)
      : nvert_(g.vertex_count()), domain_(std::move(domain)) {
    if (!std::is_sorted(domain_.begin(), domain_.end()))
      throw std::invalid_argument("gff domain must be sorted");
    std::vector<std::int64_t> pos(g.vertex_count(), -1);
    for (std::size_t i = 0; i < domain_.size(); ++i) {
      const Vertex v = domain_[i];
      if (g.on_frontier(v))
        throw std::invalid_argument("gff domain touches the frontier");
      pos[v] = static_cast<std::int64_t>(i);
    }
    const std::size_t n = domain_.size();
    std::vector<Eigen::Triplet<double>> trip;
    trip.reserve(n * 7);
    for (std::size_t i = 0; i < n; ++i) {
      const Vertex v = domain_[i];
      trip.emplace_back(i, i, g.vertex_weights[v]);
      for (std::uint32_t k = g.offsets[v]; k < g.offsets[v + 1]; ++k) {
        const std::int64_t j = pos[g.adj[k]];
        if (j >= 0) trip.emplace_back(i, j, -g.edge_weight(g.adj_edge[k]));
      }
    }
    Eigen::SparseMatrix<double> q(n, n);
    q.setFromTriplets(trip.begin(), trip.end());
    solver_.compute(q);
    if (solver_.info() != Eigen::Success)
      throw std::runtime_error("gff precision factorization failed");
  }

  FieldSample sample(std::uint64_t seed, std::uint64_t index) const override {
    Rng rng(seed, StreamId::Gff, index);
    const std::size_t n = domain_.size();
    Eigen::VectorXd z(n);
    for (std::size_t i = 0; i < n; ++i) z[i] = rng.gauss();
    // precision Q = P^T L L^T P  =>  phi = P^T L^{-T} z has covariance Q^{-1}
    Eigen::VectorXd y = solver_.matrixU().solve(z);
    Eigen::VectorXd phi = solver_.permutationPinv() * y;
    FieldSample f;
    f.seed = seed;
    f.index = index;
    f.domain = domain_;
    f.values.assign(nvert_, 0.0);
    for (std::size_t i = 0; i < n; ++i) f.values[domain_[i]] = phi[i];
    return f;
  }

  const std::vector<Vertex>& domain() const override { return domain_; }
  const char* backend() const override { return "cholesky"; }

 private:
  std::size_t nvert_;
  std::vector<Vertex> domain_;
  Eigen::SimplicialLLT<Eigen::SparseMatrix<double>> solver_;
};

using RowMat =
    Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;

class SpectralBoxSampler final : public GffSampler {
 public:
  explicit SpectralBoxSampler(const WeightedGraph& g)
      : nvert_(g.vertex_count()) {
    if (g.family != Family::Zd || g.param_dim != 3)
      throw std::invalid_argument("spectral sampler: needs a 3d lattice window");
    n_ = 2 * g.param_radius - 1;  // interior side
    radius_ = g.param_radius;
    domain_ = window_interior(g);
    if (domain_.size() != static_cast<std::size_t>(n_) * n_ * n_)
      throw std::runtime_error("spectral sampler: unexpected interior");

    // sine transform matrix, orthogonal and symmetric
    s_.resize(n_, n_);
    const double norm = std::sqrt(2.0 / (n_ + 1));
    for (int j = 0; j < n_; ++j)
      for (int k = 0; k < n_; ++k)
        s_(j, k) = norm * std::sin(M_PI * (j + 1.0) * (k + 1.0) / (n_ + 1));
    inv_sqrt_mu_.resize(static_cast<std::size_t>(n_) * n_ * n_);
    std::vector<double> ev(n_);
    for (int k = 0; k < n_; ++k)
      ev[k] = 2.0 * (1.0 - std::cos(M_PI * (k + 1.0) / (n_ + 1)));
    std::size_t idx = 0;
    for (int a = 0; a < n_; ++a)
      for (int b = 0; b < n_; ++b)
        for (int c = 0; c < n_; ++c)
          inv_sqrt_mu_[idx++] = 1.0 / std::sqrt(ev[a] + ev[b] + ev[c]);

    // map interior lattice offsets to vertex ids once
    vertex_of_.resize(domain_.size());
    const int side = 2 * radius_ + 1;
    for (Vertex v : domain_) {
      const int* c = g.coord(v);
      const std::size_t flat =
          (static_cast<std::size_t>(c[0] + radius_ - 1) * n_ +
           (c[1] + radius_ - 1)) * n_ + (c[2] + radius_ - 1);
      vertex_of_[flat] = v;
    }
    (void)side;
  }

  FieldSample sample(std::uint64_t seed, std::uint64_t index) const override {
    Rng rng(seed, StreamId::Gff, index);
    const std::size_t total = inv_sqrt_mu_.size();
    std::vector<double> buf(total), tmp(total);
    for (std::size_t i = 0; i < total; ++i) buf[i] = rng.gauss() * inv_sqrt_mu_[i];

    const int n = n_;
    // axis 2 (innermost): rows of an (n^2, n) view times S
    {
      Eigen::Map<RowMat> a(buf.data(), n * n, n);
      Eigen::Map<RowMat> b(tmp.data(), n * n, n);
      b.noalias() = a * s_;
      buf.swap(tmp);
    }
    // axis 1: per outer slice, S times the (n, n) block
    {
      for (int i = 0; i < n; ++i) {
        Eigen::Map<RowMat> a(buf.data() + std::size_t(i) * n * n, n, n);
        Eigen::Map<RowMat> b(tmp.data() + std::size_t(i) * n * n, n, n);
        b.noalias() = s_ * a;
      }
      buf.swap(tmp);
    }
    // axis 0: S times the (n, n^2) view
    {
      Eigen::Map<RowMat> a(buf.data(), n, n * n);
      Eigen::Map<RowMat> b(tmp.data(), n, n * n);
      b.noalias() = s_ * a;
      buf.swap(tmp);
    }

    FieldSample f;
    f.seed = seed;
    f.index = index;
    f.domain = domain_;
    f.values.assign(nvert_, 0.0);
    for (std::size_t flat = 0; flat < total; ++flat)
      f.values[vertex_of_[flat]] = buf[flat];
    return f;
  }

  const std::vector<Vertex>& domain() const override { return domain_; }
  const char* backend() const override { return "spectral"; }

 private:
  std::size_t nvert_;
  int n_ = 0;
  int radius_ = 0;
  std::vector<Vertex> domain_;
  std::vector<Vertex> vertex_of_;
  RowMat s_;
  std::vector<double> inv_sqrt_mu_;
};

}  // namespace

std::unique_ptr<GffSampler> make_cholesky_sampler(const WeightedGraph& g,
                                                  std::vector<Vertex> domain) {
  return std::make_unique<CholeskySampler>(g, std::move(domain));
}

std::unique_ptr<GffSampler> make_spectral_sampler(const WeightedGraph& g) {
  return std::make_unique<SpectralBoxSampler>(g);
}

MarkovDecomposition markov_decompose(const WeightedGraph& g,
                                     const FieldSample& field,
                                     const std::vector<Vertex>& k) {
  std::vector<std::uint8_t> in_k(g.vertex_count(), 0);
  for (Vertex v : k) {
    if (!std::binary_search(field.domain.begin(), field.domain.end(), v))
      throw std::invalid_argument("markov_decompose: K not inside the domain");
    in_k[v] = 1;
  }
  std::vector<Vertex> free;
  for (Vertex v : field.domain)
    if (!in_k[v]) free.push_back(v);

  MarkovDecomposition d;
  if (free.empty()) {
    d.harmonic = field.values;
    d.bulk.assign(field.values.size(), 0.0);
    return d;
  }
  if (k.empty()) {
    d.harmonic.assign(field.values.size(), 0.0);
    d.bulk = field.values;
    return d;
  }
  // boundary data: the field itself (zero outside the domain already)
  d.harmonic = harmonic_extension(g, free, field.values);
  // outside domain and off K the extension must stay zero; harmonic_extension
  // keeps boundary values, so zero out the exterior explicitly
  std::vector<std::uint8_t> in_dom(g.vertex_count(), 0);
  for (Vertex v : field.domain) in_dom[v] = 1;
  for (Vertex v = 0; v < g.vertex_count(); ++v)
    if (!in_dom[v]) d.harmonic[v] = 0.0;
  d.bulk.resize(field.values.size());
  for (std::size_t i = 0; i < field.values.size(); ++i)
    d.bulk[i] = field.values[i] - d.harmonic[i];
  return d;
}

double segment_stays_above(double a, double b, double length, double h) {
  const double ah = a + h, bh = b + h;
  if (ah < 0.0 || bh < 0.0) return 0.0;
  return -std::expm1(-ah * bh / length);
}

double bridge_stays_above(double a, double b, double lambda, double h) {
  if (lambda <= 0.0) throw std::invalid_argument("bridge: lambda must be > 0");
  return segment_stays_above(a, b, 1.0 / (4.0 * lambda), h);
}

std::vector<Vertex> level_set(const FieldSample& field, double h) {
  std::vector<Vertex> out;
  for (Vertex v : field.domain)
    if (field.values[v] >= h) out.push_back(v);
  return out;
}

}  // namespace gffil
