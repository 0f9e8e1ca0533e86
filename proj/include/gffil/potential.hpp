#pragma once

#include <memory>
#include <vector>

#include "gffil/graph.hpp"
#include "gffil/rng.hpp"

namespace gffil {

// Killed Green function table on a finite domain.
// g_A(x,y) = (1/lambda_y) E_x[# visits to y before exiting A], stored dense.
struct GreenTable {
  std::vector<Vertex> domain;   // sorted
  std::vector<double> values;   // |A| x |A| row-major, symmetric
  double solver_residual = 0.0;

  std::size_t size() const { return domain.size(); }
  double at(std::size_t i, std::size_t j) const { return values[i * size() + j]; }
  // index of vertex v in the domain; throws if absent
  std::size_t index(Vertex v) const;
  double entry(Vertex x, Vertex y) const { return at(index(x), index(y)); }
};

struct EquilibriumMeasure {
  std::vector<Vertex> support;  // all of A, sorted
  std::vector<double> mass;     // e_{A,U}(x), aligned with support
  double capacity = 0.0;
};

struct GreenEstimate {
  double value = 0.0;
  double error_bound = 0.0;  // additive gap bound to the infinite-volume value
};

struct HeatKernelResult {
  Vertex source = 0;
  int steps = 0;
  std::vector<double> values;    // p_n(x, .) over all vertices
  double absorbed_mass = 0.0;    // probability lost to the frontier
  bool window_clipped = false;   // absorbed_mass above tolerance
};

struct ExitTimeStats {
  double mean = 0.0;
  double stderr_ = 0.0;
  double exact_mean = 0.0;            // from the Green identity
  std::vector<double> tail_times;     // thresholds t
  std::vector<double> tail_probs;     // P(T > t)
};

struct CapacityResult {
  double capacity = 0.0;      // equilibrium-measure route
  double variational = 0.0;   // quadratic-form route
  EquilibriumMeasure equilibrium;
};

// Shared sparse factorization of the killed precision operator on a domain.
// Used wherever several solves against the same domain are needed.
class KilledOperator {
 public:
  KilledOperator(const WeightedGraph& g, const std::vector<Vertex>& domain);
  ~KilledOperator();
  KilledOperator(KilledOperator&&) noexcept;

  const std::vector<Vertex>& domain() const;
  std::size_t index(Vertex v) const;  // position in domain, throws if absent
  bool contains(Vertex v) const;

  // solve (Lambda - W)|_A z = rhs
  std::vector<double> solve(const std::vector<double>& rhs) const;
  // column of the killed Green function: g_A(., y)
  std::vector<double> green_column(Vertex y) const;
  double residual(const std::vector<double>& rhs, const std::vector<double>& z) const;

 private:
  struct Impl;
  std::unique_ptr<Impl> impl_;
};

// all non-frontier vertices (the default "whole window" domain)
std::vector<Vertex> window_interior(const WeightedGraph& g);

GreenTable killed_green(const WeightedGraph& g, const std::vector<Vertex>& a);

// g_outer(x,y) plus the configured decay-based bound on the gap to the
// infinite-volume Green function
GreenEstimate green_estimate(const WeightedGraph& g, const MetricSpec& m,
                             Vertex x, Vertex y, const std::vector<Vertex>& outer,
                             double c2 = 1.0);

HeatKernelResult heat_kernel(const WeightedGraph& g, Vertex x, int n,
                             double clip_tolerance = 1e-10);

// e_{A,U}(x) = lambda_x P_x(return to A after exiting U) ... 1_A(x)
EquilibriumMeasure equilibrium_measure(const WeightedGraph& g,
                                       const std::vector<Vertex>& a,
                                       const std::vector<Vertex>& u);

CapacityResult capacity(const WeightedGraph& g, const std::vector<Vertex>& a,
                        const std::vector<Vertex>& u);

ExitTimeStats exit_time_stats(const WeightedGraph& g, const MetricSpec& m,
                              Vertex x, double radius, std::size_t nsamples,
                              std::uint64_t seed, int threads = 0);

// sup/inf over u1 of a function harmonic on u2; throws if f is not harmonic
// on u2 (relative tolerance 1e-9) or takes a negative value
double harnack_ratio(const WeightedGraph& g, const std::vector<Vertex>& u1,
                     const std::vector<Vertex>& u2,
                     const std::vector<double>& f_values);

// solve the Dirichlet problem on `domain` with boundary data `boundary`
// (values indexed by vertex id over the whole graph; used on its complement)
std::vector<double> harmonic_extension(const WeightedGraph& g,
                                       const std::vector<Vertex>& domain,
                                       const std::vector<double>& boundary);

}  // namespace gffil
