#pragma once

#include <cstdint>
#include <memory>
#include <vector>

#include "gffil/graph.hpp"
#include "gffil/potential.hpp"
#include "gffil/rng.hpp"

namespace gffil {

enum class KillCause : std::uint8_t { Shell, StepCap };

struct Trajectory {
  Vertex entrance = 0;
  double label = 0.0;  // uniform in (0, u]; thresholding on labels couples levels
  KillCause cause = KillCause::Shell;
  std::vector<Vertex> path;  // visited vertices, entrance first, kill vertex excluded
};

// Where the walk dies. Frontier kills at the window boundary; Shell kills
// additionally at graph distance >= radius from the target set.
struct KillSpec {
  enum class Kind { Frontier, Shell } kind = Kind::Frontier;
  int shell_radius = 0;
  // validation d(K, kill) >= min_sep_factor * diam(K); <= 0 disables the check
  double min_sep_factor = 4.0;
};

struct InterlacementSample {
  double u = 0.0;
  std::uint64_t seed = 0;
  std::uint64_t index = 0;
  std::vector<Vertex> target;               // K, sorted
  std::vector<Vertex> active;               // window minus kill set, sorted
  std::vector<std::uint8_t> killed;         // per vertex: part of the kill set
  double cap = 0.0;                         // cap of K relative to the kill set
  std::vector<Trajectory> trajectories;
  std::vector<std::uint32_t> visit_counts;  // per vertex, all trajectories
  std::vector<std::uint8_t> edge_traversed; // per edge id
  bool step_cap_hit = false;

  bool visited(Vertex v) const { return visit_counts[v] > 0; }
};

struct InterlacementOptions {
  KillSpec kill;
  std::uint64_t step_cap = 100000000;  // crash guard only
  int threads = 0;
};

// Poisson(u * cap(K)) trajectories entering K with the equilibrium entrance
// law and killed on the kill set; everything is measured relative to that
// kill, so the vacancy law inside K is exact for the killed walk.
// The sampler precomputes the entrance law once; sampling is pure in
// (seed, index).
class InterlacementSampler {
 public:
  InterlacementSampler(const WeightedGraph& g, const std::vector<Vertex>& k,
                       const InterlacementOptions& opts = {});

  InterlacementSample sample(double u, std::uint64_t seed,
                             std::uint64_t index = 0) const;

  double cap() const { return cap_; }
  const std::vector<Vertex>& target() const { return target_; }
  const std::vector<Vertex>& active() const { return active_; }

 private:
  const WeightedGraph& g_;
  InterlacementOptions opts_;
  std::vector<Vertex> target_;
  std::vector<Vertex> active_;
  std::vector<std::uint8_t> killed_;
  std::vector<Vertex> support_;
  std::vector<double> entrance_cdf_;
  double cap_ = 0.0;
};

// one-shot convenience wrapper around InterlacementSampler
InterlacementSample sample_interlacement(const WeightedGraph& g, double u,
                                         const std::vector<Vertex>& k,
                                         std::uint64_t seed,
                                         std::uint64_t index = 0,
                                         const InterlacementOptions& opts = {});

// occupation times: visit_count(x) / lambda_x
std::vector<double> occupation_field(const WeightedGraph& g,
                                     const InterlacementSample& s);

// active vertices never visited
std::vector<Vertex> vacant_set(const WeightedGraph& g,
                               const InterlacementSample& s);

// visit counts of the trajectories with label <= level (label coupling)
std::vector<std::uint32_t> visit_counts_at_level(const WeightedGraph& g,
                                                 const InterlacementSample& s,
                                                 double level);

// ---- excursions and soft local times ---------------------------------------

struct Excursion {
  std::vector<Vertex> path;  // starts on the inner boundary of B, ends on V
  bool reached_v = true;
};

// excursions of one walk started at `start`, killed at the frontier
std::vector<Excursion> excursion_process(const WeightedGraph& g,
                                         const std::vector<Vertex>& b,
                                         const std::vector<Vertex>& v,
                                         Vertex start, std::uint64_t seed,
                                         std::uint64_t index = 0);

// Exact machinery shared by the excursion chain and its Poisson-driven
// reconstruction: hitting distributions from V into the inner boundary of B,
// with the cemetery column for walks killed before returning.
class ExcursionKernel {
 public:
  ExcursionKernel(const WeightedGraph& g, std::vector<Vertex> b,
                  std::vector<Vertex> v);
  ~ExcursionKernel();
  ExcursionKernel(ExcursionKernel&&) noexcept;

  const WeightedGraph& graph() const;
  const std::vector<Vertex>& b_set() const;
  const std::vector<Vertex>& v_set() const;
  const std::vector<Vertex>& boundary() const;  // inner boundary of B, sorted
  double cap_v() const;                         // cap of V relative to the frontier

  // P_y(Z_{H_B} = x before kill); y in V, x indexed as in boundary();
  // index boundary().size() is the cemetery
  double hit_probability(Vertex y, std::size_t x_index) const;
  std::size_t boundary_index(Vertex x) const;

  // draw from the equilibrium-normalized entrance law on V
  Vertex sample_entrance(Rng& rng) const;

 private:
  struct Impl;
  std::unique_ptr<Impl> impl_;
};

struct SoftLocalTimeRun {
  // accumulated soft local time, indexed by kernel.boundary(); the last
  // entry belongs to the cemetery
  std::vector<double> f1;
  std::vector<Vertex> chain_starts;  // selected excursion start points, kNoVertex = cemetery
  std::vector<Vertex> chain_ends;    // endpoints on V
  int t_b = 0;                       // steps until the cemetery was selected
};

// One run of the Poisson-driven excursion reconstruction.
SoftLocalTimeRun soft_local_time(const ExcursionKernel& kernel,
                                 std::uint64_t seed, std::uint64_t index);

struct SoftLocalMoments {
  std::vector<Vertex> boundary;
  std::vector<double> pi;          // mean of F_1 per start vertex
  std::vector<double> pi_stderr;
  std::vector<double> m2;          // mean of F_1^2 per start vertex
  std::vector<double> tail_v{1.0, 2.0, 4.0, 8.0};
  std::vector<double> tail_prob;   // pooled P(F_1(x) >= pi(x) v)
  double mean_t_b = 0.0;
};

SoftLocalMoments soft_local_time_moments(const ExcursionKernel& kernel,
                                         std::size_t nsamples,
                                         std::uint64_t seed, int threads = 0);

// direct-simulation estimate of pi via real walks from the entrance law
std::vector<double> direct_excursion_counts(const ExcursionKernel& kernel,
                                            std::size_t nsamples,
                                            std::uint64_t seed,
                                            int threads = 0);

}  // namespace gffil
