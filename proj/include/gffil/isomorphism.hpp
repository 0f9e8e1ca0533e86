#pragma once

#include <memory>
#include <optional>
#include <vector>

#include "gffil/gff.hpp"
#include "gffil/graph.hpp"
#include "gffil/interlacements.hpp"

namespace gffil {

// Joint sample realizing the coupling between an auxiliary field, the
// occupation times of an interlacement, and the field assembled from them.
// The defining identity  (phi + sqrt(2u))^2 / 2 = ell + gamma^2 / 2  holds at
// every mesh vertex by construction.
struct CoupledSample {
  double u = 0.0;
  FieldSample gamma;                // on the mesh window
  InterlacementSample ri;           // on the mesh window
  std::vector<double> ell;          // occupation field
  std::vector<double> phi;          // assembled field
  std::vector<std::uint8_t> in_c;   // open-cluster membership (C_u^infinity)
  double p = 0.0;                    // Bernoulli marking level (0 = unset)
  std::vector<std::uint8_t> bern;   // per base vertex, empty when p == 0
};

// Builds coupled samples on a subdivided window: the auxiliary field and the
// interlacement are drawn independently, the interlacement targets the whole
// interior so every crossing trajectory is represented, and the assembled
// field follows the two-branch formula on the open clusters meeting the
// interlacement.
class CouplingMachine {
 public:
  // factor must be even so edge midpoints are mesh vertices
  CouplingMachine(const WeightedGraph& base, int mesh_factor);

  const Subdivision& mesh() const { return sub_; }
  const WeightedGraph& base() const { return base_; }

  CoupledSample sample(double u, std::uint64_t seed, std::uint64_t index,
                       double p = 0.0) const;

  // reference field with the same mesh-domain law, for marginal comparisons
  FieldSample reference_field(std::uint64_t seed, std::uint64_t index) const;

 private:
  const WeightedGraph& base_;
  Subdivision sub_;
  std::unique_ptr<GffSampler> gff_;
  std::unique_ptr<InterlacementSampler> ri_;
};

// assemble phi / C_u^infinity from an existing (gamma, ri) pair
CoupledSample build_coupling(const Subdivision& sub, FieldSample gamma,
                             InterlacementSample ri, double u);

struct InclusionReport {
  std::size_t checked = 0;
  std::size_t interlacement_violations = 0;  // visited but phi <= -sqrt(2u)
  std::size_t vacant_violations = 0;  // phi < -sqrt(2u) but visited or gamma >= 0
  bool ok() const {
    return interlacement_violations == 0 && vacant_violations == 0;
  }
};

InclusionReport verify_inclusions(const Subdivision& sub,
                                  const CoupledSample& c);

// max |(phi+sqrt(2u))^2/2 - ell - gamma^2/2| over mesh vertices
double isomorphism_residual(const Subdivision& sub, const CoupledSample& c);

struct MarginalTest {
  std::vector<Vertex> panel;
  std::vector<double> mean_a, mean_b;
  std::vector<double> var_a, var_b;
  std::vector<double> mean_z;       // two-sample z score for the mean
  std::vector<double> ks;           // two-sample KS statistic per panel vertex
  double ks_threshold = 0.0;
};

// Per-vertex comparison of two batches of field values (rows = samples).
MarginalTest gff_marginal_test(const std::vector<std::vector<double>>& a,
                               const std::vector<std::vector<double>>& b,
                               const std::vector<Vertex>& panel,
                               double ks_alpha = 1e-3);

// ---- sign-flip conditional probabilities ------------------------------------

// Inputs describing the star around a vertex: midpoint field values and the
// weights of the incident edges.
struct FlipInput {
  std::vector<double> psi;           // field at the incident-edge midpoints
  std::vector<double> edge_weights;  // matching weights lambda_{x,y}
  double u = 0.0;
  double k_level = 0.0;  // barrier K
  double p = 1.0;        // Bernoulli level of the marking field
};

struct FlipProbs {
  double f1 = 0, f2 = 0, f3 = 0, f4 = 0, f5 = 0, f6 = 0;
  double beta = 0.0;     // conditional mean of the center value
  bool sbar = false;     // all midpoints above -K
  int quad_points = 0;   // quadrature order that reached stability
};

struct QuadratureOptions {
  std::vector<int> orders{64, 128, 256};
  double tolerance = 1e-8;
};

// Conditional probabilities of the six local events given the midpoint
// values; the barrier integral is evaluated by escalating quadrature.
FlipProbs conditional_event_probs(const FlipInput& in,
                                  const QuadratureOptions& q = {});

// smallness condition for the sign-flip comparison
bool flip_condition_holds(double k_level, double lambda_x, double u,
                          double c15);

// ---- eight-set coupling ------------------------------------------------------

struct EightSets {
  std::vector<Vertex> vertices;  // interior base vertices, sorted
  // one flag per vertex, aligned with `vertices`
  std::vector<std::uint8_t> iu, h, hbar, rbar, e_minus, e_plus, vbar, e_gamma;
  std::size_t chain_violations = 0;
};

// Per-vertex conditional probabilities of (vacant, flipped-field-negative)
// given the flipped threshold class, estimated from an independent batch.
struct EightSetCalibration {
  std::vector<Vertex> vertices;
  // classes: 0 = between thresholds, 1 = above; cells: 2x2 joint of (vbar, e_gamma)
  std::vector<std::array<double, 4>> cls0, cls1;
  double u = 0.0;
};

EightSetCalibration calibrate_eight_sets(const CouplingMachine& machine,
                                         double u, std::size_t nsamples,
                                         std::uint64_t seed, int threads = 0);

EightSets eight_set_coupling(const CouplingMachine& machine,
                             const CoupledSample& c, double k_level, double p,
                             const EightSetCalibration& calib,
                             std::uint64_t seed, double c15 = 1.0 / 72.0);

// midpoint star of a base vertex: (psi, edge weights) from a coupled sample
FlipInput star_input(const CouplingMachine& machine, const CoupledSample& c,
                     Vertex x, double k_level, double p);

// half-edge event: some incident half-edge of x stays above -sqrt(2u),
// using mesh values, traversal marks, and bridge draws between mesh points
bool half_edge_event(const CouplingMachine& machine, const CoupledSample& c,
                     Vertex x, std::uint64_t seed);

}  // namespace gffil
