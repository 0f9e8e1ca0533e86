#pragma once

#include <cstdint>
#include <functional>
#include <optional>
#include <string>
#include <vector>

#include "gffil/graph.hpp"
#include "gffil/isomorphism.hpp"

namespace gffil {

// Fitted/configured constants of one graph family used by the multi-scale
// machinery. All of them are existential in origin; defaults are fitted
// per family and every one can be overridden.
struct FamilyConstants {
  double c4 = 1.0;    // metric vs graph distance: d <= c4 * d_G
  double c5 = 1.0;    // ball connectivity: pairs in B(x,R) join inside B(x, c5 R)
  double c6 = 30.0;   // diameter constant of the good-path lemma
  double c_eta = 5.0; // separation multiplier of the sprinkled comparison
  double c_lambda = 8.0;  // packing constant of the approximate lattices
  double c15 = 1.0 / 72.0;  // smallness bound of the sign-flip comparison
};

struct ScaleLevel {
  double length = 0.0;            // L_n
  std::vector<Vertex> lattice;    // Lambda(L_n)
};

struct ScaleCheck {
  std::string name;
  double lhs = 0.0, rhs = 0.0;
  bool ok = true;
};

struct ScaleHierarchy {
  double l0 = 0.0;       // base scale L_0
  double ratio = 0.0;    // l_0
  double lbar = 0.0;     // neighborhood multiplier
  std::vector<ScaleLevel> levels;
  std::vector<ScaleCheck> checks;
  bool valid = true;
};

// Geometric ladder of scales with their covering lattices. With
// strict=true a violated parameter inequality throws; otherwise the
// violations are only recorded in `checks`.
ScaleHierarchy scales(const WeightedGraph& g, const MetricSpec& m, double l0,
                      double ratio, double lbar, int n_max,
                      const FamilyConstants& fc = {}, bool strict = true);

// default neighborhood/ratio parameters computed from the family constants
void default_scale_ratios(const MetricSpec& m, const FamilyConstants& fc,
                          double& lbar, double& ratio);

// Recursive two-child event over the hierarchy: level 0 is the site event,
// level n asks for two separated level-(n-1) occurrences inside B(x, lbar L_n).
class CascadeEvaluator {
 public:
  CascadeEvaluator(const WeightedGraph& g, const MetricSpec& m,
                   const ScaleHierarchy& h, std::vector<std::uint8_t> site_events,
                   bool memoize = true);

  bool evaluate(Vertex x, int level);

 private:
  const WeightedGraph& g_;
  const MetricSpec& m_;
  const ScaleHierarchy& h_;
  std::vector<std::uint8_t> site_;          // aligned with h.levels[0].lattice
  bool memoize_;
  std::vector<std::vector<std::int8_t>> memo_;  // -1 unknown
  std::vector<std::vector<std::size_t>> index_;  // lattice position lookup
};

// The four local events of a good vertex, evaluated on a coupled sample.
struct GoodMap {
  std::vector<Vertex> vertices;  // classified subset of the base lattice
  std::vector<std::uint8_t> c_event, d_event, e_event, f_event, good;
  std::vector<Vertex> skipped;   // window coverage insufficient
  double l0 = 0.0;
  double u = 0.0, k_level = 0.0, p = 0.0;
};

GoodMap classify_good(const CouplingMachine& machine, const CoupledSample& c,
                      const MetricSpec& m, const std::vector<Vertex>& vertices,
                      double l0, double k_level, double p,
                      const FamilyConstants& fc = {});

// true iff an R-path of bad vertices leads from x to the complement of
// B(x, N) inside the classified set
bool bad_r_path_search(const WeightedGraph& g, const MetricSpec& m,
                       const GoodMap& map, double r, Vertex x, double n);

// true iff the given components are pairwise joined by nearest-neighbor
// paths of good vertices inside B(x, 30 c6 c5 L_n)
bool good_path_connect(const WeightedGraph& g, const MetricSpec& m,
                       const GoodMap& map, Vertex x, int level,
                       const ScaleHierarchy& h,
                       const std::vector<std::vector<Vertex>>& comps,
                       const FamilyConstants& fc = {});

// ---- sprinkled decoupling check ----------------------------------------------

struct DecouplingEvent {
  std::vector<Vertex> support;
  enum class Kind {
    FieldAllAbove,   // field >= h on all of the support (increasing)
    VacantAll        // support untouched by the interlacement (decreasing)
  } kind = Kind::FieldAllAbove;
  double level = 0.0;  // h for fields, unused for vacancy
};

struct DecouplingResult {
  double separation = 0.0;
  double lhs = 0.0, lhs_stderr = 0.0;        // E[f1 f2]
  double rhs = 0.0, rhs_stderr = 0.0;        // sprinkled product
  double gap = 0.0;
  double gap_stderr = 0.0;
};

// GFF flavor: one field batch evaluates the joint event and the two
// epsilon-shifted marginals.
DecouplingResult decoupling_check_gff(
    const WeightedGraph& g, const MetricSpec& m, const GffSampler& sampler,
    const DecouplingEvent& e1, const DecouplingEvent& e2, double epsilon,
    std::size_t nsamples, std::uint64_t seed, int threads = 0);

// interlacement flavor at intensity u, sprinkled to u(1 +- epsilon) through
// the label coupling
DecouplingResult decoupling_check_ri(
    const WeightedGraph& g, const MetricSpec& m,
    const InterlacementSampler& sampler, const DecouplingEvent& e1,
    const DecouplingEvent& e2, double u, double epsilon, std::size_t nsamples,
    std::uint64_t seed, int threads = 0);

// feasible (K, p) for the vertex-flip comparison at intensity u, if any:
// K in [max(sqrt(2u), k_need), c15 / (lambda_max sqrt(2u))], p below the
// Gaussian tail bound at the chosen K (evaluated at the midpoint here)
struct AdmissibleParams {
  bool feasible = false;
  double k_min = 0.0, k_max = 0.0;
  double k_mid = 0.0;
  double p_max = 0.0;  // bound at k_mid with the smallest vertex weight
};

AdmissibleParams admissible_flip_params(double u, double lambda_min,
                                        double lambda_max, double c15,
                                        double k_need = 0.0);

}  // namespace gffil
