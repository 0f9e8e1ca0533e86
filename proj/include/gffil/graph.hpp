#pragma once

#include <array>
#include <cstdint>
#include <limits>
#include <optional>
#include <string>
#include <vector>

namespace gffil {

using Vertex = std::uint32_t;
constexpr Vertex kNoVertex = std::numeric_limits<Vertex>::max();

enum class Family { Zd, GasketZ, Carpet, Subdivided, Generic };

// Finite window of a weighted graph. Vertices carry integer coordinates
// (lexicographically sorted at construction), edges carry strictly positive
// symmetric weights, and the truncation boundary of the window is marked as
// the frontier.
class WeightedGraph {
 public:
  Family family = Family::Generic;
  int coord_dim = 0;
  std::vector<int> coords;  // n * coord_dim, lex-sorted blocks

  // CSR adjacency
  std::vector<std::uint32_t> offsets;   // n+1
  std::vector<Vertex> adj;              // neighbor ids
  std::vector<std::uint32_t> adj_edge;  // undirected edge id per direction

  std::vector<std::array<Vertex, 2>> edges;  // endpoint pairs, tail < head
  std::vector<double> edge_weights;          // empty when uniform
  double uniform_edge_weight = 1.0;

  std::vector<double> vertex_weights;  // lambda_x
  std::vector<std::uint8_t> frontier;  // 1 on the window boundary

  // family parameters (meaning depends on `family`)
  int param_dim = 0;     // Zd / Carpet dimension
  int param_radius = 0;  // Zd radius
  int param_level = 0;   // gasket / carpet level
  int param_height = 0;  // GasketZ height

  // GasketZ keeps its gasket factor for factor-distance queries
  std::vector<int> gasket_coords;                  // per gasket vertex (a,b)
  std::vector<std::vector<Vertex>> gasket_adj;     // factor adjacency
  std::vector<std::uint16_t> gasket_dist;          // all-pairs, row-major
  std::uint32_t gasket_n = 0;
  std::vector<std::uint32_t> vertex_gasket_index;  // product vertex -> factor
  std::vector<int> vertex_height;                  // product vertex -> height

  std::size_t vertex_count() const { return offsets.empty() ? 0 : offsets.size() - 1; }
  std::size_t edge_count() const { return edges.size(); }

  double edge_weight(std::uint32_t e) const {
    return edge_weights.empty() ? uniform_edge_weight : edge_weights[e];
  }
  std::uint32_t degree(Vertex v) const { return offsets[v + 1] - offsets[v]; }
  bool on_frontier(Vertex v) const { return frontier[v] != 0; }

  // weight of the edge between x and its i-th neighbor
  double neighbor_weight(Vertex x, std::uint32_t i) const {
    return edge_weight(adj_edge[offsets[x] + i]);
  }

  const int* coord(Vertex v) const { return coords.data() + std::size_t(v) * coord_dim; }

  // id lookup by coordinates (binary search in the lex order); kNoVertex if absent
  Vertex find_vertex(const std::vector<int>& c) const;

  // min transition probability over edges (the controlled-weights constant)
  double min_transition_probability() const;

  double lambda_of(const std::vector<Vertex>& a) const {
    double s = 0.0;
    for (Vertex v : a) s += vertex_weights[v];
    return s;
  }
};

// Metric attached to a graph family.
struct MetricSpec {
  enum class Kind { GraphDistance, Product } kind = Kind::GraphDistance;
  double alpha = 3.0;
  double beta = 2.0;
  // product factors; factor 1 is the one with the smaller beta
  double alpha1 = 1.0, beta1 = 2.0;
  double alpha2 = 1.0, beta2 = 2.0;

  double nu() const { return alpha - beta; }
  static MetricSpec for_family(const WeightedGraph& g);
};

struct BallResult {
  std::vector<Vertex> members;  // sorted
  bool window_clipped = false;  // touches the frontier
};

struct BoundaryResult {
  std::vector<Vertex> members;  // sorted
  bool window_clipped = false;
};

struct VolumeGrowthFit {
  double slope = 0.0;
  double c_low = 0.0;
  double c_high = 0.0;
  std::vector<double> radii;
  std::vector<double> masses;
};

// ---- builders -------------------------------------------------------------

// {-radius..radius}^dim with unit weights; rejects dim < 3.
WeightedGraph build_lattice(int dim, int radius);

// level-`level` Sierpinski gasket skeleton crossed with {-height..height}.
WeightedGraph build_gasket_product(int level, int height);

// level-`level` prefix of the standard d-dimensional graphical Sierpinski
// carpet in N^dim; rejects dim < 3.
WeightedGraph build_carpet(int dim, int level);

// gasket factor alone (exposed for tests)
void build_gasket_factor(int level, std::vector<int>& coords_out,
                         std::vector<std::array<Vertex, 2>>& edges_out);

// ---- metric queries --------------------------------------------------------

double metric_distance(const WeightedGraph& g, const MetricSpec& m, Vertex x,
                       Vertex y);

// exact closed metric ball
BallResult ball(const WeightedGraph& g, const MetricSpec& m, Vertex x, double L);

// distance from x to the nearest frontier vertex
double frontier_distance(const WeightedGraph& g, const MetricSpec& m, Vertex x);

// graph-distance from x to the frontier (BFS)
int frontier_graph_distance(const WeightedGraph& g, Vertex x);

// greedy cover/packing lattice in lex vertex order
std::vector<Vertex> approximate_lattice(const WeightedGraph& g,
                                        const MetricSpec& m, double L);

// vertices adjacent to A, outside A, joined to the frontier within A^c
BoundaryResult external_boundary(const WeightedGraph& g,
                                 const std::vector<Vertex>& a);

// log-log fit of lambda(B(x,L)) against L over dyadic interior radii,
// starting at min_radius
VolumeGrowthFit verify_volume_growth(const WeightedGraph& g,
                                     const MetricSpec& m, double alpha,
                                     Vertex center = kNoVertex,
                                     double min_radius = 2.0);

// vertex closest to the coordinate-wise center of the window
Vertex central_vertex(const WeightedGraph& g);

// metric diameter of a vertex set (exact; linear-time on lattices)
double metric_diameter(const WeightedGraph& g, const MetricSpec& m,
                       const std::vector<Vertex>& a);

// diameter threshold test with cheap certificates where available
bool diameter_at_least(const WeightedGraph& g, const MetricSpec& m,
                       const std::vector<Vertex>& a, double threshold);

// ---- subdivision -----------------------------------------------------------

// Edge-subdivided mesh: each base edge of weight w becomes a path of
// `factor` edges of weight factor*w. Base vertices keep their ids.
struct Subdivision {
  WeightedGraph graph;
  std::uint32_t base_vertices = 0;
  int factor = 1;
  std::vector<std::array<Vertex, 2>> base_edges;  // copy of the base edge list
  // chain[e] lists the factor-1 interior mesh vertices of base edge e,
  // ordered from base_edges[e][0] to base_edges[e][1]; empty when factor == 1
  std::vector<std::vector<Vertex>> chain;
  std::vector<std::uint32_t> host_edge;  // mesh vertex -> base edge (originals: ~0)
  std::vector<int> host_pos;             // position 1..factor-1 along the chain

  bool is_base(Vertex v) const { return v < base_vertices; }
  // midpoint of base edge e (requires even factor)
  Vertex midpoint(std::uint32_t e) const {
    return factor == 1 ? kNoVertex : chain[e][factor / 2 - 1];
  }
};

Subdivision subdivide(const WeightedGraph& g, int factor);

// mesh vertices whose host edge has both endpoints in `base_ball`
// (base vertices of the ball included); `base_ball` must be sorted
std::vector<Vertex> cable_ball(const Subdivision& s,
                               const std::vector<Vertex>& base_ball);

// mesh domain whose killed walk projects onto the base walk killed outside
// `a`: the base set plus the interior chains of every edge meeting it
std::vector<Vertex> killed_mesh_domain(const Subdivision& s,
                                       const std::vector<Vertex>& a);

// ---- config / io -----------------------------------------------------------

// {"family":"zd"|"gasket_z"|"carpet", ...parameters}
WeightedGraph build_from_json(const std::string& json_text);

void write_edge_csv(const WeightedGraph& g, const std::string& path);

}  // namespace gffil
