#include "gffil/graph.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <deque>
#include <map>
#include <numeric>
#include <set>
#include <stdexcept>

#include <nlohmann/json.hpp>

#include "gffil/stats.hpp"

namespace gffil {

namespace {

struct LexLess {
  int dim;
  const std::vector<int>& c;
  bool operator()(std::uint32_t a, std::uint32_t b) const {
    const int* pa = c.data() + std::size_t(a) * dim;
    const int* pb = c.data() + std::size_t(b) * dim;
    return std::lexicographical_compare(pa, pa + dim, pb, pb + dim);
  }
};

// Assemble CSR from a coordinate list and an undirected edge list given in
// arbitrary order. Vertices are re-sorted lexicographically.
void finish_graph(WeightedGraph& g, std::vector<int>&& coords, int dim,
                  std::vector<std::array<Vertex, 2>>&& edge_list,
                  std::vector<double>&& weights) {
  const std::size_t n = coords.size() / dim;
  std::vector<std::uint32_t> order(n);
  std::iota(order.begin(), order.end(), 0);
  std::sort(order.begin(), order.end(), LexLess{dim, coords});
  std::vector<std::uint32_t> rank(n);
  for (std::size_t i = 0; i < n; ++i) rank[order[i]] = static_cast<std::uint32_t>(i);

  g.coord_dim = dim;
  g.coords.resize(n * dim);
  for (std::size_t i = 0; i < n; ++i)
    for (int d = 0; d < dim; ++d)
      g.coords[i * dim + d] = coords[std::size_t(order[i]) * dim + d];

  for (auto& e : edge_list) {
    e = {rank[e[0]], rank[e[1]]};
    if (e[0] > e[1]) std::swap(e[0], e[1]);
  }
  std::vector<std::uint32_t> eorder(edge_list.size());
  std::iota(eorder.begin(), eorder.end(), 0);
  std::sort(eorder.begin(), eorder.end(), [&](std::uint32_t a, std::uint32_t b) {
    return edge_list[a] < edge_list[b];
  });
  g.edges.resize(edge_list.size());
  const bool uniform = weights.empty();
  if (!uniform) g.edge_weights.resize(edge_list.size());
  for (std::size_t i = 0; i < eorder.size(); ++i) {
    g.edges[i] = edge_list[eorder[i]];
    if (!uniform) g.edge_weights[i] = weights[eorder[i]];
  }

  g.offsets.assign(n + 1, 0);
  for (const auto& e : g.edges) {
    ++g.offsets[e[0] + 1];
    ++g.offsets[e[1] + 1];
  }
  for (std::size_t i = 0; i < n; ++i) g.offsets[i + 1] += g.offsets[i];
  g.adj.resize(2 * g.edges.size());
  g.adj_edge.resize(2 * g.edges.size());
  std::vector<std::uint32_t> cursor(g.offsets.begin(), g.offsets.end() - 1);
  for (std::uint32_t e = 0; e < g.edges.size(); ++e) {
    const Vertex a = g.edges[e][0], b = g.edges[e][1];
    g.adj[cursor[a]] = b;
    g.adj_edge[cursor[a]++] = e;
    g.adj[cursor[b]] = a;
    g.adj_edge[cursor[b]++] = e;
  }

  g.vertex_weights.assign(n, 0.0);
  for (std::uint32_t e = 0; e < g.edges.size(); ++e) {
    const double w = g.edge_weight(e);
    g.vertex_weights[g.edges[e][0]] += w;
    g.vertex_weights[g.edges[e][1]] += w;
  }
  if (g.frontier.size() != n) g.frontier.assign(n, 0);
}

int ipow(int b, int e) {
  int r = 1;
  while (e-- > 0) r *= b;
  return r;
}

}  // namespace

Vertex WeightedGraph::find_vertex(const std::vector<int>& c) const {
  if (static_cast<int>(c.size()) != coord_dim) return kNoVertex;
  const std::size_t n = vertex_count();
  std::size_t lo = 0, hi = n;
  while (lo < hi) {
    const std::size_t mid = (lo + hi) / 2;
    const int* p = coord(static_cast<Vertex>(mid));
    if (std::lexicographical_compare(p, p + coord_dim, c.data(), c.data() + coord_dim))
      lo = mid + 1;
    else
      hi = mid;
  }
  if (lo < n) {
    const int* p = coord(static_cast<Vertex>(lo));
    if (std::equal(p, p + coord_dim, c.data())) return static_cast<Vertex>(lo);
  }
  return kNoVertex;
}

double WeightedGraph::min_transition_probability() const {
  double c0 = 1.0;
  for (Vertex v = 0; v < vertex_count(); ++v)
    for (std::uint32_t i = offsets[v]; i < offsets[v + 1]; ++i)
      c0 = std::min(c0, edge_weight(adj_edge[i]) / vertex_weights[v]);
  return c0;
}

MetricSpec MetricSpec::for_family(const WeightedGraph& g) {
  MetricSpec m;
  switch (g.family) {
    case Family::Zd:
      m.kind = Kind::GraphDistance;
      m.alpha = g.param_dim;
      m.beta = 2.0;
      break;
    case Family::GasketZ: {
      m.kind = Kind::Product;
      // factor 1 is the Z line, factor 2 the gasket
      m.alpha1 = 1.0;
      m.beta1 = 2.0;
      m.alpha2 = std::log(3.0) / std::log(2.0);
      m.beta2 = std::log(5.0) / std::log(2.0);
      m.alpha = m.alpha1 * m.beta2 / m.beta1 + m.alpha2;  // log45 / (2 log2)
      m.beta = m.beta2;
      break;
    }
    case Family::Carpet:
      m.kind = Kind::GraphDistance;
      m.alpha = std::log(std::pow(3.0, g.param_dim) - 1.0) / std::log(3.0);
      m.beta = 2.0;
      break;
    default:
      m.kind = Kind::GraphDistance;
      break;
  }
  return m;
}

WeightedGraph build_lattice(int dim, int radius) {
  if (dim < 3) throw std::invalid_argument("build_lattice: dim must be >= 3");
  if (radius < 1) throw std::invalid_argument("build_lattice: radius must be >= 1");
  const int side = 2 * radius + 1;
  std::size_t n = 1;
  for (int d = 0; d < dim; ++d) n *= side;

  WeightedGraph g;
  g.family = Family::Zd;
  g.param_dim = dim;
  g.param_radius = radius;

  std::vector<int> coords(n * dim);
  std::vector<int> c(dim, -radius);
  for (std::size_t i = 0; i < n; ++i) {
    for (int d = 0; d < dim; ++d) coords[i * dim + d] = c[d];
    for (int d = dim - 1; d >= 0; --d) {
      if (++c[d] <= radius) break;
      c[d] = -radius;
    }
  }
  // already lexicographic by construction
  std::vector<std::array<Vertex, 2>> edge_list;
  edge_list.reserve(n * dim);
  std::vector<std::size_t> stride(dim);
  stride[dim - 1] = 1;
  for (int d = dim - 2; d >= 0; --d) stride[d] = stride[d + 1] * side;
  for (std::size_t i = 0; i < n; ++i) {
    for (int d = 0; d < dim; ++d) {
      if (coords[i * dim + d] < radius)
        edge_list.push_back({static_cast<Vertex>(i), static_cast<Vertex>(i + stride[d])});
    }
  }
  g.frontier.assign(n, 0);
  for (std::size_t i = 0; i < n; ++i) {
    for (int d = 0; d < dim; ++d)
      if (std::abs(coords[i * dim + d]) == radius) {
        g.frontier[i] = 1;
        break;
      }
  }
  finish_graph(g, std::move(coords), dim, std::move(edge_list), {});
  return g;
}

void build_gasket_factor(int level, std::vector<int>& coords_out,
                         std::vector<std::array<Vertex, 2>>& edges_out) {
  const int side = ipow(2, level);
  // upward unit triangles (a,b): a,b >= 0, a+b < side, a & b == 0
  std::map<std::pair<int, int>, Vertex> ids;
  auto vertex_id = [&](int a, int b) {
    auto it = ids.find({a, b});
    if (it != ids.end()) return it->second;
    const Vertex v = static_cast<Vertex>(ids.size());
    ids.emplace(std::make_pair(a, b), v);
    return v;
  };
  edges_out.clear();
  for (int a = 0; a < side; ++a) {
    for (int b = 0; a + b < side; ++b) {
      if ((a & b) != 0) continue;
      const Vertex v0 = vertex_id(a, b);
      const Vertex v1 = vertex_id(a + 1, b);
      const Vertex v2 = vertex_id(a, b + 1);
      edges_out.push_back({v0, v1});
      edges_out.push_back({v0, v2});
      edges_out.push_back({v1, v2});
    }
  }
  coords_out.assign(ids.size() * 2, 0);
  for (const auto& [key, v] : ids) {
    coords_out[std::size_t(v) * 2] = key.first;
    coords_out[std::size_t(v) * 2 + 1] = key.second;
  }
}

WeightedGraph build_gasket_product(int level, int height) {
  if (level < 1) throw std::invalid_argument("build_gasket_product: level must be >= 1");
  if (height < 1) throw std::invalid_argument("build_gasket_product: height must be >= 1");

  std::vector<int> gc;
  std::vector<std::array<Vertex, 2>> ge;
  build_gasket_factor(level, gc, ge);
  const std::uint32_t gn = static_cast<std::uint32_t>(gc.size() / 2);
  const int nh = 2 * height + 1;
  const int side = ipow(2, level);

  WeightedGraph g;
  g.family = Family::GasketZ;
  g.param_level = level;
  g.param_height = height;
  g.gasket_n = gn;
  g.gasket_coords = gc;
  g.gasket_adj.assign(gn, {});
  for (const auto& e : ge) {
    g.gasket_adj[e[0]].push_back(e[1]);
    g.gasket_adj[e[1]].push_back(e[0]);
  }
  // all-pairs gasket distances via BFS (factor stays small at desk scale)
  g.gasket_dist.assign(std::size_t(gn) * gn, std::numeric_limits<std::uint16_t>::max());
  for (std::uint32_t s = 0; s < gn; ++s) {
    std::deque<Vertex> q{s};
    auto* row = g.gasket_dist.data() + std::size_t(s) * gn;
    row[s] = 0;
    while (!q.empty()) {
      const Vertex v = q.front();
      q.pop_front();
      for (Vertex w : g.gasket_adj[v])
        if (row[w] == std::numeric_limits<std::uint16_t>::max()) {
          row[w] = static_cast<std::uint16_t>(row[v] + 1);
          q.push_back(w);
        }
    }
  }

  const std::size_t n = std::size_t(gn) * nh;
  std::vector<int> coords(n * 3);
  std::vector<std::array<Vertex, 2>> edge_list;
  auto pid = [&](std::uint32_t gi, int hidx) {
    return static_cast<Vertex>(gi * nh + hidx);
  };
  for (std::uint32_t gi = 0; gi < gn; ++gi) {
    for (int hh = 0; hh < nh; ++hh) {
      const std::size_t v = pid(gi, hh);
      coords[v * 3] = gc[std::size_t(gi) * 2];
      coords[v * 3 + 1] = gc[std::size_t(gi) * 2 + 1];
      coords[v * 3 + 2] = hh - height;
      if (hh + 1 < nh) edge_list.push_back({pid(gi, hh), pid(gi, hh + 1)});
    }
  }
  for (const auto& e : ge)
    for (int hh = 0; hh < nh; ++hh)
      edge_list.push_back({pid(e[0], hh), pid(e[1], hh)});

  g.frontier.assign(n, 0);
  for (std::uint32_t gi = 0; gi < gn; ++gi) {
    const int a = gc[std::size_t(gi) * 2], b = gc[std::size_t(gi) * 2 + 1];
    const bool corner = (a == 0 && b == 0) || (a == side && b == 0) || (a == 0 && b == side);
    for (int hh = 0; hh < nh; ++hh)
      if (corner || hh == 0 || hh == nh - 1) g.frontier[pid(gi, hh)] = 1;
  }

  // keep frontier flags aligned through the lex re-sort by carrying them in
  // an extra pass: finish_graph sorts by coords, so recompute after
  std::vector<int> coords_copy = coords;
  finish_graph(g, std::move(coords), 3, std::move(edge_list), {});
  const std::size_t nn = g.vertex_count();
  g.frontier.assign(nn, 0);
  g.vertex_gasket_index.assign(nn, 0);
  g.vertex_height.assign(nn, 0);
  std::map<std::pair<int, int>, std::uint32_t> gidx;
  for (std::uint32_t gi = 0; gi < gn; ++gi)
    gidx[{gc[std::size_t(gi) * 2], gc[std::size_t(gi) * 2 + 1]}] = gi;
  for (Vertex v = 0; v < nn; ++v) {
    const int* c = g.coord(v);
    const std::uint32_t gi = gidx[{c[0], c[1]}];
    g.vertex_gasket_index[v] = gi;
    g.vertex_height[v] = c[2];
    const bool corner = (c[0] == 0 && c[1] == 0) || (c[0] == side && c[1] == 0) ||
                        (c[0] == 0 && c[1] == side);
    if (corner || c[2] == -height || c[2] == height) g.frontier[v] = 1;
  }
  (void)coords_copy;
  return g;
}

WeightedGraph build_carpet(int dim, int level) {
  if (dim < 3) throw std::invalid_argument("build_carpet: dim must be >= 3");
  if (level < 1) throw std::invalid_argument("build_carpet: level must be >= 1");
  const int side = ipow(3, level);

  auto in_carpet = [&](const std::vector<int>& c) {
    int scale = side / 3;
    while (scale >= 1) {
      bool all_mid = true;
      for (int d = 0; d < dim; ++d)
        if ((c[d] / scale) % 3 != 1) {
          all_mid = false;
          break;
        }
      if (all_mid) return false;
      scale /= 3;
    }
    return true;
  };

  std::vector<int> coords;
  std::vector<int> c(dim, 0);
  std::size_t total = 1;
  for (int d = 0; d < dim; ++d) total *= side;
  std::vector<std::int64_t> id_of(total, -1);
  std::vector<std::size_t> stride(dim);
  stride[dim - 1] = 1;
  for (int d = dim - 2; d >= 0; --d) stride[d] = stride[d + 1] * side;

  std::size_t n = 0;
  for (std::size_t flat = 0; flat < total; ++flat) {
    std::size_t rem = flat;
    for (int d = 0; d < dim; ++d) {
      c[d] = static_cast<int>(rem / stride[d]);
      rem %= stride[d];
    }
    if (in_carpet(c)) {
      id_of[flat] = static_cast<std::int64_t>(n++);
      for (int d = 0; d < dim; ++d) coords.push_back(c[d]);
    }
  }

  std::vector<std::array<Vertex, 2>> edge_list;
  for (std::size_t flat = 0; flat < total; ++flat) {
    if (id_of[flat] < 0) continue;
    std::size_t rem = flat;
    for (int d = 0; d < dim; ++d) {
      c[d] = static_cast<int>(rem / stride[d]);
      rem %= stride[d];
    }
    for (int d = 0; d < dim; ++d) {
      if (c[d] + 1 < side && id_of[flat + stride[d]] >= 0)
        edge_list.push_back({static_cast<Vertex>(id_of[flat]),
                             static_cast<Vertex>(id_of[flat + stride[d]])});
    }
  }

  WeightedGraph g;
  g.family = Family::Carpet;
  g.param_dim = dim;
  g.param_level = level;
  g.frontier.assign(n, 0);
  for (std::size_t i = 0; i < n; ++i)
    for (int d = 0; d < dim; ++d)
      if (coords[i * dim + d] == 0 || coords[i * dim + d] == side - 1) {
        g.frontier[i] = 1;
        break;
      }
  finish_graph(g, std::move(coords), dim, std::move(edge_list), {});
  // frontier order survives: coords were emitted in lex order already
  return g;
}

namespace {

int zd_l1(const WeightedGraph& g, Vertex x, Vertex y) {
  int d = 0;
  const int* a = g.coord(x);
  const int* b = g.coord(y);
  for (int i = 0; i < g.coord_dim; ++i) d += std::abs(a[i] - b[i]);
  return d;
}

// bounded BFS graph distance; -1 if further than `cap`
int bfs_distance(const WeightedGraph& g, Vertex x, Vertex y, int cap) {
  if (x == y) return 0;
  std::vector<int> dist(g.vertex_count(), -1);
  std::deque<Vertex> q{x};
  dist[x] = 0;
  while (!q.empty()) {
    const Vertex v = q.front();
    q.pop_front();
    if (dist[v] >= cap) return -1;
    for (std::uint32_t i = g.offsets[v]; i < g.offsets[v + 1]; ++i) {
      const Vertex w = g.adj[i];
      if (dist[w] < 0) {
        dist[w] = dist[v] + 1;
        if (w == y) return dist[w];
        q.push_back(w);
      }
    }
  }
  return -1;
}

}  // namespace

double metric_distance(const WeightedGraph& g, const MetricSpec& m, Vertex x,
                       Vertex y) {
  if (x >= g.vertex_count() || y >= g.vertex_count())
    throw std::out_of_range("metric_distance: vertex not in window");
  if (x == y) return 0.0;
  if (m.kind == MetricSpec::Kind::GraphDistance) {
    if (g.family == Family::Zd) return zd_l1(g, x, y);
    const int d = bfs_distance(g, x, y, std::numeric_limits<int>::max() - 1);
    if (d < 0) throw std::runtime_error("metric_distance: disconnected pair");
    return d;
  }
  // product metric: max(d1^{beta1/beta2}, d2)
  const double dz = std::abs(g.vertex_height[x] - g.vertex_height[y]);
  const std::uint32_t gx = g.vertex_gasket_index[x];
  const std::uint32_t gy = g.vertex_gasket_index[y];
  const double dg = g.gasket_dist[std::size_t(gx) * g.gasket_n + gy];
  return std::max(std::pow(dz, m.beta1 / m.beta2), dg);
}

BallResult ball(const WeightedGraph& g, const MetricSpec& m, Vertex x, double L) {
  if (L < 0) throw std::invalid_argument("ball: negative radius");
  BallResult r;
  constexpr double kTieTol = 1e-12;  // deterministic ties at the ball boundary
  if (m.kind == MetricSpec::Kind::GraphDistance) {
    const int li = static_cast<int>(std::floor(L + kTieTol));
    // BFS to depth li
    std::vector<int> dist(g.vertex_count(), -1);
    std::deque<Vertex> q{x};
    dist[x] = 0;
    r.members.push_back(x);
    while (!q.empty()) {
      const Vertex v = q.front();
      q.pop_front();
      if (dist[v] == li) continue;
      for (std::uint32_t i = g.offsets[v]; i < g.offsets[v + 1]; ++i) {
        const Vertex w = g.adj[i];
        if (dist[w] < 0) {
          dist[w] = dist[v] + 1;
          r.members.push_back(w);
          q.push_back(w);
        }
      }
    }
  } else {
    const double hz = std::pow(L + kTieTol, m.beta2 / m.beta1);
    const int hmax = static_cast<int>(std::floor(hz));
    const std::uint32_t gx = g.vertex_gasket_index[x];
    const int hx = g.vertex_height[x];
    const auto* row = g.gasket_dist.data() + std::size_t(gx) * g.gasket_n;
    for (Vertex v = 0; v < g.vertex_count(); ++v) {
      if (std::abs(g.vertex_height[v] - hx) > hmax) continue;
      if (row[g.vertex_gasket_index[v]] <= L + kTieTol) r.members.push_back(v);
    }
  }
  std::sort(r.members.begin(), r.members.end());
  for (Vertex v : r.members)
    if (g.on_frontier(v)) {
      r.window_clipped = true;
      break;
    }
  return r;
}

double frontier_distance(const WeightedGraph& g, const MetricSpec& m, Vertex x) {
  double best = std::numeric_limits<double>::infinity();
  if (m.kind == MetricSpec::Kind::GraphDistance && g.family != Family::Zd)
    return frontier_graph_distance(g, x);
  for (Vertex v = 0; v < g.vertex_count(); ++v)
    if (g.on_frontier(v)) best = std::min(best, metric_distance(g, m, x, v));
  return best;
}

int frontier_graph_distance(const WeightedGraph& g, Vertex x) {
  std::vector<int> dist(g.vertex_count(), -1);
  std::deque<Vertex> q{x};
  dist[x] = 0;
  while (!q.empty()) {
    const Vertex v = q.front();
    q.pop_front();
    if (g.on_frontier(v)) return dist[v];
    for (std::uint32_t i = g.offsets[v]; i < g.offsets[v + 1]; ++i)
      if (dist[g.adj[i]] < 0) {
        dist[g.adj[i]] = dist[v] + 1;
        q.push_back(g.adj[i]);
      }
  }
  return -1;
}

std::vector<Vertex> approximate_lattice(const WeightedGraph& g,
                                        const MetricSpec& m, double L) {
  if (L < 1) throw std::invalid_argument("approximate_lattice: L must be >= 1");
  std::vector<Vertex> lattice;
  std::vector<std::uint8_t> covered(g.vertex_count(), 0);
  for (Vertex v = 0; v < g.vertex_count(); ++v) {
    if (covered[v]) continue;
    lattice.push_back(v);
    for (Vertex w : ball(g, m, v, L).members) covered[w] = 1;
  }
  return lattice;
}

BoundaryResult external_boundary(const WeightedGraph& g,
                                 const std::vector<Vertex>& a) {
  BoundaryResult r;
  std::vector<std::uint8_t> in_a(g.vertex_count(), 0);
  for (Vertex v : a) {
    in_a[v] = 1;
    if (g.on_frontier(v)) r.window_clipped = true;
  }
  // reachability from the frontier within the complement — the finite-window
  // stand-in for "an unbounded path in A^c"
  std::vector<std::uint8_t> reach(g.vertex_count(), 0);
  std::deque<Vertex> q;
  for (Vertex v = 0; v < g.vertex_count(); ++v)
    if (g.on_frontier(v) && !in_a[v]) {
      reach[v] = 1;
      q.push_back(v);
    }
  while (!q.empty()) {
    const Vertex v = q.front();
    q.pop_front();
    for (std::uint32_t i = g.offsets[v]; i < g.offsets[v + 1]; ++i) {
      const Vertex w = g.adj[i];
      if (!in_a[w] && !reach[w]) {
        reach[w] = 1;
        q.push_back(w);
      }
    }
  }
  for (Vertex v = 0; v < g.vertex_count(); ++v) {
    if (in_a[v] || !reach[v]) continue;
    bool touches = false;
    for (std::uint32_t i = g.offsets[v]; i < g.offsets[v + 1]; ++i)
      if (in_a[g.adj[i]]) {
        touches = true;
        break;
      }
    if (touches) r.members.push_back(v);
  }
  return r;
}

Vertex central_vertex(const WeightedGraph& g) {
  std::vector<long long> lo(g.coord_dim, std::numeric_limits<long long>::max());
  std::vector<long long> hi(g.coord_dim, std::numeric_limits<long long>::min());
  for (Vertex v = 0; v < g.vertex_count(); ++v)
    for (int d = 0; d < g.coord_dim; ++d) {
      lo[d] = std::min<long long>(lo[d], g.coord(v)[d]);
      hi[d] = std::max<long long>(hi[d], g.coord(v)[d]);
    }
  Vertex best = 0;
  long long best_score = std::numeric_limits<long long>::max();
  for (Vertex v = 0; v < g.vertex_count(); ++v) {
    long long s = 0;
    for (int d = 0; d < g.coord_dim; ++d) {
      const long long c2 = 2LL * g.coord(v)[d] - lo[d] - hi[d];
      s += c2 * c2;
    }
    if (s < best_score) {
      best_score = s;
      best = v;
    }
  }
  return best;
}

VolumeGrowthFit verify_volume_growth(const WeightedGraph& g,
                                     const MetricSpec& m, double alpha,
                                     Vertex center, double min_radius) {
  if (center == kNoVertex) center = central_vertex(g);
  VolumeGrowthFit fit;
  for (double L = min_radius;; L *= 2.0) {
    const BallResult b = ball(g, m, center, L);
    if (b.window_clipped) break;
    fit.radii.push_back(L);
    fit.masses.push_back(g.lambda_of(b.members));
  }
  if (fit.radii.size() < 4)
    throw std::runtime_error("verify_volume_growth: insufficient interior radii");
  fit.slope = loglog_fit(fit.radii, fit.masses).slope;
  fit.c_low = std::numeric_limits<double>::infinity();
  fit.c_high = 0.0;
  for (std::size_t i = 0; i < fit.radii.size(); ++i) {
    const double ratio = fit.masses[i] / std::pow(fit.radii[i], alpha);
    fit.c_low = std::min(fit.c_low, ratio);
    fit.c_high = std::max(fit.c_high, ratio);
  }
  return fit;
}

namespace {

// exact l1 diameter via the 2^(d-1) signed linear functionals
double l1_diameter(const WeightedGraph& g, const std::vector<Vertex>& a) {
  const int d = g.coord_dim;
  const int patterns = 1 << (d - 1);
  double best = 0.0;
  for (int p = 0; p < patterns; ++p) {
    double lo = std::numeric_limits<double>::infinity();
    double hi = -lo;
    for (Vertex v : a) {
      const int* c = g.coord(v);
      double s = c[0];
      for (int i = 1; i < d; ++i) s += ((p >> (i - 1)) & 1) ? -c[i] : c[i];
      lo = std::min(lo, s);
      hi = std::max(hi, s);
    }
    best = std::max(best, hi - lo);
  }
  return best;
}

}  // namespace

double metric_diameter(const WeightedGraph& g, const MetricSpec& m,
                       const std::vector<Vertex>& a) {
  if (a.size() < 2) return 0.0;
  if (m.kind == MetricSpec::Kind::GraphDistance && g.family == Family::Zd)
    return l1_diameter(g, a);
  if (m.kind == MetricSpec::Kind::Product) {
    // factor diameters bound the product diameter from both sides; take the
    // exact pairwise max only over the gasket part, heights are an interval
    int hlo = std::numeric_limits<int>::max(), hhi = std::numeric_limits<int>::min();
    double dg = 0.0;
    for (std::size_t i = 0; i < a.size(); ++i) {
      hlo = std::min(hlo, g.vertex_height[a[i]]);
      hhi = std::max(hhi, g.vertex_height[a[i]]);
      const auto* row =
          g.gasket_dist.data() + std::size_t(g.vertex_gasket_index[a[i]]) * g.gasket_n;
      for (std::size_t j = i + 1; j < a.size(); ++j)
        dg = std::max(dg, static_cast<double>(row[g.vertex_gasket_index[a[j]]]));
    }
    return std::max(std::pow(double(hhi - hlo), m.beta1 / m.beta2), dg);
  }
  double best = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i)
    for (std::size_t j = i + 1; j < a.size(); ++j)
      best = std::max(best, metric_distance(g, m, a[i], a[j]));
  return best;
}

bool diameter_at_least(const WeightedGraph& g, const MetricSpec& m,
                       const std::vector<Vertex>& a, double threshold) {
  if (threshold <= 0.0) return true;
  if (a.size() < 2) return false;
  if (m.kind == MetricSpec::Kind::GraphDistance && g.family != Family::Zd) {
    // graph distance dominates the coordinate gap on these families
    if (l1_diameter(g, a) >= threshold) return true;
    // bounded BFS from each member; any pair further than the threshold wins
    const int cap = static_cast<int>(std::ceil(threshold));
    std::vector<std::uint8_t> in(g.vertex_count(), 0);
    for (Vertex v : a) in[v] = 1;
    std::vector<int> dist(g.vertex_count(), -1);
    for (Vertex src : a) {
      std::fill(dist.begin(), dist.end(), -1);
      std::deque<Vertex> q{src};
      dist[src] = 0;
      std::size_t reached = 1;
      while (!q.empty()) {
        const Vertex v = q.front();
        q.pop_front();
        if (dist[v] >= cap) continue;
        for (std::uint32_t k = g.offsets[v]; k < g.offsets[v + 1]; ++k) {
          const Vertex w = g.adj[k];
          if (dist[w] < 0) {
            dist[w] = dist[v] + 1;
            if (in[w]) {
              if (dist[w] >= threshold) return true;
              ++reached;
            }
            q.push_back(w);
          }
        }
      }
      if (reached < a.size()) return true;  // someone is out of BFS range
    }
    return false;
  }
  return metric_diameter(g, m, a) >= threshold;
}

Subdivision subdivide(const WeightedGraph& g, int factor) {
  if (factor < 1) throw std::invalid_argument("subdivide: factor must be >= 1");
  Subdivision s;
  s.base_vertices = static_cast<std::uint32_t>(g.vertex_count());
  s.factor = factor;
  s.base_edges = g.edges;
  if (factor == 1) {
    s.graph = g;
    s.chain.assign(g.edge_count(), {});
    s.host_edge.assign(g.vertex_count(), ~0u);
    s.host_pos.assign(g.vertex_count(), 0);
    return s;
  }

  WeightedGraph& out = s.graph;
  out.family = Family::Subdivided;
  out.coord_dim = g.coord_dim;
  out.coords = g.coords;  // mesh vertices have no coordinates of their own

  const std::size_t n0 = g.vertex_count();
  const std::size_t m0 = g.edge_count();
  const std::size_t n = n0 + m0 * (factor - 1);
  const std::size_t m = m0 * factor;

  s.chain.assign(m0, {});
  s.host_edge.assign(n, ~0u);
  s.host_pos.assign(n, 0);

  out.edges.resize(m);
  const bool uniform = g.edge_weights.empty();
  if (uniform)
    out.uniform_edge_weight = g.uniform_edge_weight * factor;
  else
    out.edge_weights.resize(m);

  Vertex next = static_cast<Vertex>(n0);
  std::uint32_t eout = 0;
  for (std::uint32_t e = 0; e < m0; ++e) {
    const Vertex a = g.edges[e][0], b = g.edges[e][1];
    const double w = g.edge_weight(e) * factor;
    Vertex prev = a;
    s.chain[e].reserve(factor - 1);
    for (int k = 1; k < factor; ++k) {
      const Vertex mid = next++;
      s.chain[e].push_back(mid);
      s.host_edge[mid] = e;
      s.host_pos[mid] = k;
      out.edges[eout] = {std::min(prev, mid), std::max(prev, mid)};
      if (!uniform) out.edge_weights[eout] = w;
      ++eout;
      prev = mid;
    }
    out.edges[eout] = {std::min(prev, b), std::max(prev, b)};
    if (!uniform) out.edge_weights[eout] = w;
    ++eout;
  }

  out.offsets.assign(n + 1, 0);
  for (const auto& e : out.edges) {
    ++out.offsets[e[0] + 1];
    ++out.offsets[e[1] + 1];
  }
  for (std::size_t i = 0; i < n; ++i) out.offsets[i + 1] += out.offsets[i];
  out.adj.resize(2 * m);
  out.adj_edge.resize(2 * m);
  std::vector<std::uint32_t> cursor(out.offsets.begin(), out.offsets.end() - 1);
  for (std::uint32_t e = 0; e < m; ++e) {
    const Vertex a = out.edges[e][0], b = out.edges[e][1];
    out.adj[cursor[a]] = b;
    out.adj_edge[cursor[a]++] = e;
    out.adj[cursor[b]] = a;
    out.adj_edge[cursor[b]++] = e;
  }
  out.vertex_weights.assign(n, 0.0);
  for (std::uint32_t e = 0; e < m; ++e) {
    const double w = out.edge_weight(e);
    out.vertex_weights[out.edges[e][0]] += w;
    out.vertex_weights[out.edges[e][1]] += w;
  }
  out.frontier.assign(n, 0);
  for (Vertex v = 0; v < n0; ++v) out.frontier[v] = g.frontier[v];
  return s;
}

std::vector<Vertex> cable_ball(const Subdivision& s,
                               const std::vector<Vertex>& base_ball) {
  std::vector<std::uint8_t> in(s.base_vertices, 0);
  for (Vertex v : base_ball) in[v] = 1;
  std::vector<Vertex> out(base_ball);
  for (std::uint32_t e = 0; e < s.chain.size(); ++e) {
    if (s.chain[e].empty()) continue;
    if (in[s.base_edges[e][0]] && in[s.base_edges[e][1]])
      for (Vertex v : s.chain[e]) out.push_back(v);
  }
  std::sort(out.begin(), out.end());
  return out;
}

std::vector<Vertex> killed_mesh_domain(const Subdivision& s,
                                       const std::vector<Vertex>& a) {
  std::vector<std::uint8_t> in(s.base_vertices, 0);
  for (Vertex v : a) in[v] = 1;
  std::vector<Vertex> out(a);
  for (std::uint32_t e = 0; e < s.chain.size(); ++e) {
    if (s.chain[e].empty()) continue;
    if (in[s.base_edges[e][0]] || in[s.base_edges[e][1]])
      for (Vertex v : s.chain[e]) out.push_back(v);
  }
  std::sort(out.begin(), out.end());
  return out;
}

WeightedGraph build_from_json(const std::string& json_text) {
  const auto j = nlohmann::json::parse(json_text);
  const std::string family = j.at("family").get<std::string>();
  if (family == "zd")
    return build_lattice(j.at("dim").get<int>(), j.at("radius").get<int>());
  if (family == "gasket_z")
    return build_gasket_product(j.at("level").get<int>(), j.at("height").get<int>());
  if (family == "carpet")
    return build_carpet(j.at("dim").get<int>(), j.at("level").get<int>());
  throw std::invalid_argument("unknown graph family: " + family);
}

void write_edge_csv(const WeightedGraph& g, const std::string& path) {
  std::FILE* f = std::fopen(path.c_str(), "w");
  if (!f) throw std::runtime_error("cannot open " + path);
  std::fprintf(f, "x_id,y_id,weight\n");
  for (std::uint32_t e = 0; e < g.edge_count(); ++e)
    std::fprintf(f, "%u,%u,%.17g\n", g.edges[e][0], g.edges[e][1], g.edge_weight(e));
  std::fclose(f);
}

}  // namespace gffil
