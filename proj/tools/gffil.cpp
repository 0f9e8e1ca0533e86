// Batch experiment runner: every subcommand builds a graph family from the
// shared flags, runs one operation, and writes JSON/CSV artifacts into the
// output directory. Outputs are a pure function of (config, seed); thread
// count only changes the wall time.

#include <cstdio>
#include <filesystem>
#include <fstream>
#include <optional>
#include <string>

#include <CLI11.hpp>
#include <nlohmann/json.hpp>

#include "gffil/gff.hpp"
#include "gffil/graph.hpp"
#include "gffil/interlacements.hpp"
#include "gffil/io.hpp"
#include "gffil/isomorphism.hpp"
#include "gffil/parallel.hpp"
#include "gffil/percolation.hpp"
#include "gffil/potential.hpp"
#include "gffil/renorm.hpp"
#include "gffil/stats.hpp"

using nlohmann::json;
using namespace gffil;

namespace {

struct Common {
  std::string family = "zd";
  int dim = 3;
  int radius = 8;
  int level = 3;
  int height = 8;
  int mesh = 1;
  std::uint64_t seed = 0;
  bool seed_set = false;
  std::string out = ".";
  std::string config;
  int threads = 0;
};

void add_common(CLI::App* cmd, Common& c) {
  cmd->add_option("--family", c.family, "graph family: zd|gasket_z|carpet");
  cmd->add_option("--dim", c.dim, "lattice/carpet dimension");
  cmd->add_option("--radius", c.radius, "window radius (zd)");
  cmd->add_option("--level", c.level, "construction level (gasket_z, carpet)");
  cmd->add_option("--height", c.height, "height of the line factor (gasket_z)");
  cmd->add_option("--mesh", c.mesh, "edge subdivision factor");
  cmd->add_option("--seed", c.seed, "RNG seed (mandatory)")
      ->each([&](const std::string&) { c.seed_set = true; });
  cmd->add_option("--out", c.out, "output directory");
  cmd->add_option("--config", c.config, "JSON config overriding the flags");
  cmd->add_option("--threads", c.threads, "worker threads (or GFFIL_THREADS)");
}

// --config FILE overrides flag values key by key
void apply_config(Common& c, json& extra) {
  if (c.config.empty()) return;
  std::ifstream f(c.config);
  if (!f) throw std::invalid_argument("cannot read config " + c.config);
  json j;
  f >> j;
  if (j.contains("family")) c.family = j["family"].get<std::string>();
  if (j.contains("dim")) c.dim = j["dim"].get<int>();
  if (j.contains("radius")) c.radius = j["radius"].get<int>();
  if (j.contains("level")) c.level = j["level"].get<int>();
  if (j.contains("height")) c.height = j["height"].get<int>();
  if (j.contains("mesh_factor")) c.mesh = j["mesh_factor"].get<int>();
  if (j.contains("seed")) {
    c.seed = j["seed"].get<std::uint64_t>();
    c.seed_set = true;
  }
  if (j.contains("threads")) c.threads = j["threads"].get<int>();
  extra = j;
}

WeightedGraph build_graph(const Common& c) {
  if (c.family == "zd") return build_lattice(c.dim, c.radius);
  if (c.family == "gasket_z") return build_gasket_product(c.level, c.height);
  if (c.family == "carpet") return build_carpet(c.dim, c.level);
  throw std::invalid_argument("unknown family: " + c.family);
}

json family_params(const Common& c) {
  json p;
  p["family"] = c.family;
  if (c.family == "zd") {
    p["dim"] = c.dim;
    p["radius"] = c.radius;
  } else if (c.family == "gasket_z") {
    p["level"] = c.level;
    p["height"] = c.height;
  } else {
    p["dim"] = c.dim;
    p["level"] = c.level;
  }
  if (c.mesh > 1) p["mesh_factor"] = c.mesh;
  return p;
}

std::vector<int> parse_coords(const std::string& s) {
  std::vector<int> out;
  std::size_t pos = 0;
  while (pos < s.size()) {
    std::size_t next = s.find(',', pos);
    if (next == std::string::npos) next = s.size();
    out.push_back(std::stoi(s.substr(pos, next - pos)));
    pos = next + 1;
  }
  return out;
}

std::vector<double> parse_grid(const std::string& s) {
  // "a:b:step" or "v1,v2,..."
  std::vector<double> out;
  if (s.find(':') != std::string::npos) {
    const auto p1 = s.find(':');
    const auto p2 = s.find(':', p1 + 1);
    const double a = std::stod(s.substr(0, p1));
    const double b = std::stod(s.substr(p1 + 1, p2 - p1 - 1));
    const double step = std::stod(s.substr(p2 + 1));
    for (double v = a; v <= b + 1e-12; v += step) out.push_back(v);
    return out;
  }
  std::size_t pos = 0;
  while (pos < s.size()) {
    std::size_t next = s.find(',', pos);
    if (next == std::string::npos) next = s.size();
    out.push_back(std::stod(s.substr(pos, next - pos)));
    pos = next + 1;
  }
  return out;
}

Vertex require_vertex(const WeightedGraph& g, const std::string& coords) {
  const Vertex v = g.find_vertex(parse_coords(coords));
  if (v == kNoVertex)
    throw std::invalid_argument("vertex not in window: " + coords);
  return v;
}

std::string opath(const Common& c, const std::string& name) {
  std::filesystem::create_directories(c.out);
  return (std::filesystem::path(c.out) / name).string();
}

void print_catalog() {
  // every operation of the library, one line each
  static const char* entries[] = {
      "graph-core/build_lattice: integer lattice window with unit weights",
      "graph-core/build_gasket_product: gasket skeleton crossed with a line",
      "graph-core/build_carpet: graphical Sierpinski carpet prefix",
      "graph-core/metric_distance: graph or product metric between vertices",
      "graph-core/ball: exact closed metric ball with clipping flag",
      "graph-core/approximate_lattice: greedy cover/packing lattice",
      "graph-core/external_boundary: boundary joined to the window frontier",
      "graph-core/verify_volume_growth: log-log mass-vs-radius fit",
      "potential/killed_green: dense killed Green table by direct solve",
      "potential/green_estimate: Green column with decay-based error bound",
      "potential/heat_kernel: n-step kernel by sparse iteration",
      "potential/equilibrium_measure: weighted escape probabilities",
      "potential/capacity: equilibrium mass with variational cross-check",
      "potential/exit_time_stats: Monte Carlo exit times with exact mean",
      "potential/harnack_ratio: sup/inf of a positive harmonic function",
      "gff/subdivide: edge-subdivided mesh of the window",
      "gff/sample_gff: zero-boundary Gaussian field sampler",
      "gff/markov_decompose: harmonic plus independent bulk split",
      "gff/bridge_stays_above: half-edge barrier avoidance probability",
      "gff/level_set: vertices at or above a height",
      "interlacements/sample_interlacement: Poisson cloud of killed walks",
      "interlacements/occupation_field: visit counts over vertex weights",
      "interlacements/vacant_set: unvisited window vertices",
      "interlacements/excursion_process: walk excursions between two sets",
      "interlacements/soft_local_time: Poisson-driven excursion reconstruction",
      "interlacements/soft_local_time_moments: mean/second moment/tail table",
      "isomorphism/build_coupling: field assembled from cloud and sign field",
      "isomorphism/verify_inclusions: per-vertex inclusion checks",
      "isomorphism/gff_marginal_test: batch mean/variance/KS comparison",
      "isomorphism/conditional_event_probs: six local event probabilities",
      "isomorphism/eight_set_coupling: nested uniform eight-set realization",
      "percolation/components: union-find clusters of an induced set",
      "percolation/crossing_event: annulus crossing indicator",
      "percolation/hbar_events: local-uniqueness indicators",
      "percolation/scan_levels: crossing curves and threshold estimate",
      "renorm/scales: geometric scale ladder with lattice covers",
      "renorm/cascade: recursive two-child event over the ladder",
      "renorm/classify_good: four local events per lattice vertex",
      "renorm/bad_r_path_search: escape path through bad vertices",
      "renorm/good_path_connect: components joined through good vertices",
      "renorm/decoupling_check: sprinkled product comparison",
      "cli/run: execute one operation from flags or a JSON config",
      "cli/list_ops: this catalog",
  };
  for (const char* e : entries) std::printf("%s\n", e);
}

int cmd_graph_info(const Common& c) {
  const WeightedGraph g = build_graph(c);
  const MetricSpec m = MetricSpec::for_family(g);
  json v;
  v["vertices"] = g.vertex_count();
  v["edges"] = g.edge_count();
  std::size_t nf = 0;
  for (Vertex x = 0; x < g.vertex_count(); ++x)
    if (g.on_frontier(x)) ++nf;
  v["frontier"] = nf;
  v["min_transition_probability"] = g.min_transition_probability();
  v["alpha"] = m.alpha;
  v["beta"] = m.beta;
  v["nu"] = m.nu();
  write_json(result_record("graph-info", family_params(c), v, 0.0, c.seed),
             opath(c, "graph_info.json"));
  write_edge_csv(g, opath(c, "edges.csv"));
  std::printf("%s\n", v.dump().c_str());
  return 0;
}

int cmd_green(const Common& c, const std::string& xs, const std::string& ys,
              double c2) {
  const WeightedGraph g = build_graph(c);
  const MetricSpec m = MetricSpec::for_family(g);
  const Vertex x = require_vertex(g, xs), y = require_vertex(g, ys);
  const auto est = green_estimate(g, m, x, y, window_interior(g), c2);
  json v;
  v["green"] = est.value;
  v["error_bound"] = est.error_bound;
  json params = family_params(c);
  params["x"] = xs;
  params["y"] = ys;
  write_json(result_record("green", params, v, est.error_bound, c.seed),
             opath(c, "green.json"));
  std::printf("%s\n", v.dump().c_str());
  return 0;
}

int cmd_capacity(const Common& c, double a_radius) {
  const WeightedGraph g = build_graph(c);
  const MetricSpec m = MetricSpec::for_family(g);
  const auto a = ball(g, m, central_vertex(g), a_radius);
  if (a.window_clipped) throw std::invalid_argument("capacity: A clipped");
  const auto r = capacity(g, a.members, window_interior(g));
  json v;
  v["capacity"] = r.capacity;
  v["variational"] = r.variational;
  v["relative_gap"] =
      std::fabs(r.capacity - r.variational) / std::max(r.capacity, 1e-300);
  json params = family_params(c);
  params["a_radius"] = a_radius;
  write_json(result_record("capacity", params, v, v["relative_gap"], c.seed),
             opath(c, "capacity.json"));
  std::printf("%s\n", v.dump().c_str());
  return 0;
}

int cmd_exit_time(const Common& c, double radius, std::size_t nsamples) {
  const WeightedGraph g = build_graph(c);
  const MetricSpec m = MetricSpec::for_family(g);
  const auto r = exit_time_stats(g, m, central_vertex(g), radius, nsamples,
                                 c.seed, c.threads);
  json v;
  v["mean"] = r.mean;
  v["stderr"] = r.stderr_;
  v["exact_mean"] = r.exact_mean;
  json params = family_params(c);
  params["ball_radius"] = radius;
  params["nsamples"] = nsamples;
  write_json(result_record("exit-time", params, v, r.stderr_, c.seed),
             opath(c, "exit_time.json"));
  std::vector<std::vector<double>> rows;
  for (std::size_t i = 0; i < r.tail_times.size(); ++i)
    rows.push_back({r.tail_times[i], r.tail_probs[i], 0.0});
  write_curve_csv(opath(c, "exit_time_tail.csv"),
                  {"threshold", "tail_prob", "stderr"}, rows);
  std::printf("%s\n", v.dump().c_str());
  return 0;
}

int cmd_sample_gff(const Common& c, std::size_t nsamples) {
  const WeightedGraph g = build_graph(c);
  const Subdivision sub = subdivide(g, c.mesh);
  auto sampler = make_cholesky_sampler(sub.graph, window_interior(sub.graph));
  for (std::size_t i = 0; i < nsamples; ++i) {
    const FieldSample f = sampler->sample(c.seed, i);
    std::vector<std::vector<double>> rows;
    for (Vertex v : f.domain)
      rows.push_back({static_cast<double>(v), f.values[v]});
    write_curve_csv(opath(c, "field_" + std::to_string(i) + ".csv"),
                    {"vertex_id", "value"}, rows);
  }
  std::printf("wrote %zu field samples\n", nsamples);
  return 0;
}

int cmd_sample_ri(const Common& c, double u, double k_radius,
                  int kill_radius) {
  const WeightedGraph g = build_graph(c);
  const MetricSpec m = MetricSpec::for_family(g);
  const auto k = ball(g, m, central_vertex(g), k_radius);
  if (k.window_clipped) throw std::invalid_argument("sample-ri: K clipped");
  InterlacementOptions opts;
  opts.threads = c.threads;
  if (kill_radius > 0) {
    opts.kill.kind = KillSpec::Kind::Shell;
    opts.kill.shell_radius = kill_radius;
  }
  InterlacementSampler sampler(g, k.members, opts);
  const auto s = sampler.sample(u, c.seed, 0);
  {
    std::ofstream f(opath(c, "trajectories.jsonl"));
    for (const auto& t : s.trajectories) {
      json j;
      j["entrance"] = t.entrance;
      j["label"] = t.label;
      j["kill"] = t.cause == KillCause::Shell ? "shell" : "step_cap";
      j["path"] = t.path;
      f << j.dump() << "\n";
    }
  }
  const auto ell = occupation_field(g, s);
  std::vector<std::vector<double>> rows;
  for (Vertex v : s.active)
    if (ell[v] > 0.0) rows.push_back({static_cast<double>(v), ell[v]});
  write_curve_csv(opath(c, "occupation.csv"), {"vertex_id", "ell"}, rows);
  json v;
  v["trajectories"] = s.trajectories.size();
  v["cap"] = s.cap;
  json params = family_params(c);
  params["u"] = u;
  params["k_radius"] = k_radius;
  write_json(result_record("sample-ri", params, v, 0.0, c.seed),
             opath(c, "sample_ri.json"));
  std::printf("%s\n", v.dump().c_str());
  return 0;
}

int cmd_couple(const Common& c, double u) {
  const WeightedGraph g = build_graph(c);
  CouplingMachine machine(g, c.mesh);
  const CoupledSample cs = machine.sample(u, c.seed, 0);
  std::vector<std::vector<double>> rows;
  for (Vertex v = 0; v < machine.mesh().graph.vertex_count(); ++v)
    rows.push_back({static_cast<double>(v), cs.gamma.values[v], cs.ell[v],
                    static_cast<double>(cs.in_c[v]), cs.phi[v]});
  write_curve_csv(opath(c, "coupled.csv"),
                  {"vertex", "gamma", "ell", "in_C_infinity", "phi"}, rows);
  json v;
  v["residual"] = isomorphism_residual(machine.mesh(), cs);
  std::printf("%s\n", v.dump().c_str());
  return 0;
}

int cmd_iso_verify(const Common& c, double u, std::size_t nsamples) {
  const WeightedGraph g = build_graph(c);
  CouplingMachine machine(g, c.mesh);
  double worst = 0.0;
  std::size_t bad = 0, checked = 0;
  std::vector<double> residuals(nsamples);
  std::vector<std::size_t> viol(nsamples);
  parallel_for(
      static_cast<std::int64_t>(nsamples),
      [&](std::int64_t i) {
        const CoupledSample cs = machine.sample(u, c.seed, i);
        residuals[i] = isomorphism_residual(machine.mesh(), cs);
        const auto rep = verify_inclusions(machine.mesh(), cs);
        viol[i] = rep.interlacement_violations + rep.vacant_violations;
      },
      c.threads);
  for (std::size_t i = 0; i < nsamples; ++i) {
    worst = std::max(worst, residuals[i]);
    bad += viol[i];
    ++checked;
  }
  json v;
  v["max_residual"] = worst;
  v["inclusion_violations"] = bad;
  v["samples"] = checked;
  json params = family_params(c);
  params["u"] = u;
  params["nsamples"] = nsamples;
  write_json(result_record("iso-verify", params, v, worst, c.seed),
             opath(c, "iso_verify.json"));
  std::printf("%s\n", v.dump().c_str());
  return worst < 1e-12 && bad == 0 ? 0 : 3;
}

int cmd_flip_probs(const Common& c, double u, double k_level, double p,
                   const std::string& psi_s, const std::string& w_s) {
  FlipInput in;
  in.psi = parse_grid(psi_s);
  in.edge_weights =
      w_s.empty() ? std::vector<double>(in.psi.size(), 1.0) : parse_grid(w_s);
  in.u = u;
  in.k_level = k_level;
  in.p = p;
  const FlipProbs f = conditional_event_probs(in);
  json v;
  v["f1"] = f.f1;
  v["f2"] = f.f2;
  v["f3"] = f.f3;
  v["f4"] = f.f4;
  v["f5"] = f.f5;
  v["f6"] = f.f6;
  v["beta"] = f.beta;
  v["quad_points"] = f.quad_points;
  write_json(result_record("flip-probs", {{"u", u}, {"K", k_level}, {"p", p}},
                           v, 0.0, c.seed),
             opath(c, "flip_probs.json"));
  std::printf("%s\n", v.dump().c_str());
  return 0;
}

int cmd_eight_sets(const Common& c, double u, double k_level, double p,
                   std::size_t nsamples, std::size_t calib_samples) {
  const WeightedGraph g = build_graph(c);
  CouplingMachine machine(g, c.mesh);
  const auto calib =
      calibrate_eight_sets(machine, u, calib_samples, c.seed + 1, c.threads);
  std::size_t violations = 0, vertices = 0;
  std::vector<std::size_t> counts(8, 0);
  for (std::size_t i = 0; i < nsamples; ++i) {
    const CoupledSample cs = machine.sample(u, c.seed, i, p);
    const auto es = eight_set_coupling(machine, cs, k_level, p, calib, c.seed);
    violations += es.chain_violations;
    vertices += es.vertices.size();
    for (std::size_t j = 0; j < es.vertices.size(); ++j) {
      counts[0] += es.iu[j];
      counts[1] += es.h[j];
      counts[2] += es.hbar[j];
      counts[3] += es.rbar[j];
      counts[4] += es.e_minus[j];
      counts[5] += es.e_plus[j];
      counts[6] += es.vbar[j];
      counts[7] += es.e_gamma[j];
    }
  }
  json v;
  v["chain_violations"] = violations;
  v["vertex_samples"] = vertices;
  const char* names[] = {"iu", "h", "hbar", "rbar", "e_minus", "e_plus",
                         "vbar", "e_gamma"};
  for (int j = 0; j < 8; ++j)
    v[std::string("freq_") + names[j]] =
        static_cast<double>(counts[j]) / std::max<std::size_t>(vertices, 1);
  json params = family_params(c);
  params["u"] = u;
  params["K"] = k_level;
  params["p"] = p;
  write_json(result_record("eight-sets", params, v, 0.0, c.seed),
             opath(c, "eight_sets.json"));
  std::printf("%s\n", v.dump().c_str());
  return violations == 0 ? 0 : 3;
}

int cmd_percolation_scan(const Common& c, const std::string& field,
                         const std::string& grid_s, const std::string& l_s,
                         std::size_t nsamples, bool svg) {
  const WeightedGraph g = build_graph(c);
  const MetricSpec m = MetricSpec::for_family(g);
  const Vertex x0 = central_vertex(g);
  const std::vector<double> grid = parse_grid(grid_s);
  const std::vector<double> ls = parse_grid(l_s);
  ScanResult r;
  if (field == "gff") {
    std::unique_ptr<GffSampler> sampler;
    if (g.family == Family::Zd && g.param_dim == 3)
      sampler = make_spectral_sampler(g);
    else
      sampler = make_cholesky_sampler(g, window_interior(g));
    // one field per sample serves the whole grid (level sets are monotone)
    r = scan_levels(grid, ls, nsamples,
                    [&](std::size_t i, double h, double L) {
                      const FieldSample f = sampler->sample(c.seed, i);
                      const auto s = level_set(f, h);
                      return crossing_event(g, m, s, x0, L);
                    },
                    c.threads);
  } else if (field == "vacant") {
    InterlacementOptions opts;
    opts.kill.min_sep_factor = 0.0;
    InterlacementSampler sampler(g, window_interior(g), opts);
    const double umax = grid.back();
    r = scan_levels(grid, ls, nsamples,
                    [&](std::size_t i, double u, double L) {
                      const auto s = sampler.sample(umax, c.seed, i);
                      const auto counts = visit_counts_at_level(g, s, u);
                      std::vector<Vertex> vac;
                      for (Vertex v : s.active)
                        if (counts[v] == 0) vac.push_back(v);
                      return crossing_event(g, m, vac, x0, L);
                    },
                    c.threads);
  } else {
    throw std::invalid_argument("percolation-scan: field must be gff|vacant");
  }
  std::vector<std::vector<double>> rows;
  for (const auto& pt : r.curve)
    rows.push_back({pt.parameter, pt.L, pt.p_hat, pt.stderr_,
                    static_cast<double>(pt.n)});
  write_curve_csv(opath(c, "scan.csv"),
                  {"parameter", "L", "p_hat", "stderr", "n"}, rows);
  json v;
  v["threshold_found"] = r.threshold_found;
  v["threshold"] = r.threshold;
  v["threshold_second_window"] = r.threshold_second;
  v["monotone"] = r.monotone;
  if (!r.note.empty()) v["note"] = r.note;
  json params = family_params(c);
  params["field"] = field;
  params["nsamples"] = nsamples;
  write_json(result_record("percolation-scan", params, v, 0.0, c.seed),
             opath(c, "scan.json"));
  if (svg) {
    std::vector<SvgSeries> series;
    for (std::size_t li = 0; li < ls.size(); ++li) {
      SvgSeries s;
      for (std::size_t pi = 0; pi < grid.size(); ++pi) {
        s.x.push_back(r.curve[pi * ls.size() + li].parameter);
        s.y.push_back(r.curve[pi * ls.size() + li].p_hat);
      }
      s.color = li % 2 ? "#b23b1f" : "#1f6fb2";
      series.push_back(std::move(s));
    }
    write_svg_plot(opath(c, "scan.svg"), series, "crossing probability");
  }
  if (!r.monotone) return 3;
  std::printf("%s\n", v.dump().c_str());
  return 0;
}

int cmd_renorm_classify(const Common& c, double u, double k_level, double p,
                        double l0) {
  const WeightedGraph g = build_graph(c);
  const MetricSpec m = MetricSpec::for_family(g);
  CouplingMachine machine(g, c.mesh);
  const CoupledSample cs = machine.sample(u, c.seed, 0, p);
  const auto lattice = approximate_lattice(g, m, l0);
  const auto map = classify_good(machine, cs, m, lattice, l0, k_level, p);
  std::vector<std::vector<double>> rows;
  for (std::size_t i = 0; i < map.vertices.size(); ++i)
    rows.push_back({static_cast<double>(map.vertices[i]),
                    static_cast<double>(map.c_event[i]),
                    static_cast<double>(map.d_event[i]),
                    static_cast<double>(map.e_event[i]),
                    static_cast<double>(map.f_event[i]),
                    static_cast<double>(map.good[i])});
  write_curve_csv(opath(c, "goodmap.csv"), {"vertex", "C", "D", "E", "F", "good"},
                  rows);
  std::printf("classified %zu vertices (%zu skipped)\n", map.vertices.size(),
              map.skipped.size());
  return 0;
}

int cmd_badpath_scan(const Common& c, double u, double k_level, double p,
                     double l0, double r_step, const std::string& n_s,
                     std::size_t nsamples) {
  const WeightedGraph g = build_graph(c);
  const MetricSpec m = MetricSpec::for_family(g);
  CouplingMachine machine(g, c.mesh);
  const auto lattice = approximate_lattice(g, m, l0);
  const std::vector<double> ns = parse_grid(n_s);
  std::vector<std::vector<std::uint8_t>> hits(
      nsamples, std::vector<std::uint8_t>(ns.size(), 0));
  parallel_for(
      static_cast<std::int64_t>(nsamples),
      [&](std::int64_t i) {
        const CoupledSample cs = machine.sample(u, c.seed, i, p);
        const auto map =
            classify_good(machine, cs, m, lattice, l0, k_level, p);
        if (map.vertices.empty()) return;
        const Vertex x0 = map.vertices[map.vertices.size() / 2];
        for (std::size_t ni = 0; ni < ns.size(); ++ni)
          hits[i][ni] =
              bad_r_path_search(g, m, map, r_step, x0, ns[ni]) ? 1 : 0;
      },
      c.threads);
  std::vector<std::vector<double>> rows;
  for (std::size_t ni = 0; ni < ns.size(); ++ni) {
    std::size_t total = 0;
    for (std::size_t i = 0; i < nsamples; ++i) total += hits[i][ni];
    const auto f = binomial_freq(total, nsamples);
    rows.push_back({ns[ni], f.mean, f.stderr_});
  }
  write_curve_csv(opath(c, "badpath.csv"), {"N", "p_hat", "stderr"}, rows);
  std::printf("wrote badpath curve (%zu points)\n", rows.size());
  return 0;
}

int cmd_decoupling_scan(const Common& c, const std::string& field, double u,
                        double epsilon, const std::string& s_grid,
                        std::size_t nsamples) {
  const WeightedGraph g = build_graph(c);
  const MetricSpec m = MetricSpec::for_family(g);
  const std::vector<double> seps = parse_grid(s_grid);
  const Vertex x0 = central_vertex(g);

  std::vector<std::vector<double>> rows;
  for (double s : seps) {
    // two balls of radius 2 separated by about s around the center
    std::vector<int> ca(g.coord(x0), g.coord(x0) + g.coord_dim);
    std::vector<int> cb = ca;
    ca[0] -= static_cast<int>(s / 2 + 2);
    cb[0] += static_cast<int>(s / 2 + 2);
    const Vertex va = g.find_vertex(ca), vb = g.find_vertex(cb);
    if (va == kNoVertex || vb == kNoVertex)
      throw std::invalid_argument("decoupling-scan: separation exceeds window");
    DecouplingEvent e1, e2;
    e1.support = ball(g, m, va, 2.0).members;
    e2.support = ball(g, m, vb, 2.0).members;
    DecouplingResult r;
    if (field == "gff") {
      e1.kind = e2.kind = DecouplingEvent::Kind::FieldAllAbove;
      e1.level = e2.level = 0.0;
      std::unique_ptr<GffSampler> sampler;
      if (g.family == Family::Zd && g.param_dim == 3)
        sampler = make_spectral_sampler(g);
      else
        sampler = make_cholesky_sampler(g, window_interior(g));
      r = decoupling_check_gff(g, m, *sampler, e1, e2, epsilon, nsamples,
                               c.seed, c.threads);
    } else {
      e1.kind = e2.kind = DecouplingEvent::Kind::VacantAll;
      std::vector<Vertex> target(e1.support);
      target.insert(target.end(), e2.support.begin(), e2.support.end());
      std::sort(target.begin(), target.end());
      InterlacementOptions opts;
      opts.kill.min_sep_factor = 0.0;
      InterlacementSampler sampler(g, target, opts);
      r = decoupling_check_ri(g, m, sampler, e1, e2, u, epsilon, nsamples,
                              c.seed, c.threads);
    }
    rows.push_back({r.separation, r.lhs, r.rhs, r.gap, r.gap_stderr});
  }
  write_curve_csv(opath(c, "decoupling.csv"),
                  {"separation", "joint", "sprinkled_product", "gap",
                   "gap_stderr"},
                  rows);
  std::printf("wrote decoupling curve (%zu points)\n", rows.size());
  return 0;
}

int cmd_softlocal(const Common& c, double b_radius, double v_inner,
                  double v_outer, std::size_t nsamples) {
  const WeightedGraph g = build_graph(c);
  const MetricSpec m = MetricSpec::for_family(g);
  const Vertex x0 = central_vertex(g);
  const auto b = ball(g, m, x0, b_radius).members;
  std::vector<Vertex> v;
  {
    const auto outer = ball(g, m, x0, v_outer).members;
    const auto inner = ball(g, m, x0, v_inner).members;
    std::vector<std::uint8_t> in(g.vertex_count(), 0);
    for (Vertex w : inner) in[w] = 1;
    for (Vertex w : outer)
      if (!in[w]) v.push_back(w);
  }
  ExcursionKernel kernel(g, b, v);
  const auto mom = soft_local_time_moments(kernel, nsamples, c.seed, c.threads);
  const auto direct =
      direct_excursion_counts(kernel, nsamples, c.seed + 1, c.threads);
  std::vector<std::vector<double>> rows;
  for (std::size_t i = 0; i < mom.boundary.size(); ++i)
    rows.push_back({static_cast<double>(mom.boundary[i]), mom.pi[i],
                    mom.pi_stderr[i], direct[i], mom.m2[i]});
  write_curve_csv(opath(c, "softlocal.csv"),
                  {"vertex", "pi", "pi_stderr", "pi_direct", "second_moment"},
                  rows);
  json val;
  val["cap_v"] = kernel.cap_v();
  val["mean_chain_length"] = mom.mean_t_b;
  for (std::size_t t = 0; t < mom.tail_v.size(); ++t)
    val["tail_" + std::to_string(static_cast<int>(mom.tail_v[t]))] =
        mom.tail_prob[t];
  write_json(result_record("softlocal", family_params(c), val, 0.0, c.seed),
             opath(c, "softlocal.json"));
  std::printf("%s\n", val.dump().c_str());
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Gaussian free field / random interlacements laboratory"};
  app.require_subcommand(1);

  Common c;
  std::string xs = "0,0,0", ys = "1,0,0";
  double c2 = 1.0, a_radius = 2.0, ball_radius = 4.0;
  double u = 0.5, k_level = 1.0, p = 0.5, l0 = 4.0, epsilon = 0.25;
  double b_radius = 1.0, v_inner = 3.0, v_outer = 4.0, r_step = 2.0;
  std::size_t nsamples = 1000, calib_samples = 2000;
  std::string field = "gff", grid = "0:0.5:0.1", l_grid = "4,8";
  std::string psi_s, w_s, n_grid = "8,16";
  bool svg = false;

  auto* sc_list = app.add_subcommand("list-ops", "print the operation catalog");
  auto* sc_info = app.add_subcommand("graph-info", "window summary + edge CSV");
  auto* sc_green = app.add_subcommand("green", "Green value with error bound");
  sc_green->add_option("--x", xs);
  sc_green->add_option("--y", ys);
  sc_green->add_option("--c2", c2, "decay constant of the error bound");
  auto* sc_cap = app.add_subcommand("capacity", "capacity with cross-check");
  sc_cap->add_option("--a-radius", a_radius);
  auto* sc_exit = app.add_subcommand("exit-time", "Monte Carlo exit times");
  sc_exit->add_option("--ball-radius", ball_radius);
  sc_exit->add_option("--nsamples", nsamples);
  auto* sc_gff = app.add_subcommand("sample-gff", "field samples as CSV");
  sc_gff->add_option("--nsamples", nsamples);
  auto* sc_ri = app.add_subcommand("sample-ri", "interlacement trajectories");
  sc_ri->add_option("--u", u);
  sc_ri->add_option("--k-radius", a_radius);
  int kill_radius = 0;
  sc_ri->add_option("--kill-radius", kill_radius);
  auto* sc_couple = app.add_subcommand("couple", "one coupled sample as CSV");
  sc_couple->add_option("--u", u);
  auto* sc_iso = app.add_subcommand("iso-verify", "identity and inclusions");
  sc_iso->add_option("--u", u);
  sc_iso->add_option("--nsamples", nsamples);
  auto* sc_flip = app.add_subcommand("flip-probs", "six event probabilities");
  sc_flip->add_option("--u", u);
  sc_flip->add_option("--k", k_level);
  sc_flip->add_option("--p", p);
  sc_flip->add_option("--psi", psi_s)->required();
  sc_flip->add_option("--weights", w_s);
  auto* sc_eight = app.add_subcommand("eight-sets", "eight-set realizations");
  sc_eight->add_option("--u", u);
  sc_eight->add_option("--k", k_level);
  sc_eight->add_option("--p", p);
  sc_eight->add_option("--nsamples", nsamples);
  sc_eight->add_option("--calib-samples", calib_samples);
  auto* sc_scan = app.add_subcommand("percolation-scan", "crossing curves");
  sc_scan->add_option("--op", field, "crossing field: gff|vacant")
      ->check(CLI::IsMember({"crossing"}))
      ->expected(0, 1);
  sc_scan->add_option("--field", field);
  sc_scan->add_option("--h-grid", grid);
  sc_scan->add_option("--u-grid", grid);
  sc_scan->add_option("--L", l_grid);
  sc_scan->add_option("--nsamples", nsamples);
  sc_scan->add_flag("--svg", svg);
  auto* sc_cls = app.add_subcommand("renorm-classify", "good-vertex map");
  sc_cls->add_option("--u", u);
  sc_cls->add_option("--k", k_level);
  sc_cls->add_option("--p", p);
  sc_cls->add_option("--l0", l0);
  auto* sc_bad = app.add_subcommand("badpath-scan", "bad escape frequencies");
  sc_bad->add_option("--u", u);
  sc_bad->add_option("--k", k_level);
  sc_bad->add_option("--p", p);
  sc_bad->add_option("--l0", l0);
  sc_bad->add_option("--R", r_step);
  sc_bad->add_option("--N", n_grid);
  sc_bad->add_option("--nsamples", nsamples);
  auto* sc_dec = app.add_subcommand("decoupling-scan", "sprinkled products");
  sc_dec->add_option("--field", field);
  sc_dec->add_option("--u", u);
  sc_dec->add_option("--epsilon", epsilon);
  sc_dec->add_option("--s-grid", grid);
  sc_dec->add_option("--nsamples", nsamples);
  auto* sc_soft = app.add_subcommand("softlocal", "soft local times");
  sc_soft->add_option("--b-radius", b_radius);
  sc_soft->add_option("--v-inner", v_inner);
  sc_soft->add_option("--v-outer", v_outer);
  sc_soft->add_option("--nsamples", nsamples);

  for (auto* sc :
       {sc_info, sc_green, sc_cap, sc_exit, sc_gff, sc_ri, sc_couple, sc_iso,
        sc_flip, sc_eight, sc_scan, sc_cls, sc_bad, sc_dec, sc_soft})
    add_common(sc, c);

  CLI11_PARSE(app, argc, argv);

  try {
    json extra;
    apply_config(c, extra);
    if (!sc_list->parsed() && !c.seed_set)
      throw std::invalid_argument("--seed is mandatory");
#ifdef _OPENMP
    // the resolved thread count is respected by all parallel loops
#endif
    if (sc_list->parsed()) {
      print_catalog();
      return 0;
    }
    if (sc_info->parsed()) return cmd_graph_info(c);
    if (sc_green->parsed()) return cmd_green(c, xs, ys, c2);
    if (sc_cap->parsed()) return cmd_capacity(c, a_radius);
    if (sc_exit->parsed()) return cmd_exit_time(c, ball_radius, nsamples);
    if (sc_gff->parsed()) return cmd_sample_gff(c, nsamples);
    if (sc_ri->parsed()) return cmd_sample_ri(c, u, a_radius, kill_radius);
    if (sc_couple->parsed()) return cmd_couple(c, u);
    if (sc_iso->parsed()) return cmd_iso_verify(c, u, nsamples);
    if (sc_flip->parsed()) return cmd_flip_probs(c, u, k_level, p, psi_s, w_s);
    if (sc_eight->parsed())
      return cmd_eight_sets(c, u, k_level, p, nsamples, calib_samples);
    if (sc_scan->parsed())
      return cmd_percolation_scan(c, field, grid, l_grid, nsamples, svg);
    if (sc_cls->parsed()) return cmd_renorm_classify(c, u, k_level, p, l0);
    if (sc_bad->parsed())
      return cmd_badpath_scan(c, u, k_level, p, l0, r_step, n_grid, nsamples);
    if (sc_dec->parsed())
      return cmd_decoupling_scan(c, field, u, epsilon, grid, nsamples);
    if (sc_soft->parsed())
      return cmd_softlocal(c, b_radius, v_inner, v_outer, nsamples);
  } catch (const std::invalid_argument& e) {
    std::fprintf(stderr, "validation error: %s\n", e.what());
    return 2;
  } catch (const std::out_of_range& e) {
    std::fprintf(stderr, "validation error: %s\n", e.what());
    return 2;
  } catch (const std::exception& e) {
    std::fprintf(stderr, "numerical failure: %s\n", e.what());
    return 3;
  }
  return 0;
}
