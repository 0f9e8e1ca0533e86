#pragma once

#include <cstdint>
#include <functional>
#include <string>
#include <vector>

#include "gffil/graph.hpp"

namespace gffil {

struct ClusterReport {
  std::vector<std::vector<Vertex>> components;  // blocks sorted by least vertex
  std::vector<double> diameters;                // metric diameter per block
};

// connected components of the subgraph induced on S
std::vector<std::vector<Vertex>> components(const WeightedGraph& g,
                                            const std::vector<Vertex>& s);

ClusterReport cluster_report(const WeightedGraph& g, const MetricSpec& m,
                             const std::vector<Vertex>& s);

// true iff a nearest-neighbor path inside S joins B(x,L) to the inner
// boundary of B(x,2L), staying within B(x,2L)
bool crossing_event(const WeightedGraph& g, const MetricSpec& m,
                    const std::vector<Vertex>& s, Vertex x, double L);

struct HbarEvents {
  bool no_big_component = false;           // nothing of diameter >= L/5 in B(x,L)
  bool big_components_disconnected = false;  // two blocks of diameter >= L/10
                                             // not joined within B(x, 2 C5 L)
  bool window_clipped = false;  // the connectivity ball was clipped
};

// the two local-uniqueness indicators for a level set at height h
HbarEvents hbar_events(const WeightedGraph& g, const MetricSpec& m,
                       const std::vector<double>& field_values,
                       const std::vector<Vertex>& field_domain, Vertex x,
                       double L, double h, double c5);

// ---- level / intensity scans ------------------------------------------------

struct ScanCurvePoint {
  double parameter = 0.0;
  double L = 0.0;
  double p_hat = 0.0;
  double stderr_ = 0.0;
  std::size_t n = 0;
};

struct ScanResult {
  std::vector<ScanCurvePoint> curve;
  bool threshold_found = false;
  double threshold = 0.0;        // parameter where the largest-L curve crosses 1/2
  double threshold_second = 0.0; // same estimate from the second-largest L
  bool monotone = true;
  std::string note;
};

// Generic scan: `indicator(sample_index, parameter, L)` evaluates the
// crossing event for one Monte Carlo sample; the grid must make the event
// non-increasing along `parameters`.
ScanResult scan_levels(const std::vector<double>& parameters,
                       const std::vector<double>& l_grid, std::size_t nsamples,
                       const std::function<bool(std::size_t, double, double)>&
                           indicator,
                       int threads = 0);

}  // namespace gffil
