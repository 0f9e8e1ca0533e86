// Throughput comparison of the OpenMP drivers against their serial
// reference paths on three representative kernels. The outputs of both
// paths are bit-identical (asserted in the test suite); this target only
// reports the speed difference.

#include <chrono>
#include <cstdio>

#include "gffil/gff.hpp"
#include "gffil/graph.hpp"
#include "gffil/interlacements.hpp"
#include "gffil/parallel.hpp"
#include "gffil/percolation.hpp"

using namespace gffil;
using clock_type = std::chrono::steady_clock;

namespace {

double seconds_since(clock_type::time_point t0) {
  return std::chrono::duration<double>(clock_type::now() - t0).count();
}

template <class F>
double timed(const F& f) {
  const auto t0 = clock_type::now();
  f();
  return seconds_since(t0);
}

void report(const char* name, double serial, double parallel) {
  std::printf("%-28s serial %7.3fs  parallel %7.3fs  speedup %.2fx\n", name,
              serial, parallel, serial / parallel);
}

}  // namespace

int main() {
  const int threads = resolve_threads();
  std::printf("threads: %d\n", threads);

  // field sampling
  {
    const WeightedGraph g = build_lattice(3, 16);
    const auto sampler = make_spectral_sampler(g);
    const std::size_t n = 64;
    std::vector<double> sums(n);
    auto body = [&](std::int64_t i) {
      const FieldSample f = sampler->sample(1, i);
      double s = 0.0;
      for (Vertex v : f.domain) s += f.values[v];
      sums[i] = s;
    };
    const double ts = timed([&] { serial_for(n, body); });
    const double tp = timed([&] { parallel_for(n, body, threads); });
    report("gff sampling (r=16)", ts, tp);
  }

  // interlacement trajectories
  {
    const WeightedGraph g = build_lattice(3, 16);
    InterlacementOptions opts;
    opts.kill.min_sep_factor = 0.0;
    InterlacementSampler sampler(g, window_interior(g), opts);
    opts.threads = 1;
    InterlacementSampler serial_sampler(g, window_interior(g), opts);
    const double ts =
        timed([&] { for (int i = 0; i < 8; ++i) serial_sampler.sample(1.0, 2, i); });
    const double tp =
        timed([&] { for (int i = 0; i < 8; ++i) sampler.sample(1.0, 2, i); });
    report("interlacement (u=1, r=16)", ts, tp);
  }

  // crossing scan
  {
    const WeightedGraph g = build_lattice(3, 16);
    const MetricSpec m = MetricSpec::for_family(g);
    const auto sampler = make_spectral_sampler(g);
    const Vertex x0 = central_vertex(g);
    auto indicator = [&](std::size_t i, double h, double L) {
      const FieldSample f = sampler->sample(3, i);
      return crossing_event(g, m, level_set(f, h), x0, L);
    };
    const double ts = timed(
        [&] { scan_levels({0.0, 0.2}, {4.0, 8.0}, 48, indicator, 1); });
    const double tp = timed(
        [&] { scan_levels({0.0, 0.2}, {4.0, 8.0}, 48, indicator, threads); });
    report("crossing scan (r=16)", ts, tp);
  }
  return 0;
}
