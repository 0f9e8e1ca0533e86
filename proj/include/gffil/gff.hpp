#pragma once

#include <memory>
#include <vector>

#include "gffil/graph.hpp"
#include "gffil/potential.hpp"
#include "gffil/rng.hpp"

namespace gffil {

// One field configuration: a real value per vertex, zero outside the free
// domain U, reproducible from (seed, index).
struct FieldSample {
  std::vector<double> values;   // size = vertex count of the generating graph
  std::vector<Vertex> domain;   // sorted
  std::uint64_t seed = 0;
  std::uint64_t index = 0;
};

// Zero-boundary Gaussian free field sampler on a domain. Two backends with
// identical law: a sparse Cholesky of the killed precision operator (any
// graph), and a spectral sampler for full Z^d window interiors. Sampling is
// pure in (seed, index), so batches parallelize over indices and results do
// not depend on the thread count.
class GffSampler {
 public:
  virtual ~GffSampler() = default;
  virtual FieldSample sample(std::uint64_t seed, std::uint64_t index) const = 0;
  virtual const std::vector<Vertex>& domain() const = 0;
  virtual const char* backend() const = 0;
};

// Sparse-precision Cholesky sampler; the reference backend.
std::unique_ptr<GffSampler> make_cholesky_sampler(const WeightedGraph& g,
                                                  std::vector<Vertex> domain);

// Sine-mode sampler for the full interior of a Z^d window (dim 3 supported).
std::unique_ptr<GffSampler> make_spectral_sampler(const WeightedGraph& g);

struct MarkovDecomposition {
  std::vector<double> harmonic;  // matches the field on K, harmonic off K
  std::vector<double> bulk;      // field - harmonic, vanishes on K
};

// Split a field into the harmonic extension of its values on K plus an
// independent zero-boundary bulk part.
MarkovDecomposition markov_decompose(const WeightedGraph& g,
                                     const FieldSample& field,
                                     const std::vector<Vertex>& k);

// Probability that the field bridge over the closed half-edge of an edge of
// weight `lambda` (a cable segment of length 1/(4 lambda)), conditioned on
// endpoint values a and b, stays above -h. Zero when an endpoint is below.
double bridge_stays_above(double a, double b, double lambda, double h);

// Same for a cable segment of arbitrary length.
double segment_stays_above(double a, double b, double length, double h);

// {x in domain : value(x) >= h}
std::vector<Vertex> level_set(const FieldSample& field, double h);

}  // namespace gffil
