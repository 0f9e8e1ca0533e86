#include <doctest.h>

#include <cmath>

#include "gffil/isomorphism.hpp"
#include "gffil/stats.hpp"

using namespace gffil;

namespace {

// closed form of the barrier integral, used as the quadrature oracle
double f1_closed_form(double beta, double sigma, double s_sum, double h) {
  auto phibar = [](double z) { return 0.5 * std::erfc(z / std::sqrt(2.0)); };
  const double t1 = phibar((-h - beta) / sigma);
  const double expo = -4.0 * s_sum * (beta + h) + 8.0 * s_sum * s_sum * sigma * sigma;
  return t1 - std::exp(expo) * phibar((-h - beta + 4.0 * s_sum * sigma * sigma) / sigma);
}

}  // namespace

TEST_CASE("coupling identity and inclusions") {
  const auto z = build_lattice(3, 4);
  CouplingMachine machine(z, 2);
  for (double u : {0.05, 0.4}) {
    for (std::size_t i = 0; i < 20; ++i) {
      const auto c = machine.sample(u, 31, i);
      CHECK(isomorphism_residual(machine.mesh(), c) < 1e-12);
      const auto rep = verify_inclusions(machine.mesh(), c);
      CHECK(rep.ok());
    }
  }
}

TEST_CASE("zero-intensity coupling degenerates to the auxiliary field") {
  const auto z = build_lattice(3, 3);
  CouplingMachine machine(z, 2);
  const auto c = machine.sample(0.0, 7, 0);
  CHECK(c.ri.trajectories.empty());
  for (Vertex v = 0; v < machine.mesh().graph.vertex_count(); ++v) {
    CHECK(c.in_c[v] == 0);
    CHECK(c.phi[v] == doctest::Approx(c.gamma.values[v]).epsilon(1e-15));
  }
  CHECK(verify_inclusions(machine.mesh(), c).ok());
}

TEST_CASE("assembled field matches the reference law as u -> 0") {
  const auto z = build_lattice(3, 3);
  CouplingMachine machine(z, 2);
  const double u = 1e-6;
  const std::size_t n = 4000;
  std::vector<Vertex> panel;
  const auto m = MetricSpec::for_family(z);
  for (Vertex v : ball(z, m, z.find_vertex({0, 0, 0}), 1.0).members)
    panel.push_back(v);
  std::vector<std::vector<double>> batch_phi(n), batch_ref(n);
  for (std::size_t i = 0; i < n; ++i) {
    const auto c = machine.sample(u, 41, i);
    const auto ref = machine.reference_field(42, i);
    batch_phi[i].reserve(panel.size());
    batch_ref[i].reserve(panel.size());
    for (Vertex v : panel) {
      batch_phi[i].push_back(c.phi[v]);
      batch_ref[i].push_back(ref.values[v]);
    }
  }
  const auto t = gff_marginal_test(batch_phi, batch_ref, panel);
  for (std::size_t pi = 0; pi < panel.size(); ++pi) {
    CHECK(std::fabs(t.mean_z[pi]) < 4.0);
    CHECK(t.ks[pi] < t.ks_threshold);
  }
}

TEST_CASE("conditional event probabilities") {
  FlipInput in;
  in.psi = {0.2, -0.1, 0.4, 0.0, 0.3, -0.2};
  in.edge_weights.assign(6, 1.0);
  in.u = 0.02;
  in.k_level = 1.0;
  in.p = 0.7;
  const auto f = conditional_event_probs(in);

  const double h = std::sqrt(2.0 * in.u);
  const double lam = 6.0;
  const double sigma = 1.0 / std::sqrt(2.0 * lam);
  double s_sum = 0.0;
  for (double psi : in.psi)
    if (psi >= -h) s_sum += psi + h;
  CHECK(f.f1 == doctest::Approx(f1_closed_form(f.beta, sigma, s_sum, h))
                    .epsilon(1e-9));

  // f2 against a Monte Carlo Gaussian-tail oracle
  {
    Rng rng(3, StreamId::Generic);
    std::size_t hits = 0;
    const std::size_t n = 400000;
    for (std::size_t i = 0; i < n; ++i)
      if (f.beta + sigma * rng.gauss() >= -h) ++hits;
    const auto fr = binomial_freq(hits, n);
    CHECK(std::fabs(fr.mean - f.f2) < 4.0 * fr.stderr_);
  }

  // orderings
  CHECK(f.f4 <= f.f1 + 1e-15);
  CHECK(f.f1 <= f.f2 + 1e-15);
  CHECK(f.f4 <= f.f5 + 1e-15);
  CHECK(f.f5 <= f.f6 + 1e-15);

  // midpoints below -K kill the marked events
  FlipInput low = in;
  for (double& psi : low.psi) psi = -2.0;
  const auto flow = conditional_event_probs(low);
  CHECK(flow.f6 == 0.0);
  CHECK(flow.f4 == 0.0);
  CHECK(flow.f1 == 0.0);  // no half-edge can stay above

  // monotone responses: f2 decreases in u, f6 increases in K
  FlipInput a = in, b = in;
  b.u = 4.0 * in.u;
  CHECK(conditional_event_probs(b).f2 < conditional_event_probs(a).f2);
  FlipInput klow = in, khigh = in;
  klow.k_level = 0.05;   // some midpoints below -K
  khigh.k_level = 10.0;  // none
  CHECK(conditional_event_probs(klow).f6 <=
        conditional_event_probs(khigh).f6);
}

TEST_CASE("sign-flip comparison on an admissible grid") {
  // f1 * [S-bar] <= f3 whenever K lambda sqrt(2u) is small enough
  const double c15 = 0.0123;
  const double lam_x = 6.0;
  Rng rng(9, StreamId::Generic);
  int checked = 0;
  for (int t = 0; t < 400; ++t) {
    const double k_level = 0.05 + 0.3 * rng.u01();
    const double target = c15 / (lam_x * k_level);
    const double h = target * rng.u01();  // sqrt(2u) below the bound
    const double u = h * h / 2.0;
    if (!flip_condition_holds(k_level, lam_x, u, c15)) continue;
    FlipInput in;
    in.u = u;
    in.k_level = k_level;
    in.p = 1.0;
    for (int i = 0; i < 6; ++i) {
      in.psi.push_back(-k_level + 2.0 * k_level * rng.u01());
      in.edge_weights.push_back(1.0);
    }
    const auto f = conditional_event_probs(in);
    if (f.beta > k_level) continue;  // comparison region only
    if (f.sbar) CHECK(f.f1 <= f.f3 + 1e-12);
    ++checked;
  }
  CHECK(checked > 200);
}

TEST_CASE("eight-set realization") {
  const auto z = build_lattice(3, 4);
  CouplingMachine machine(z, 2);
  const double u = 1.5e-4, k_level = 0.1, p = 0.5;
  const auto calib = calibrate_eight_sets(machine, u, 400, 71);

  std::size_t viol = 0, total = 0;
  std::size_t n_h = 0, n_hbar = 0, n_eplus = 0, n_eminus = 0;
  const std::size_t n = 60;
  for (std::size_t i = 0; i < n; ++i) {
    const auto c = machine.sample(u, 73, i, p);
    const auto es = eight_set_coupling(machine, c, k_level, p, calib, 79);
    viol += es.chain_violations;
    total += es.vertices.size();
    for (std::size_t j = 0; j < es.vertices.size(); ++j) {
      n_h += es.h[j];
      n_hbar += es.hbar[j];
      n_eplus += es.e_plus[j];
      n_eminus += es.e_minus[j];
    }
  }
  CHECK(viol == 0);
  CHECK(total > 0);
  // marked sets satisfy the deterministic inclusion H <= Hbar in frequency
  CHECK(n_h <= n_hbar);
  CHECK(n_eplus <= n_eminus);

  // parameter validation
  const auto c = machine.sample(u, 73, 0, p);
  CHECK_THROWS_AS(eight_set_coupling(machine, c, 10.0, p, calib, 79),
                  std::invalid_argument);
}

TEST_CASE("eight-set marginals match direct frequencies") {
  const auto z = build_lattice(3, 3);
  CouplingMachine machine(z, 2);
  const double u = 1.5e-4, k_level = 0.1, p = 0.5;
  const auto calib = calibrate_eight_sets(machine, u, 3000, 311);
  const double h = std::sqrt(2.0 * u);

  const std::size_t n = 3000;
  std::size_t eplus_hits = 0, direct_hits = 0, slots = 0;
  std::size_t vbar_hits = 0, vac_hits = 0;
  for (std::size_t i = 0; i < n; ++i) {
    const auto c = machine.sample(u, 83, i, p);
    const auto es = eight_set_coupling(machine, c, k_level, p, calib, 89);
    const auto cd = machine.sample(u, 97, i);  // independent direct batch
    for (std::size_t j = 0; j < es.vertices.size(); ++j) {
      const Vertex x = es.vertices[j];
      ++slots;
      eplus_hits += es.e_plus[j];
      direct_hits += cd.phi[x] >= h ? 1 : 0;
      vbar_hits += es.vbar[j];
      vac_hits += cd.ri.visit_counts[x] == 0 ? 1 : 0;
    }
  }
  const auto fa = binomial_freq(eplus_hits, slots);
  const auto fb = binomial_freq(direct_hits, slots);
  CHECK(std::fabs(fa.mean - fb.mean) <
        3.0 * std::sqrt(fa.stderr_ * fa.stderr_ + fb.stderr_ * fb.stderr_) + 1e-4);
  const auto va = binomial_freq(vbar_hits, slots);
  const auto vb = binomial_freq(vac_hits, slots);
  CHECK(std::fabs(va.mean - vb.mean) <
        3.0 * std::sqrt(va.stderr_ * va.stderr_ + vb.stderr_ * vb.stderr_) + 1e-4);
}

TEST_CASE("marginal test separates equal and shifted laws") {
  const auto z = build_lattice(3, 2);
  CouplingMachine machine(z, 2);
  const std::size_t n = 3000;
  std::vector<Vertex> panel{z.find_vertex({0, 0, 0})};
  std::vector<std::vector<double>> a(n), b(n), shifted(n);
  for (std::size_t i = 0; i < n; ++i) {
    a[i] = {machine.reference_field(1, i).values[panel[0]]};
    b[i] = {machine.reference_field(2, i).values[panel[0]]};
    shifted[i] = {b[i][0] + 0.5};
  }
  const auto same = gff_marginal_test(a, b, panel);
  CHECK(std::fabs(same.mean_z[0]) < 4.0);
  CHECK(same.ks[0] < same.ks_threshold);
  const auto diff = gff_marginal_test(a, shifted, panel);
  CHECK(diff.ks[0] > diff.ks_threshold);
  CHECK_THROWS_AS(gff_marginal_test({}, {}, panel), std::invalid_argument);
}
