#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include "doctest.h"

#include <cmath>
#include <cstring>
#include <stdexcept>

#include "couette/airy.hpp"
#include "couette/harness.hpp"
#include "couette/nonlinear.hpp"
#include "couette/parallel.hpp"

using namespace couette;

namespace {

// bitwise, so NaN payloads and signed zeros count too
bool same(const Vec& a, const Vec& b) {
  return a.size() == b.size() && std::memcmp(a.data(), b.data(), sizeof(cplx) * a.size()) == 0;
}

struct Threads {
  Threads() { set_jobs(4); }
};
const Threads force_threads;

}  // namespace

TEST_CASE("for_each_index rethrows the lowest failing index") {
  std::vector<int> hit(64, 0);
  for_each_index(Exec::parallel, hit.size(), [&](std::size_t i) { hit[i] = int(i); });
  for (int i = 0; i < 64; ++i) CHECK(hit[i] == i);
  try {
    for_each_index(Exec::parallel, 32, [](std::size_t i) {
      if (i == 7 || i == 20) throw std::runtime_error(std::to_string(i));
    });
    FAIL("expected an exception");
  } catch (const std::runtime_error& e) {
    CHECK(std::string(e.what()) == "7");
  }
}

TEST_CASE("airy batch") {
  std::vector<cplx> z;
  for (int i = 0; i < 200; ++i) z.push_back(std::polar(0.1 * i, 0.37 * i));
  const auto a = airy_batch(z, Exec::serial), b = airy_batch(z, Exec::parallel);
  for (std::size_t i = 0; i < z.size(); ++i) {
    CHECK(a[i].ai == b[i].ai);
    CHECK(a[i].ai_prime == b[i].ai_prime);
    CHECK(a[i].log_scale == b[i].log_scale);
  }
}

TEST_CASE("lambda search") {
  auto f = [](double l) { return std::exp(-(l - 0.3) * (l - 0.3)) * (1.0 + 0.1 * std::sin(20 * l)); };
  const LambdaSup a = sup_over_lambda(f, -1.5, 1.5, 41, 1e-6, Exec::serial);
  const LambdaSup b = sup_over_lambda(f, -1.5, 1.5, 41, 1e-6, Exec::parallel);
  CHECK(a.value == b.value);
  CHECK(a.lambda == b.lambda);
}

TEST_CASE("resolvent sweep") {
  SweepSpec s;
  s.nu_values = {1e-2, 1e-3};
  s.k_values = {1, 2};
  s.lambda_strategy = SweepSpec::LambdaStrategy::fixed_list;
  s.lambda_list = {-0.5, 0.0, 0.5};
  s.exec = Exec::serial;
  const VerifyReport a = verify_navier_L2(s);
  s.exec = Exec::parallel;
  const VerifyReport b = verify_navier_L2(s);
  REQUIRE(a.rows.size() == b.rows.size());
  for (std::size_t i = 0; i < a.rows.size(); ++i) CHECK(a.rows[i].values == b.rows[i].values);
}

TEST_CASE("homogeneous solutions and spectrum") {
  ResolventCase c;
  c.nu = 1e-4;
  c.k = 1;
  c.lambda = 0.2;
  c.bc = BoundaryCondition::non_slip;
  const ChebGrid g = build_grid(grid_order_for(c.nu, c.k));
  const DiffOps ops = build_diff_ops(g);
  const HomogeneousPair a = homogeneous_airy(c, g, ops, Exec::serial);
  const HomogeneousPair b = homogeneous_airy(c, g, ops, Exec::parallel);
  CHECK(same(a.w1, b.w1));
  CHECK(same(a.w2, b.w2));

  c.nu = 1e-3;
  c.bc = BoundaryCondition::navier_slip;
  const ChebGrid g2 = build_grid(64);
  const DiffOps ops2 = build_diff_ops(g2);
  const SpectralGapReport s = spectrum(c, g2, ops2, true, Exec::serial);
  const SpectralGapReport p = spectrum(c, g2, ops2, true, Exec::parallel);
  CHECK(s.gap == p.gap);
  CHECK(s.psi == p.psi);
  CHECK(s.pseudo_abscissa == p.pseudo_abscissa);
}

TEST_CASE("nonlinear kernels") {
  NonlinearCase c;
  c.nu = 1e-2;
  c.k_max = 6;
  c.t_end = 0.5;
  c.exec = Exec::serial;
  const NonlinearModel ms(c);
  c.exec = Exec::parallel;
  const NonlinearModel mp(c);
  const PerturbationState s0 = ms.initial_state(0.3);
  // advance a little so every mode is populated
  PerturbationState s = s0;
  NonlinearForcing prev = ms.nonlinear_rhs(s);
  s = ms.advance(s, prev, nullptr);
  for (int i = 0; i < 3; ++i) {
    NonlinearForcing now = ms.nonlinear_rhs(s);
    s = ms.advance(s, now, &prev);
    prev = now;
  }
  const auto vs = ms.velocity(s), vp = mp.velocity(s);
  for (std::size_t k = 0; k < vs.size(); ++k) {
    CHECK(same(vs[k].u1, vp[k].u1));
    CHECK(same(vs[k].u2, vp[k].u2));
  }
  const NonlinearForcing fs = ms.nonlinear_rhs(s), fp = mp.nonlinear_rhs(s);
  for (std::size_t k = 0; k < fs.f1.size(); ++k) {
    CHECK(same(fs.f1[k], fp.f1[k]));
    CHECK(same(fs.f2[k], fp.f2[k]));
  }
  const PerturbationState as = ms.advance(s, fs, &prev), ap = mp.advance(s, fp, &prev);
  for (std::size_t k = 0; k < as.modes.size(); ++k) CHECK(same(as.modes[k], ap.modes[k]));

  const SimulationResult rs = ms.simulate(s0), rp = mp.simulate(s0);
  CHECK(rs.energy.total == rp.energy.total);
  CHECK(rs.steps == rp.steps);
}

TEST_CASE("threshold probe") {
  ThresholdSpec t;
  t.nu_values = {1e-2, 5e-3};
  t.amplitude_lo = 1e-3;
  t.amplitude_hi = 30.0;
  t.t_end = 1.0;
  t.max_bisections = 3;
  t.exec = Exec::serial;
  const ThresholdResult a = probe_threshold(t);
  t.exec = Exec::parallel;
  const ThresholdResult b = probe_threshold(t);
  REQUIRE(a.runs.size() == b.runs.size());
  for (std::size_t i = 0; i < a.runs.size(); ++i) {
    CHECK(a.runs[i].amplitude == b.runs[i].amplitude);
    CHECK(a.runs[i].energy_total == b.runs[i].energy_total);
    CHECK(a.runs[i].verdict == b.runs[i].verdict);
  }
  CHECK(a.flags == b.flags);
}
