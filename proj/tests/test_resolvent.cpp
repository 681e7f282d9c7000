#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include "doctest.h"

#include <cmath>

#include "couette/airy.hpp"
#include "couette/resolvent.hpp"

using namespace couette;

namespace {

struct Setup {
  ChebGrid grid;
  DiffOps ops;
  explicit Setup(int N) : grid(build_grid(N)), ops(build_diff_ops(grid)) {}
  Vec fn(const std::function<cplx(double)>& f) const {
    Vec v(grid.size());
    for (int j = 0; j < grid.size(); ++j) v(j) = f(grid.nodes(j));
    return v;
  }
};

double rel_l2(const ChebGrid& g, const Vec& a, const Vec& b) { return l2_norm(g, a - b) / l2_norm(g, b); }

Vec reflect(const Vec& v) { return v.reverse(); }

}  // namespace

TEST_CASE("operator builders") {
  const Setup s(48);
  const ResolventCase c{1e-2, 3, 0.0, 0.0, BoundaryCondition::navier_slip};
  const BorderedOperator op = build_operator(c, s.grid, s.ops);
  CHECK(op.boundary_rows == std::vector<int>{0, 48});
  const Vec one = Vec::Ones(49);
  const Vec r = op.matrix * one;
  for (int j = 1; j < 48; ++j) {
    const cplx expect = c.nu * 9.0 + kI * 3.0 * s.grid.nodes(j);
    CHECK(std::abs(r(j) - expect) < 1e-10);
  }

  // symbol on sin(pi(y+1)/2)
  const ResolventCase c2{1e-3, 2, 0.3, 0.0, BoundaryCondition::navier_slip};
  const Vec f = s.fn([](double y) { return std::sin(kPi * (y + 1) / 2); });
  const Vec Af = vorticity_operator(c2, s.grid, s.ops) * f;
  double err = 0;
  for (int j = 0; j <= 48; ++j) {
    const cplx sym = c2.nu * (kPi * kPi / 4 + 4.0) + kI * 2.0 * (s.grid.nodes(j) - 0.3);
    err = std::max(err, std::abs(Af(j) - sym * f(j)));
  }
  CHECK(err < 1e-9);

  // Re <L_k f, f> = nu k^2 |f|^2 + nu |f'|^2 for f(+-1)=0
  const ResolventCase c3{2e-2, 4, 0.0, 0.0, BoundaryCondition::navier_slip};
  const Vec g = s.fn([](double y) { return (1 - y * y) * std::exp(cplx(0, 1.3 * y)) + cplx(0, 1) * y * (1 - y * y); });
  const Vec Lg = vorticity_operator(c3, s.grid, s.ops) * g;
  const Vec dg = s.ops.d1.cast<cplx>() * g;
  const double lhs = inner(s.grid, Lg, g).real();
  const double rhs = c3.nu * 16.0 * std::pow(l2_norm(s.grid, g), 2) + c3.nu * std::pow(l2_norm(s.grid, dg), 2);
  CHECK(std::abs(lhs - rhs) < 1e-12 * std::abs(rhs) + 1e-14);

  const ResolventCase c4{1e-3, 1, 0.0, 0.0, BoundaryCondition::non_slip};
  const BorderedOperator op4 = build_operator(c4, s.grid, s.ops);
  CHECK(op4.boundary_rows.size() == 4);
  ResolventCase bad = c4;
  bad.nu = -1;
  CHECK_THROWS(build_operator(bad, s.grid, s.ops));
  bad = c4;
  bad.k = 0;
  CHECK_THROWS(build_operator(bad, s.grid, s.ops));
}

TEST_CASE("Navier-slip solves") {
  const ResolventCase c{1e-4, 1, 0.0, 0.0, BoundaryCondition::navier_slip};
  const int N = grid_order_for(c.nu, c.k);
  const Setup s(N), s2(2 * N);

  const ResolventSolution zero = solve_navier(c, ForcingSpec::direct(Vec::Zero(N + 1)), s.grid, s.ops);
  CHECK(zero.w.cwiseAbs().maxCoeff() == 0.0);
  CHECK(zero.phi.cwiseAbs().maxCoeff() == 0.0);

  const ResolventSolution a = solve_navier(c, ForcingSpec::direct(Vec::Ones(N + 1)), s.grid, s.ops);
  const ResolventSolution b = solve_navier(c, ForcingSpec::direct(Vec::Ones(2 * N + 1)), s2.grid, s2.ops);
  const double na = l2_norm(s.grid, a.w), nb = l2_norm(s2.grid, b.w);
  CHECK(std::abs(na - nb) / nb < 1e-8);
  const double C = na * std::cbrt(c.nu) / std::sqrt(2.0);
  MESSAGE("(nu k^2)^{1/3} |w| / |F| at nu=1e-4, F=1: " << C);
  CHECK(C < 10.0);

  // boundary and elliptic invariants
  CHECK(std::abs(a.w(0)) <= 1e-10 * a.w.cwiseAbs().maxCoeff());
  CHECK(std::abs(a.w(N)) <= 1e-10 * a.w.cwiseAbs().maxCoeff());
  CHECK(std::abs(a.phi(0)) <= 1e-12 * a.phi.cwiseAbs().maxCoeff());
  Mat lap = s.ops.d2.cast<cplx>();
  for (int j = 0; j <= N; ++j) lap(j, j) -= 1.0;
  const Vec res = lap * a.phi - a.w;
  CHECK(res.segment(1, N - 1).cwiseAbs().maxCoeff() <= 1e-8 * a.w.cwiseAbs().maxCoeff());

  // energy identity Re<F,w> = nu |w'|^2 + nu k^2 |w|^2
  const Vec F = s.fn([](double y) { return std::exp(cplx(0, kPi * y)); });
  const ResolventSolution e = solve_navier(c, ForcingSpec::direct(F), s.grid, s.ops);
  const Vec dw = s.ops.d1.cast<cplx>() * e.w;
  const double lhs = inner(s.grid, F, e.w).real();
  const double rhs = c.nu * std::pow(l2_norm(s.grid, dw), 2) + c.nu * std::pow(l2_norm(s.grid, e.w), 2);
  CHECK(std::abs(lhs - rhs) < 1e-8 * rhs);

  // imaginary shift: solve with eps equals unshifted with F + eps nu^{1/3} k^{2/3} w
  ResolventCase ce = c;
  ce.epsilon = 0.02;
  const ResolventSolution sh = solve_navier(ce, ForcingSpec::direct(F), s.grid, s.ops);
  const ResolventSolution un = solve_navier(c, ForcingSpec::direct(Vec(F + ce.shift() * sh.w)), s.grid, s.ops);
  CHECK(rel_l2(s.grid, un.w, sh.w) < 1e-10);
}

TEST_CASE("coefficients") {
  const Setup s(64);
  const auto z = coefficients(Vec::Zero(65), 2, s.grid);
  CHECK(z.first == cplx(0.0));
  CHECK(z.second == cplx(0.0));
  for (int k : {1, 3}) {
    const Vec w = s.fn([k](double y) { return std::sinh(k * (y + 1)); });
    const auto [c1, c2] = coefficients(w, k, s.grid);
    const double exact = -(std::sinh(4.0 * k) / (4.0 * k) - 1.0) / std::sinh(2.0 * k);
    CHECK(std::abs(c1 - exact) < 1e-12 * std::abs(exact));
    const Vec g = s.fn([](double y) { return std::exp(cplx(0.3 * y, 2 * y)) + y * y; });
    const auto p = coefficients(g, k, s.grid);
    const auto q = coefficients(reflect(g), k, s.grid);
    // y -> -y: c1[Rg] = -c2[g], c2[Rg] = -c1[g]
    CHECK(std::abs(q.first + p.second) < 1e-13);
    CHECK(std::abs(q.second + p.first) < 1e-13);
  }
}

TEST_CASE("recover_velocity") {
  const Setup s(32);
  const auto z = recover_velocity(Vec::Zero(33), 2, s.ops);
  CHECK(z.first.cwiseAbs().maxCoeff() == 0.0);
  const Vec phi = s.fn([](double y) { return 1.0 - y * y; });
  const auto [u1, u2] = recover_velocity(phi, 3, s.ops);
  for (int j = 0; j <= 32; ++j) {
    const double y = s.grid.nodes(j);
    CHECK(std::abs(u1(j) - (-2.0 * y)) < 1e-12);
    CHECK(std::abs(u2(j) - (-kI * 3.0 * (1 - y * y))) < 1e-14);
  }
  // |u|^2 = <-w, phi>
  Mat lap = s.ops.d2.cast<cplx>();
  for (int j = 0; j <= 32; ++j) lap(j, j) -= 9.0;
  const Vec w = lap * phi;
  const double u2n = std::pow(l2_norm(s.grid, u1), 2) + std::pow(l2_norm(s.grid, u2), 2);
  CHECK(std::abs(u2n - inner(s.grid, -w, phi).real()) < 1e-8 * u2n);
}

TEST_CASE("homogeneous pairs") {
  {
    const ResolventCase c{1e-3, 2, 0.3, 0.0, BoundaryCondition::non_slip};
    const Setup s(grid_order_for(c.nu, c.k));
    const HomogeneousPair a = homogeneous_airy(c, s.grid, s.ops);
    const HomogeneousPair b = homogeneous_bvp(c, s.grid, s.ops);
    CHECK(rel_l2(s.grid, a.w1, b.w1) < 1e-6);
    CHECK(rel_l2(s.grid, a.w2, b.w2) < 1e-6);
    const int N = s.grid.order;
    for (const HomogeneousPair* p : {&a, &b}) {
      const Vec d1 = s.ops.d1.cast<cplx>() * p->phi1;
      const Vec d2 = s.ops.d1.cast<cplx>() * p->phi2;
      CHECK(std::abs(p->phi1(0)) < 1e-8);
      CHECK(std::abs(p->phi1(N)) < 1e-8);
      CHECK(std::abs(d1(0) - 1.0) < 1e-6);
      CHECK(std::abs(d1(N)) < 1e-8);
      CHECK(std::abs(d2(N) - 1.0) < 1e-6);
      CHECK(std::abs(d2(0)) < 1e-8);
      const Vec ep = s.fn([](double y) { return std::exp(2.0 * y); });
      CHECK(std::abs(quadrature(s.grid, Vec(ep.cwiseProduct(p->w1))) - std::exp(2.0)) < 1e-7 * std::exp(2.0));
      CHECK(std::abs(quadrature(s.grid, Vec(ep.cwiseProduct(p->w2))) + std::exp(-2.0)) < 1e-7 * std::exp(2.0));
    }
    CHECK(std::abs(a.A1 * a.A2 - a.B1 * a.B2) > 0.0);
    CHECK(a.d == cplx(-1.3, -2e-3));
    CHECK(a.d_tilde == cplx(-0.7, -2e-3));
  }
  {
    const ResolventCase c{1e-4, 1, 0.0, 0.0, BoundaryCondition::non_slip};
    const Setup s(grid_order_for(c.nu, c.k));
    const HomogeneousPair a = homogeneous_airy(c, s.grid, s.ops);
    CHECK(std::abs(a.A1 / a.B1) <= std::sqrt(2.0) / 2.0);
    const Vec d1 = s.ops.d1.cast<cplx>() * a.phi1;
    CHECK(std::abs(d1(0) - 1.0) < 1e-6);
  }
  {
    // negative k through conjugation, large L through the scaled algebra
    const ResolventCase c{1e-5, -3, -0.4, 0.02, BoundaryCondition::non_slip};
    const Setup s(grid_order_for(c.nu, c.k));
    const HomogeneousPair a = homogeneous_airy(c, s.grid, s.ops);
    const HomogeneousPair b = homogeneous_bvp(c, s.grid, s.ops);
    CHECK(rel_l2(s.grid, a.w1, b.w1) < 1e-6);
    CHECK(rel_l2(s.grid, a.w2, b.w2) < 1e-6);
  }
  {
    const ResolventCase c{1e-2, 4, 0.0, 0.0, BoundaryCondition::non_slip};
    const Setup s(64);
    CHECK_THROWS_AS(homogeneous_airy(c, s.grid, s.ops), std::domain_error);
  }
}

TEST_CASE("mirror symmetry of the homogeneous pair") {
  // phi_2(y; lambda) = -conj(phi_1(-y; -lambda))
  const Setup s(200);
  for (double lam : {0.0, 0.35, -0.8}) {
    const ResolventCase c{1e-4, 1, lam, 0.0, BoundaryCondition::non_slip};
    ResolventCase m = c;
    m.lambda = -lam;
    const HomogeneousPair p = homogeneous_airy(c, s.grid, s.ops);
    const HomogeneousPair q = homogeneous_airy(m, s.grid, s.ops);
    const Vec mirrored = -reflect(q.w1).conjugate();
    CHECK(rel_l2(s.grid, mirrored, p.w2) < 1e-8);
  }
}

TEST_CASE("non-slip solves") {
  const ResolventCase c{1e-3, 2, 0.5, 0.0, BoundaryCondition::non_slip};
  const Setup s(grid_order_for(c.nu, c.k));
  const int N = s.grid.order;
  const ResolventSolution zero = solve_nonslip(c, ForcingSpec::direct(Vec::Zero(N + 1)), s.grid, s.ops);
  CHECK(zero.w.cwiseAbs().maxCoeff() == 0.0);
  CHECK(zero.c1 == cplx(0.0));
  CHECK(zero.c2 == cplx(0.0));

  const Vec F = s.fn([](double y) { return std::exp(cplx(0, y)); });
  const ResolventSolution dec = solve_nonslip(c, ForcingSpec::direct(F), s.grid, s.ops);
  const ResolventSolution mono = solve_nonslip(c, ForcingSpec::direct(F), s.grid, s.ops, NonslipPath::monolithic);
  const ResolventSolution air =
      solve_nonslip(c, ForcingSpec::direct(F), s.grid, s.ops, NonslipPath::decomposed, HomogeneousSource::airy);
  CHECK(std::abs(l2_norm(s.grid, dec.w) - l2_norm(s.grid, mono.w)) < 1e-7 * l2_norm(s.grid, dec.w));
  CHECK(rel_l2(s.grid, mono.w, dec.w) < 1e-7);
  CHECK(rel_l2(s.grid, air.w, dec.w) < 1e-7);

  for (const ResolventSolution* r : {&dec, &mono}) {
    const Vec dphi = s.ops.d1.cast<cplx>() * r->phi;
    CHECK(std::abs(r->phi(0)) < 1e-10);
    CHECK(std::abs(dphi(0)) <= 1e-8 * dphi.cwiseAbs().maxCoeff());
    CHECK(std::abs(dphi(N)) <= 1e-8 * dphi.cwiseAbs().maxCoeff());
    const double l1 = quadrature(s.grid, RVec(r->w.cwiseAbs()));
    for (double sign : {1.0, -1.0}) {
      const Vec e = s.fn([sign](double y) { return std::exp(sign * 2.0 * y); });
      CHECK(std::abs(quadrature(s.grid, Vec(e.cwiseProduct(r->w)))) <= 1e-8 * l1 * std::exp(2.0));
    }
  }

  // pair forcing
  const Vec f2 = s.fn([](double y) { return std::cos(kPi * y / 2); });
  const ResolventSolution p = solve_nonslip(c, ForcingSpec::pair(Vec::Zero(N + 1), f2), s.grid, s.ops);
  const ResolventSolution q =
      solve_nonslip(c, ForcingSpec::direct(Vec(-s.ops.d1.cast<cplx>() * f2)), s.grid, s.ops);
  CHECK(rel_l2(s.grid, p.w, q.w) < 1e-14);
  CHECK_THROWS(solve_nonslip(c, ForcingSpec::direct(Vec::Zero(5)), s.grid, s.ops));
}

TEST_CASE("Navier stream form agrees with the vorticity form") {
  const ResolventCase c{1e-3, 1, -0.2, 0.0, BoundaryCondition::navier_slip};
  const Setup s(96);
  const Vec F = s.fn([](double y) { return cplx(1.0 + y, y * y); });
  const ResolventSolution v = solve_navier(c, ForcingSpec::direct(F), s.grid, s.ops);
  const BorderedOperator op = build_navier_stream_operator(c, s.grid, s.ops);
  Vec rhs = F;
  for (int r : op.boundary_rows) rhs(r) = 0.0;
  const Vec phi = Eigen::PartialPivLU<Mat>(op.matrix).solve(rhs);
  CHECK(rel_l2(s.grid, phi, v.phi) < 1e-7);
}

TEST_CASE("uniqueness for real lambda") {
  const Setup s(96);
  for (auto bc : {BoundaryCondition::navier_slip, BoundaryCondition::non_slip})
    for (double lam : {-1.0, 0.0, 0.7})
      for (int k : {1, 3}) {
        const ResolventCase c{1e-3, k, lam, 0.0, bc};
        CHECK(smallest_singular_value(build_operator(c, s.grid, s.ops).matrix) > 1e-10);
      }
}

TEST_CASE("Airy coefficient bounds over a small sweep") {
  double worst = 0;
  for (double nu : {1e-3, 1e-4})
    for (int k : {1, 2})
      for (double lam : {-0.9, 0.0, 0.9}) {
        const ResolventCase c{nu, k, lam, 0.0, BoundaryCondition::non_slip};
        const Setup s(grid_order_for(nu, k));
        const HomogeneousPair p = homogeneous_airy(c, s.grid, s.ops);
        const A0Value a = a0(c.L() * p.d + kI * c.epsilon);
        const double lhs = p.log_abs_C11() + a.log_abs() - std::log(c.L()) + 2.0 * k;
        worst = std::max(worst, std::exp(lhs));
        const double l1 = quadrature(s.grid, RVec(p.w1.cwiseAbs())) + quadrature(s.grid, RVec(p.w2.cwiseAbs()));
        CHECK(l1 < 10.0);
      }
  MESSAGE("|C11||A0(Ld+i eps)|/(L e^{-2k}) <= " << worst);
  CHECK(worst < 10.0);
}
