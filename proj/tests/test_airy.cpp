#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include "doctest.h"

#include <cmath>
#include <random>

#include "couette/airy.hpp"

#include "airy_oracle.hpp"

using namespace couette;
using namespace airy_oracle;

namespace {

double rel(cplx a, cplx b) { return std::abs(a - b) / std::abs(b); }

// f'(z) by the trapezoid rule on a circle (Cauchy integral), spectrally accurate
template <class F>
cplx cauchy_derivative(F f, cplx z, double r) {
  const int m = 64;
  cplx s = 0.0;
  for (int j = 0; j < m; ++j) {
    const cplx e = std::polar(1.0, 2 * kPi * j / m);
    s += f(z + r * e) / e;
  }
  return s / (double(m) * r);
}

}  // namespace

TEST_CASE("values at the origin") {
  const AiryBundle a = airy(0.0);
  CHECK(a.method == AiryMethod::maclaurin);
  CHECK(rel(a.ai, 0.35502805388781724) < 1e-15);
  CHECK(rel(a.ai_prime, -0.25881940379280680) < 1e-15);
#ifdef COUETTE_HAVE_BOOST
  const Oracle o = oracle(0.0);
  CHECK(rel(a.ai, o.ai) < 1e-11);
  CHECK(rel(a.ai_prime, o.aip) < 1e-11);
#endif
  CHECK(rel(a0(0.0).a0, 1.0 / 3.0) < 1e-14);
}

#ifdef COUETTE_HAVE_BOOST
TEST_CASE("accuracy against the high-precision oracle") {
  std::mt19937 rng(7);
  std::uniform_real_distribution<double> rad(0.0, 20.0), ang(-kPi, kPi);
  double worst = 0.0;
  for (int i = 0; i < 60; ++i) {
    const cplx z = std::polar(rad(rng), ang(rng));
    const Oracle o = oracle(z);
    const AiryBundle a = airy(z);
    // near a zero relative error is meaningless; compare against the local scale
    const double scale_ai = std::abs(o.ai) + 1e-3 * std::abs(o.aip) / (1 + std::sqrt(std::abs(z)));
    const double scale_aip = std::abs(o.aip) + 1e-3 * std::abs(o.ai) * (1 + std::sqrt(std::abs(z)));
    worst = std::max({worst, std::abs(a.value() - o.ai) / scale_ai, std::abs(a.derivative() - o.aip) / scale_aip});
  }
  CHECK(worst < 1e-11);
}

TEST_CASE("A0 at the origin by ray quadrature") {
  const cplx dir = std::polar(1.0, kPi / 6);
  const cplx I = ray_integral(0.0, dir, 16.0);
  CHECK(rel(I, 1.0 / 3.0) < 1e-12);
  CHECK(rel(a0(0.0).a0, I) < 1e-9);
}

TEST_CASE("damping at (0,4) against quadrature") {
  // A0(z) = int from e^{i pi/6} z to infinity along the ray direction
  const cplx dir = std::polar(1.0, kPi / 6);
  const cplx A4 = ray_integral(dir * 4.0, dir, 14.0);
  const cplx A0 = ray_integral(0.0, dir, 16.0);
  CHECK(rel(damping(0.0, 4.0).omega, A4 / A0) < 1e-9);
  CHECK(rel(a0(4.0).a0, A4) < 1e-9);
}
#endif

TEST_CASE("Wronskian") {
  std::mt19937 rng(11);
  std::uniform_real_distribution<double> rad(0.0, 15.0), ang(-kPi, kPi);
  std::vector<cplx> pts{0.0, cplx(1, 1), -3.0};
  while (pts.size() < 20) pts.push_back(std::polar(rad(rng), ang(rng)));
  for (cplx z : pts) {
    const AiryBundle a = airy(z);
    const cplx W = a.value() * bi_prime(z) - a.derivative() * bi(z);
    const double scale = std::abs(a.value() * bi_prime(z)) + std::abs(a.derivative() * bi(z));
    CHECK(std::abs(W - 1.0 / kPi) < 1e-9 * std::max(1.0, scale));
  }
}

TEST_CASE("real axis and conjugation") {
  double prev = 1e9;
  for (double x = 0.0; x <= 40.0; x += 0.25) {
    const AiryBundle a = airy(x);
    CHECK(std::abs(a.ai.imag()) <= 1e-13 * std::abs(a.ai));
    CHECK(a.value().real() > 0.0);
    CHECK(a.value().real() < prev);
    prev = a.value().real();
  }
  for (cplx z : {cplx(2, 3), cplx(-7, 1), cplx(11, -4), cplx(-25, 6)}) {
    CHECK(rel(airy(std::conj(z)).value(), std::conj(airy(z).value())) < 1e-14);
  }
}

TEST_CASE("ODE residual with contour derivatives") {
  std::mt19937 rng(3);
  std::uniform_real_distribution<double> rad(0.0, 20.0), ang(-kPi, kPi);
  for (int i = 0; i < 100; ++i) {
    const cplx z = std::polar(rad(rng), ang(rng));
    const double r = 0.25 / (1.0 + std::sqrt(std::abs(z)));
    const cplx ai2 = cauchy_derivative([](cplx t) { return airy(t).derivative(); }, z, r);
    const cplx ai = airy(z).value();
    const double scale = std::abs(ai) * std::abs(z) + std::abs(airy(z).derivative()) * std::sqrt(std::abs(z));
    CHECK(std::abs(ai2 - z * ai) <= 1e-9 * (1.0 + scale));
  }
  // f(y) = Ai(e^{i pi/6} y) solves f'' = i y f
  const cplx rot = std::polar(1.0, kPi / 6);
  for (double y : {-6.0, -2.5, 0.0, 1.5, 4.0, 9.5}) {
    auto f = [rot](cplx t) { return airy(rot * t).value(); };
    auto fp = [&](cplx t) { return cauchy_derivative(f, t, 0.1); };
    const cplx f2 = cauchy_derivative(fp, y, 0.1);
    CHECK(std::abs(f2 - kI * y * f(y)) <= 1e-9 * (1.0 + std::abs(y * f(y))));
  }
}

TEST_CASE("method overlap") {
  double worst = 0.0;
  for (double r : {9.0, 9.5, 10.5, 11.0}) {
    for (int j = 0; j < 48; ++j) {
      const cplx z = std::polar(r, -kPi + 2 * kPi * (j + 0.5) / 48);
      const AiryBundle m = detail::airy_maclaurin(z), a = detail::airy_asymptotic(z);
      const double s = std::abs(m.value()) + std::abs(m.derivative()) / std::sqrt(r);
      worst = std::max(worst, std::abs(m.value() - a.value()) / s);
    }
  }
  CHECK(worst < 1e-9);
}

TEST_CASE("scaled representation") {
  const AiryBundle a = airy(300.0);
  CHECK(a.log_scale != 0.0);
  CHECK(std::isfinite(a.ai.real()));
  const double lead = -(2.0 / 3.0) * std::pow(300.0, 1.5) - std::log(2.0 * std::sqrt(kPi) * std::pow(300.0, 0.25));
  CHECK(std::abs(a.log_abs() - lead) < 1e-3);
  const AiryBundle b = airy(cplx(-150.0, -200.0));
  CHECK(std::isfinite(b.log_abs()));
  CHECK(b.log_abs() > 600.0);
}

TEST_CASE("A0 properties") {
  const cplx rot = std::polar(1.0, kPi / 6);
  for (cplx z : {cplx(0.3, -1), cplx(-4, 0.1), cplx(12, -3)}) {
    const A0Value v = a0(z);
    CHECK(std::abs(v.a0_prime + rot * airy(rot * z).value() * std::exp(-v.log_scale)) <= 1e-15 * std::abs(v.a0_prime));
    // derivative consistency with the primitive
    const cplx d = cauchy_derivative([](cplx t) { return a0(t).value(); }, z, 0.05);
    CHECK(rel(d, v.derivative()) < 1e-9);
  }
  double prev = 1e9;
  for (double x = 5.0; x <= 40.0; x += 0.5) {
    const double m = std::abs(a0(x).value());
    CHECK(m < prev);
    prev = m;
  }
  // zero-free on the validated half plane
  for (double x = -40.0; x <= 40.0; x += 0.5)
    for (double y = -40.0; y <= kDelta0; y += 0.5) {
      const cplx z(x, std::min(y, kDelta0));
      if (std::abs(z) > 40.0) continue;
      CHECK(std::isfinite(a0(z).log_abs()));
      CHECK(std::abs(a0(z).a0) > 0.0);
    }
  // omega from the log-derivative
  {
    const cplx z = -2.0;
    const double x = 3.0;
    const int m = 400;
    cplx s = 0.0;  // Simpson on the log-derivative
    for (int i = 0; i <= m; ++i) {
      const double t = x * i / m;
      const double w = (i == 0 || i == m) ? 1.0 : (i % 2 ? 4.0 : 2.0);
      s += w * a0(z + t).log_derivative();
    }
    s *= x / (3.0 * m);
    CHECK(rel(damping(z, x).omega, std::exp(s)) < 1e-8);
  }
}

TEST_CASE("log-derivative supremum") {
  const LogDerivativeSup s = log_derivative_sup(0.0);
  CHECK(std::abs(s.value - (-0.4843)) < 5e-4);
  CHECK(s.value < -1.0 / 3.0);
  CHECK(log_derivative_sup(kDelta0).value < -1.0 / 3.0);
  CHECK_THROWS(log_derivative_sup(0.5));
  // large real argument: A0'/A0 ~ -e^{i pi/6}(x e^{i pi/6})^{1/2}
  const double x = 100.0;
  const cplx rot = std::polar(1.0, kPi / 6);
  const cplx asym = -rot * std::sqrt(x * rot);
  CHECK(rel(a0(x).log_derivative(), asym) < 0.05);
  CHECK(std::abs(a0(x).log_derivative().real() - asym.real()) < 0.05 * std::abs(asym.real()));
}

TEST_CASE("damping factor bounds") {
  CHECK(damping(0.0, 0.0).omega == cplx(1.0));
  CHECK(std::abs(damping(-1.0, 6.0).omega) <= std::exp(-2.0));
  CHECK_THROWS_AS(damping(cplx(0, 0.5), 1.0), std::domain_error);
  CHECK_THROWS_AS(damping(0.0, -1.0), std::invalid_argument);
  double c_emp = 1e9;
  for (double re = -20.0; re <= 20.0; re += 1.0)
    for (double im : {-10.0, -3.0, -1.0, 0.0, kDelta1}) {
      const cplx z(re, im);
      for (double x : {0.5, 1.0, 2.0, 5.0, 10.0}) {
        const double w = std::abs(damping(z, x).omega);
        CHECK(w <= std::exp(-x / 3.0));
        c_emp = std::min(c_emp, -std::log(w) / std::pow(x, 1.5));
      }
      // multiplicativity
      const cplx lhs = damping(z, 3.5).omega;
      const cplx rhs = damping(z, 1.25).omega * damping(z + 1.25, 2.25).omega;
      CHECK(rel(lhs, rhs) < 1e-10);
    }
  MESSAGE("empirical c in |omega| <= exp(-c x^{3/2}): " << c_emp);
  CHECK(c_emp > 0.0);
}

TEST_CASE("log-derivative growth bounds") {
  double C = 0.0, c = 1e9;
  for (double re = -40.0; re <= 40.0; re += 1.0)
    for (double im = -40.0; im <= kDelta0 + 1e-12; im += 1.0) {
      const cplx z(re, std::min(im, kDelta0));
      if (std::abs(z) > 40.0) continue;
      const cplx q = a0(z).log_derivative();
      const double s = 1.0 + std::sqrt(std::abs(z));
      C = std::max(C, std::abs(q) / s);
      c = std::min(c, -q.real() / s);
    }
  MESSAGE("|A0'/A0| <= " << C << " (1+|z|^{1/2}); Re <= -" << c << " (1+|z|^{1/2})");
  CHECK(C < 10.0);
  CHECK(c > 0.0);
}

TEST_CASE("batch evaluation matches serial") {
  std::vector<cplx> z;
  for (int i = 0; i < 200; ++i) z.push_back(cplx(-30.0 + 0.3 * i, 5.0 - 0.07 * i));
  const auto a = airy_batch(z, Exec::serial), b = airy_batch(z, Exec::parallel);
  for (std::size_t i = 0; i < z.size(); ++i) {
    CHECK(a[i].ai == b[i].ai);
    CHECK(a[i].ai_prime == b[i].ai_prime);
  }
}
