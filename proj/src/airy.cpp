#include "couette/airy.hpp"

#include <array>
#include <cmath>
#include <stdexcept>

namespace couette {

namespace {

using quad = __float128;

struct QC {
  quad re = 0, im = 0;
};
inline QC operator+(QC a, QC b) { return {a.re + b.re, a.im + b.im}; }
inline QC operator-(QC a, QC b) { return {a.re - b.re, a.im - b.im}; }
inline QC operator*(QC a, QC b) { return {a.re * b.re - a.im * b.im, a.re * b.im + a.im * b.re}; }
inline QC operator*(quad s, QC a) { return {s * a.re, s * a.im}; }
inline double qabs(QC a) { return std::hypot(double(a.re), double(a.im)); }
inline cplx to_c(QC a) { return {double(a.re), double(a.im)}; }

// Ai(0) and -Ai'(0) as double-double pairs
const quad kC1 = quad(0.3550280538878172) + quad(2.05233632436212e-17);
const quad kC2 = quad(0.2588194037928068) + quad(-2.522243111610832e-17);

constexpr double kMaclaurinRadius = 9.0;
constexpr double kTailMaclaurinRadius = 14.0;
constexpr double kFoldLimit = 600.0;

struct Maclaurin {
  QC ai, aip, prim;  // prim = int_0^z Ai
};

Maclaurin maclaurin(cplx zd) {
  const QC z{zd.real(), zd.imag()};
  const QC z2 = z * z;
  const QC z3 = z2 * z;
  QC zp{1, 0}, zp_prev{0, 0};
  quad a = 1, b = 1;
  QC f, g, fp, gp, pf, pg;
  double biggest = 0.0;
  for (int k = 0; k < 400; ++k) {
    const QC tf = a * zp;
    const QC tg = b * (zp * z);
    const QC tfp = k > 0 ? quad(3 * k) * a * (z2 * zp_prev) : QC{};
    const QC tgp = quad(3 * k + 1) * b * zp;
    const QC tpf = (a / quad(3 * k + 1)) * (zp * z);
    const QC tpg = (b / quad(3 * k + 2)) * (zp * z2);
    f = f + tf;
    g = g + tg;
    fp = fp + tfp;
    gp = gp + tgp;
    pf = pf + tpf;
    pg = pg + tpg;
    const double m = qabs(tf) + qabs(tg) + qabs(tfp) + qabs(tgp) + qabs(tpf) + qabs(tpg);
    biggest = std::max(biggest, m);
    if (k > 2 && m < 1e-36 * biggest) break;
    a /= quad((3 * k + 2) * (3 * k + 3));
    b /= quad((3 * k + 3) * (3 * k + 4));
    zp_prev = zp;
    zp = zp * z3;
  }
  return {kC1 * f - kC2 * g, kC1 * fp - kC2 * gp, kC1 * pf - kC2 * pg};
}

constexpr int kSeriesTerms = 90;

struct Coefficients {
  std::array<double, kSeriesTerms> u{}, v{}, s{};
};

const Coefficients& coefficients() {
  static const Coefficients c = [] {
    Coefficients r;
    r.u[0] = 1.0;
    r.v[0] = 1.0;
    r.s[0] = 1.0;
    for (int k = 1; k < kSeriesTerms; ++k) {
      r.u[k] = r.u[k - 1] * (6.0 * k - 5.0) * (6.0 * k - 3.0) * (6.0 * k - 1.0) / ((2.0 * k - 1.0) * 216.0 * k);
      r.v[k] = -(6.0 * k + 1.0) / (6.0 * k - 1.0) * r.u[k];
      const double t = (k % 2 ? -1.0 : 1.0) * r.u[k];
      r.s[k] = t - (k - 0.5) * r.s[k - 1];
    }
    return r;
  }();
  return c;
}

// sum_k c_k (sign)^k zeta^{-k}, stopped at the smallest term
cplx asymptotic_sum(const std::array<double, kSeriesTerms>& c, bool alternate, cplx zeta) {
  const cplx inv = 1.0 / zeta;
  cplx p = 1.0, sum = c[0];
  double last = std::abs(c[0]);
  for (int k = 1; k < kSeriesTerms; ++k) {
    p *= inv;
    const cplx term = (alternate && (k % 2) ? -c[k] : c[k]) * p;
    const double mag = std::abs(term);
    if (mag > last) break;
    sum += term;
    last = mag;
    if (mag < 1e-18 * std::abs(sum)) break;
  }
  return sum;
}

ScaledValue fold(ScaledValue v) {
  if (std::abs(v.log_scale) < kFoldLimit) {
    v.mantissa *= std::exp(v.log_scale);
    v.log_scale = 0.0;
  }
  return v;
}

ScaledValue combine(ScaledValue a, ScaledValue b) {
  if (a.mantissa == 0.0) return b;
  if (b.mantissa == 0.0) return a;
  const double s = std::max(a.log_scale, b.log_scale);
  return {a.mantissa * std::exp(a.log_scale - s) + b.mantissa * std::exp(b.log_scale - s), s};
}

ScaledValue scaled(cplx c, ScaledValue v) { return {c * v.mantissa, v.log_scale}; }

const double kInvTwoSqrtPi = 0.28209479177387814347;  // 1/(2 sqrt(pi))
const cplx kOmega = std::polar(1.0, 2.0 * kPi / 3.0);
const cplx kOmega2 = std::polar(1.0, -2.0 * kPi / 3.0);

cplx zeta_of(cplx z) { return (2.0 / 3.0) * std::exp(1.5 * std::log(z)); }

// single-exponential asymptotic form, valid for |arg z| <= 2 pi / 3
void airy_asymptotic(cplx z, ScaledValue& ai, ScaledValue& aip) {
  const auto& c = coefficients();
  const cplx zeta = zeta_of(z);
  const cplx q = std::exp(0.25 * std::log(z));
  const cplx phase = std::exp(cplx(0.0, -zeta.imag()));
  const double s = -zeta.real();
  ai = {phase * kInvTwoSqrtPi / q * asymptotic_sum(c.u, true, zeta), s};
  aip = {-phase * kInvTwoSqrtPi * q * asymptotic_sum(c.v, true, zeta), s};
}

struct Laguerre {
  std::array<double, 64> x{}, w{};
};

const Laguerre& laguerre() {
  static const Laguerre lg = [] {
    constexpr int n = 64;
    Eigen::MatrixXd J = Eigen::MatrixXd::Zero(n, n);
    for (int i = 0; i < n; ++i) {
      J(i, i) = 2.0 * i + 1.0;
      if (i + 1 < n) J(i, i + 1) = J(i + 1, i) = i + 1.0;
    }
    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(J);
    Laguerre r;
    for (int i = 0; i < n; ++i) {
      r.x[i] = es.eigenvalues()(i);
      const double v0 = es.eigenvectors()(0, i);
      r.w[i] = v0 * v0;
    }
    return r;
  }();
  return lg;
}

// int_w^infty Ai along the path zeta(t) = zeta(w) + s, s >= 0, by Gauss-Laguerre
ScaledValue tail_laguerre(cplx w) {
  const auto& c = coefficients();
  const auto& lg = laguerre();
  const cplx zw = zeta_of(w);
  cplx sum = 0.0;
  for (int i = 0; i < 64; ++i) {
    const cplx zeta = zw + lg.x[i];
    const cplx t = std::exp((2.0 / 3.0) * std::log(1.5 * zeta));
    const cplx h = kInvTwoSqrtPi * std::exp(-0.75 * std::log(t)) * asymptotic_sum(c.u, true, zeta);
    sum += lg.w[i] * h;
  }
  return {std::exp(cplx(0.0, -zw.imag())) * sum, -zw.real()};
}

ScaledValue tail_series(cplx w) {
  const auto& c = coefficients();
  const cplx zeta = zeta_of(w);
  const cplx pre = kInvTwoSqrtPi * std::exp(-0.75 * std::log(w)) * std::exp(cplx(0.0, -zeta.imag()));
  return {pre * asymptotic_sum(c.s, false, zeta), -zeta.real()};
}

ScaledValue tail_large(cplx w) {
  const double arg = std::abs(std::arg(w));
  if (arg <= kPi / 2.0) return tail_laguerre(w);
  if (arg <= 2.0 * kPi / 3.0) return tail_series(w);
  // I(w) = 1 - I(omega w) - I(omega^2 w)
  ScaledValue r{1.0, 0.0};
  r = combine(r, scaled(-1.0, tail_large(kOmega * w)));
  r = combine(r, scaled(-1.0, tail_large(kOmega2 * w)));
  return r;
}

}  // namespace

cplx ScaledValue::value() const { return log_scale == 0.0 ? mantissa : mantissa * std::exp(log_scale); }

cplx AiryBundle::value() const { return log_scale == 0.0 ? ai : ai * std::exp(log_scale); }
cplx AiryBundle::derivative() const { return log_scale == 0.0 ? ai_prime : ai_prime * std::exp(log_scale); }
double AiryBundle::log_abs() const { return std::log(std::abs(ai)) + log_scale; }

cplx A0Value::value() const { return log_scale == 0.0 ? a0 : a0 * std::exp(log_scale); }
cplx A0Value::derivative() const { return log_scale == 0.0 ? a0_prime : a0_prime * std::exp(log_scale); }
double A0Value::log_abs() const { return std::log(std::abs(a0)) + log_scale; }

namespace {
AiryBundle airy_impl(cplx z, int force) {
  if (!std::isfinite(z.real()) || !std::isfinite(z.imag())) throw std::invalid_argument("airy: non-finite argument");
  AiryBundle out;
  out.z = z;
  if (force == 1 || (force == 0 && std::abs(z) <= kMaclaurinRadius)) {
    const Maclaurin m = maclaurin(z);
    out.ai = to_c(m.ai);
    out.ai_prime = to_c(m.aip);
    out.method = AiryMethod::maclaurin;
    return out;
  }
  out.method = AiryMethod::asymptotic;
  ScaledValue ai, aip;
  if (std::abs(std::arg(z)) <= 2.0 * kPi / 3.0) {
    airy_asymptotic(z, ai, aip);
  } else {
    // Ai(z) = -omega Ai(omega z) - omega^2 Ai(omega^2 z)
    ScaledValue a1, d1, a2, d2;
    airy_asymptotic(kOmega * z, a1, d1);
    airy_asymptotic(kOmega2 * z, a2, d2);
    ai = combine(scaled(-kOmega, a1), scaled(-kOmega2, a2));
    aip = combine(scaled(-kOmega2, d1), scaled(-kOmega, d2));
    if (aip.log_scale != ai.log_scale) aip = {aip.mantissa * std::exp(aip.log_scale - ai.log_scale), ai.log_scale};
  }
  ai = fold(ai);
  if (ai.log_scale == 0.0) aip = fold(aip);
  out.ai = ai.mantissa;
  out.ai_prime = aip.mantissa;
  out.log_scale = ai.log_scale;
  return out;
}
}  // namespace

AiryBundle airy(cplx z) { return airy_impl(z, 0); }
AiryBundle detail::airy_maclaurin(cplx z) { return airy_impl(z, 1); }
AiryBundle detail::airy_asymptotic(cplx z) { return airy_impl(z, 2); }

ScaledValue airy_tail_integral(cplx w, AiryMethod* method) {
  const double r = std::abs(w);
  const double arg = std::abs(std::arg(w));
  if (r <= kMaclaurinRadius || (r <= kTailMaclaurinRadius && arg > kPi / 2.0)) {
    if (method) *method = AiryMethod::maclaurin;
    const Maclaurin m = maclaurin(w);
    const QC third{quad(1) / quad(3), 0};
    return {to_c(third - m.prim), 0.0};
  }
  if (method) *method = AiryMethod::asymptotic;
  return fold(tail_large(w));
}

A0Value a0(cplx z) {
  const cplx rot = std::polar(1.0, kPi / 6.0);
  const cplx w = rot * z;
  A0Value out;
  out.z = z;
  const ScaledValue tail = airy_tail_integral(w, &out.method);
  const AiryBundle ab = airy(w);
  out.a0 = tail.mantissa;
  out.log_scale = tail.log_scale;
  out.a0_prime = -rot * ab.ai * std::exp(ab.log_scale - tail.log_scale);
  return out;
}

DampingFactor damping(cplx z, double x) {
  if (x < 0.0) throw std::invalid_argument("damping: x must be nonnegative");
  if (z.imag() > kDelta1) throw std::domain_error("damping: Im z above the validated band");
  if (x == 0.0) return {z, 0.0, 1.0};
  const A0Value a = a0(z + x), b = a0(z);
  return {z, x, a.a0 / b.a0 * std::exp(a.log_scale - b.log_scale)};
}

LogDerivativeSup log_derivative_sup(double delta) {
  if (delta < 0.0 || delta > kDelta0) throw std::domain_error("log_derivative_sup: delta outside [0, delta0]");
  auto f = [delta](double x) { return a0(cplx(x, delta)).log_derivative().real(); };
  double lo = -20.0, hi = 20.0;
  double h = 0.5;
  double best = -1e300, arg = 0.0, prev = 0.0;
  for (int round = 1; round <= 12; ++round) {
    const int n = static_cast<int>(std::round((hi - lo) / h));
    for (int i = 0; i <= n; ++i) {
      const double x = lo + i * h;
      const double v = f(x);
      if (v > best) {
        best = v;
        arg = x;
      }
    }
    if (round > 1 && std::abs(best - prev) < 1e-4 && h < 1e-2) {
      // polish with golden section inside the last bracket
      double a = arg - h, b = arg + h;
      const double g = 0.5 * (std::sqrt(5.0) - 1.0);
      double c = b - g * (b - a), d = a + g * (b - a);
      double fc = f(c), fd = f(d);
      while (b - a > 1e-7) {
        if (fc > fd) {
          b = d;
          d = c;
          fd = fc;
          c = b - g * (b - a);
          fc = f(c);
        } else {
          a = c;
          c = d;
          fc = fd;
          d = a + g * (b - a);
          fd = f(d);
        }
      }
      const double xm = 0.5 * (a + b), vm = f(xm);
      if (vm > best) {
        best = vm;
        arg = xm;
      }
      return {best, arg, round};
    }
    prev = best;
    lo = arg - 2.0 * h;
    hi = arg + 2.0 * h;
    h /= 4.0;
  }
  throw std::runtime_error("log_derivative_sup: refinement did not converge in 12 rounds");
}

std::vector<AiryBundle> airy_batch(const std::vector<cplx>& z, Exec exec) {
  std::vector<AiryBundle> out(z.size());
  for_each_index(exec, z.size(), [&](std::size_t i) { out[i] = airy(z[i]); });
  return out;
}

}  // namespace couette
