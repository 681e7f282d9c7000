#pragma once

#include <vector>

#include "couette/parallel.hpp"
#include "couette/types.hpp"

namespace couette {

enum class AiryMethod { maclaurin, asymptotic };

// Values are carried as mantissa * exp(log_scale). log_scale stays 0 unless
// the magnitude would leave the double range, which for |z| <= 100 never
// happens.
struct AiryBundle {
  cplx z;
  cplx ai;
  cplx ai_prime;
  double log_scale = 0.0;
  AiryMethod method = AiryMethod::maclaurin;

  cplx value() const;
  cplx derivative() const;
  double log_abs() const;  // log|Ai(z)|
};

// A0(z) = int_{e^{i pi/6} z}^{infty} Ai(t) dt and A0'(z) = -e^{i pi/6} Ai(e^{i pi/6} z).
struct A0Value {
  cplx z;
  cplx a0;
  cplx a0_prime;
  double log_scale = 0.0;  // shared by a0 and a0_prime
  AiryMethod method = AiryMethod::maclaurin;

  cplx value() const;
  cplx derivative() const;
  cplx log_derivative() const { return a0_prime / a0; }
  double log_abs() const;
};

struct DampingFactor {
  cplx z;
  double x = 0.0;
  cplx omega;
};

// Validated band for Im z in the A0 bounds.
inline constexpr double kDelta0 = 0.15;
inline constexpr double kDelta1 = 0.15;

AiryBundle airy(cplx z);

// int_w^infty Ai(t) dt along a path ending in |arg t| < pi/3, scaled like AiryBundle.
struct ScaledValue {
  cplx mantissa;
  double log_scale = 0.0;
  cplx value() const;
};
ScaledValue airy_tail_integral(cplx w, AiryMethod* method = nullptr);

A0Value a0(cplx z);
DampingFactor damping(cplx z, double x);

struct LogDerivativeSup {
  double value;
  double argmax;  // Re z at the maximizer on Im z = delta
  int rounds;
};
LogDerivativeSup log_derivative_sup(double delta);

// Grid evaluation used by the homogeneous-solution constructor.
std::vector<AiryBundle> airy_batch(const std::vector<cplx>& z, Exec exec = Exec::parallel);

}  // namespace couette

namespace couette::detail {
// Forced-method evaluation for overlap checks.
AiryBundle airy_maclaurin(cplx z);
AiryBundle airy_asymptotic(cplx z);
}  // namespace couette::detail
