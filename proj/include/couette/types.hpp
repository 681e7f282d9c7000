#pragma once

#include <complex>
#include <Eigen/Dense>

namespace couette {

using cplx = std::complex<double>;
using Vec = Eigen::VectorXcd;
using RVec = Eigen::VectorXd;
using Mat = Eigen::MatrixXcd;
using RMat = Eigen::MatrixXd;

inline constexpr double kPi = 3.14159265358979323846;
inline constexpr cplx kI{0.0, 1.0};

enum class BoundaryCondition { navier_slip, non_slip };

const char* to_string(BoundaryCondition bc);

}  // namespace couette
