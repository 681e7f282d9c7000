#pragma once

#include <array>
#include <functional>
#include <utility>
#include <vector>

#include "couette/resolvent.hpp"

namespace couette {

// (f1, f2) at time t; F = -ik f1 - d_y f2
using ForcingFn = std::function<std::pair<Vec, Vec>(double)>;

struct EvolutionCase {
  double nu = 1e-3;
  int k = 1;
  BoundaryCondition bc = BoundaryCondition::non_slip;
  Vec omega0;
  ForcingFn forcing;  // empty: unforced
  double dt = 0.0;    // 0: use dt_rule
  double t_end = 0.0;
  bool extend_until_decayed = true;  // unforced runs continue until |w| <= 1e-4 |w0|
  // backward-Euler substeps replacing the first Crank-Nicolson step; 0 disables.
  // Data that violate the boundary moments otherwise cost the scheme its order.
  int startup_substeps = 4;

  // 0.1 min(1/|k|, nu^{-1/3} |k|^{-2/3})
  static double dt_rule(double nu, int k);
  double step_size() const { return dt > 0.0 ? dt : dt_rule(nu, k); }
  void validate(const ChebGrid& grid) const;
};

struct EvolutionState {
  double t = 0.0;
  Vec omega;
};

// Crank-Nicolson for d_t w + L_k w = F. Navier-slip rows fix w(+-1) = 0;
// non-slip fixes the two boundary values each step with the influence matrix
// so that the scaled moments e^{-|k|} int e^{+-ky} w hit the requested targets
// (zero unless told otherwise).
class Stepper {
 public:
  // theta = 1/2 is Crank-Nicolson, theta = 1 backward Euler
  Stepper(int k, double nu, BoundaryCondition bc, double dt, const ChebGrid& grid, const DiffOps& ops,
          double theta = 0.5);

  // rhs_extra is added to the interior rows (dt times the step-averaged forcing)
  Vec advance(const Vec& w, const Vec& rhs_extra = Vec(), std::array<cplx, 2> targets = {0.0, 0.0}) const;
  EvolutionState step(const EvolutionState& s) const;

  std::array<cplx, 2> moments(const Vec& w) const;  // scaled moments
  const Mat& generator() const { return L_; }       // L_k on every row
  double dt() const { return dt_; }
  double theta() const { return theta_; }
  BoundaryCondition bc() const { return bc_; }
  int k() const { return k_; }

 private:
  int k_;
  double nu_, dt_, theta_;
  BoundaryCondition bc_;
  const ChebGrid& grid_;
  Mat L_;
  Mat explicit_;  // I - (1-theta) dt L
  Eigen::PartialPivLU<Mat> lu_;
  Vec h1_, h2_;   // unit boundary responses
  Eigen::Matrix2cd influence_;
  Eigen::Matrix<cplx, 2, Eigen::Dynamic> moment_rows_;
};

EvolutionState step_navier(const EvolutionState& s, const Stepper& st);
EvolutionState step_nonslip(const EvolutionState& s, const Stepper& st);

struct SpaceTimeLedger {
  double u_linf_linf = 0.0;         // sup_t max_y |u|
  double u_l2l2 = 0.0;              // int |u|_2^2 dt
  double w_l2l2 = 0.0;              // int |w|_2^2 dt
  double w_linf_l2 = 0.0;           // sup_t |w|_2
  double boundary_w_linf_l2 = 0.0;  // sup_t |(1-|y|)^{1/2} w|_2
  double rho_w_l2l2 = 0.0;          // int |rho_k^{1/2} w|_2^2 dt
  double rho_w_linf_l2 = 0.0;       // sup_t |rho_k^{1/2} w|_2
  double f1_l2l2 = 0.0, f2_l2l2 = 0.0;
  std::vector<std::pair<double, double>> decay_samples;  // (t, |w(t)|_2)
  double data_functional = 0.0;  // |w0|^2 + k^-2 |w0'|^2 + nu^{-1/2}|k||f1|^2 + nu^{-1}|f2|^2
  double lhs = 0.0;              // |k||u|_inf^2 + k^2|u|^2_{L2L2} + (nu k^2)^{1/2}|w|^2_{L2L2} + |(1-|y|)^{1/2}w|^2_{LinfL2}
  double ratio = 0.0;
  double t_final = 0.0;
  int steps = 0;
  double max_moment = 0.0;  // max_t |<w, e^{+-ky}>| / (|w|_1 e^{|k|})
};

struct RunOptions {
  int sample_every = 1;  // stride of decay_samples (the ledger quadrature uses every step)
  std::function<void(const EvolutionState&)> observer;
};

SpaceTimeLedger run(const EvolutionCase& c, const ChebGrid& grid, const DiffOps& ops, const RunOptions& opt = {});

// Vorticity of a stream function with phi(+-1) = phi'(+-1) = 0: (d^2 - k^2) phi.
Vec vorticity_from_stream(const Vec& phi, int k, const DiffOps& ops);

struct DecayFit {
  double rate = 0.0;  // -d log|w| / dt on the window
  double t0 = 0.0, t1 = 0.0;
  double r2 = 0.0;
  bool ok = false;  // window found
};

// Discards t < 0.4 (nu k^2)^{-1/3}, then fits the latest two-e-folding window
// on which log|w| stays within 10% of linear.
DecayFit fit_decay(const std::vector<std::pair<double, double>>& samples, double nu, int k);

struct SplittingReport {
  SpaceTimeLedger direct, part1, part2, part3;
  double sum_error = 0.0;            // sup_t |w1+w2+w3 - w|_2 / sup_t |w|_2
  double part1_norm_error = 0.0;     // sup_t ||w1(t)| - e^{-(nu k^2)^{1/3} t}|w0|| / |w0|
  double forcing_consistency = 0.0;  // step-averaged forcing vs the pointwise formula, relative
};

SplittingReport homogeneous_splitting(const EvolutionCase& c, const ChebGrid& grid, const DiffOps& ops);

}  // namespace couette
