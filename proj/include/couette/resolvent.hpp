#pragma once

#include <optional>
#include <vector>

#include "couette/parallel.hpp"
#include "couette/spectral.hpp"
#include "couette/types.hpp"

namespace couette {

struct ResolventCase {
  double nu = 1e-3;
  int k = 1;
  double lambda = 0.0;
  double epsilon = 0.0;
  BoundaryCondition bc = BoundaryCondition::navier_slip;

  double L() const;      // (|k|/nu)^{1/3}
  double delta() const;  // nu^{1/3} |k|^{-1/3}
  double shift() const;  // epsilon nu^{1/3} |k|^{2/3}
  void validate() const;
};

struct ForcingSpec {
  enum class Form { direct_F, divergence_pair };
  Form form = Form::direct_F;
  Vec F, f1, f2;

  static ForcingSpec direct(Vec F);
  static ForcingSpec pair(Vec f1, Vec f2);
  // F = -ik f1 - d_y f2 for pairs
  Vec assemble(int k, const DiffOps& ops) const;
};

struct NormBundle {
  double l2 = 0, l1 = 0, linf = 0, h1_phi = 0, u_l2 = 0, critical = 0, w_prime_l2 = 0;
  double rho_half = 0, rho_neg_quarter = 0, rho_threehalf = 0, boundary_weight = 0;
};

struct ResolventSolution {
  Vec w, phi, u1, u2;
  Vec w_na;
  cplx c1 = 0.0, c2 = 0.0;
  NormBundle norms;
};

enum class HomogeneousSource { airy, bvp };

// W_j = mantissa * exp(w*_log_scale); the C_ij, A_i, B_i stored here act on
// the mantissas, i.e. C_true = C * exp(-scale_j), A_true = A * exp(scale).
struct HomogeneousPair {
  Vec w1, w2, phi1, phi2;
  cplx C11 = 0.0, C12 = 0.0, C21 = 0.0, C22 = 0.0;
  cplx A1 = 0.0, A2 = 0.0, B1 = 0.0, B2 = 0.0;
  cplx d = 0.0, d_tilde = 0.0;
  double w1_log_scale = 0.0, w2_log_scale = 0.0;
  HomogeneousSource source = HomogeneousSource::bvp;

  double log_abs_C11() const;  // log|C11| in true units
};

struct BorderedOperator {
  Mat matrix;
  std::vector<int> boundary_rows;
};

// navier_slip: vorticity operator with w(+-1)=0 rows; non_slip: fourth-order
// stream-function operator with phi(+-1) = phi'(+-1) = 0 rows.
BorderedOperator build_operator(const ResolventCase& c, const ChebGrid& grid, const DiffOps& ops);

// Fourth-order operator with phi(+-1) = phi''(+-1) = 0 (the Navier stream form).
BorderedOperator build_navier_stream_operator(const ResolventCase& c, const ChebGrid& grid, const DiffOps& ops);

// Vorticity operator without boundary rows (interior physics on every row).
Mat vorticity_operator(const ResolventCase& c, const ChebGrid& grid, const DiffOps& ops);

// Vorticity operator whose first/last rows are the scaled moments
// e^{-|k|} int e^{+-ky} w; equivalent to phi(+-1)=phi'(+-1)=0.
Mat moment_operator(const ResolventCase& c, const ChebGrid& grid, const DiffOps& ops);

// Dirichlet Helmholtz solver (d^2 - k^2) phi = w, phi(+-1) = 0, factored once.
class StreamSolver {
 public:
  StreamSolver(int k, const DiffOps& ops);
  Vec solve(const Vec& w) const;

 private:
  Eigen::PartialPivLU<Mat> lu_;
};

std::pair<Vec, Vec> recover_velocity(const Vec& phi, int k, const DiffOps& ops);

std::pair<cplx, cplx> coefficients(const Vec& w_na, int k, const ChebGrid& grid);

HomogeneousPair homogeneous_airy(const ResolventCase& c, const ChebGrid& grid, const DiffOps& ops,
                                 Exec exec = Exec::parallel);
HomogeneousPair homogeneous_bvp(const ResolventCase& c, const ChebGrid& grid, const DiffOps& ops);

// Airy representation regime: L >= 6|k| or L >= |k| >= k0.
inline constexpr int kK0 = 10;
bool airy_regime(const ResolventCase& c);

ResolventSolution solve_navier(const ResolventCase& c, const ForcingSpec& f, const ChebGrid& grid,
                               const DiffOps& ops);

enum class NonslipPath { decomposed, monolithic };
ResolventSolution solve_nonslip(const ResolventCase& c, const ForcingSpec& f, const ChebGrid& grid,
                                const DiffOps& ops, NonslipPath path = NonslipPath::decomposed,
                                HomogeneousSource source = HomogeneousSource::bvp);

ResolventSolution solve(const ResolventCase& c, const ForcingSpec& f, const ChebGrid& grid, const DiffOps& ops);

// Smallest singular value of the bordered matrix (uniqueness check).
double smallest_singular_value(const Mat& m);

}  // namespace couette
