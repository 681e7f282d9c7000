#include "couette/resolvent.hpp"

#include <cmath>
#include <sstream>
#include <stdexcept>

#include "couette/airy.hpp"

namespace couette {

double ResolventCase::L() const { return std::cbrt(std::abs(k) / nu); }
double ResolventCase::delta() const { return std::cbrt(nu) / std::cbrt(std::abs(k)); }
double ResolventCase::shift() const { return epsilon * std::cbrt(nu) * std::pow(std::abs(k), 2.0 / 3.0); }

void ResolventCase::validate() const {
  if (!(nu > 0.0)) throw std::invalid_argument("nu must be positive");
  if (k == 0) throw std::invalid_argument("|k| must be >= 1");
  if (!(epsilon >= 0.0)) throw std::invalid_argument("epsilon must be nonnegative");
  if (!std::isfinite(lambda)) throw std::invalid_argument("lambda must be finite");
}

static std::string describe(const ResolventCase& c) {
  std::ostringstream os;
  os << "(nu=" << c.nu << ", k=" << c.k << ", lambda=" << c.lambda << ", epsilon=" << c.epsilon << ", bc="
     << to_string(c.bc) << ")";
  return os.str();
}

ForcingSpec ForcingSpec::direct(Vec F) {
  ForcingSpec f;
  f.form = Form::direct_F;
  f.F = std::move(F);
  return f;
}

ForcingSpec ForcingSpec::pair(Vec f1, Vec f2) {
  ForcingSpec f;
  f.form = Form::divergence_pair;
  f.f1 = std::move(f1);
  f.f2 = std::move(f2);
  return f;
}

Vec ForcingSpec::assemble(int k, const DiffOps& ops) const {
  const Eigen::Index n = ops.d1.rows();
  if (form == Form::direct_F) {
    if (F.size() != n) throw std::invalid_argument("forcing: grid length mismatch");
    return F;
  }
  if (f1.size() != n || f2.size() != n) throw std::invalid_argument("forcing: grid length mismatch");
  return -kI * double(k) * f1 - ops.d1.cast<cplx>() * f2;
}

double HomogeneousPair::log_abs_C11() const { return std::log(std::abs(C11)) - w1_log_scale; }

Mat vorticity_operator(const ResolventCase& c, const ChebGrid& grid, const DiffOps& ops) {
  const int n = grid.size();
  const double k = c.k;
  Mat A = (-c.nu) * ops.d2.cast<cplx>();
  for (int j = 0; j < n; ++j) A(j, j) += c.nu * k * k + kI * k * (grid.nodes(j) - c.lambda) - c.shift();
  return A;
}

BorderedOperator build_operator(const ResolventCase& c, const ChebGrid& grid, const DiffOps& ops) {
  c.validate();
  const int N = grid.order;
  const int n = N + 1;
  BorderedOperator op;
  if (c.bc == BoundaryCondition::navier_slip) {
    op.matrix = vorticity_operator(c, grid, ops);
    op.matrix.row(0).setZero();
    op.matrix.row(N).setZero();
    op.matrix(0, 0) = 1.0;
    op.matrix(N, N) = 1.0;
    op.boundary_rows = {0, N};
    return op;
  }
  const double k = c.k, k2 = k * k;
  const Mat D2 = ops.d2.cast<cplx>();
  Mat lap = D2;
  for (int j = 0; j < n; ++j) lap(j, j) -= k2;
  Mat A = (-c.nu) * (ops.d4.cast<cplx>() - 2.0 * k2 * D2);
  for (int j = 0; j < n; ++j) A(j, j) -= c.nu * k2 * k2;
  for (int i = 0; i < n; ++i) A.row(i) += (kI * k * (grid.nodes(i) - c.lambda) - c.shift()) * lap.row(i);
  A.row(0).setZero();
  A(0, 0) = 1.0;
  A.row(N).setZero();
  A(N, N) = 1.0;
  A.row(1) = ops.d1.row(0).cast<cplx>();
  A.row(N - 1) = ops.d1.row(N).cast<cplx>();
  op.matrix = std::move(A);
  op.boundary_rows = {0, 1, N - 1, N};
  return op;
}

BorderedOperator build_navier_stream_operator(const ResolventCase& c, const ChebGrid& grid, const DiffOps& ops) {
  ResolventCase cc = c;
  cc.bc = BoundaryCondition::non_slip;
  BorderedOperator op = build_operator(cc, grid, ops);
  const int N = grid.order;
  op.matrix.row(1) = ops.d2.row(0).cast<cplx>();
  op.matrix.row(N - 1) = ops.d2.row(N).cast<cplx>();
  return op;
}

static void moment_rows(Mat& A, int k, const ChebGrid& grid) {
  const int N = grid.order;
  const double ak = std::abs(k);
  for (int j = 0; j <= N; ++j) {
    const double y = grid.nodes(j), wq = grid.quad_weights(j);
    A(0, j) = wq * std::exp(k * y - ak);
    A(N, j) = wq * std::exp(-k * y - ak);
  }
}

Mat moment_operator(const ResolventCase& c, const ChebGrid& grid, const DiffOps& ops) {
  Mat A = vorticity_operator(c, grid, ops);
  moment_rows(A, c.k, grid);
  return A;
}

StreamSolver::StreamSolver(int k, const DiffOps& ops) {
  const Eigen::Index n = ops.d2.rows();
  Mat H = ops.d2.cast<cplx>();
  for (Eigen::Index j = 0; j < n; ++j) H(j, j) -= double(k) * k;
  H.row(0).setZero();
  H.row(n - 1).setZero();
  H(0, 0) = 1.0;
  H(n - 1, n - 1) = 1.0;
  lu_.compute(H);
}

Vec StreamSolver::solve(const Vec& w) const {
  Vec rhs = w;
  rhs(0) = 0.0;
  rhs(rhs.size() - 1) = 0.0;
  return lu_.solve(rhs);
}

std::pair<Vec, Vec> recover_velocity(const Vec& phi, int k, const DiffOps& ops) {
  return {ops.d1.cast<cplx>() * phi, (-kI * double(k)) * phi};
}

std::pair<cplx, cplx> coefficients(const Vec& w_na, int k, const ChebGrid& grid) {
  if (w_na.size() != grid.size()) throw std::invalid_argument("coefficients: length mismatch");
  cplx c1 = 0.0, c2 = 0.0;
  const double s2k = std::sinh(2.0 * k);
  for (int j = 0; j < grid.size(); ++j) {
    const double y = grid.nodes(j), wq = grid.quad_weights(j);
    c1 -= wq * std::sinh(k * (y + 1.0)) / s2k * w_na(j);
    c2 += wq * std::sinh(k * (1.0 - y)) / s2k * w_na(j);
  }
  return {c1, c2};
}

bool airy_regime(const ResolventCase& c) {
  const double L = c.L(), ak = std::abs(c.k);
  return L >= 6.0 * ak || (L >= ak && ak >= kK0);
}

static void check_finite(const Vec& v, const ResolventCase& c, const char* what) {
  if (!v.allFinite()) throw std::runtime_error(std::string(what) + ": linear solve failed for " + describe(c));
}

static void fill_stream(HomogeneousPair& p, int k, const DiffOps& ops) {
  StreamSolver ss(k, ops);
  p.phi1 = ss.solve(p.w1);
  p.phi2 = ss.solve(p.w2);
}

HomogeneousPair homogeneous_bvp(const ResolventCase& c, const ChebGrid& grid, const DiffOps& ops) {
  c.validate();
  const int N = grid.order;
  const double k = c.k, ak = std::abs(c.k);
  Mat A = moment_operator(c, grid, ops);
  Eigen::PartialPivLU<Mat> lu(A);
  Vec r1 = Vec::Zero(N + 1), r2 = Vec::Zero(N + 1);
  r1(0) = std::exp(k - ak);
  r1(N) = std::exp(-k - ak);
  r2(0) = -std::exp(-k - ak);
  r2(N) = -std::exp(k - ak);
  HomogeneousPair p;
  p.source = HomogeneousSource::bvp;
  p.w1 = lu.solve(r1);
  p.w2 = lu.solve(r2);
  check_finite(p.w1, c, "homogeneous_bvp");
  check_finite(p.w2, c, "homogeneous_bvp");
  p.d = cplx(-1.0 - c.lambda, -k * c.nu);
  p.d_tilde = cplx(-1.0 + c.lambda, -k * c.nu);
  fill_stream(p, c.k, ops);
  return p;
}

HomogeneousPair homogeneous_airy(const ResolventCase& c, const ChebGrid& grid, const DiffOps& ops, Exec exec) {
  c.validate();
  if (!airy_regime(c))
    throw std::domain_error("homogeneous_airy: need L >= 6|k| or L >= |k| >= k0 for " + describe(c));
  const int n = grid.size();
  const double k = std::abs(c.k);
  const double L = c.L();
  const cplx r1 = std::polar(1.0, kPi / 6.0), r2 = std::polar(1.0, 5.0 * kPi / 6.0);
  std::vector<cplx> args(2 * n);
  for (int j = 0; j < n; ++j) {
    const cplx z = L * cplx(grid.nodes(j) - c.lambda, -k * c.nu) + kI * c.epsilon;
    args[j] = r1 * z;
    args[n + j] = r2 * z;
  }
  const std::vector<AiryBundle> ai = airy_batch(args, exec);

  HomogeneousPair p;
  p.source = HomogeneousSource::airy;
  auto normalized = [&](int offset, double& scale) {
    scale = -1e300;
    for (int j = 0; j < n; ++j) scale = std::max(scale, ai[offset + j].log_abs());
    Vec W(n);
    for (int j = 0; j < n; ++j) W(j) = ai[offset + j].ai * std::exp(ai[offset + j].log_scale - scale);
    return W;
  };
  const Vec W1 = normalized(0, p.w1_log_scale);
  const Vec W2 = normalized(n, p.w2_log_scale);

  Vec ep(n), em(n);
  for (int j = 0; j < n; ++j) {
    ep(j) = std::exp(k * grid.nodes(j));
    em(j) = std::exp(-k * grid.nodes(j));
  }
  p.A1 = quadrature(grid, Vec(ep.cwiseProduct(W1)));
  p.A2 = quadrature(grid, Vec(em.cwiseProduct(W2)));
  p.B1 = quadrature(grid, Vec(em.cwiseProduct(W1)));
  p.B2 = quadrature(grid, Vec(ep.cwiseProduct(W2)));
  const cplx det = p.A1 * p.A2 - p.B1 * p.B2;
  if (!(std::abs(det) > 1e-12 * std::abs(p.B1 * p.B2)))
    throw std::runtime_error("homogeneous_airy: degenerate determinant A1A2-B1B2 for " + describe(c));
  const double e = std::exp(k), ei = std::exp(-k);
  p.C11 = (p.A2 * e - p.B2 * ei) / det;
  p.C12 = (-p.B1 * e + p.A1 * ei) / det;
  p.C21 = (-p.A2 * ei + p.B2 * e) / det;
  p.C22 = (p.B1 * ei - p.A1 * e) / det;
  p.w1 = p.C11 * W1 + p.C12 * W2;
  p.w2 = p.C21 * W1 + p.C22 * W2;
  if (c.k < 0) {
    // phi_i(-k) = conj(phi_i(k)); the scaled coefficients follow the same rule
    p.w1 = p.w1.conjugate();
    p.w2 = p.w2.conjugate();
    for (cplx* v : {&p.C11, &p.C12, &p.C21, &p.C22, &p.A1, &p.A2, &p.B1, &p.B2}) *v = std::conj(*v);
  }
  p.d = cplx(-1.0 - c.lambda, -double(c.k) * c.nu);
  p.d_tilde = cplx(-1.0 + c.lambda, -double(c.k) * c.nu);
  fill_stream(p, c.k, ops);
  return p;
}

ResolventSolution solve_navier(const ResolventCase& c, const ForcingSpec& f, const ChebGrid& grid,
                               const DiffOps& ops) {
  ResolventCase cc = c;
  cc.bc = BoundaryCondition::navier_slip;
  const BorderedOperator op = build_operator(cc, grid, ops);
  Vec rhs = f.assemble(c.k, ops);
  for (int r : op.boundary_rows) rhs(r) = 0.0;
  ResolventSolution s;
  s.w = Eigen::PartialPivLU<Mat>(op.matrix).solve(rhs);
  check_finite(s.w, c, "solve_navier");
  s.w_na = s.w;
  s.phi = StreamSolver(c.k, ops).solve(s.w);
  std::tie(s.u1, s.u2) = recover_velocity(s.phi, c.k, ops);
  return s;
}

ResolventSolution solve_nonslip(const ResolventCase& c, const ForcingSpec& f, const ChebGrid& grid,
                                const DiffOps& ops, NonslipPath path, HomogeneousSource source) {
  ResolventCase cc = c;
  cc.bc = BoundaryCondition::non_slip;
  ResolventSolution s;
  if (path == NonslipPath::monolithic) {
    const BorderedOperator op = build_operator(cc, grid, ops);
    Vec rhs = f.assemble(c.k, ops);
    for (int r : op.boundary_rows) rhs(r) = 0.0;
    s.phi = Eigen::PartialPivLU<Mat>(op.matrix).solve(rhs);
    check_finite(s.phi, c, "solve_nonslip");
    Mat lap = ops.d2.cast<cplx>();
    for (Eigen::Index j = 0; j < lap.rows(); ++j) lap(j, j) -= double(c.k) * c.k;
    s.w = lap * s.phi;
    // decomposition pieces for reporting
    const ResolventSolution na = solve_navier(cc, f, grid, ops);
    s.w_na = na.w;
    std::tie(s.c1, s.c2) = coefficients(s.w_na, c.k, grid);
  } else {
    const ResolventSolution na = solve_navier(cc, f, grid, ops);
    const HomogeneousPair p =
        source == HomogeneousSource::airy ? homogeneous_airy(cc, grid, ops) : homogeneous_bvp(cc, grid, ops);
    s.w_na = na.w;
    std::tie(s.c1, s.c2) = coefficients(s.w_na, c.k, grid);
    s.w = na.w + s.c1 * p.w1 + s.c2 * p.w2;
    s.phi = na.phi + s.c1 * p.phi1 + s.c2 * p.phi2;
  }
  std::tie(s.u1, s.u2) = recover_velocity(s.phi, c.k, ops);
  return s;
}

ResolventSolution solve(const ResolventCase& c, const ForcingSpec& f, const ChebGrid& grid, const DiffOps& ops) {
  return c.bc == BoundaryCondition::navier_slip ? solve_navier(c, f, grid, ops) : solve_nonslip(c, f, grid, ops);
}

double smallest_singular_value(const Mat& m) {
  Eigen::BDCSVD<Mat> svd(m);
  return svd.singularValues()(svd.singularValues().size() - 1);
}

}  // namespace couette
