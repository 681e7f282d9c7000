#include "couette/spectral.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>
#include <string>

namespace couette {

const char* to_string(BoundaryCondition bc) {
  return bc == BoundaryCondition::navier_slip ? "navier_slip" : "non_slip";
}

RVec chebyshev_nodes(int n) {
  if (n < 1) throw std::invalid_argument("chebyshev_nodes: n must be >= 1");
  RVec y(n + 1);
  // sin form keeps the nodes exactly antisymmetric
  for (int j = 0; j <= n; ++j) y(j) = std::sin(kPi * (n - 2.0 * j) / (2.0 * n));
  return y;
}

static RVec clenshaw_curtis(int N) {
  RVec w = RVec::Zero(N + 1);
  RVec v = RVec::Ones(N - 1);
  if (N % 2 == 0) {
    w(0) = w(N) = 1.0 / (double(N) * N - 1.0);
    for (int k = 1; k < N / 2; ++k)
      for (int j = 1; j < N; ++j) v(j - 1) -= 2.0 * std::cos(2.0 * k * kPi * j / N) / (4.0 * k * k - 1.0);
    for (int j = 1; j < N; ++j) v(j - 1) -= std::cos(kPi * j) / (double(N) * N - 1.0);
  } else {
    w(0) = w(N) = 1.0 / (double(N) * N);
    for (int k = 1; k <= (N - 1) / 2; ++k)
      for (int j = 1; j < N; ++j) v(j - 1) -= 2.0 * std::cos(2.0 * k * kPi * j / N) / (4.0 * k * k - 1.0);
  }
  for (int j = 1; j < N; ++j) w(j) = 2.0 * v(j - 1) / N;
  return w;
}

ChebGrid build_grid(int N) {
  if (N < 4) throw std::invalid_argument("build_grid: order must be >= 4, got " + std::to_string(N));
  if (N > kMaxOrder) throw std::invalid_argument("build_grid: order above " + std::to_string(kMaxOrder));
  ChebGrid g;
  g.order = N;
  g.nodes = chebyshev_nodes(N);
  g.quad_weights = clenshaw_curtis(N);
  return g;
}

static void fix_diagonal(RMat& m) {
  for (Eigen::Index i = 0; i < m.rows(); ++i) {
    double s = 0.0;
    for (Eigen::Index j = 0; j < m.cols(); ++j)
      if (j != i) s += m(i, j);
    m(i, i) = -s;
  }
}

DiffOps build_diff_ops(const ChebGrid& grid) {
  const int N = grid.order;
  const int n = N + 1;
  DiffOps ops;
  ops.d1 = RMat::Zero(n, n);
  for (int i = 0; i < n; ++i) {
    const double ci = (i == 0 || i == N ? 2.0 : 1.0) * (i % 2 ? -1.0 : 1.0);
    for (int j = 0; j < n; ++j) {
      if (i == j) continue;
      const double cj = (j == 0 || j == N ? 2.0 : 1.0) * (j % 2 ? -1.0 : 1.0);
      // x_i - x_j without cancellation
      const double dx = 2.0 * std::sin((i + j) * kPi / (2.0 * N)) * std::sin((j - i) * kPi / (2.0 * N));
      ops.d1(i, j) = ci / (cj * dx);
    }
  }
  fix_diagonal(ops.d1);
  ops.d2 = ops.d1 * ops.d1;
  fix_diagonal(ops.d2);
  ops.d4 = ops.d2 * ops.d2;
  fix_diagonal(ops.d4);
  return ops;
}

int grid_order_for(double nu, double k) {
  if (!(nu > 0.0)) throw std::invalid_argument("grid_order_for: nu must be positive");
  const double L = std::cbrt(std::abs(k) / nu);
  const int N = std::max(64, static_cast<int>(std::ceil(8.0 * L)));
  if (N > kMaxOrder)
    throw std::runtime_error("grid order " + std::to_string(N) + " required for nu=" + std::to_string(nu) +
                             ", k=" + std::to_string(k) + " exceeds " + std::to_string(kMaxOrder));
  return N;
}

cplx quadrature(const ChebGrid& grid, const Vec& values) {
  if (values.size() != grid.size()) throw std::invalid_argument("quadrature: length mismatch");
  cplx s = 0.0;
  for (int j = 0; j < grid.size(); ++j) s += grid.quad_weights(j) * values(j);
  return s;
}

double quadrature(const ChebGrid& grid, const RVec& values) {
  if (values.size() != grid.size()) throw std::invalid_argument("quadrature: length mismatch");
  return grid.quad_weights.dot(values);
}

cplx inner(const ChebGrid& grid, const Vec& f, const Vec& g) {
  if (f.size() != grid.size() || g.size() != grid.size()) throw std::invalid_argument("inner: length mismatch");
  cplx s = 0.0;
  for (int j = 0; j < grid.size(); ++j) s += grid.quad_weights(j) * f(j) * std::conj(g(j));
  return s;
}

double l2_norm(const ChebGrid& grid, const Vec& f) {
  if (f.size() != grid.size()) throw std::invalid_argument("l2_norm: length mismatch");
  double s = 0.0;
  for (int j = 0; j < grid.size(); ++j) s += grid.quad_weights(j) * std::norm(f(j));
  return std::sqrt(s);
}

double weight_at(WeightKind kind, const WeightParams& p, double y) {
  switch (kind) {
    case WeightKind::rho_k: {
      return std::min(1.0, p.L * (1.0 - std::abs(y)));
    }
    case WeightKind::tilde_rho_k: {
      const double s = p.L * (1.0 - std::abs(y));
      if (s >= 1.0) return 1.0;
      return (s - 1.0) * (s - 1.0) * (s - 1.0) + 1.0;
    }
    case WeightKind::cutoff_rho: {
      const double t = y - p.lambda;
      if (t <= -p.delta) return -1.0;
      if (t >= p.delta) return 1.0;
      return std::sin(kPi * t / (2.0 * p.delta));
    }
    case WeightKind::cutoff_chi: {
      const double t = y - p.lambda;
      if (std::abs(t) >= p.delta) return 1.0 / t;
      const double d2 = p.delta * p.delta;
      return 2.0 * t / d2 - t * t * t / (d2 * d2);
    }
  }
  return 0.0;
}

WeightProfile weight_values(WeightKind kind, const WeightParams& params, const ChebGrid& grid) {
  const bool uses_L = kind == WeightKind::rho_k || kind == WeightKind::tilde_rho_k;
  if (uses_L && !(params.L > 0.0)) throw std::invalid_argument("weight_values: L must be positive");
  if (!uses_L && !(params.delta > 0.0)) throw std::invalid_argument("weight_values: delta must be positive");
  WeightProfile w{kind, params, RVec(grid.size())};
  for (int j = 0; j < grid.size(); ++j) w.values(j) = weight_at(kind, params, grid.nodes(j));
  return w;
}

Vec interpolate(const ChebGrid& grid, const Vec& values, const RVec& points) {
  const int N = grid.order;
  Vec out(points.size());
  for (Eigen::Index p = 0; p < points.size(); ++p) {
    const double x = points(p);
    cplx num = 0.0;
    double den = 0.0;
    int hit = -1;
    for (int j = 0; j <= N; ++j) {
      const double dx = x - grid.nodes(j);
      if (dx == 0.0) {
        hit = j;
        break;
      }
      double wj = (j % 2 ? -1.0 : 1.0) / dx;
      if (j == 0 || j == N) wj *= 0.5;
      num += wj * values(j);
      den += wj;
    }
    out(p) = hit >= 0 ? values(hit) : num / den;
  }
  return out;
}

void gauss_legendre(int n, RVec& x, RVec& w) {
  x.resize(n);
  w.resize(n);
  for (int i = 0; i < (n + 1) / 2; ++i) {
    double z = std::cos(kPi * (i + 0.75) / (n + 0.5));
    double dp = 0.0;
    for (int it = 0; it < 100; ++it) {
      double p0 = 1.0, p1 = z;
      for (int k = 2; k <= n; ++k) {
        const double p2 = ((2.0 * k - 1.0) * z * p1 - (k - 1.0) * p0) / k;
        p0 = p1;
        p1 = p2;
      }
      if (n == 1) p0 = 1.0;
      dp = n * (z * p1 - p0) / (z * z - 1.0);
      const double dz = p1 / dp;
      z -= dz;
      if (std::abs(dz) < 1e-16) break;
    }
    {
      double p0 = 1.0, p1 = z;
      for (int k = 2; k <= n; ++k) {
        const double p2 = ((2.0 * k - 1.0) * z * p1 - (k - 1.0) * p0) / k;
        p0 = p1;
        p1 = p2;
      }
      if (n == 1) p0 = 1.0;
      dp = n * (z * p1 - p0) / (z * z - 1.0);
    }
    x(i) = z;
    x(n - 1 - i) = -z;
    w(i) = w(n - 1 - i) = 2.0 / ((1.0 - z * z) * dp * dp);
  }
}

double weighted_l2(const ChebGrid& grid, const Vec& values, const std::function<double(double)>& weight,
                   const std::vector<double>& breaks) {
  std::vector<double> b{-1.0};
  for (double x : breaks)
    if (x > -1.0 && x < 1.0) b.push_back(x);
  if (b.size() == 1) b.push_back(0.0);
  b.push_back(1.0);
  std::sort(b.begin(), b.end());
  b.erase(std::unique(b.begin(), b.end()), b.end());

  const int n = grid.order + 33;
  RVec gx, gw;
  gauss_legendre(n, gx, gw);
  double total = 0.0;
  const std::size_t panels = b.size() - 1;
  for (std::size_t p = 0; p < panels; ++p) {
    const double a = b[p], c = b[p + 1];
    RVec pts(n), wts(n);
    for (int i = 0; i < n; ++i) {
      const double t = 0.5 * (gx(i) + 1.0);  // [0,1]
      const double wt = 0.5 * gw(i);
      if (p == 0) {
        const double len = c + 1.0;
        pts(i) = -1.0 + len * t * t;
        wts(i) = wt * 2.0 * len * t;
      } else if (p == panels - 1) {
        const double len = 1.0 - a;
        pts(i) = 1.0 - len * t * t;
        wts(i) = wt * 2.0 * len * t;
      } else {
        pts(i) = a + (c - a) * t;
        wts(i) = wt * (c - a);
      }
    }
    const Vec f = interpolate(grid, values, pts);
    for (int i = 0; i < n; ++i) total += wts(i) * std::norm(f(i)) * weight(pts(i));
  }
  return std::sqrt(std::max(0.0, total));
}

}  // namespace couette
