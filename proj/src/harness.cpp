#include "couette/harness.hpp"

#include <algorithm>
#include <cmath>
#include <random>
#include <sstream>
#include <stdexcept>

namespace couette {

namespace {

double l2_weighted(const RVec& W, const Vec& v) {
  double s = 0.0;
  for (Eigen::Index j = 0; j < v.size(); ++j) s += W(j) * std::norm(v(j));
  return std::sqrt(s);
}

std::vector<double> rho_breaks(double L) {
  if (L <= 1.0) return {};
  return {-1.0 + 1.0 / L, 1.0 - 1.0 / L};
}

// Largest singular value of a linear map given its action and adjoint, by
// Golub-Kahan-Lanczos bidiagonalization with full reorthogonalization.
struct TopSingular {
  double sigma = 0.0;
  Vec right;
};

TopSingular top_singular(const std::function<Vec(const Vec&)>& G, const std::function<Vec(const Vec&)>& GH,
                         int ncols, int max_steps = 120, double tol = 1e-11) {
  TopSingular out;
  if (ncols <= 0) return out;
  std::mt19937_64 rng(20240611);
  std::normal_distribution<double> nd;
  Vec v(ncols);
  for (int j = 0; j < ncols; ++j) v(j) = cplx(nd(rng), nd(rng));
  v /= v.norm();

  std::vector<Vec> U, V{v};
  std::vector<double> alpha, beta;
  const int steps = std::min(max_steps, ncols);
  double prev = -1.0;
  Eigen::VectorXd best_y;
  for (int j = 0; j < steps; ++j) {
    Vec u = G(V[j]);
    if (j > 0) u -= beta[j - 1] * U[j - 1];
    for (int pass = 0; pass < 2; ++pass)
      for (const Vec& q : U) u -= q.dot(u) * q;
    const double a = u.norm();
    if (a == 0.0) break;
    u /= a;
    U.push_back(u);
    alpha.push_back(a);

    const int m = int(alpha.size());
    RMat B = RMat::Zero(m, m);
    for (int i = 0; i < m; ++i) {
      B(i, i) = alpha[i];
      if (i + 1 < m) B(i, i + 1) = beta[i];
    }
    Eigen::JacobiSVD<RMat> svd(B, Eigen::ComputeFullV);
    const double s = svd.singularValues()(0);
    best_y = svd.matrixV().col(0);
    const bool converged = std::abs(s - prev) <= tol * s;
    prev = s;
    out.sigma = s;
    if (converged && j >= 3) break;

    Vec w = GH(u) - a * V[j];
    for (int pass = 0; pass < 2; ++pass)
      for (const Vec& q : V) w -= q.dot(w) * q;
    const double b = w.norm();
    if (b <= 1e-14 * a) break;
    w /= b;
    beta.push_back(b);
    V.push_back(w);
  }
  out.right = Vec::Zero(ncols);
  for (Eigen::Index i = 0; i < best_y.size(); ++i) out.right += best_y(i) * V[i];
  return out;
}

double golden_max(const std::function<double(double)>& f, double a, double b, double tol, double& arg) {
  const double g = (std::sqrt(5.0) - 1.0) / 2.0;
  double x1 = b - g * (b - a), x2 = a + g * (b - a);
  double f1 = f(x1), f2 = f(x2);
  while (b - a > tol) {
    if (f1 >= f2) {
      b = x2;
      x2 = x1;
      f2 = f1;
      x1 = b - g * (b - a);
      f1 = f(x1);
    } else {
      a = x1;
      x1 = x2;
      f1 = f2;
      x2 = a + g * (b - a);
      f2 = f(x2);
    }
  }
  arg = f1 >= f2 ? x1 : x2;
  return std::max(f1, f2);
}

}  // namespace

// ---- norms -----------------------------------------------------------------

NormBundle norms(const ResolventSolution& s, const ResolventCase& c, const ChebGrid& grid, const DiffOps& ops) {
  NormBundle b;
  const Vec& w = s.w;
  if (w.size() != grid.size()) throw std::invalid_argument("norms: length mismatch");
  const RVec& W = grid.quad_weights;
  const int n = grid.size();
  b.l2 = l2_weighted(W, w);
  for (int j = 0; j < n; ++j) {
    b.l1 += W(j) * std::abs(w(j));
    b.linf = std::max(b.linf, std::abs(w(j)));
  }
  if (s.phi.size() == n) {
    const Vec dphi = ops.d1.cast<cplx>() * s.phi;
    const double a = l2_weighted(W, dphi), p = l2_weighted(W, s.phi);
    b.h1_phi = a * a + double(c.k) * c.k * p * p;
  }
  if (s.u1.size() == n && s.u2.size() == n) b.u_l2 = std::hypot(l2_weighted(W, s.u1), l2_weighted(W, s.u2));
  Vec crit(n);
  for (int j = 0; j < n; ++j) crit(j) = (grid.nodes(j) - c.lambda) * w(j);
  b.critical = l2_weighted(W, crit);
  b.w_prime_l2 = l2_weighted(W, Vec(ops.d1.cast<cplx>() * w));

  WeightParams wp;
  wp.L = c.L();
  const auto br = rho_breaks(wp.L);
  auto rho = [wp](double y) { return weight_at(WeightKind::rho_k, wp, y); };
  b.rho_half = weighted_l2(grid, w, rho, br);
  b.rho_neg_quarter = weighted_l2(grid, w, [&](double y) { return 1.0 / std::sqrt(rho(y)); }, br);
  b.rho_threehalf = weighted_l2(grid, w, [&](double y) { return std::pow(rho(y), 3.0); }, br);
  b.boundary_weight = weighted_l2(grid, w, [](double y) { return 1.0 - std::abs(y); });
  return b;
}

ScalingFit fit_power(const std::string& name, const std::vector<double>& x, const std::vector<double>& y,
                     double target, double tolerance) {
  if (x.size() != y.size() || x.size() < 2) throw std::invalid_argument("fit_power: need >= 2 matching points");
  const int n = int(x.size());
  double sx = 0, sy = 0, sxx = 0, sxy = 0, syy = 0;
  for (int i = 0; i < n; ++i) {
    if (!(x[i] > 0.0) || !(y[i] > 0.0)) throw std::invalid_argument("fit_power: data must be positive");
    const double a = std::log(x[i]), b = std::log(y[i]);
    sx += a;
    sy += b;
    sxx += a * a;
    sxy += a * b;
    syy += b * b;
  }
  const double vx = sxx - sx * sx / n, vy = syy - sy * sy / n, cxy = sxy - sx * sy / n;
  if (!(vx > 0.0)) throw std::invalid_argument("fit_power: abscissae must not all coincide");
  ScalingFit f;
  f.name = name;
  f.exponent = cxy / vx;
  f.intercept = (sy - f.exponent * sx) / n;
  f.r2 = vy > 0.0 ? std::clamp(cxy * cxy / (vx * vy), 0.0, 1.0) : 1.0;
  f.target_exponent = target;
  f.tolerance = tolerance;
  f.pass = std::abs(f.exponent - target) <= tolerance && f.r2 >= 0.98;
  return f;
}

// ---- resolvent map ---------------------------------------------------------

ResolventMap::ResolventMap(const ResolventCase& c, const ChebGrid& grid, const DiffOps& ops)
    : c_(c), grid_(grid), ops_(ops) {
  c.validate();
  const Mat A = c.bc == BoundaryCondition::navier_slip ? build_operator(c, grid, ops).matrix
                                                        : moment_operator(c, grid, ops);
  lu_.compute(A);
  WeightParams wp;
  wp.L = c.L();
  rho_ = weight_values(WeightKind::rho_k, wp, grid).values;
}

const Eigen::PartialPivLU<Mat>& ResolventMap::stream() const {
  std::call_once(stream_once_, [this] {
    const int n = grid_.size();
    Mat H = ops_.d2.cast<cplx>();
    for (int j = 0; j < n; ++j) H(j, j) -= double(c_.k) * c_.k;
    H.row(0).setZero();
    H.row(n - 1).setZero();
    H(0, 0) = 1.0;
    H(n - 1, n - 1) = 1.0;
    stream_.compute(H);
  });
  return stream_;
}

int ResolventMap::data_size(DataKind kind) const {
  return kind == DataKind::l2 ? grid_.size() - 2 : grid_.size();
}

double ResolventMap::data_norm(const Vec& data, DataKind kind) const {
  if (kind == DataKind::l2) return l2_weighted(grid_.quad_weights.segment(1, grid_.size() - 2), data);
  return l2_weighted(grid_.quad_weights, data);
}

Vec ResolventMap::forcing(const Vec& data, DataKind kind) const {
  const int n = grid_.size();
  if (data.size() != data_size(kind)) throw std::invalid_argument("ResolventMap: data length mismatch");
  Vec F = Vec::Zero(n);
  if (kind == DataKind::l2) {
    F.segment(1, n - 2) = data;
  } else {
    F = -(ops_.d1.cast<cplx>() * data);
    F(0) = 0.0;
    F(n - 1) = 0.0;
  }
  return F;
}

Vec ResolventMap::apply(const Vec& data, DataKind kind) const { return lu_.solve(forcing(data, kind)); }

Vec ResolventMap::transpose_apply(const Vec& g, DataKind kind) const {
  const int n = grid_.size();
  Vec r = lu_.transpose().solve(g);
  r(0) = 0.0;
  r(n - 1) = 0.0;
  if (kind == DataKind::l2) return r.segment(1, n - 2);
  return -(ops_.d1.transpose().cast<cplx>() * r);
}

double ResolventMap::functional_norm(const Vec& g, DataKind kind) const {
  const Vec q = transpose_apply(g, kind);
  const RVec W = kind == DataKind::l2 ? RVec(grid_.quad_weights.segment(1, grid_.size() - 2)) : grid_.quad_weights;
  double s = 0.0;
  for (Eigen::Index j = 0; j < q.size(); ++j) s += std::norm(q(j)) / W(j);
  return std::sqrt(s);
}

Vec ResolventMap::output(const Vec& w, Output out) const {
  const int n = grid_.size();
  switch (out) {
    case Output::w:
    case Output::rho_half:
      return w;
    case Output::w_prime:
      return ops_.d1.cast<cplx>() * w;
    case Output::critical: {
      Vec q(n);
      for (int j = 0; j < n; ++j) q(j) = (grid_.nodes(j) - c_.lambda) * w(j);
      return q;
    }
    case Output::u: {
      Vec rhs = w;
      rhs(0) = 0.0;
      rhs(n - 1) = 0.0;
      const Vec phi = stream().solve(rhs);
      Vec q(2 * n);
      q.head(n) = ops_.d1.cast<cplx>() * phi;
      q.tail(n) = (-kI * double(c_.k)) * phi;
      return q;
    }
  }
  return w;
}

Vec ResolventMap::output_adjoint(const Vec& q, Output out) const {
  const int n = grid_.size();
  switch (out) {
    case Output::w:
    case Output::rho_half:
      return q;
    case Output::w_prime:
      return ops_.d1.transpose().cast<cplx>() * q;
    case Output::critical: {
      Vec r(n);
      for (int j = 0; j < n; ++j) r(j) = (grid_.nodes(j) - c_.lambda) * q(j);
      return r;
    }
    case Output::u: {
      const Vec t = ops_.d1.transpose().cast<cplx>() * q.head(n) + (kI * double(c_.k)) * q.tail(n);
      Vec r = stream().adjoint().solve(t);
      r(0) = 0.0;
      r(n - 1) = 0.0;
      return r;
    }
  }
  return q;
}

RVec ResolventMap::output_weights(Output out) const {
  const RVec& W = grid_.quad_weights;
  if (out == Output::u) {
    RVec r(2 * W.size());
    r << W, W;
    return r;
  }
  if (out == Output::rho_half) return W.cwiseProduct(rho_);
  return W;
}

double ResolventMap::operator_norm(DataKind kind, Output out, Vec* maximizer) const {
  const int n = grid_.size();
  const RVec Win = kind == DataKind::l2 ? RVec(grid_.quad_weights.segment(1, n - 2)) : grid_.quad_weights;
  const RVec sin = Win.cwiseSqrt();
  const RVec sout = output_weights(out).cwiseSqrt();
  auto G = [&](const Vec& x) -> Vec {
    const Vec data = x.cwiseQuotient(sin.cast<cplx>());
    return output(apply(data, kind), out).cwiseProduct(sout.cast<cplx>());
  };
  auto GH = [&](const Vec& y) -> Vec {
    const Vec q = output_adjoint(y.cwiseProduct(sout.cast<cplx>()), out);
    Vec z = lu_.adjoint().solve(q);
    z(0) = 0.0;
    z(n - 1) = 0.0;
    Vec d = kind == DataKind::l2 ? Vec(z.segment(1, n - 2)) : Vec(-(ops_.d1.transpose().cast<cplx>() * z));
    return d.cwiseQuotient(sin.cast<cplx>());
  };
  const TopSingular t = top_singular(G, GH, int(Win.size()));
  if (maximizer) *maximizer = t.right.cwiseQuotient(sin.cast<cplx>());
  return t.sigma;
}

// ---- lambda search ---------------------------------------------------------

std::vector<LambdaSup> sup_over_lambda_multi(const std::function<std::vector<double>(double)>& f, int count,
                                             double lo, double hi, int coarse, double tol, Exec exec) {
  if (coarse < 3 || !(hi > lo)) throw std::invalid_argument("sup_over_lambda: need coarse >= 3 and hi > lo");
  std::vector<double> lam(coarse);
  for (int i = 0; i < coarse; ++i) lam[i] = lo + (hi - lo) * i / (coarse - 1);
  std::vector<std::vector<double>> vals(coarse);
  for_each_index(exec, coarse, [&](int i) {
    vals[i] = f(lam[i]);
    if (int(vals[i].size()) != count) throw std::logic_error("sup_over_lambda: quantity count mismatch");
  });
  std::vector<LambdaSup> out(count);
  for_each_index(exec, count, [&](int q) {
    int best = 0;
    for (int i = 1; i < coarse; ++i)
      if (vals[i][q] > vals[best][q]) best = i;
    const double a = lam[std::max(best - 1, 0)], b = lam[std::min(best + 1, coarse - 1)];
    double arg = lam[best];
    const double g = golden_max([&](double x) { return f(x)[q]; }, a, b, tol, arg);
    out[q] = g > vals[best][q] ? LambdaSup{g, arg} : LambdaSup{vals[best][q], lam[best]};
  });
  return out;
}

LambdaSup sup_over_lambda(const std::function<double(double)>& f, double lo, double hi, int coarse, double tol,
                          Exec exec) {
  return sup_over_lambda_multi([&](double x) { return std::vector<double>{f(x)}; }, 1, lo, hi, coarse, tol, exec)[0];
}

// ---- sweeps ----------------------------------------------------------------

void SweepSpec::validate(bool wants_fit) const {
  if (nu_values.empty() || k_values.empty()) throw std::invalid_argument("sweep: nu_values and k_values must be nonempty");
  for (double nu : nu_values)
    if (!(nu > 0.0)) throw std::invalid_argument("nu must be positive");
  for (int k : k_values)
    if (k == 0) throw std::invalid_argument("|k| must be >= 1");
  if (refine < 1) throw std::invalid_argument("sweep: refine must be >= 1");
  if (lambda_strategy == LambdaStrategy::fixed_list && lambda_list.empty())
    throw std::invalid_argument("sweep: fixed_list strategy needs lambda values");
  if (wants_fit && k_values.size() < 2) {
    const auto [mn, mx] = std::minmax_element(nu_values.begin(), nu_values.end());
    if (std::log10(*mx / *mn) < 2.0 - 1e-9) throw std::invalid_argument("exponent fit requires >= 2 decades");
  }
}

bool VerifyReport::pass() const {
  if (!flags.empty()) return false;
  for (const auto& f : fits)
    if (!f.pass) return false;
  return true;
}

namespace {

struct Quantity {
  std::string key;
  DataKind data;
  Output out;
  bool l1 = false;     // L^1 norm of w at the maximizer of the (data, w) map
  double nu_target;    // exponent of the sup vs nu
  double k_target;     // exponent vs k
};

int order_for(double nu, int k, int refine) {
  const int N = grid_order_for(nu, std::abs(k)) * refine;
  if (N > kMaxOrder) throw std::invalid_argument("sweep: refined order exceeds the dense-solver limit");
  return N;
}

std::vector<double> evaluate_quantities(const ResolventCase& c, const ChebGrid& grid, const DiffOps& ops,
                                        const std::vector<Quantity>& qs) {
  const ResolventMap map(c, grid, ops);
  std::vector<double> v(qs.size());
  std::map<int, Vec> maximizers;
  std::map<int, double> w_norms;
  for (size_t i = 0; i < qs.size(); ++i) {
    if (qs[i].l1) continue;
    Vec x;
    v[i] = map.operator_norm(qs[i].data, qs[i].out, qs[i].out == Output::w ? &x : nullptr);
    if (qs[i].out == Output::w) maximizers[int(qs[i].data)] = x;
  }
  for (size_t i = 0; i < qs.size(); ++i) {
    if (!qs[i].l1) continue;
    auto it = maximizers.find(int(qs[i].data));
    Vec x;
    if (it == maximizers.end()) {
      map.operator_norm(qs[i].data, Output::w, &x);
    } else {
      x = it->second;
    }
    const Vec w = map.apply(x, qs[i].data);
    double l1 = 0.0;
    for (int j = 0; j < grid.size(); ++j) l1 += grid.quad_weights(j) * std::abs(w(j));
    v[i] = l1 / map.data_norm(x, qs[i].data);
  }
  return v;
}

struct Normalizer {
  std::string name;
  std::string key;
  double nu_pow, k_pow;  // constant = value * nu^nu_pow * |k|^k_pow
  bool small_only = true;  // nu k^2 <= 1 rows
  bool large_only = false;
};

void run_sweep(VerifyReport& rep, const SweepSpec& spec, BoundaryCondition bc, const std::vector<Quantity>& qs,
               const std::vector<Normalizer>& consts, bool fit_small_only) {
  for (double nu : spec.nu_values) {
    for (int k : spec.k_values) {
      SweepRow row;
      row.nu = nu;
      row.k = k;
      row.N = order_for(nu, k, spec.refine);
      const ChebGrid grid = build_grid(row.N);
      const DiffOps ops = build_diff_ops(grid);
      ResolventCase c;
      c.nu = nu;
      c.k = k;
      c.bc = bc;
      auto eval = [&](double lam) {
        ResolventCase cc = c;
        cc.lambda = lam;
        return evaluate_quantities(cc, grid, ops, qs);
      };
      std::vector<LambdaSup> sups(qs.size());
      if (spec.lambda_strategy == SweepSpec::LambdaStrategy::sup_search) {
        sups = sup_over_lambda_multi(eval, int(qs.size()), -1.5, 1.5, 41, 1e-3, spec.exec);
      } else {
        std::vector<std::vector<double>> vals(spec.lambda_list.size());
        for_each_index(spec.exec, int(vals.size()), [&](int i) { vals[i] = eval(spec.lambda_list[i]); });
        for (size_t q = 0; q < qs.size(); ++q)
          for (size_t i = 0; i < vals.size(); ++i)
            if (vals[i][q] > sups[q].value) sups[q] = {vals[i][q], spec.lambda_list[i]};
      }
      for (size_t q = 0; q < qs.size(); ++q) {
        row.values[qs[q].key] = sups[q].value;
        row.values[qs[q].key + "_lambda"] = sups[q].lambda;
      }
      rep.rows.push_back(row);
    }
  }

  for (const Normalizer& n : consts) {
    double best = 0.0;
    bool any = false;
    for (const SweepRow& r : rep.rows) {
      const double s = r.nu * r.k * r.k;
      if (n.small_only && s > 1.0) continue;
      if (n.large_only && s < 1.0) continue;
      best = std::max(best, r.values.at(n.key) * std::pow(r.nu, n.nu_pow) * std::pow(std::abs(r.k), n.k_pow));
      any = true;
    }
    if (any) rep.constants[n.name] = best;
  }

  // nu fits at fixed k, k fits at fixed nu
  std::vector<int> ks;
  std::vector<double> nus;
  for (const SweepRow& r : rep.rows) {
    if (std::find(ks.begin(), ks.end(), r.k) == ks.end()) ks.push_back(r.k);
    if (std::find(nus.begin(), nus.end(), r.nu) == nus.end()) nus.push_back(r.nu);
  }
  auto eligible = [&](const SweepRow& r) { return !fit_small_only || r.nu * r.k * r.k <= 1.0; };
  for (const Quantity& q : qs) {
    for (int k : ks) {
      std::vector<double> x, y;
      for (const SweepRow& r : rep.rows)
        if (r.k == k && eligible(r)) {
          x.push_back(r.nu);
          y.push_back(r.values.at(q.key));
        }
      if (x.size() < 2) continue;
      const auto [mn, mx] = std::minmax_element(x.begin(), x.end());
      if (std::log10(*mx / *mn) < 2.0 - 1e-9) continue;
      rep.fits.push_back(fit_power(q.key + " vs nu (k=" + std::to_string(k) + ")", x, y, q.nu_target));
    }
    for (double nu : nus) {
      std::vector<double> x, y;
      for (const SweepRow& r : rep.rows)
        if (r.nu == nu && eligible(r)) {
          x.push_back(std::abs(r.k));
          y.push_back(r.values.at(q.key));
        }
      if (x.size() < 2) continue;
      const auto [mn, mx] = std::minmax_element(x.begin(), x.end());
      if (*mx / *mn < 4.0) continue;
      std::ostringstream nm;
      nm << q.key << " vs k (nu=" << nu << ")";
      rep.fits.push_back(fit_power(nm.str(), x, y, q.k_target));
    }
  }
}

}  // namespace

VerifyReport verify_navier_L2(const SweepSpec& spec) {
  spec.validate(false);
  VerifyReport rep;
  rep.name = "navier_L2";
  const std::vector<Quantity> qs = {
      {"w_l2", DataKind::l2, Output::w, false, -1.0 / 3.0, -2.0 / 3.0},
      {"u_l2", DataKind::l2, Output::u, false, -1.0 / 6.0, -4.0 / 3.0},
      {"w_prime_l2", DataKind::l2, Output::w_prime, false, -2.0 / 3.0, -1.0 / 3.0},
      {"w_l1", DataKind::l2, Output::w, true, -1.0 / 6.0, -5.0 / 6.0},
  };
  run_sweep(rep, spec, BoundaryCondition::navier_slip, qs,
            {{"C_w", "w_l2", 1.0 / 3.0, 2.0 / 3.0},
             {"C_u", "u_l2", 1.0 / 6.0, 4.0 / 3.0},
             {"C_w_prime", "w_prime_l2", 2.0 / 3.0, 1.0 / 3.0},
             {"C_w_l1", "w_l1", 1.0 / 6.0, 5.0 / 6.0}},
            true);
  if (rep.constants.count("C_w")) rep.constants["epsilon_max"] = 0.5 / rep.constants["C_w"];
  return rep;
}

VerifyReport verify_navier_Hm1(const SweepSpec& spec) {
  spec.validate(false);
  VerifyReport rep;
  rep.name = "navier_Hm1";
  run_sweep(rep, spec, BoundaryCondition::navier_slip,
            {{"u_l2", DataKind::hm1, Output::u, false, -0.5, -1.0},
             {"w_l2", DataKind::hm1, Output::w, false, -2.0 / 3.0, -1.0 / 3.0},
             {"w_prime_l2", DataKind::hm1, Output::w_prime, false, -1.0, 0.0}},
            {{"C_u", "u_l2", 0.5, 1.0}, {"C_w", "w_l2", 2.0 / 3.0, 1.0 / 3.0}, {"C_w_prime", "w_prime_l2", 1.0, 0.0}},
            true);
  return rep;
}

VerifyReport verify_nonslip(const SweepSpec& spec) {
  spec.validate(false);
  VerifyReport rep;
  rep.name = "nonslip";
  Normalizer big_w{"C_large_w_L2", "w_l2", 1.0, 2.0, false, true};
  Normalizer big_wh{"C_large_w_Hm1", "w_l2_hm1", 1.0, 1.0, false, true};
  Normalizer big_u{"C_large_u_Hm1", "u_l2_hm1", 1.0, 2.0, false, true};
  run_sweep(rep, spec, BoundaryCondition::non_slip,
            {{"w_l2", DataKind::l2, Output::w, false, -5.0 / 12.0, -5.0 / 6.0},
             {"w_l1", DataKind::l2, Output::w, true, -1.0 / 6.0, -5.0 / 6.0},
             {"w_l2_hm1", DataKind::hm1, Output::w, false, -0.75, -0.5},
             {"rho_half_hm1", DataKind::hm1, Output::rho_half, false, -2.0 / 3.0, -1.0 / 3.0},
             {"u_l2_hm1", DataKind::hm1, Output::u, false, -0.5, -1.0}},
            {{"C_small_w_L2", "w_l2", 5.0 / 12.0, 5.0 / 6.0},
             {"C_small_w_l1", "w_l1", 1.0 / 6.0, 5.0 / 6.0},
             {"C_small_w_Hm1", "w_l2_hm1", 0.75, 0.5},
             {"C_small_rho_half_Hm1", "rho_half_hm1", 2.0 / 3.0, 1.0 / 3.0},
             {"C_small_u_Hm1", "u_l2_hm1", 0.5, 1.0},
             big_w, big_wh, big_u},
            true);
  return rep;
}

// ---- coefficient bounds ------------------------------------------------------

namespace {

// sup over data of a|<q1,x>| + b|<q2,x>| = max over the relative phase of |a q1 + b e^{it} q2|
double dual_sum(const Vec& q1, const Vec& q2, const RVec& W, double a, double b) {
  auto norm_at = [&](double t) {
    const cplx e = std::polar(1.0, t);
    double s = 0.0;
    for (Eigen::Index j = 0; j < q1.size(); ++j) s += std::norm(a * q1(j) + b * e * q2(j)) / W(j);
    return std::sqrt(s);
  };
  const int m = 72;
  int best = 0;
  std::vector<double> v(m);
  for (int i = 0; i < m; ++i) {
    v[i] = norm_at(2.0 * kPi * i / m);
    if (v[i] > v[best]) best = i;
  }
  double arg = 0.0;
  const double h = 2.0 * kPi / m;
  return std::max(v[best], golden_max(norm_at, h * (best - 1), h * (best + 1), 1e-8, arg));
}

struct CBoundsAt {
  double s1 = 0.0, s2 = 0.0;  // weighted sums, unnormalized
};

CBoundsAt c_bounds_at(double nu, int k, double lambda, const ChebGrid& grid, const DiffOps& ops) {
  ResolventCase c;
  c.nu = nu;
  c.k = k;
  c.lambda = lambda;
  c.bc = BoundaryCondition::navier_slip;
  const ResolventMap map(c, grid, ops);
  const int n = grid.size();
  Vec g1(n), g2(n);
  const double s2k = std::sinh(2.0 * k);
  for (int j = 0; j < n; ++j) {
    const double y = grid.nodes(j), W = grid.quad_weights(j);
    g1(j) = -W * std::sinh(k * (y + 1.0)) / s2k;
    g2(j) = W * std::sinh(k * (1.0 - y)) / s2k;
  }
  const double a = 1.0 + std::abs(k * (lambda - 1.0)), b = 1.0 + std::abs(k * (lambda + 1.0));
  CBoundsAt out;
  {
    const RVec W = grid.quad_weights.segment(1, n - 2);
    out.s1 = dual_sum(map.transpose_apply(g1, DataKind::l2), map.transpose_apply(g2, DataKind::l2), W, a, b);
  }
  out.s2 = dual_sum(map.transpose_apply(g1, DataKind::hm1), map.transpose_apply(g2, DataKind::hm1),
                     grid.quad_weights, std::pow(a, 0.75), std::pow(b, 0.75));
  return out;
}

}  // namespace

VerifyReport verify_c_bounds(const CBoundsSpec& spec) {
  if (spec.nu_values.empty() || spec.k_values.empty()) throw std::invalid_argument("c-bounds: empty sweep");
  if (spec.lambda_points < 2 || spec.window_points < 1) throw std::invalid_argument("c-bounds: bad lambda grid");
  VerifyReport rep;
  rep.name = "c_bounds";
  double cc1[2] = {0, 0}, cc2[2] = {0, 0};
  for (double nu : spec.nu_values) {
    for (int k : spec.k_values) {
      std::vector<double> lam;
      for (int i = 0; i < spec.lambda_points; ++i) lam.push_back(-2.0 + 4.0 * i / (spec.lambda_points - 1));
      const double r = 1.0 / std::abs(k);
      for (double centre : {-1.0, 1.0})
        for (int i = 0; i < spec.window_points; ++i)
          lam.push_back(centre - r + (spec.window_points == 1 ? r : 2.0 * r * i / (spec.window_points - 1)));
      std::sort(lam.begin(), lam.end());
      SweepRow row;
      row.nu = nu;
      row.k = k;
      for (int level = 0; level < 2; ++level) {
        const int N = order_for(nu, k, spec.refine * (level + 1));
        if (level == 0) row.N = N;
        const ChebGrid grid = build_grid(N);
        const DiffOps ops = build_diff_ops(grid);
        std::vector<CBoundsAt> v(lam.size());
        for_each_index(spec.exec, int(lam.size()), [&](int i) { v[i] = c_bounds_at(nu, k, lam[i], grid, ops); });
        double m1 = 0.0, m2 = 0.0, l1 = 0.0, l2 = 0.0;
        for (size_t i = 0; i < lam.size(); ++i) {
          if (v[i].s1 > m1) m1 = v[i].s1, l1 = lam[i];
          if (v[i].s2 > m2) m2 = v[i].s2, l2 = lam[i];
        }
        const double n1 = m1 * std::pow(nu, 1.0 / 6.0) * std::pow(std::abs(k), 5.0 / 6.0);
        const double n2 = m2 * std::pow(nu, 0.5) * std::pow(std::abs(k), 0.5);
        const std::string suffix = level == 0 ? "" : "_refined";
        row.values["C_c1" + suffix] = n1;
        row.values["C_c2" + suffix] = n2;
        if (level == 0) {
          row.values["C_c1_lambda"] = l1;
          row.values["C_c2_lambda"] = l2;
        }
        cc1[level] = std::max(cc1[level], n1);
        cc2[level] = std::max(cc2[level], n2);
      }
      rep.rows.push_back(row);
    }
  }
  rep.constants["C_c1"] = cc1[0];
  rep.constants["C_c2"] = cc2[0];
  rep.constants["C_c1_refined"] = cc1[1];
  rep.constants["C_c2_refined"] = cc2[1];
  rep.constants["C_c1_drift"] = std::abs(cc1[1] - cc1[0]) / cc1[0];
  rep.constants["C_c2_drift"] = std::abs(cc2[1] - cc2[0]) / cc2[0];
  if (rep.constants["C_c1_drift"] >= 0.01) rep.flags.push_back("C_c1 changes by >= 1% under N-doubling");
  if (rep.constants["C_c2_drift"] >= 0.01) rep.flags.push_back("C_c2 changes by >= 1% under N-doubling");
  return rep;
}

// ---- w1, w2 bounds ----------------------------------------------------------

VerifyReport verify_w12_bounds(const W12Spec& spec) {
  if (spec.nu_values.empty() || spec.k_values.empty() || spec.lambda_values.empty())
    throw std::invalid_argument("w12: empty sweep");
  VerifyReport rep;
  rep.name = "w12_bounds";
  struct Case {
    double nu;
    int k;
    double lambda;
  };
  std::vector<Case> cases;
  for (double nu : spec.nu_values)
    for (int k : spec.k_values)
      for (double l : spec.lambda_values) cases.push_back({nu, k, l});
  std::vector<SweepRow> rows(cases.size());

  for_each_index(spec.exec, int(cases.size()), [&](int i) {
    const Case& cs = cases[i];
    ResolventCase c;
    c.nu = cs.nu;
    c.k = cs.k;
    c.lambda = cs.lambda;
    c.bc = BoundaryCondition::non_slip;
    if (!airy_regime(c)) throw std::invalid_argument("w12: case outside the L >= 6|k| / L >= |k| >= k0 regime");
    SweepRow& row = rows[i];
    row.nu = cs.nu;
    row.k = cs.k;
    row.values["lambda"] = cs.lambda;
    const double ak = std::abs(cs.k), L = c.L();
    const double a1 = 1.0 + ak * std::abs(cs.lambda - 1.0), a2 = 1.0 + ak * std::abs(cs.lambda + 1.0);
    WeightParams wp;
    wp.L = L;
    const auto br = rho_breaks(L);
    auto rho = [wp](double y) { return weight_at(WeightKind::rho_k, wp, y); };
    for (int level = 0; level < 2; ++level) {
      const int N = order_for(cs.nu, cs.k, spec.refine * (level + 1));
      if (level == 0) row.N = N;
      const ChebGrid grid = build_grid(N);
      const DiffOps ops = build_diff_ops(grid);
      const HomogeneousPair p = homogeneous_bvp(c, grid, ops);
      const std::string sfx = level == 0 ? "" : "_refined";
      double l1 = 0.0, inf1 = 0.0, inf2 = 0.0;
      for (int j = 0; j < grid.size(); ++j) {
        l1 += grid.quad_weights(j) * (std::abs(p.w1(j)) + std::abs(p.w2(j)));
        inf1 = std::max(inf1, std::abs(p.w1(j)));
        inf2 = std::max(inf2, std::abs(p.w2(j)));
      }
      const double norm_inf = std::sqrt(cs.nu);
      row.values["linf" + sfx] = std::max(inf1 * norm_inf / std::sqrt(a1), inf2 * norm_inf / std::sqrt(a2));
      row.values["l1" + sfx] = l1;
      row.values["rho_half" + sfx] =
          (weighted_l2(grid, p.w1, rho, br) + weighted_l2(grid, p.w2, rho, br)) / std::sqrt(L);
      auto inv = [&](double y) { return 1.0 / std::sqrt(rho(y)); };
      const double nq = std::pow(cs.nu, 7.0 / 24.0) * std::pow(ak, 1.0 / 12.0);
      row.values["rho_neg_quarter" + sfx] = std::max(weighted_l2(grid, p.w1, inv, br) * nq / std::pow(a1, 3.0 / 8.0),
                                                     weighted_l2(grid, p.w2, inv, br) * nq / std::pow(a2, 3.0 / 8.0));
      if (level == 0) {
        const HomogeneousPair q = homogeneous_airy(c, grid, ops, Exec::serial);
        const double e1 = l2_norm(grid, Vec(q.w1 - p.w1)) / l2_norm(grid, p.w1);
        const double e2 = l2_norm(grid, Vec(q.w2 - p.w2)) / l2_norm(grid, p.w2);
        row.values["airy_bvp_rel"] = std::max(e1, e2);
        // w2(y; lambda) = -conj(w1(-y; -lambda))
        ResolventCase m = c;
        m.lambda = -cs.lambda;
        const HomogeneousPair pm = homogeneous_bvp(m, grid, ops);
        Vec refl = pm.w1.reverse().conjugate();
        row.values["mirror_rel"] = l2_norm(grid, Vec(p.w2 + refl)) / l2_norm(grid, p.w2);
      }
    }
  });
  rep.rows = rows;
  for (const char* key : {"linf", "l1", "rho_half", "rho_neg_quarter"}) {
    double a = 0.0, b = 0.0;
    for (const SweepRow& r : rep.rows) {
      a = std::max(a, r.values.at(key));
      b = std::max(b, r.values.at(std::string(key) + "_refined"));
    }
    const std::string k(key);
    rep.constants["C_" + k] = a;
    rep.constants["C_" + k + "_refined"] = b;
    rep.constants["C_" + k + "_drift"] = std::abs(b - a) / a;
    if (std::abs(b - a) >= 0.01 * a) rep.flags.push_back("C_" + k + " changes by >= 1% under N-doubling");
  }
  double airy = 0.0, mirror = 0.0;
  for (const SweepRow& r : rep.rows) {
    airy = std::max(airy, r.values.at("airy_bvp_rel"));
    mirror = std::max(mirror, r.values.at("mirror_rel"));
  }
  rep.constants["airy_bvp_rel"] = airy;
  rep.constants["mirror_rel"] = mirror;
  if (airy > 1e-6) rep.flags.push_back("Airy and BVP homogeneous solutions differ by more than 1e-6");
  if (mirror > 1e-8) rep.flags.push_back("mirror identity violated");
  return rep;
}

// ---- spectra ---------------------------------------------------------------

Mat reduced_generator(const ResolventCase& c, const ChebGrid& grid, const DiffOps& ops) {
  ResolventCase g = c;
  g.lambda = 0.0;
  g.epsilon = 0.0;
  g.validate();
  const Mat A = vorticity_operator(g, grid, ops);
  const int N = grid.order;
  const int m = N - 1;
  Mat Aii = A.block(1, 1, m, m);
  if (c.bc == BoundaryCondition::navier_slip) return Aii;
  Mat M(2, N + 1);
  const double ak = std::abs(c.k);
  for (int j = 0; j <= N; ++j) {
    const double y = grid.nodes(j), wq = grid.quad_weights(j);
    M(0, j) = wq * std::exp(c.k * y - ak);
    M(1, j) = wq * std::exp(-c.k * y - ak);
  }
  Mat Mbb(2, 2), Mbi(2, m), Aib(m, 2);
  Mbb << M(0, 0), M(0, N), M(1, 0), M(1, N);
  Mbi.row(0) = M.row(0).segment(1, m);
  Mbi.row(1) = M.row(1).segment(1, m);
  Aib.col(0) = A.col(0).segment(1, m);
  Aib.col(1) = A.col(N).segment(1, m);
  return Aii - Aib * Mbb.partialPivLu().solve(Mbi);
}

SpectralGapReport spectrum(const ResolventCase& c, const ChebGrid& grid, const DiffOps& ops, bool with_pseudospectra,
                           Exec exec) {
  SpectralGapReport r;
  const Mat G = reduced_generator(c, grid, ops);
  Eigen::ComplexEigenSolver<Mat> es(G, false);
  if (es.info() != Eigen::Success) {
    std::ostringstream os;
    os << "spectrum: eigensolver did not converge for nu=" << c.nu << ", k=" << c.k;
    throw std::runtime_error(os.str());
  }
  const Vec mu = es.eigenvalues();
  r.eigenvalues.resize(mu.size());
  for (Eigen::Index i = 0; i < mu.size(); ++i) r.eigenvalues[i] = -mu(i);
  std::sort(r.eigenvalues.begin(), r.eigenvalues.end(), [](cplx a, cplx b) {
    if (a.real() != b.real()) return a.real() > b.real();
    return a.imag() < b.imag();
  });
  r.gap = -r.eigenvalues.front().real();
  const double lam_gap = -r.eigenvalues.front().imag() / c.k;

  const double scale = std::cbrt(c.nu * double(c.k) * c.k);
  // sup over lambda of the L^2 -> L^2 resolvent norm at decay shift a
  auto resolvent_sup = [&](double a) {
    ResolventCase base = c;
    base.epsilon = a / (std::cbrt(c.nu) * std::pow(std::abs(c.k), 2.0 / 3.0));
    auto at = [&](double lam) {
      ResolventCase cc = base;
      cc.lambda = lam;
      return ResolventMap(cc, grid, ops).operator_norm(DataKind::l2, Output::w);
    };
    const LambdaSup s = sup_over_lambda(at, -1.5, 1.5, 41, 1e-3, exec);
    return std::max(s.value, at(lam_gap));
  };
  if (c.bc == BoundaryCondition::navier_slip) r.psi = 1.0 / resolvent_sup(0.0);
  r.pseudo_level = 1e-3 * scale;
  if (with_pseudospectra) {
    double lo = 0.0, hi = r.gap;
    if (1.0 / resolvent_sup(0.0) <= r.pseudo_level) {
      r.pseudo_abscissa = 0.0;
    } else {
      for (int it = 0; it < 40 && hi - lo > 1e-6 * r.gap; ++it) {
        const double mid = 0.5 * (lo + hi);
        if (1.0 / resolvent_sup(mid) <= r.pseudo_level)
          hi = mid;
        else
          lo = mid;
      }
      r.pseudo_abscissa = 0.5 * (lo + hi);
    }
  }
  return r;
}

// ---- weak pairing ----------------------------------------------------------

double pairing_majorant(const ResolventCase& c, const ChebGrid& grid, const DiffOps& ops, const Vec& f, int j) {
  (void)ops;
  if (j != 1 && j != -1) throw std::invalid_argument("pairing: j must be +1 or -1");
  if (f.size() != grid.size()) throw std::invalid_argument("pairing: length mismatch");
  const int N = grid.order;
  const cplx f_j = j == 1 ? f(0) : f(N);
  const cplx f_other = j == 1 ? f(N) : f(0);
  const double fmax = f.cwiseAbs().maxCoeff();
  if (std::abs(f_other) > 1e-8 * std::max(fmax, 1e-300)) throw std::invalid_argument("pairing: f(-j) must vanish");
  if (fmax == 0.0) return 0.0;

  const double delta = c.delta(), lam = c.lambda;
  const int M = 20001;
  RVec y(M);
  for (int i = 0; i < M; ++i) y(i) = -1.0 + 2.0 * i / (M - 1);
  const Vec fy = interpolate(grid, f, y);
  WeightParams wp;
  wp.lambda = lam;
  wp.delta = delta;
  Vec g(M);
  double layer = 0.0;
  for (int i = 0; i < M; ++i) {
    g(i) = fy(i) * weight_at(WeightKind::cutoff_chi, wp, y(i));
    if (std::abs(y(i) - lam) < delta) layer = std::max(layer, std::abs(fy(i)));
  }
  const double h = 2.0 / (M - 1);
  double g2 = 0.0, dg2 = 0.0;
  for (int i = 0; i < M; ++i) {
    const double tw = (i == 0 || i == M - 1) ? 0.5 * h : h;
    const cplx d = i == 0 ? (g(1) - g(0)) / h : i == M - 1 ? (g(M - 1) - g(M - 2)) / h : (g(i + 1) - g(i - 1)) / (2 * h);
    g2 += tw * std::norm(g(i));
    dg2 += tw * std::norm(d);
  }
  const double ak = std::abs(c.k);
  return (std::pow(delta, -1.5) * layer + std::abs(f_j) * std::pow(std::abs(j - lam) + delta, -0.75) * std::pow(delta, -0.75) +
          std::sqrt(g2 + dg2) + std::sqrt(g2) / delta) /
         ak;
}

WeakPairing weak_resolvent_pairing(const ResolventCase& c, const ChebGrid& grid, const DiffOps& ops, const Vec& f,
                                   const ResolventSolution& s, double f2_norm, int j) {
  if (c.bc != BoundaryCondition::navier_slip) throw std::invalid_argument("pairing: needs a Navier-slip solution");
  WeakPairing p;
  p.pairing = inner(grid, s.w, f);
  p.majorant = f2_norm * pairing_majorant(c, grid, ops, f, j);
  p.ratio = p.majorant > 0.0 ? std::abs(p.pairing) / p.majorant : 0.0;
  return p;
}

}  // namespace couette
