#include "couette/evolution.hpp"

#include <algorithm>
#include <cmath>
#include <optional>
#include <sstream>
#include <stdexcept>

namespace couette {

double EvolutionCase::dt_rule(double nu, int k) {
  const double ak = std::abs(k);
  return 0.1 * std::min(1.0 / ak, 1.0 / (std::cbrt(nu) * std::pow(ak, 2.0 / 3.0)));
}

void EvolutionCase::validate(const ChebGrid& grid) const {
  if (!(nu > 0.0)) throw std::invalid_argument("nu must be positive");
  if (k == 0) throw std::invalid_argument("|k| must be >= 1");
  if (omega0.size() != grid.size()) throw std::invalid_argument("evolution: omega0 length does not match the grid");
  if (!(dt >= 0.0)) throw std::invalid_argument("dt must be positive");
  if (dt > dt_rule(nu, k) * (1.0 + 1e-12))
    throw std::invalid_argument("dt exceeds the accuracy rule 0.1 min(1/|k|, nu^{-1/3}|k|^{-2/3})");
  if (!(t_end >= 0.0)) throw std::invalid_argument("t_end must be nonnegative");
  if (t_end == 0.0 && (forcing || !extend_until_decayed))
    throw std::invalid_argument("t_end must be positive for forced or fixed-horizon runs");
  if (bc == BoundaryCondition::non_slip) {
    double l1 = 0.0;
    cplx mp = 0.0, mm = 0.0;
    const double ak = std::abs(k);
    for (int j = 0; j < grid.size(); ++j) {
      const double y = grid.nodes(j), W = grid.quad_weights(j);
      l1 += W * std::abs(omega0(j));
      mp += W * std::exp(k * y - ak) * omega0(j);
      mm += W * std::exp(-k * y - ak) * omega0(j);
    }
    if (std::max(std::abs(mp), std::abs(mm)) > 1e-8 * l1)
      throw std::invalid_argument("evolution: non-slip data must satisfy <omega0, e^{+-ky}> = 0");
  }
}

Stepper::Stepper(int k, double nu, BoundaryCondition bc, double dt, const ChebGrid& grid, const DiffOps& ops,
                 double theta)
    : k_(k), nu_(nu), dt_(dt), theta_(theta), bc_(bc), grid_(grid) {
  if (!(dt > 0.0)) throw std::invalid_argument("dt must be positive");
  ResolventCase c;
  c.nu = nu;
  c.k = k;
  c.bc = bc;
  L_ = vorticity_operator(c, grid, ops);
  const int n = grid.size(), N = grid.order;
  const Mat I = Mat::Identity(n, n);
  explicit_ = I - (1.0 - theta) * dt * L_;
  Mat A = I + theta * dt * L_;
  A.row(0).setZero();
  A.row(N).setZero();
  A(0, 0) = 1.0;
  A(N, N) = 1.0;
  lu_.compute(A);

  moment_rows_.resize(2, n);
  const double ak = std::abs(k);
  for (int j = 0; j < n; ++j) {
    const double y = grid.nodes(j), W = grid.quad_weights(j);
    moment_rows_(0, j) = W * std::exp(k * y - ak);
    moment_rows_(1, j) = W * std::exp(-k * y - ak);
  }
  if (bc == BoundaryCondition::non_slip) {
    Vec e0 = Vec::Zero(n), eN = Vec::Zero(n);
    e0(0) = 1.0;
    eN(N) = 1.0;
    h1_ = lu_.solve(e0);
    h2_ = lu_.solve(eN);
    influence_.col(0) = moment_rows_ * h1_;
    influence_.col(1) = moment_rows_ * h2_;
    const double scale = influence_.cwiseAbs().maxCoeff();
    if (!(std::abs(influence_.determinant()) > 1e-14 * scale * scale)) {
      std::ostringstream os;
      os << "Stepper: singular influence matrix for nu=" << nu << ", k=" << k << ", dt=" << dt;
      throw std::runtime_error(os.str());
    }
  }
}

std::array<cplx, 2> Stepper::moments(const Vec& w) const {
  const Eigen::Vector2cd m = moment_rows_ * w;
  return {m(0), m(1)};
}

Vec Stepper::advance(const Vec& w, const Vec& rhs_extra, std::array<cplx, 2> targets) const {
  Vec rhs = explicit_ * w;
  if (rhs_extra.size() == rhs.size()) rhs += rhs_extra;
  rhs(0) = 0.0;
  rhs(rhs.size() - 1) = 0.0;
  Vec p = lu_.solve(rhs);
  if (bc_ == BoundaryCondition::navier_slip) return p;
  const auto m = moments(p);
  Eigen::Vector2cd r(targets[0] - m[0], targets[1] - m[1]);
  const Eigen::Vector2cd ab = influence_.partialPivLu().solve(r);
  return p + ab(0) * h1_ + ab(1) * h2_;
}

EvolutionState Stepper::step(const EvolutionState& s) const { return {s.t + dt_, advance(s.omega)}; }

EvolutionState step_navier(const EvolutionState& s, const Stepper& st) {
  if (st.bc() != BoundaryCondition::navier_slip) throw std::invalid_argument("step_navier: stepper is not Navier-slip");
  return st.step(s);
}

EvolutionState step_nonslip(const EvolutionState& s, const Stepper& st) {
  if (st.bc() != BoundaryCondition::non_slip) throw std::invalid_argument("step_nonslip: stepper is not non-slip");
  return st.step(s);
}

Vec vorticity_from_stream(const Vec& phi, int k, const DiffOps& ops) {
  return ops.d2.cast<cplx>() * phi - double(k) * k * phi;
}

namespace {

// Running suprema and trapezoid integrals of the space-time norms.
class Accumulator {
 public:
  Accumulator(double nu, int k, const ChebGrid& grid, const DiffOps& ops)
      : nu_(nu), k_(k), grid_(grid), ops_(ops), stream_(k, ops) {
    WeightParams wp;
    wp.L = std::cbrt(std::abs(k) / nu);
    rho_ = weight_values(WeightKind::rho_k, wp, grid).values;
  }

  void add(double t, const Vec& w, int sample_every, bool sample_always = false) {
    const int n = grid_.size();
    const RVec& W = grid_.quad_weights;
    double w2 = 0, bw2 = 0, rw2 = 0, l1 = 0;
    for (int j = 0; j < n; ++j) {
      const double a = std::norm(w(j));
      w2 += W(j) * a;
      bw2 += W(j) * (1.0 - std::abs(grid_.nodes(j))) * a;
      rw2 += W(j) * rho_(j) * a;
      l1 += W(j) * std::abs(w(j));
    }
    const Vec phi = stream_.solve(w);
    const Vec u1 = ops_.d1.cast<cplx>() * phi;
    double u2 = 0, umax = 0;
    for (int j = 0; j < n; ++j) {
      const double a = std::norm(u1(j)) + double(k_) * k_ * std::norm(phi(j));
      u2 += W(j) * a;
      umax = std::max(umax, std::sqrt(a));
    }
    L_.u_linf_linf = std::max(L_.u_linf_linf, umax);
    L_.w_linf_l2 = std::max(L_.w_linf_l2, std::sqrt(w2));
    L_.boundary_w_linf_l2 = std::max(L_.boundary_w_linf_l2, std::sqrt(bw2));
    L_.rho_w_linf_l2 = std::max(L_.rho_w_linf_l2, std::sqrt(rw2));
    if (count_ > 0) {
      const double h = 0.5 * (t - t_prev_);
      L_.u_l2l2 += h * (u2 + u2_prev_);
      L_.w_l2l2 += h * (w2 + w2_prev_);
      L_.rho_w_l2l2 += h * (rw2 + rw2_prev_);
    }
    if (l1 > 0.0) {
      const Eigen::Vector2cd m = moments_ * w;
      L_.max_moment = std::max(L_.max_moment, m.cwiseAbs().maxCoeff() / l1);
    }
    if (sample_always || count_ % sample_every == 0) L_.decay_samples.emplace_back(t, std::sqrt(w2));
    t_prev_ = t;
    u2_prev_ = u2;
    w2_prev_ = w2;
    rw2_prev_ = rw2;
    L_.t_final = t;
    L_.steps = count_;
    ++count_;
  }

  void add_forcing(double h, const Vec& f1a, const Vec& f2a, const Vec& f1b, const Vec& f2b) {
    auto sq = [&](const Vec& v) { return v.size() ? std::pow(l2_norm(grid_, v), 2) : 0.0; };
    L_.f1_l2l2 += 0.5 * h * (sq(f1a) + sq(f1b));
    L_.f2_l2l2 += 0.5 * h * (sq(f2a) + sq(f2b));
  }

  void set_moment_rows(const Eigen::Matrix<cplx, 2, Eigen::Dynamic>& m) { moments_ = m; }

  SpaceTimeLedger finish(const Vec& w0) {
    const double k = std::abs(k_);
    const double a = l2_norm(grid_, w0), b = l2_norm(grid_, Vec(ops_.d1.cast<cplx>() * w0));
    L_.data_functional = a * a + b * b / (k * k) + k / std::sqrt(nu_) * L_.f1_l2l2 + L_.f2_l2l2 / nu_;
    L_.lhs = k * L_.u_linf_linf * L_.u_linf_linf + k * k * L_.u_l2l2 + std::sqrt(nu_ * k * k) * L_.w_l2l2 +
             L_.boundary_w_linf_l2 * L_.boundary_w_linf_l2;
    L_.ratio = L_.data_functional > 0.0 ? L_.lhs / L_.data_functional : 0.0;
    return L_;
  }

 private:
  double nu_;
  int k_;
  const ChebGrid& grid_;
  const DiffOps& ops_;
  StreamSolver stream_;
  RVec rho_;
  Eigen::Matrix<cplx, 2, Eigen::Dynamic> moments_;
  SpaceTimeLedger L_;
  int count_ = 0;
  double t_prev_ = 0, u2_prev_ = 0, w2_prev_ = 0, rw2_prev_ = 0;
};

Eigen::Matrix<cplx, 2, Eigen::Dynamic> moment_matrix(int k, const ChebGrid& grid) {
  Eigen::Matrix<cplx, 2, Eigen::Dynamic> m(2, grid.size());
  const double ak = std::abs(k);
  for (int j = 0; j < grid.size(); ++j) {
    const double y = grid.nodes(j), W = grid.quad_weights(j);
    m(0, j) = W * std::exp(k * y - ak);
    m(1, j) = W * std::exp(-k * y - ak);
  }
  return m;
}

constexpr long kMaxSteps = 5'000'000;

}  // namespace

SpaceTimeLedger run(const EvolutionCase& c, const ChebGrid& grid, const DiffOps& ops, const RunOptions& opt) {
  c.validate(grid);
  if (opt.sample_every < 1) throw std::invalid_argument("run: sample_every must be >= 1");
  const double dt = c.step_size();
  const Stepper st(c.k, c.nu, c.bc, dt, grid, ops);
  const int sub = c.startup_substeps;
  std::optional<Stepper> be;
  if (sub > 0) be.emplace(c.k, c.nu, c.bc, dt / sub, grid, ops, 1.0);
  Accumulator acc(c.nu, c.k, grid, ops);
  acc.set_moment_rows(moment_matrix(c.k, grid));
  const Mat D1 = ops.d1.cast<cplx>();
  const double w0 = l2_norm(grid, c.omega0);

  EvolutionState s{0.0, c.omega0};
  acc.add(0.0, s.omega, opt.sample_every, true);
  if (opt.observer) opt.observer(s);
  const long fixed_steps = c.t_end > 0.0 ? long(std::ceil(c.t_end / dt - 1e-9)) : 0;
  const bool decay_rule = !c.forcing && c.extend_until_decayed;

  std::pair<Vec, Vec> f_now;
  if (c.forcing) f_now = c.forcing(0.0);
  auto F_of = [&](const std::pair<Vec, Vec>& f) -> Vec {
    return -kI * double(c.k) * f.first - D1 * f.second;
  };
  for (long n = 0;; ++n) {
    const bool horizon_done = n >= fixed_steps;
    const bool decayed = l2_norm(grid, s.omega) <= 1e-4 * w0;
    if (horizon_done && (!decay_rule || decayed)) break;
    if (n >= kMaxSteps) {
      std::ostringstream os;
      os << "run: no decay to 1e-4 |w0| within " << kMaxSteps << " steps (nu=" << c.nu << ", k=" << c.k << ")";
      throw std::runtime_error(os.str());
    }
    Vec extra;
    std::pair<Vec, Vec> f_next;
    if (c.forcing) f_next = c.forcing(s.t + dt);
    if (n == 0 && be) {
      const double h = dt / sub;
      Vec w = s.omega;
      for (int q = 1; q <= sub; ++q) {
        Vec fq;
        if (c.forcing) fq = h * F_of(q == sub ? f_next : c.forcing(s.t + q * h));
        w = be->advance(w, fq);
      }
      s = {s.t + dt, std::move(w)};
    } else {
      if (c.forcing) extra = 0.5 * dt * (F_of(f_now) + F_of(f_next));
      s = {s.t + dt, st.advance(s.omega, extra)};
    }
    if (c.forcing) {
      acc.add_forcing(dt, f_now.first, f_now.second, f_next.first, f_next.second);
      f_now = f_next;
    }
    if (!s.omega.allFinite()) throw std::runtime_error("run: non-finite state");
    acc.add(s.t, s.omega, opt.sample_every);
    if (opt.observer) opt.observer(s);
  }
  return acc.finish(c.omega0);
}

DecayFit fit_decay(const std::vector<std::pair<double, double>>& samples, double nu, int k) {
  DecayFit f;
  const double t_start = 0.4 / std::cbrt(nu * double(k) * k);
  size_t first = 0;
  while (first < samples.size() && samples[first].first < t_start) ++first;
  // latest admissible window: the asymptotic rate, past any transient bursts
  for (size_t i0 = samples.size(); i0-- > first;) {
    const double v0 = samples[i0].second;
    if (!(v0 > 0.0)) continue;
    size_t i1 = i0;
    while (i1 < samples.size() && samples[i1].second > v0 * std::exp(-2.0)) ++i1;
    if (i1 >= samples.size() || i1 < i0 + 2) continue;
    double sx = 0, sy = 0, sxx = 0, sxy = 0, syy = 0;
    const double n = double(i1 - i0 + 1);
    for (size_t i = i0; i <= i1; ++i) {
      const double x = samples[i].first, y = std::log(samples[i].second);
      sx += x;
      sy += y;
      sxx += x * x;
      sxy += x * y;
      syy += y * y;
    }
    const double vx = sxx - sx * sx / n, vy = syy - sy * sy / n, cxy = sxy - sx * sy / n;
    const double slope = cxy / vx;
    // log|w| within 10% of linear: every quarter of the window decays at the fitted rate +- 10%
    bool linear = true;
    const double ta = samples[i0].first, tb = samples[i1].first;
    size_t j = i0;
    for (int q = 1; q <= 4 && linear; ++q) {
      const size_t ja = j;
      const double tq = ta + (tb - ta) * q / 4.0;
      while (j < i1 && samples[j + 1].first <= tq + 1e-12 * tb) ++j;
      if (j == ja) continue;
      const double r = -std::log(samples[j].second / samples[ja].second) / (samples[j].first - samples[ja].first);
      linear = std::abs(r + slope) <= 0.1 * std::abs(slope);
    }
    if (!linear) continue;
    f.rate = -slope;
    f.r2 = vy > 0.0 ? cxy * cxy / (vx * vy) : 1.0;
    f.t0 = samples[i0].first;
    f.t1 = samples[i1].first;
    f.ok = true;
    return f;
  }
  return f;
}

SplittingReport homogeneous_splitting(const EvolutionCase& c, const ChebGrid& grid, const DiffOps& ops) {
  if (c.bc != BoundaryCondition::non_slip) throw std::invalid_argument("splitting: needs non-slip");
  if (c.forcing) throw std::invalid_argument("splitting: needs an unforced case");
  SplittingReport rep;
  std::vector<Vec> direct;
  RunOptions opt;
  opt.observer = [&](const EvolutionState& s) { direct.push_back(s.omega); };
  rep.direct = run(c, grid, ops, opt);

  const double dt = c.step_size();
  const double a = std::cbrt(c.nu * double(c.k) * c.k);
  const int n = grid.size();
  const Stepper st(c.k, c.nu, c.bc, dt, grid, ops);
  const int sub = c.startup_substeps;
  std::optional<Stepper> be;
  if (sub > 0) be.emplace(c.k, c.nu, c.bc, dt / sub, grid, ops, 1.0);
  const Mat& L = st.generator();
  const Mat D2 = ops.d2.cast<cplx>();
  auto part1 = [&](double t) {
    Vec v(n);
    for (int j = 0; j < n; ++j) v(j) = std::exp(cplx(-a * t, -t * c.k * grid.nodes(j))) * c.omega0(j);
    return v;
  };
  auto formula = [&](const Vec& w1) -> Vec { return -(c.nu * double(c.k) * c.k - a) * w1 + c.nu * (D2 * w1); };

  Accumulator acc1(c.nu, c.k, grid, ops), acc2(c.nu, c.k, grid, ops), acc3(c.nu, c.k, grid, ops);
  for (Accumulator* ac : {&acc1, &acc2, &acc3}) ac->set_moment_rows(moment_matrix(c.k, grid));
  const double w0n = l2_norm(grid, c.omega0);
  Vec w1 = c.omega0, w2 = Vec::Zero(n), w3 = Vec::Zero(n);
  acc1.add(0.0, w1, 1, true);
  acc2.add(0.0, w2, 1, true);
  acc3.add(0.0, w3, 1, true);
  double err = 0.0, scale = 0.0, cons = 0.0, hmax = 0.0;
  for (size_t step = 0; step < direct.size(); ++step) {
    const double t = dt * double(step);
    if (step == 1 && be) {
      const double h = dt / sub;
      for (int q = 1; q <= sub; ++q) {
        const Vec w1n = part1(q * h);
        const Vec w1p = part1((q - 1) * h);
        w2 = be->advance(w2, Vec(-((w1n - w1p) + h * (L * w1n))));
        const auto m1 = st.moments(w1n);
        w3 = be->advance(w3, Vec(), {-m1[0], -m1[1]});
      }
      w1 = part1(t);
      acc1.add(t, w1, 1);
      acc2.add(t, w2, 1);
      acc3.add(t, w3, 1);
    } else if (step > 0) {
      const Vec w1n = part1(t);
      const Vec w1p = part1(t - dt);
      // scheme-consistent step average of -(d_t + L_k) w1
      const Vec extra = -((w1n - w1p) + 0.5 * dt * (L * (w1n + w1p)));
      const Vec trap = 0.5 * dt * (formula(w1n) + formula(w1p));
      cons = std::max(cons, (extra - trap).segment(1, n - 2).cwiseAbs().maxCoeff());
      hmax = std::max(hmax, trap.segment(1, n - 2).cwiseAbs().maxCoeff());
      w2 = st.advance(w2, extra);
      const auto m1 = st.moments(w1n);
      w3 = st.advance(w3, Vec(), {-m1[0], -m1[1]});
      w1 = w1n;
      acc1.add(t, w1, 1);
      acc2.add(t, w2, 1);
      acc3.add(t, w3, 1);
    }
    err = std::max(err, l2_norm(grid, Vec(w1 + w2 + w3 - direct[step])));
    scale = std::max(scale, l2_norm(grid, direct[step]));
    if (w0n > 0.0)
      rep.part1_norm_error =
          std::max(rep.part1_norm_error, std::abs(l2_norm(grid, w1) - std::exp(-a * t) * w0n) / w0n);
  }
  rep.sum_error = scale > 0.0 ? err / scale : err;
  rep.forcing_consistency = hmax > 0.0 ? cons / hmax : cons;
  rep.part1 = acc1.finish(c.omega0);
  rep.part2 = acc2.finish(Vec::Zero(n));
  rep.part3 = acc3.finish(Vec::Zero(n));
  return rep;
}

}  // namespace couette
