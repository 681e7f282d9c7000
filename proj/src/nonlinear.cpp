#include "couette/nonlinear.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <sstream>
#include <stdexcept>

#include "couette/harness.hpp"

namespace couette {

Vec PerturbationState::mode(int k) const {
  if (k == 0 || std::abs(k) > k_max()) throw std::out_of_range("PerturbationState::mode: index out of range");
  return k > 0 ? modes[k - 1] : Vec(modes[-k - 1].conjugate());
}

int NonlinearCase::order() const { return N > 0 ? N : grid_order_for(nu, k_max); }
double NonlinearCase::step_size() const { return dt > 0.0 ? dt : EvolutionCase::dt_rule(nu, k_max); }
double NonlinearCase::horizon() const { return t_end > 0.0 ? t_end : 20.0 / std::cbrt(nu); }

void NonlinearCase::validate() const {
  if (!(nu > 0.0)) throw std::invalid_argument("nu must be positive");
  if (k_max < 1) throw std::invalid_argument("k_max must be >= 1");
  if (N != 0 && (N < 16 || N > kMaxOrder)) throw std::invalid_argument("N must be 0 or in [16, 1024]");
  if (!(dt >= 0.0)) throw std::invalid_argument("dt must be positive");
  if (dt > EvolutionCase::dt_rule(nu, k_max) * (1.0 + 1e-12))
    throw std::invalid_argument("dt exceeds the accuracy rule at k_max");
  if (!(t_end >= 0.0)) throw std::invalid_argument("t_end must be nonnegative");
  if (startup_substeps < 0) throw std::invalid_argument("startup_substeps must be >= 0");
  if (!(guard > 0.0)) throw std::invalid_argument("guard must be positive");
}

const char* to_string(Verdict v) {
  switch (v) {
    case Verdict::stable: return "stable";
    case Verdict::growing: return "growing";
    case Verdict::inconclusive: return "inconclusive";
  }
  return "?";
}

// ---------------------------------------------------------------------------

EnergyAccumulator::EnergyAccumulator(double nu, int k_max, const ChebGrid& grid)
    : nu_(nu),
      grid_(grid),
      bw_sup_(k_max, 0.0),
      u_sup_(k_max, 0.0),
      u_int_(k_max, 0.0),
      w_int_(k_max, 0.0),
      u_prev_(k_max, 0.0),
      w_prev_(k_max, 0.0) {}

void EnergyAccumulator::add(double t, const PerturbationState& s, const std::vector<ModeVelocity>& vel,
                            const DiffOps& ops) {
  const int K = int(bw_sup_.size());
  if (s.k_max() != K || int(vel.size()) != K) throw std::invalid_argument("EnergyAccumulator: mode count mismatch");
  const RVec& W = grid_.quad_weights;
  const RVec w0 = ops.d1 * s.mean_shear;
  mean_sup_ = std::max(mean_sup_, std::sqrt(W.dot(w0.cwiseAbs2())));
  const double h = count_ > 0 ? 0.5 * (t - t_prev_) : 0.0;
  for (int m = 0; m < K; ++m) {
    const Vec& w = s.modes[m];
    double bw = 0, u2 = 0, w2 = 0, umax = 0;
    for (int j = 0; j < grid_.size(); ++j) {
      const double a = std::norm(w(j));
      const double b = std::norm(vel[m].u1(j)) + std::norm(vel[m].u2(j));
      bw += W(j) * (1.0 - std::abs(grid_.nodes(j))) * a;
      w2 += W(j) * a;
      u2 += W(j) * b;
      umax = std::max(umax, std::sqrt(b));
    }
    bw_sup_[m] = std::max(bw_sup_[m], std::sqrt(bw));
    u_sup_[m] = std::max(u_sup_[m], umax);
    u_int_[m] += h * (u2 + u_prev_[m]);
    w_int_[m] += h * (w2 + w_prev_[m]);
    u_prev_[m] = u2;
    w_prev_[m] = w2;
  }
  t_prev_ = t;
  ++count_;
}

EnergyFunctional EnergyAccumulator::value() const {
  EnergyFunctional e;
  e.e0 = mean_sup_;
  e.total = e.e0;
  for (size_t m = 0; m < bw_sup_.size(); ++m) {
    const double k = double(m + 1);
    const double ek = bw_sup_[m] + k * std::sqrt(u_int_[m]) + std::sqrt(k) * u_sup_[m] +
                      std::sqrt(std::sqrt(nu_ * k * k)) * std::sqrt(w_int_[m]);
    e.ek.push_back(ek);
    e.total += 2.0 * ek;
  }
  return e;
}

// ---------------------------------------------------------------------------

struct NonlinearModel::Impl {
  std::vector<Stepper> cn, be;
  std::vector<StreamSolver> stream;
  std::optional<Stepper> mean_cn, mean_be;
  Mat D1;
};

NonlinearModel::NonlinearModel(const NonlinearCase& c) : c_(c) {
  c_.validate();
  grid_ = build_grid(c_.order());
  ops_ = build_diff_ops(grid_);
  dt_ = c_.step_size();
  impl_ = std::make_unique<Impl>();
  const int K = c_.k_max, S = c_.startup_substeps;
  for (int k = 1; k <= K; ++k) {
    impl_->cn.emplace_back(k, c_.nu, BoundaryCondition::non_slip, dt_, grid_, ops_);
    if (S > 0) impl_->be.emplace_back(k, c_.nu, BoundaryCondition::non_slip, dt_ / S, grid_, ops_, 1.0);
    impl_->stream.emplace_back(k, ops_);
  }
  impl_->mean_cn.emplace(0, c_.nu, BoundaryCondition::navier_slip, dt_, grid_, ops_);
  if (S > 0) impl_->mean_be.emplace(0, c_.nu, BoundaryCondition::navier_slip, dt_ / S, grid_, ops_, 1.0);
  impl_->D1 = ops_.d1.cast<cplx>();
}

NonlinearModel::~NonlinearModel() = default;

PerturbationState NonlinearModel::zero_state() const {
  PerturbationState s;
  s.modes.assign(c_.k_max, Vec::Zero(grid_.size()));
  s.mean_shear = RVec::Zero(grid_.size());
  return s;
}

PerturbationState NonlinearModel::initial_state(double amplitude) const {
  PerturbationState s = zero_state();
  const int n = grid_.size();
  Vec phi(n);
  // sin x = (e^{ix} - e^{-ix}) / 2i
  for (int j = 0; j < n; ++j) {
    const double y = grid_.nodes(j);
    phi(j) = std::pow(1.0 - y * y, 2) / (2.0 * kI);
  }
  s.modes[0] = vorticity_from_stream(phi, 1, ops_);
  const double h2 = h2_norm(s);
  s.modes[0] *= amplitude / h2;
  return s;
}

double NonlinearModel::h2_norm(const PerturbationState& s) const {
  const RVec& W = grid_.quad_weights;
  auto sq = [&](const Vec& v) { return W.dot(v.cwiseAbs2()); };
  const Mat& D1 = impl_->D1;
  double total = 0.0;
  {
    const Vec u = s.mean_shear.cast<cplx>();
    const Vec du = D1 * u;
    total += sq(u) + sq(du) + sq(Vec(D1 * du));
  }
  const std::vector<ModeVelocity> vel = velocity(s);
  for (int m = 0; m < s.k_max(); ++m) {
    const double k2 = double(m + 1) * (m + 1);
    double mode = 0.0;
    for (const Vec* u : {&vel[m].u1, &vel[m].u2}) {
      const Vec du = D1 * *u;
      const Vec ddu = D1 * du;
      // |a| + |b| <= 2 for derivatives d_x^a d_y^b
      mode += sq(*u) * (1.0 + k2 + k2 * k2) + sq(du) * (1.0 + k2) + sq(ddu);
    }
    total += 2.0 * mode;
  }
  return std::sqrt(2.0 * kPi * total);
}

std::vector<ModeVelocity> NonlinearModel::velocity(const PerturbationState& s) const {
  const int K = s.k_max();
  if (K != c_.k_max) throw std::invalid_argument("velocity: state has the wrong number of modes");
  std::vector<ModeVelocity> vel(K);
  for_each_index(c_.exec, std::size_t(K), [&](std::size_t m) {
    const int k = int(m) + 1;
    ModeVelocity& v = vel[m];
    v.phi = impl_->stream[m].solve(s.modes[m]);
    v.u1 = impl_->D1 * v.phi;
    v.u2 = (-kI * double(k)) * v.phi;
  });
  return vel;
}

NonlinearForcing NonlinearModel::nonlinear_rhs(const PerturbationState& s) const {
  return nonlinear_rhs(s, velocity(s));
}

NonlinearForcing NonlinearModel::nonlinear_rhs(const PerturbationState& s, const std::vector<ModeVelocity>& vel) const {
  const int K = c_.k_max, n = grid_.size();
  const Vec mean = s.mean_shear.cast<cplx>();
  const Vec w0 = impl_->D1 * mean;
  const Vec zero = Vec::Zero(n);
  auto u1 = [&](int l) -> Vec { return l == 0 ? mean : l > 0 ? vel[l - 1].u1 : Vec(vel[-l - 1].u1.conjugate()); };
  auto u2 = [&](int l) -> Vec { return l == 0 ? zero : l > 0 ? vel[l - 1].u2 : Vec(vel[-l - 1].u2.conjugate()); };
  auto w = [&](int l) -> Vec { return l == 0 ? w0 : l > 0 ? s.modes[l - 1] : Vec(s.modes[-l - 1].conjugate()); };

  NonlinearForcing f;
  f.f1.assign(K, zero);
  f.f2.assign(K, zero);
  auto convolve = [&](int k, Vec& a, Vec& b) {
    for (int l = std::max(-K, k - K); l <= std::min(K, k + K); ++l) {
      const Vec wl = w(k - l);
      a.array() += u1(l).array() * wl.array();
      if (l != 0) b.array() += u2(l).array() * wl.array();
    }
  };
  for_each_index(c_.exec, std::size_t(K), [&](std::size_t m) { convolve(int(m) + 1, f.f1[m], f.f2[m]); });
  Vec a0 = zero, b0 = zero;
  convolve(0, a0, b0);
  f.f2_mean = b0.real();
  const double big = b0.cwiseAbs().maxCoeff();
  f.reality_defect = big > 0.0 ? b0.imag().cwiseAbs().maxCoeff() / big : 0.0;
  return f;
}

PerturbationState NonlinearModel::advance(const PerturbationState& s, const NonlinearForcing& now,
                                          const NonlinearForcing* prev) const {
  const int K = c_.k_max, S = c_.startup_substeps;
  const bool startup = prev == nullptr && S > 0;
  const Mat& D1 = impl_->D1;
  PerturbationState out;
  out.time = s.time + dt_;
  out.modes.resize(K);
  auto F = [&](const NonlinearForcing& f, int m) -> Vec {
    return (-kI * double(m + 1)) * f.f1[m] - D1 * f.f2[m];
  };
  for_each_index(c_.exec, std::size_t(K), [&](std::size_t mi) {
    const int m = int(mi);
    if (startup) {
      const double h = dt_ / S;
      Vec extra;
      if (c_.nonlinear) extra = h * F(now, m);
      Vec w = s.modes[m];
      for (int q = 0; q < S; ++q) w = impl_->be[m].advance(w, extra);
      out.modes[m] = std::move(w);
      return;
    }
    Vec extra;
    if (c_.nonlinear) extra = prev ? Vec(dt_ * (1.5 * F(now, m) - 0.5 * F(*prev, m))) : Vec(dt_ * F(now, m));
    out.modes[m] = impl_->cn[m].advance(s.modes[m], extra);
  });
  Vec u = s.mean_shear.cast<cplx>();
  Vec g;
  if (c_.nonlinear) g = (-now.f2_mean).cast<cplx>();
  if (startup) {
    const double h = dt_ / S;
    if (g.size()) g *= h;
    for (int q = 0; q < S; ++q) u = impl_->mean_be->advance(u, g);
  } else {
    if (c_.nonlinear) g = prev ? Vec(dt_ * (-1.5 * now.f2_mean + 0.5 * prev->f2_mean).cast<cplx>()) : Vec(dt_ * g);
    u = impl_->mean_cn->advance(u, g);
  }
  out.mean_shear = u.real();
  return out;
}

std::pair<double, double> NonlinearModel::enstrophy_transfer(const PerturbationState& s) const {
  const std::vector<ModeVelocity> vel = velocity(s);
  const NonlinearForcing f = nonlinear_rhs(s, vel);
  const Mat& D1 = impl_->D1;
  const Vec w0 = D1 * s.mean_shear.cast<cplx>();
  const Vec n0 = D1 * f.f2_mean.cast<cplx>();
  double transfer = inner(grid_, n0, w0).real();
  double scale = l2_norm(grid_, n0) * l2_norm(grid_, w0);
  for (int m = 0; m < c_.k_max; ++m) {
    const Vec nk = (kI * double(m + 1)) * f.f1[m] + D1 * f.f2[m];
    transfer += 2.0 * inner(grid_, nk, s.modes[m]).real();
    scale += 2.0 * l2_norm(grid_, nk) * l2_norm(grid_, s.modes[m]);
  }
  return {transfer, scale};
}

double NonlinearModel::advective_cfl(const PerturbationState& s, const std::vector<ModeVelocity>& vel) const {
  const int n = grid_.size(), K = s.k_max();
  const RVec& y = grid_.nodes;
  double c = 0.0;
  for (int j = 0; j < n; ++j) {
    double U1 = std::abs(s.mean_shear(j)), U2 = 0.0;
    for (int m = 0; m < K; ++m) {
      U1 += 2.0 * std::abs(vel[m].u1(j));
      U2 += 2.0 * std::abs(vel[m].u2(j));
    }
    const double dy = j == 0 ? y(0) - y(1) : j == n - 1 ? y(n - 2) - y(n - 1) : 0.5 * (y(j - 1) - y(j + 1));
    c = std::max(c, dt_ * (U1 * K + U2 / dy));
  }
  return c;
}

SimulationResult NonlinearModel::simulate(const PerturbationState& s0, const SimulationOptions& opt) const {
  if (s0.k_max() != c_.k_max || s0.mean_shear.size() != grid_.size())
    throw std::invalid_argument("simulate: state does not match the model");
  const double t_end = c_.horizon();
  const long steps = long(std::ceil(t_end / dt_ - 1e-9));
  const long every = opt.sample_every > 0 ? opt.sample_every : std::max(1L, steps / 400);
  const int K = c_.k_max;
  const RVec& W = grid_.quad_weights;

  SimulationResult r;
  r.initial_h2 = h2_norm(s0);
  EnergyAccumulator acc(c_.nu, K, grid_);
  PerturbationState s = s0;
  std::vector<ModeVelocity> vel = velocity(s);
  std::optional<NonlinearForcing> prev;
  bool tenth_taken = false;

  auto observe = [&](long n) {
    acc.add(s.time, s, vel, ops_);
    double w2 = W.dot((ops_.d1 * s.mean_shear).cwiseAbs2()), u2 = W.dot(s.mean_shear.cwiseAbs2());
    for (int m = 0; m < K; ++m) {
      w2 += 2.0 * W.dot(s.modes[m].cwiseAbs2());
      u2 += 2.0 * (W.dot(vel[m].u1.cwiseAbs2()) + W.dot(vel[m].u2.cwiseAbs2()));
      double l1 = 0.0;
      for (int j = 0; j < grid_.size(); ++j) l1 += W(j) * std::abs(s.modes[m](j));
      if (l1 > 0.0) {
        const auto mo = impl_->cn[m].moments(s.modes[m]);
        r.max_moment = std::max(r.max_moment, std::max(std::abs(mo[0]), std::abs(mo[1])) / l1);
      }
    }
    const double u_l2 = std::sqrt(2.0 * kPi * u2);
    r.u_linf_l2 = std::max(r.u_linf_l2, u_l2);
    const double w1 = l2_norm(grid_, s.modes[0]);
    const double tail = w1 > 0.0 ? l2_norm(grid_, s.modes[K - 1]) / w1 : 0.0;
    if (K > 1) r.max_tail = std::max(r.max_tail, tail);
    const double total = acc.value().total;
    if (!tenth_taken && s.time >= 0.1 * t_end - 1e-12) {
      r.energy_at_tenth = total;
      tenth_taken = true;
    }
    if (n % every == 0 || n == steps)
      r.series.push_back({s.time, total, std::sqrt(2.0 * kPi * w2), u_l2, tail});
    if (opt.observer) opt.observer(s);
  };
  auto blown = [&]() {
    for (const Vec& w : s.modes)
      if (!w.allFinite() || w.cwiseAbs().maxCoeff() > c_.guard) return true;
    return !s.mean_shear.allFinite();
  };

  auto cfl_ok = [&]() {
    r.max_cfl = std::max(r.max_cfl, advective_cfl(s, vel));
    return r.max_cfl <= kCflLimit;
  };

  bool cfl_good = cfl_ok();
  observe(0);
  for (long n = 1; n <= steps && cfl_good; ++n) {
    NonlinearForcing f = c_.nonlinear ? nonlinear_rhs(s, vel) : NonlinearForcing{};
    r.max_reality_defect = std::max(r.max_reality_defect, f.reality_defect);
    s = advance(s, f, prev ? &*prev : nullptr);
    prev = std::move(f);
    r.steps = n;
    if (blown()) {
      r.guard_tripped = true;
      break;
    }
    vel = velocity(s);
    cfl_good = cfl_ok();
    observe(n);
  }
  r.cfl_exceeded = !cfl_good;
  r.energy = acc.value();
  r.t_final = s.time;
  r.final_state = s;
  if (r.guard_tripped) {
    r.verdict = Verdict::growing;
    std::ostringstream os;
    os << "blow-up guard at t=" << s.time;
    r.note = os.str();
  } else if (r.cfl_exceeded) {
    r.verdict = Verdict::inconclusive;
    std::ostringstream os;
    os << "advective CFL " << r.max_cfl << " exceeds " << kCflLimit << " at t=" << s.time;
    r.note = os.str();
  } else if (r.max_tail > kTailLimit) {
    r.verdict = Verdict::inconclusive;
    std::ostringstream os;
    os << "k_max insufficient: |w_kmax|/|w_1| reached " << r.max_tail;
    r.note = os.str();
  } else if (r.energy_at_tenth > 0.0 && r.energy.total > kGrowthFactor * r.energy_at_tenth) {
    r.verdict = Verdict::growing;
    r.note = "functional grew past 4x its value at t_end/10";
  } else {
    r.verdict = Verdict::stable;
  }
  return r;
}

EnergyFunctional energy(const std::vector<PerturbationState>& history, const NonlinearModel& model) {
  EnergyAccumulator acc(model.config().nu, model.config().k_max, model.grid());
  for (const PerturbationState& s : history) acc.add(s.time, s, model.velocity(s), model.ops());
  return acc.value();
}

// ---------------------------------------------------------------------------

void ThresholdSpec::validate() const {
  if (nu_values.empty()) throw std::invalid_argument("threshold: nu list is empty");
  for (double nu : nu_values) {
    if (!(nu > 0.0)) throw std::invalid_argument("nu must be positive");
    if (nu < 1e-5) throw std::invalid_argument("threshold: nu below the desk-scale limit 1e-5");
  }
  if (!(amplitude_lo > 0.0) || !(amplitude_hi > amplitude_lo))
    throw std::invalid_argument("threshold: need 0 < amplitude_lo < amplitude_hi");
  if (k_max < 8) throw std::invalid_argument("threshold: k_max must be >= 8");
  if (!(bracket > 1.0)) throw std::invalid_argument("threshold: bracket must exceed 1");
  if (max_bisections < 0) throw std::invalid_argument("threshold: max_bisections must be >= 0");
}

ThresholdResult probe_threshold(const ThresholdSpec& spec) {
  spec.validate();
  const size_t nn = spec.nu_values.size();
  std::vector<std::vector<ProbeRun>> per(nn);
  std::vector<double> thr(nn, std::numeric_limits<double>::quiet_NaN());
  std::vector<std::vector<std::string>> flags(nn);

  for_each_index(spec.exec, nn, [&](std::size_t i) {
    NonlinearCase c;
    c.nu = spec.nu_values[i];
    c.k_max = spec.k_max;
    c.N = spec.N;
    c.t_end = spec.t_end;
    c.exec = Exec::serial;
    const NonlinearModel model(c);
    const double unit = spec.scale_by_sqrt_nu ? std::sqrt(c.nu) : 1.0;
    auto eval = [&](double amp) {
      const SimulationResult r = model.simulate(model.initial_state(amp));
      ProbeRun p{c.nu, amp, r.verdict, r.energy_at_tenth > 0.0 ? r.energy.total / r.energy_at_tenth : 0.0,
                 r.energy.total};
      per[i].push_back(p);
      return r.verdict;
    };
    double lo = spec.amplitude_lo * unit, hi = spec.amplitude_hi * unit;
    const Verdict vlo = eval(lo), vhi = eval(hi);
    std::ostringstream tag;
    tag << "nu=" << c.nu;
    if (vlo != Verdict::stable || vhi != Verdict::growing) {
      flags[i].push_back("bracket not valid at " + tag.str() + " (lo " + to_string(vlo) + ", hi " +
                         to_string(vhi) + ")");
      return;
    }
    for (int b = 0; b < spec.max_bisections && hi / lo > spec.bracket; ++b) {
      const double mid = std::sqrt(lo * hi);
      const Verdict v = eval(mid);
      if (v == Verdict::inconclusive) {
        flags[i].push_back("inconclusive verdict inside the bracket at " + tag.str());
        return;
      }
      (v == Verdict::stable ? lo : hi) = mid;
    }
    thr[i] = std::sqrt(lo * hi);
  });

  ThresholdResult res;
  for (size_t i = 0; i < nn; ++i) {
    std::vector<ProbeRun> sorted = per[i];
    std::sort(sorted.begin(), sorted.end(), [](const ProbeRun& a, const ProbeRun& b) { return a.amplitude < b.amplitude; });
    bool seen_unstable = false;
    for (const ProbeRun& p : sorted) {
      if (p.verdict != Verdict::stable) seen_unstable = true;
      if (p.verdict == Verdict::stable && seen_unstable) {
        res.monotone = false;
        std::ostringstream os;
        os << "verdicts not monotone in amplitude at nu=" << spec.nu_values[i];
        flags[i].push_back(os.str());
        break;
      }
    }
    res.runs.insert(res.runs.end(), per[i].begin(), per[i].end());
    res.flags.insert(res.flags.end(), flags[i].begin(), flags[i].end());
  }
  res.thresholds = thr;

  std::vector<double> x, y;
  for (size_t i = 0; i < nn; ++i)
    if (std::isfinite(thr[i])) {
      x.push_back(spec.nu_values[i]);
      y.push_back(thr[i]);
    }
  if (x.size() >= 2 && *std::max_element(x.begin(), x.end()) / *std::min_element(x.begin(), x.end()) >= 1e3 * (1 - 1e-9))
    res.fitted_beta = fit_power("threshold", x, y, 0.5, 0.5).exponent;
  return res;
}

}  // namespace couette
