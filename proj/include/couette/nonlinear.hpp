#pragma once

#include <functional>
#include <memory>
#include <optional>
#include <string>
#include <vector>

#include "couette/evolution.hpp"

namespace couette {

// Fourier modes k = 1..k_max of the perturbation vorticity; w_{-k} = conj(w_k)
// is implied, so reality holds by construction. The mean flow is u1bar(y)
// with u1bar(+-1) = 0 and mean vorticity w_0 = d_y u1bar.
struct PerturbationState {
  double time = 0.0;
  std::vector<Vec> modes;  // modes[k-1] = w_k
  RVec mean_shear;

  int k_max() const { return int(modes.size()); }
  Vec mode(int k) const;  // any 0 < |k| <= k_max
};

// Quadratic terms f1_k = sum_l u1_l w_{k-l}, f2_k = sum_l u2_l w_{k-l}, with
// the sums truncated to |l|, |k-l| <= k_max.
struct NonlinearForcing {
  std::vector<Vec> f1, f2;  // index k-1
  RVec f2_mean;             // f2_0, drives (d_t - nu d_y^2) u1bar = -f2_0
  double reality_defect = 0.0;  // |Im f2_0|_inf / (|f2_0|_inf + tiny)
};

struct ModeVelocity {
  Vec phi, u1, u2;
};

struct NonlinearCase {
  double nu = 1e-3;
  int k_max = 8;
  int N = 0;           // 0: grid_order_for(nu, k_max)
  double dt = 0.0;     // 0: EvolutionCase::dt_rule(nu, k_max)
  double t_end = 0.0;  // 0: 20 nu^{-1/3}
  bool nonlinear = true;
  int startup_substeps = 4;
  double guard = 1e8;  // nodal |w_k| above this aborts the run
  Exec exec = Exec::parallel;

  int order() const;
  double step_size() const;
  double horizon() const;
  void validate() const;
};

// E_0 = |w_0|_{L^inf L^2}; for k != 0
// E_k = |(1-|y|)^{1/2} w_k|_{L^inf L^2} + |k||u_k|_{L^2L^2} + |k|^{1/2}|u_k|_{L^inf L^inf} + (nu k^2)^{1/4}|w_k|_{L^2L^2}
struct EnergyFunctional {
  double e0 = 0.0;
  std::vector<double> ek;  // index k-1; E_{-k} = E_k
  double total = 0.0;      // E_0 + 2 sum_{k>0} E_k
};

// Running suprema and trapezoid integrals behind EnergyFunctional.
class EnergyAccumulator {
 public:
  EnergyAccumulator(double nu, int k_max, const ChebGrid& grid);
  void add(double t, const PerturbationState& s, const std::vector<ModeVelocity>& vel, const DiffOps& ops);
  EnergyFunctional value() const;
  int samples() const { return count_; }

 private:
  double nu_;
  const ChebGrid& grid_;
  int count_ = 0;
  double t_prev_ = 0.0;
  double mean_sup_ = 0.0;
  std::vector<double> bw_sup_, u_sup_, u_int_, w_int_, u_prev_, w_prev_;
};

enum class Verdict { stable, growing, inconclusive };
const char* to_string(Verdict v);

struct SeriesSample {
  double t = 0.0;
  double energy_total = 0.0;  // running functional
  double w_l2 = 0.0;          // sqrt(sum_k |w_k|^2) over all k, with w_0
  double u_l2 = 0.0;          // |u(t)|_{L^2(T x I)}
  double tail = 0.0;          // |w_{k_max}| / |w_1|
};

struct SimulationResult {
  EnergyFunctional energy;
  double energy_at_tenth = 0.0;  // total at t_end / 10
  Verdict verdict = Verdict::inconclusive;
  std::string note;
  bool guard_tripped = false;
  bool cfl_exceeded = false;
  double max_cfl = 0.0;  // dt max_y (k_max |u1| + |u2| / dy), quadratic terms are explicit
  double t_final = 0.0;
  long steps = 0;
  double max_tail = 0.0;          // sup_t |w_{k_max}| / |w_1|
  double max_moment = 0.0;        // sup_t over modes of |<w_k, e^{+-ky}>| e^{-|k|} / |w_k|_1
  double max_reality_defect = 0.0;
  double u_linf_l2 = 0.0;         // sup_t |u(t)|_{L^2(T x I)}
  double initial_h2 = 0.0;
  std::vector<SeriesSample> series;
  PerturbationState final_state;
};

struct SimulationOptions {
  int sample_every = 0;  // 0: about 400 series samples
  std::function<void(const PerturbationState&)> observer;
};

inline constexpr double kGrowthFactor = 4.0;   // "growing" if the functional quadruples after t_end/10
inline constexpr double kTailLimit = 1e-4;     // |w_{k_max}|/|w_1| above this: k_max insufficient
inline constexpr double kCflLimit = 1.0;       // beyond this the explicit step is not trusted

class NonlinearModel {
 public:
  explicit NonlinearModel(const NonlinearCase& c);
  ~NonlinearModel();
  NonlinearModel(const NonlinearModel&) = delete;
  NonlinearModel& operator=(const NonlinearModel&) = delete;

  const NonlinearCase& config() const { return c_; }
  const ChebGrid& grid() const { return grid_; }
  const DiffOps& ops() const { return ops_; }
  double dt() const { return dt_; }

  PerturbationState zero_state() const;
  // amplitude * curl^perp((1-y^2)^2 sin x), scaled so |u0|_{H^2(T x I)} = amplitude
  PerturbationState initial_state(double amplitude) const;
  // |u|_{H^2(T x I)} with x in [0, 2 pi)
  double h2_norm(const PerturbationState& s) const;

  std::vector<ModeVelocity> velocity(const PerturbationState& s) const;
  NonlinearForcing nonlinear_rhs(const PerturbationState& s) const;
  NonlinearForcing nonlinear_rhs(const PerturbationState& s, const std::vector<ModeVelocity>& vel) const;

  // One step: Crank-Nicolson linear part, Adams-Bashforth 2 for the quadratic
  // terms. Without `prev` the step is the start-up (backward-Euler substeps,
  // quadratic term frozen at `now`).
  PerturbationState advance(const PerturbationState& s, const NonlinearForcing& now,
                            const NonlinearForcing* prev) const;

  // sum_k int (ik f1_k + d_y f2_k) conj(w_k) dy over |k| <= k_max; zero for an
  // exact truncation since u vanishes at the walls. Returns (transfer, scale).
  std::pair<double, double> enstrophy_transfer(const PerturbationState& s) const;
  double advective_cfl(const PerturbationState& s, const std::vector<ModeVelocity>& vel) const;

  SimulationResult simulate(const PerturbationState& s0, const SimulationOptions& opt = {}) const;

 private:
  NonlinearCase c_;
  ChebGrid grid_;
  DiffOps ops_;
  double dt_;
  struct Impl;
  std::unique_ptr<Impl> impl_;
};

EnergyFunctional energy(const std::vector<PerturbationState>& history, const NonlinearModel& model);

struct ThresholdSpec {
  std::vector<double> nu_values;
  double amplitude_lo = 0.0, amplitude_hi = 0.0;  // absolute |u0|_{H^2}
  bool scale_by_sqrt_nu = false;                  // bracket given in units of nu^{1/2}
  int k_max = 8;
  double t_end = 0.0;        // 0: 20 nu^{-1/3}
  int N = 0;
  double bracket = 1.1;      // stop when hi/lo <= bracket
  int max_bisections = 20;
  Exec exec = Exec::parallel;

  void validate() const;
};

struct ProbeRun {
  double nu = 0.0, amplitude = 0.0;
  Verdict verdict = Verdict::inconclusive;
  double energy_ratio = 0.0;  // total(t_end) / total(t_end/10)
  double energy_total = 0.0;
};

struct ThresholdResult {
  std::vector<ProbeRun> runs;        // in evaluation order per nu
  std::vector<double> thresholds;    // per nu; NaN when the bracket is not valid
  bool monotone = true;
  std::optional<double> fitted_beta; // slope of log amplitude* vs log nu, exploratory
  std::vector<std::string> flags;
};

ThresholdResult probe_threshold(const ThresholdSpec& spec);

}  // namespace couette
