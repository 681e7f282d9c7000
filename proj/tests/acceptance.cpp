// Acceptance suite: one timed pass/fail line per criterion. Reports go to
// <out>/run1 (and <out>/run2 for the determinism check); exit status is 0 only
// when every selected criterion passes.
#include <algorithm>
#include <chrono>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <functional>
#include <iostream>
#include <random>
#include <set>
#include <sstream>

#include "CLI11.hpp"
#include "airy_oracle.hpp"
#include "couette/airy.hpp"
#include "couette/commands.hpp"
#include "couette/evolution.hpp"
#include "couette/harness.hpp"
#include "couette/nonlinear.hpp"
#include "couette/report.hpp"

using namespace couette;
namespace fs = std::filesystem;

namespace {

struct Criterion {
  int id;
  std::string key;
  double budget_s;
  std::function<void(ReportDocument&, std::string&, bool&)> body;
};

std::string fmt(double v, int digits = 4) {
  std::ostringstream o;
  o.precision(digits);
  o << v;
  return o.str();
}

CaseRecord record(const std::string& id, FieldMap params, FieldMap results) {
  CaseRecord r;
  r.id = id;
  r.parameters = std::move(params);
  r.results = std::move(results);
  r.config_hash = config_hash("acceptance");
  return r;
}

const ScalingFit* find_fit(const VerifyReport& r, const std::string& name) {
  for (const auto& f : r.fits)
    if (f.name == name) return &f;
  return nullptr;
}

// copies a sweep into the document under a criterion prefix
std::vector<std::string> absorb(ReportDocument& d, const VerifyReport& rep, const std::string& prefix) {
  std::vector<std::string> refs;
  for (std::size_t i = 0; i < rep.rows.size(); ++i) {
    CaseRecord r = record_from_row(prefix + "/" + rep.name + "/" + std::to_string(i), rep.rows[i], config_hash("acceptance"));
    d.records.push_back(r);
    refs.push_back(r.id);
  }
  CaseRecord c = record(prefix + "/" + rep.name + "/constants", {}, {});
  for (const auto& [k, v] : rep.constants)
    if (std::isfinite(v)) c.results[k] = v;
  d.records.push_back(c);
  refs.push_back(c.id);
  for (std::size_t i = 0; i < rep.fits.size(); ++i) {
    ScalingFit f = rep.fits[i];
    f.name = prefix + ": " + f.name;
    d.fits.push_back(f);
    refs.push_back(f.name);
    d.plots.push_back(fit_plot(prefix + "_" + rep.name + "_" + std::to_string(i), rep, rep.fits[i], prefix + ": "));
  }
  return refs;
}

std::string fit_text(const ScalingFit* f) {
  if (!f) return "missing fit";
  return f->name + " exponent " + fmt(f->exponent) + " (target " + fmt(f->target_exponent) + " +- " +
         fmt(f->tolerance) + ", r2 " + fmt(f->r2, 5) + ")";
}

Vec clamped_vorticity(const ChebGrid& g, const DiffOps& ops, int k) {
  Vec phi(g.size());
  for (int j = 0; j < g.size(); ++j) {
    const double y = g.nodes(j);
    phi(j) = (1 - y * y) * (1 - y * y) * (1.0 + 0.5 * y + 0.3 * y * y);
  }
  return vorticity_from_stream(phi, k, ops);
}

// ---- criteria -----------------------------------------------------------------

void airy_constant(ReportDocument& d, std::string& detail, bool& pass) {
  const LogDerivativeSup s = log_derivative_sup(0.0);
  d.records.push_back(record("c1/a0", {{"delta", 0.0}}, {{"a", s.value}, {"argmax", s.argmax}}));
  pass = std::abs(s.value - (-0.4843)) <= 5e-4 && s.value < -1.0 / 3.0;
  detail = "a(0) = " + fmt(s.value, 8) + " at Re z = " + fmt(s.argmax, 6);
}

void airy_accuracy(ReportDocument& d, std::string& detail, bool& pass) {
#ifdef COUETTE_HAVE_BOOST
  const airy_oracle::Oracle o = airy_oracle::oracle(0.0);
  const AiryBundle a = airy(0.0);
  const double e_ai = std::abs(a.value() - o.ai) / std::abs(o.ai);
  const double e_aip = std::abs(a.derivative() - o.aip) / std::abs(o.aip);
  // int_0^infty Ai = 1/3 along the ray e^{i pi/6} R_+, by quadrature on the oracle
  const cplx ray = airy_oracle::ray_integral(0.0, std::polar(1.0, kPi / 6), 16.0);
  const double e_ray = std::abs(ray - 1.0 / 3.0) * 3.0;
  const double e_a0 = std::abs(a0(0.0).value() - 1.0 / 3.0) * 3.0;
  std::mt19937 rng(20240611);
  std::uniform_real_distribution<double> rad(0.0, 15.0), ang(-kPi, kPi);
  double w_worst = 0.0;
  for (int i = 0; i < 20; ++i) {
    const cplx z = std::polar(rad(rng), ang(rng));
    const AiryBundle b = airy(z);
    const cplx bi = airy_oracle::bi(z), bip = airy_oracle::bi_prime(z);
    const cplx W = b.value() * bip - b.derivative() * bi;
    const double scale = std::max(1.0, std::abs(b.value() * bip) + std::abs(b.derivative() * bi));
    w_worst = std::max(w_worst, std::abs(W - 1.0 / kPi) * kPi / scale);
  }
  d.records.push_back(record("c2/origin", {},
                             {{"ai_rel_err", e_ai}, {"ai_prime_rel_err", e_aip}, {"a0_rel_err", e_a0},
                              {"ray_quadrature_rel_err", e_ray}, {"wronskian_max_rel_defect", w_worst}}));
  pass = e_ai <= 1e-11 && e_aip <= 1e-11 && e_a0 <= 1e-9 && e_ray <= 1e-12 && w_worst <= 1e-9;
  detail = "Ai(0) " + fmt(e_ai, 2) + ", Ai'(0) " + fmt(e_aip, 2) + ", A0(0) " + fmt(e_a0, 2) + ", Wronskian " +
           fmt(w_worst, 2);
#else
  (void)d;
  pass = false;
  detail = "arbitrary-precision oracle unavailable (Boost not found at configure time)";
#endif
}

const std::vector<double> kSweepNu{1e-3, 1e-4, 1e-5, 1e-6};

void navier_scaling(ReportDocument& d, std::string& detail, bool& pass) {
  SweepSpec s;
  s.nu_values = kSweepNu;
  s.k_values = {1};
  const VerifyReport rep = verify_navier_L2(s);
  absorb(d, rep, "c3");
  const ScalingFit* w = find_fit(rep, "w_l2 vs nu (k=1)");
  const ScalingFit* u = find_fit(rep, "u_l2 vs nu (k=1)");
  pass = w && u && w->pass && u->pass && rep.flags.empty();
  detail = fit_text(w) + "; " + fit_text(u);
}

void nonslip_scaling(ReportDocument& d, std::string& detail, bool& pass) {
  SweepSpec s;
  s.nu_values = kSweepNu;
  s.k_values = {1};
  const VerifyReport rep = verify_nonslip(s);
  absorb(d, rep, "c4");
  const ScalingFit* w = find_fit(rep, "w_l2 vs nu (k=1)");
  const ScalingFit* u = find_fit(rep, "u_l2_hm1 vs nu (k=1)");
  pass = w && u && w->pass && u->pass && rep.flags.empty();
  detail = fit_text(w) + "; " + fit_text(u);
}

void homogeneous_cross(ReportDocument& d, std::string& detail, bool& pass) {
  W12Spec s;
  s.nu_values = {2e-4, 5e-5, 2e-5};
  s.k_values = {1, 2, 4};
  s.lambda_values = {-0.8, -0.4, 0.0, 0.4, 0.8};
  const VerifyReport rep = verify_w12_bounds(s);
  absorb(d, rep, "c5");
  const double agree = rep.constants.at("airy_bvp_rel"), drift = rep.constants.at("C_l1_drift");
  pass = agree <= 1e-6 && drift < 0.01;
  detail = "Airy vs BVP max rel L2 " + fmt(agree, 3) + ", C = " + fmt(rep.constants.at("C_l1"), 6) + " drift " +
           fmt(100 * drift, 3) + "% under N-doubling";
}

void coefficient_bounds(ReportDocument& d, std::string& detail, bool& pass) {
  CBoundsSpec s;
  s.nu_values = {1e-3, 1e-4, 1e-5};
  s.k_values = {1, 2};
  const VerifyReport rep = verify_c_bounds(s);
  absorb(d, rep, "c6");
  const double d1 = rep.constants.at("C_c1_drift"), d2 = rep.constants.at("C_c2_drift");
  pass = d1 < 0.01 && d2 < 0.01;
  detail = "c1 constant " + fmt(rep.constants.at("C_c1"), 6) + " (drift " + fmt(100 * d1, 3) + "%), c2 constant " +
           fmt(rep.constants.at("C_c2"), 6) + " (drift " + fmt(100 * d2, 3) + "%)";
}

void spectral_gap(ReportDocument& d, std::string& detail, bool& pass) {
  // eigenvalue gap, non-slip, k = 1, three decades
  std::vector<double> gaps(kSweepNu.size());
  for_each_index(Exec::parallel, kSweepNu.size(), [&](std::size_t i) {
    ResolventCase c;
    c.nu = kSweepNu[i];
    c.k = 1;
    c.bc = BoundaryCondition::non_slip;
    const ChebGrid g = build_grid(grid_order_for(c.nu, 1));
    const DiffOps ops = build_diff_ops(g);
    gaps[i] = spectrum(c, g, ops, false, Exec::serial).gap;
  });
  VerifyReport gap_rep;
  gap_rep.name = "gap";
  for (std::size_t i = 0; i < kSweepNu.size(); ++i) {
    SweepRow r;
    r.nu = kSweepNu[i];
    r.k = 1;
    r.N = grid_order_for(r.nu, 1);
    r.values["gap"] = gaps[i];
    gap_rep.rows.push_back(r);
  }
  gap_rep.fits.push_back(fit_power("gap vs nu (k=1)", kSweepNu, gaps, 1.0 / 3.0, 0.05));

  // time-domain decay rates, both boundary conditions
  const std::vector<double> nus{1e-3, 1e-4, 1e-5};
  const std::vector<int> ks{1, 2, 4};
  std::vector<VerifyReport> decay(2);
  bool all_windows = true;
  for (int b = 0; b < 2; ++b) {
    const BoundaryCondition bc = b == 0 ? BoundaryCondition::non_slip : BoundaryCondition::navier_slip;
    VerifyReport& rep = decay[b];
    rep.name = std::string("decay_") + to_string(bc);
    std::vector<SweepRow> rows(nus.size() * ks.size());
    for_each_index(Exec::parallel, rows.size(), [&](std::size_t i) {
      const double nu = nus[i / ks.size()];
      const int k = ks[i % ks.size()];
      const ChebGrid g = build_grid(grid_order_for(nu, k));
      const DiffOps ops = build_diff_ops(g);
      EvolutionCase c;
      c.nu = nu;
      c.k = k;
      c.bc = bc;
      c.omega0 = clamped_vorticity(g, ops, k);
      c.extend_until_decayed = true;
      const SpaceTimeLedger L = run(c, g, ops, {5, {}});
      const DecayFit f = fit_decay(L.decay_samples, nu, k);
      rows[i].nu = nu;
      rows[i].k = k;
      rows[i].N = g.order;
      rows[i].values["rate"] = f.ok ? f.rate : NAN;
      rows[i].values["rate_r2"] = f.ok ? f.r2 : NAN;
    });
    for (const SweepRow& r : rows) all_windows = all_windows && std::isfinite(r.values.at("rate"));
    rep.rows = rows;
    if (!all_windows) continue;
    for (int k : ks) {
      std::vector<double> x, y;
      for (const SweepRow& r : rows)
        if (r.k == k) x.push_back(r.nu), y.push_back(r.values.at("rate"));
      rep.fits.push_back(fit_power("rate vs nu (k=" + std::to_string(k) + ")", x, y, 1.0 / 3.0, 0.07));
    }
    for (double nu : nus) {
      std::vector<double> x, y;
      for (const SweepRow& r : rows)
        if (r.nu == nu) x.push_back(r.k), y.push_back(r.values.at("rate"));
      std::ostringstream nm;
      nm << "rate vs k (nu=" << nu << ")";
      rep.fits.push_back(fit_power(nm.str(), x, y, 2.0 / 3.0, 0.1));
    }
  }
  absorb(d, gap_rep, "c7");
  for (const auto& r : decay) absorb(d, r, "c7");

  pass = all_windows && gap_rep.fits[0].pass;
  std::string failed;
  for (const auto& r : decay)
    for (const auto& f : r.fits)
      if (!f.pass) {
        pass = false;
        failed += (failed.empty() ? "" : ", ") + r.name + " " + f.name + " = " + fmt(f.exponent);
      }
  double nu_lo = 1, nu_hi = 0, k_lo = 1, k_hi = 0;
  for (const auto& r : decay)
    for (const auto& f : r.fits) {
      const bool over_nu = f.name.find("vs nu") != std::string::npos;
      (over_nu ? nu_lo : k_lo) = std::min(over_nu ? nu_lo : k_lo, f.exponent);
      (over_nu ? nu_hi : k_hi) = std::max(over_nu ? nu_hi : k_hi, f.exponent);
    }
  detail = "gap exponent " + fmt(gap_rep.fits[0].exponent) + " (r2 " + fmt(gap_rep.fits[0].r2, 5) + ")";
  if (!all_windows) {
    detail += "; decay fit window not reached in some run";
  } else {
    detail += "; decay nu-exponents in [" + fmt(nu_lo) + ", " + fmt(nu_hi) + "], k-exponents in [" + fmt(k_lo) + ", " +
              fmt(k_hi) + "]";
  }
  if (!failed.empty()) detail += "; failing: " + failed;
}

void space_time(ReportDocument& d, std::string& detail, bool& pass) {
  struct Run {
    double nu;
    int k;
  };
  const std::vector<Run> runs{{1e-3, 1}, {1e-3, 2}, {1e-4, 1}, {1e-4, 2}, {1e-5, 1}};
  // variant 0: reference, 1: dt halved, 2: N doubled
  std::vector<double> ratio(runs.size() * 3);
  for_each_index(Exec::parallel, ratio.size(), [&](std::size_t i) {
    const Run& r = runs[i / 3];
    const int v = int(i % 3);
    const ChebGrid g = build_grid(grid_order_for(r.nu, r.k) * (v == 2 ? 2 : 1));
    const DiffOps ops = build_diff_ops(g);
    EvolutionCase c;
    c.nu = r.nu;
    c.k = r.k;
    c.bc = BoundaryCondition::non_slip;
    c.omega0 = clamped_vorticity(g, ops, r.k);
    c.extend_until_decayed = true;
    c.dt = EvolutionCase::dt_rule(r.nu, r.k) * (v == 1 ? 0.5 : 1.0);
    ratio[i] = run(c, g, ops, {50, {}}).ratio;
  });
  double C[3] = {0, 0, 0};
  for (std::size_t i = 0; i < runs.size(); ++i) {
    for (int v = 0; v < 3; ++v) C[v] = std::max(C[v], ratio[3 * i + v]);
    d.records.push_back(record("c8/run" + std::to_string(i), {{"nu", runs[i].nu}, {"k", double(runs[i].k)}},
                               {{"ratio", ratio[3 * i]}, {"ratio_dt_half", ratio[3 * i + 1]},
                                {"ratio_N_double", ratio[3 * i + 2]}}));
  }
  const double drift = std::max(std::abs(C[1] - C[0]), std::abs(C[2] - C[0])) / C[0];
  d.records.push_back(record("c8/constant", {}, {{"C", C[0]}, {"C_dt_half", C[1]}, {"C_N_double", C[2]}, {"drift", drift}}));
  pass = std::isfinite(drift) && drift < 0.01;
  detail = "C = " + fmt(C[0], 6) + ", drift " + fmt(100 * drift, 3) + "% under dt-halving and N-doubling";
}

void splitting(ReportDocument& d, std::string& detail, bool& pass) {
  const double nu = 1e-3;
  const int k = 2;
  const ChebGrid g = build_grid(grid_order_for(nu, k));
  const DiffOps ops = build_diff_ops(g);
  EvolutionCase c;
  c.nu = nu;
  c.k = k;
  c.bc = BoundaryCondition::non_slip;
  c.omega0 = clamped_vorticity(g, ops, k);
  c.t_end = 30.0;
  c.extend_until_decayed = false;
  const SplittingReport r = homogeneous_splitting(c, g, ops);
  d.records.push_back(record("c9/splitting", {{"nu", nu}, {"k", double(k)}, {"t_end", c.t_end}},
                             {{"sum_error", r.sum_error}, {"part1_norm_error", r.part1_norm_error},
                              {"forcing_consistency", r.forcing_consistency}}));
  pass = r.sum_error <= 1e-6;
  detail = "relative L-inf L2 error of the three-part sum " + fmt(r.sum_error, 3);
}

void nonlinear_small(ReportDocument& d, std::string& detail, bool& pass) {
  const std::vector<double> nus{1e-3, 1e-4};
  std::vector<SimulationResult> res(nus.size());
  std::vector<double> amps(nus.size());
  for (std::size_t i = 0; i < nus.size(); ++i) {
    NonlinearCase c;
    c.nu = nus[i];
    c.k_max = 8;
    const NonlinearModel m(c);
    amps[i] = 0.01 * std::sqrt(nus[i]);
    res[i] = m.simulate(m.initial_state(amps[i]));
  }
  double C = 0.0;
  bool ok = true;
  for (std::size_t i = 0; i < nus.size(); ++i) {
    const SimulationResult& r = res[i];
    C = std::max(C, r.energy.total / amps[i]);
    ok = ok && !r.guard_tripped && r.verdict == Verdict::stable;
    d.records.push_back(record("c10/nu=" + format_double(nus[i]), {{"nu", nus[i]}, {"amplitude", amps[i]}, {"k_max", 8.0}},
                               {{"energy_total", r.energy.total},
                                {"C_run", r.energy.total / amps[i]},
                                {"verdict", std::string(to_string(r.verdict))},
                                {"guard_tripped", r.guard_tripped ? "true" : "false"},
                                {"max_cfl", r.max_cfl},
                                {"max_tail", r.max_tail},
                                {"steps", double(r.steps)}}));
  }
  d.records.push_back(record("c10/constant", {}, {{"C", C}}));
  for (std::size_t i = 0; i < nus.size(); ++i) ok = ok && res[i].energy.total <= C * amps[i];
  pass = ok && std::isfinite(C);
  detail = "sum_k E_k <= C 0.01 nu^{1/2} with C = " + fmt(C, 6) + " (per run " + fmt(res[0].energy.total / amps[0], 5) +
           ", " + fmt(res[1].energy.total / amps[1], 5) + "), verdicts " + to_string(res[0].verdict) + "/" +
           to_string(res[1].verdict);
}

const std::vector<Criterion>& criteria() {
  static const std::vector<Criterion> c{
      {1, "airy_constant", 10, airy_constant},
      {2, "airy_kernel_accuracy", 5, airy_accuracy},
      {3, "navier_slip_scaling", 300, navier_scaling},
      {4, "non_slip_scaling", 600, nonslip_scaling},
      {5, "homogeneous_cross_validation", 120, homogeneous_cross},
      {6, "coefficient_bounds", 180, coefficient_bounds},
      {7, "spectral_gap_enhanced_dissipation", 600, spectral_gap},
      {8, "space_time_estimate", 900, space_time},
      {9, "homogeneous_splitting", 300, splitting},
      {10, "nonlinear_small_data", 1800, nonlinear_small},
  };
  return c;
}

std::string slurp(const fs::path& p) {
  std::ifstream f(p, std::ios::binary);
  std::stringstream ss;
  ss << f.rdbuf();
  return ss.str();
}

// Runs the selected criteria and writes CSV/JSON (and SVG when asked) to dir.
ReportDocument run_suite(const std::set<int>& only, const fs::path& dir, bool svg, bool print) {
  ReportDocument doc;
  doc.name = "acceptance";
  for (const Criterion& c : criteria()) {
    if (!only.empty() && !only.count(c.id)) continue;
    std::string detail;
    bool pass = false;
    const auto t0 = std::chrono::steady_clock::now();
    try {
      c.body(doc, detail, pass);
    } catch (const std::exception& e) {
      pass = false;
      detail = std::string("exception: ") + e.what();
    }
    const double secs = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
    const bool in_budget = secs < c.budget_s;
    const std::string key = "criterion_" + std::to_string(c.id) + "." + c.key;
    // refs: everything this criterion added
    std::vector<std::string> refs;
    const std::string pre = "c" + std::to_string(c.id);
    for (const auto& r : doc.records)
      if (r.id.rfind(pre + "/", 0) == 0) refs.push_back(r.id);
    for (const auto& f : doc.fits)
      if (f.name.rfind(pre + ":", 0) == 0) refs.push_back(f.name);
    doc.verdicts.push_back({key, pass && in_budget, detail, refs});
    if (print)
      std::cout << (pass && in_budget ? "PASS" : "FAIL") << "  " << c.id << " " << c.key << " [" << fmt(secs, 3)
                << " s, budget " << c.budget_s << " s" << (in_budget ? "" : ", OVER BUDGET") << "] " << detail
                << std::endl;
  }
  emit(doc, Format::csv, dir);
  emit(doc, Format::json, dir);
  if (svg) emit(doc, Format::svg, dir);
  return doc;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"acceptance suite"};
  std::string out = "acceptance_out";
  std::vector<int> only_list;
  bool repeat = true;
  int jobs = 0;
  std::vector<int> expect_fail_list;
  app.add_option("--out", out, "output directory");
  app.add_option("--only", only_list, "criterion numbers to run (default: all)")->delimiter(',');
  app.add_flag("!--no-repeat", repeat, "skip the second suite run of the determinism criterion");
  app.add_option("--jobs", jobs, "worker threads");
  app.add_option("--expect-fail", expect_fail_list,
                 "criteria known to fail; exit status ignores them (they still print FAIL)")
      ->delimiter(',');
  CLI11_PARSE(app, argc, argv);
  set_jobs(jobs);
  std::set<int> only(only_list.begin(), only_list.end());
  const bool want11 = only.empty() || only.count(11);
  only.erase(11);
  if (!only_list.empty() && only.empty() && want11) {
    for (const auto& c : criteria()) only.insert(c.id);
  }

  const fs::path base(out);
  fs::remove_all(base / "run1");
  fs::remove_all(base / "run2");
  const auto t0 = std::chrono::steady_clock::now();
  ReportDocument first = run_suite(only, base / "run1", true, true);
  bool all = first.pass();

  if (want11) {
    std::string detail;
    bool pass = false;
    if (!repeat) {
      detail = "skipped (--no-repeat)";
    } else {
      const auto t1 = std::chrono::steady_clock::now();
      ReportDocument second = run_suite(only, base / "run2", false, false);
      int compared = 0;
      std::vector<std::string> differing;
      for (const std::string& name : first.emitted) {
        if (fs::path(name).extension() == ".svg") continue;
        ++compared;
        if (slurp(base / "run1" / name) != slurp(base / "run2" / name)) differing.push_back(name);
      }
      pass = differing.empty() && compared > 0 && second.verdicts.size() == first.verdicts.size();
      const double secs = std::chrono::duration<double>(std::chrono::steady_clock::now() - t1).count();
      detail = std::to_string(compared) + " CSV/JSON files compared byte for byte, " + std::to_string(differing.size()) +
               " differ; second run " + fmt(secs, 3) + " s";
      for (const auto& n : differing) detail += "; " + n;
    }
    std::cout << (pass ? "PASS" : "FAIL") << "  11 determinism " << detail << std::endl;
    all = all && pass;
    // determinism verdict goes into the first run's report only
    first.verdicts.push_back({"criterion_11.determinism", pass, detail, {}});
    first.emitted.clear();
    emit(first, Format::json, base);
    emit(first, Format::csv, base);
  }
  const double total = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
  std::cout << (all ? "ALL PASS" : "SOME FAILED") << " (" << fmt(total, 4) << " s)" << std::endl;
  if (all) return 0;
  const std::set<int> expected(expect_fail_list.begin(), expect_fail_list.end());
  std::string unexpected;
  for (const VerdictEntry& v : first.verdicts) {
    const int id = std::stoi(v.key.substr(v.key.find('_') + 1));
    if (!v.pass && !expected.count(id)) unexpected += " " + std::to_string(id);
  }
  if (!unexpected.empty()) return 1;
  std::cout << "only expected failures" << std::endl;
  return 0;
}
