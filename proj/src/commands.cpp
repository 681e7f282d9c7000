#include "couette/commands.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <map>
#include <random>
#include <sstream>
#include <stdexcept>

#include "couette/airy.hpp"
#include "couette/evolution.hpp"
#include "couette/harness.hpp"
#include "couette/nonlinear.hpp"
#include "couette/resolvent.hpp"

namespace couette {

namespace {

std::string bc_name(BoundaryCondition bc) { return to_string(bc); }

std::string num_id(double v) { return format_double(v); }

ReportDocument named(const std::string& command) {
  ReportDocument d;
  d.name = command;
  return d;
}

Vec cosine_profile(const ChebGrid& g) {
  Vec f(g.size());
  for (int j = 0; j < g.size(); ++j) f(j) = std::cos(0.5 * kPi * g.nodes(j));
  return f;
}

Vec clamped_stream(const ChebGrid& g) {
  Vec phi(g.size());
  for (int j = 0; j < g.size(); ++j) {
    const double y = g.nodes(j);
    phi(j) = (1 - y * y) * (1 - y * y);
  }
  return phi;
}

void add_bundle(FieldMap& m, const NormBundle& n) {
  m["l2"] = n.l2;
  m["l1"] = n.l1;
  m["linf"] = n.linf;
  m["h1_phi"] = n.h1_phi;
  m["u_l2"] = n.u_l2;
  m["critical"] = n.critical;
  m["w_prime_l2"] = n.w_prime_l2;
  m["rho_half"] = n.rho_half;
  m["rho_neg_quarter"] = n.rho_neg_quarter;
  m["rho_threehalf"] = n.rho_threehalf;
  m["boundary_weight"] = n.boundary_weight;
}

Table profile_table(const std::string& name, const ChebGrid& g, const std::vector<std::pair<std::string, const Vec*>>& cols) {
  Table t;
  t.name = name;
  t.columns.push_back("y");
  for (const auto& [c, v] : cols) {
    t.columns.push_back(c + "_re");
    t.columns.push_back(c + "_im");
  }
  for (int j = 0; j < g.size(); ++j) {
    std::vector<double> row{g.nodes(j)};
    for (const auto& [c, v] : cols) {
      row.push_back((*v)(j).real());
      row.push_back((*v)(j).imag());
    }
    t.rows.push_back(std::move(row));
  }
  return t;
}

}  // namespace

PlotSpec fit_plot(const std::string& name, const VerifyReport& rep, const ScalingFit& fit, const std::string& prefix) {
  PlotSpec p;
  p.name = name;
  p.title = fit.name;
  // "<key> vs nu (k=..)" or "<key> vs k (nu=..)"
  const auto vs = fit.name.find(" vs ");
  const std::string key = fit.name.substr(0, vs);
  const bool over_nu = fit.name.compare(vs + 4, 2, "nu") == 0;
  const auto open = fit.name.find('='), close = fit.name.rfind(')');
  const double fixed = std::stod(fit.name.substr(open + 1, close - open - 1));
  PlotSeries s;
  s.label = key;
  for (const SweepRow& r : rep.rows) {
    if (!r.values.count(key)) continue;
    if (over_nu ? r.k != int(fixed) : std::abs(r.nu - fixed) > 1e-5 * fixed) continue;
    s.x.push_back(over_nu ? r.nu : std::abs(double(r.k)));
    s.y.push_back(r.values.at(key));
  }
  p.x_label = over_nu ? "nu" : "|k|";
  p.y_label = key;
  p.series.push_back(s);
  p.fits.push_back(prefix + fit.name);
  p.target_exponents.push_back(fit.target_exponent);
  return p;
}

// ---- airy ------------------------------------------------------------------

ReportDocument run_airy(const RunSpec& s) {
  const AiryRunSpec& a = s.airy;
  const std::string hash = config_hash(s.text);
  ReportDocument d = named("airy");

  std::vector<cplx> zs;
  for (int i = 0; i < a.points; ++i) {
    const double re = a.points == 1 ? a.re_min : a.re_min + (a.re_max - a.re_min) * i / (a.points - 1);
    zs.emplace_back(re, a.im);
  }
  const std::vector<AiryBundle> ai = airy_batch(zs);
  std::vector<A0Value> av(zs.size());
  for_each_index(Exec::parallel, zs.size(), [&](std::size_t i) { av[i] = a0(zs[i]); });
  Table t{"values", {"re_z", "im_z", "ai_re", "ai_im", "ai_prime_re", "ai_prime_im", "a0_re", "a0_im", "a0_prime_re",
                     "a0_prime_im", "asymptotic"}, {}};
  for (std::size_t i = 0; i < zs.size(); ++i) {
    const cplx v = ai[i].value(), dv = ai[i].derivative(), w = av[i].value(), dw = av[i].derivative();
    t.rows.push_back({zs[i].real(), zs[i].imag(), v.real(), v.imag(), dv.real(), dv.imag(), w.real(), w.imag(),
                      dw.real(), dw.imag(), ai[i].method == AiryMethod::asymptotic ? 1.0 : 0.0});
  }
  d.tables.push_back(std::move(t));

  Table sup{"log_derivative_sup", {"delta", "a", "argmax", "rounds"}, {}};
  std::vector<LogDerivativeSup> sups(a.deltas.size());
  for_each_index(Exec::parallel, a.deltas.size(), [&](std::size_t i) { sups[i] = log_derivative_sup(a.deltas[i]); });
  for (std::size_t i = 0; i < a.deltas.size(); ++i) {
    sup.rows.push_back({a.deltas[i], sups[i].value, sups[i].argmax, double(sups[i].rounds)});
    CaseRecord r;
    r.id = "a(delta=" + num_id(a.deltas[i]) + ")";
    r.parameters["delta"] = a.deltas[i];
    r.results["a"] = sups[i].value;
    r.results["argmax"] = sups[i].argmax;
    r.config_hash = hash;
    d.records.push_back(r);
    if (a.deltas[i] == 0.0) {
      const double v = sups[i].value;
      const bool ok = std::abs(v + 0.4843) <= 5e-4 && v < -1.0 / 3.0;
      d.verdicts.push_back({"airy.a0_constant", ok, "a(0) = " + format_double(v) + ", expected -0.4843 +- 5e-4 and < -1/3",
                            {r.id}});
    }
  }
  d.tables.push_back(std::move(sup));

  // W[Ai(z), Ai(w z)] = e^{i pi/6} / (2 pi) with w = e^{-2 pi i/3}, at seeded random points
  std::mt19937_64 rng(s.run.seed);
  std::uniform_real_distribution<double> rad(0.0, 12.0), ang(-kPi, kPi);
  const cplx om = std::polar(1.0, -2.0 * kPi / 3.0), target = std::polar(1.0 / (2.0 * kPi), kPi / 6.0);
  double worst = 0.0;
  for (int i = 0; i < 20; ++i) {
    const cplx z = std::polar(rad(rng), ang(rng));
    const AiryBundle p = airy(z), q = airy(om * z);
    const cplx w = p.value() * om * q.derivative() - p.derivative() * q.value();
    const double scale = std::max(1.0, std::abs(p.value() * q.derivative()) + std::abs(p.derivative() * q.value()));
    worst = std::max(worst, std::abs(w - target) / (std::abs(target) * scale));
  }
  CaseRecord wr;
  wr.id = "wronskian";
  wr.parameters["points"] = 20.0;
  wr.parameters["seed"] = double(s.run.seed);
  wr.results["max_rel_defect"] = worst;
  wr.config_hash = hash;
  d.records.push_back(wr);
  d.verdicts.push_back({"airy.wronskian", worst <= 1e-9, "max relative defect " + format_double(worst), {"wronskian"}});

  const A0Value z0 = a0(0.0);
  CaseRecord r0;
  r0.id = "A0(0)";
  r0.results["re"] = z0.value().real();
  r0.results["im"] = z0.value().imag();
  r0.config_hash = hash;
  d.records.push_back(r0);
  const double e0 = std::abs(z0.value() - 1.0 / 3.0) * 3.0;
  d.verdicts.push_back({"airy.a0_at_zero", e0 <= 1e-9, "relative error " + format_double(e0), {"A0(0)"}});
  return d;
}

// ---- resolvent / homog -------------------------------------------------------

ReportDocument run_resolvent(const RunSpec& s) {
  const ResolventRunSpec& r = s.resolvent;
  r.rc.validate();
  const int N = r.N > 0 ? r.N : grid_order_for(r.rc.nu, r.rc.k);
  const ChebGrid g = build_grid(N);
  const DiffOps ops = build_diff_ops(g);
  ForcingSpec f;
  switch (r.forcing) {
    case ForcingShape::one: f = ForcingSpec::direct(Vec::Ones(g.size())); break;
    case ForcingShape::cosine: f = ForcingSpec::direct(cosine_profile(g)); break;
    case ForcingShape::pair_cosine: f = ForcingSpec::pair(Vec::Zero(g.size()), cosine_profile(g)); break;
  }
  const ResolventSolution sol = r.rc.bc == BoundaryCondition::non_slip
                                    ? solve_nonslip(r.rc, f, g, ops, r.path, r.source)
                                    : solve_navier(r.rc, f, g, ops);
  ReportDocument d = named("resolvent");
  CaseRecord rec;
  rec.id = "case";
  rec.parameters = {{"nu", r.rc.nu},
                    {"k", double(r.rc.k)},
                    {"lambda", r.rc.lambda},
                    {"epsilon", r.rc.epsilon},
                    {"bc", bc_name(r.rc.bc)},
                    {"N", double(N)}};
  add_bundle(rec.results, norms(sol, r.rc, g, ops));
  rec.results["c1_abs"] = std::abs(sol.c1);
  rec.results["c2_abs"] = std::abs(sol.c2);
  rec.config_hash = config_hash(s.text);
  bool finite = sol.w.allFinite() && sol.u1.allFinite() && sol.u2.allFinite();
  double defect = 0.0;
  if (r.rc.bc == BoundaryCondition::non_slip) {
    // velocity must vanish at the walls
    const double scale = std::max(sol.u1.cwiseAbs().maxCoeff(), 1e-300);
    defect = std::max({std::abs(sol.u1(0)), std::abs(sol.u1(N)), std::abs(sol.u2(0)), std::abs(sol.u2(N))}) / scale;
  } else {
    defect = std::max(std::abs(sol.w(0)), std::abs(sol.w(N))) / std::max(sol.w.cwiseAbs().maxCoeff(), 1e-300);
  }
  if (finite) rec.results["boundary_defect"] = defect;
  d.records.push_back(rec);
  d.tables.push_back(profile_table("solution", g, {{"w", &sol.w}, {"phi", &sol.phi}, {"u1", &sol.u1}, {"u2", &sol.u2}}));
  d.verdicts.push_back({"resolvent.boundary_conditions", finite && defect <= 1e-8,
                        finite ? "relative boundary defect " + format_double(defect) : "non-finite solution", {"case"}});
  return d;
}

ReportDocument run_homog(const RunSpec& s) {
  const ResolventCase& c = s.homog.rc;
  c.validate();
  const int N = s.homog.N > 0 ? s.homog.N : grid_order_for(c.nu, c.k);
  const ChebGrid g = build_grid(N);
  const DiffOps ops = build_diff_ops(g);
  const HomogeneousPair p = homogeneous_bvp(c, g, ops);
  ReportDocument d = named("homog");
  CaseRecord rec;
  rec.id = "case";
  rec.parameters = {{"nu", c.nu}, {"k", double(c.k)}, {"lambda", c.lambda}, {"N", double(N)}};
  double l1 = 0.0;
  for (int j = 0; j < g.size(); ++j) l1 += g.quad_weights(j) * (std::abs(p.w1(j)) + std::abs(p.w2(j)));
  rec.results["w1_w2_l1"] = l1;
  if (std::isfinite(p.log_abs_C11())) rec.results["log_abs_C11"] = p.log_abs_C11();
  rec.results["d_abs"] = std::abs(p.d);
  rec.config_hash = config_hash(s.text);
  std::vector<std::pair<std::string, const Vec*>> cols{{"w1", &p.w1}, {"w2", &p.w2}};
  HomogeneousPair q;
  if (airy_regime(c)) {
    q = homogeneous_airy(c, g, ops);
    const double e = std::max(l2_norm(g, Vec(q.w1 - p.w1)) / l2_norm(g, p.w1), l2_norm(g, Vec(q.w2 - p.w2)) / l2_norm(g, p.w2));
    rec.results["airy_bvp_rel"] = e;
    cols.push_back({"w1_airy", &q.w1});
    cols.push_back({"w2_airy", &q.w2});
    d.verdicts.push_back({"homog.airy_bvp_agreement", e <= 1e-6, "relative L2 difference " + format_double(e), {"case"}});
  } else {
    d.verdicts.push_back({"homog.airy_bvp_agreement", true, "case outside the Airy regime; BVP solution only", {"case"}});
  }
  d.records.push_back(rec);
  d.tables.push_back(profile_table("profiles", g, cols));
  return d;
}

// ---- sweeps and spectra ------------------------------------------------------

ReportDocument run_sweep(const RunSpec& s) {
  const SweepRunSpec& w = s.sweep;
  VerifyReport rep;
  switch (w.kind) {
    case SweepKind::navier_l2: rep = verify_navier_L2(w.sweep); break;
    case SweepKind::navier_hm1: rep = verify_navier_Hm1(w.sweep); break;
    case SweepKind::nonslip: rep = verify_nonslip(w.sweep); break;
    case SweepKind::c_bounds: {
      CBoundsSpec c;
      c.nu_values = w.sweep.nu_values;
      c.k_values = w.sweep.k_values;
      c.lambda_points = w.lambda_points;
      c.window_points = w.window_points;
      c.refine = w.sweep.refine;
      rep = verify_c_bounds(c);
      break;
    }
    case SweepKind::w12: {
      W12Spec c;
      c.nu_values = w.sweep.nu_values;
      c.k_values = w.sweep.k_values;
      c.lambda_values = w.sweep.lambda_list;
      c.refine = w.sweep.refine;
      rep = verify_w12_bounds(c);
      break;
    }
  }
  if (!w.fit) rep.fits.clear();
  ReportDocument d = named("sweep");
  add_verify_report(d, rep, config_hash(s.text));
  d.verdicts.back().key = "sweep." + rep.name;
  for (std::size_t i = 0; i < rep.fits.size(); ++i)
    d.plots.push_back(fit_plot("fit" + std::to_string(i), rep, rep.fits[i], rep.name + ": "));
  return d;
}

ReportDocument run_spectrum(const RunSpec& s) {
  const SpectrumRunSpec& sp = s.spectrum;
  const std::string hash = config_hash(s.text);
  ReportDocument d = named("spectrum");
  std::vector<double> gaps;
  Table eig{"eigenvalues", {"nu", "index", "re", "im"}, {}};
  VerifyReport rep;
  for (double nu : sp.nu_values) {
    ResolventCase c;
    c.nu = nu;
    c.k = sp.k;
    c.bc = sp.bc;
    c.validate();
    const int N = sp.N > 0 ? sp.N : grid_order_for(nu, sp.k);
    const ChebGrid g = build_grid(N);
    const DiffOps ops = build_diff_ops(g);
    const SpectralGapReport r = spectrum(c, g, ops, sp.pseudospectra);
    CaseRecord rec;
    rec.id = "nu=" + num_id(nu);
    rec.parameters = {{"nu", nu}, {"k", double(sp.k)}, {"bc", bc_name(sp.bc)}, {"N", double(N)}};
    rec.results["gap"] = r.gap;
    rec.results["gap_scaled"] = r.gap / std::cbrt(nu * double(sp.k) * sp.k);
    if (sp.bc == BoundaryCondition::navier_slip) rec.results["psi"] = r.psi;
    if (sp.pseudospectra) {
      rec.results["pseudo_abscissa"] = r.pseudo_abscissa;
      rec.results["pseudo_level"] = r.pseudo_level;
    }
    rec.config_hash = hash;
    d.records.push_back(rec);
    for (std::size_t i = 0; i < std::min<std::size_t>(20, r.eigenvalues.size()); ++i)
      eig.rows.push_back({nu, double(i), r.eigenvalues[i].real(), r.eigenvalues[i].imag()});
    gaps.push_back(r.gap);
    SweepRow row;
    row.nu = nu;
    row.k = sp.k;
    row.N = N;
    row.values["gap"] = r.gap;
    rep.rows.push_back(row);
  }
  d.tables.push_back(std::move(eig));
  const auto [mn, mx] = std::minmax_element(sp.nu_values.begin(), sp.nu_values.end());
  if (sp.fit && sp.nu_values.size() >= 2 && std::log10(*mx / *mn) >= 2.0 - 1e-9) {
    ScalingFit f = fit_power("gap vs nu (k=" + std::to_string(sp.k) + ")", sp.nu_values, gaps, 1.0 / 3.0);
    rep.fits.push_back(f);
    f.name = "spectrum: " + f.name;
    d.fits.push_back(f);
    d.plots.push_back(fit_plot("gap", rep, rep.fits[0], "spectrum: "));
    d.verdicts.push_back({"spectrum.gap_exponent", f.pass,
                          "exponent " + format_double(f.exponent) + ", r2 " + format_double(f.r2), {f.name}});
  } else {
    bool ok = true;
    for (double gp : gaps) ok = ok && gp > 0.0;
    d.verdicts.push_back({"spectrum.gap_positive", ok, "no exponent fit requested", {}});
  }
  return d;
}

// ---- evolution ---------------------------------------------------------------

ReportDocument run_evolve(const RunSpec& s) {
  const EvolveRunSpec& e = s.evolve;
  const int N = e.N > 0 ? e.N : grid_order_for(e.nu, e.k);
  const ChebGrid g = build_grid(N);
  const DiffOps ops = build_diff_ops(g);
  EvolutionCase c;
  c.nu = e.nu;
  c.k = e.k;
  c.bc = e.bc;
  c.dt = e.dt;
  c.t_end = e.t_end;
  if (e.initial == InitialShape::clamped) {
    c.omega0 = vorticity_from_stream(clamped_stream(g), e.k, ops);
  } else {
    c.omega0.resize(g.size());
    for (int j = 0; j < g.size(); ++j) c.omega0(j) = std::sin(kPi * g.nodes(j));
  }
  if (e.forced) {
    const Vec prof = cosine_profile(g);
    c.forcing = [prof](double t) { return std::make_pair(Vec(Vec::Zero(prof.size())), Vec(std::exp(-t) * prof)); };
    c.extend_until_decayed = false;
  }
  const StreamSolver stream(e.k, ops);
  Table series{"series", {"t", "w_l2", "u_linf"}, {}};
  long calls = 0;
  RunOptions opt;
  opt.sample_every = e.sample_every;
  opt.observer = [&](const EvolutionState& st) {
    if (calls++ % e.sample_every) return;
    const auto [u1, u2] = recover_velocity(stream.solve(st.omega), e.k, ops);
    double umax = 0.0;
    for (int j = 0; j < g.size(); ++j) umax = std::max(umax, std::hypot(std::abs(u1(j)), std::abs(u2(j))));
    series.rows.push_back({st.t, l2_norm(g, st.omega), umax});
  };
  const SpaceTimeLedger led = run(c, g, ops, opt);

  ReportDocument d = named("evolve");
  CaseRecord rec;
  rec.id = "ledger";
  rec.parameters = {{"nu", e.nu}, {"k", double(e.k)}, {"bc", bc_name(e.bc)}, {"N", double(N)},
                    {"dt", c.step_size()}, {"forced", e.forced ? "true" : "false"}};
  rec.results = {{"u_linf_linf", led.u_linf_linf}, {"u_l2l2", led.u_l2l2}, {"w_l2l2", led.w_l2l2},
                 {"w_linf_l2", led.w_linf_l2}, {"boundary_w_linf_l2", led.boundary_w_linf_l2},
                 {"rho_w_l2l2", led.rho_w_l2l2}, {"rho_w_linf_l2", led.rho_w_linf_l2},
                 {"data_functional", led.data_functional}, {"lhs", led.lhs}, {"ratio", led.ratio},
                 {"t_final", led.t_final}, {"steps", double(led.steps)}, {"max_moment", led.max_moment}};
  rec.config_hash = config_hash(s.text);
  bool ok = std::isfinite(led.ratio);
  std::string detail = "space-time ratio " + format_double(led.ratio);
  if (!e.forced) {
    const DecayFit f = fit_decay(led.decay_samples, e.nu, e.k);
    if (f.ok) {
      rec.results["decay_rate"] = f.rate;
      rec.results["decay_rate_scaled"] = f.rate / std::cbrt(e.nu * double(e.k) * e.k);
      rec.results["decay_r2"] = f.r2;
      detail += ", decay rate " + format_double(f.rate);
    }
    ok = ok && f.ok && f.rate > 0.0;
  }
  d.records.push_back(rec);
  PlotSpec p;
  p.name = "decay";
  p.title = "|w(t)|_2";
  p.x_label = "t";
  p.y_label = "|w|_2";
  PlotSeries ps;
  ps.label = "w_l2";
  for (const auto& r : series.rows)
    if (r[0] > 0.0) ps.x.push_back(r[0]), ps.y.push_back(r[1]);
  p.series.push_back(ps);
  d.plots.push_back(p);
  d.tables.push_back(std::move(series));
  d.verdicts.push_back({"evolve.ledger", ok, detail, {"ledger"}});
  return d;
}

// ---- nonlinear ---------------------------------------------------------------

ReportDocument run_threshold(const RunSpec& s) {
  const ThresholdRunSpec& th = s.threshold;
  const std::string hash = config_hash(s.text);
  ReportDocument d = named("threshold");
  double c_max = 0.0;
  bool all_ok = true;
  std::vector<std::string> refs;
  for (double nu : th.probe.nu_values) {
    NonlinearCase nc;
    nc.nu = nu;
    nc.k_max = th.probe.k_max;
    nc.N = th.probe.N;
    nc.t_end = th.probe.t_end;
    const NonlinearModel model(nc);
    for (double a : th.amplitudes) {
      const double amp = th.probe.scale_by_sqrt_nu ? a * std::sqrt(nu) : a;
      const SimulationResult r = model.simulate(model.initial_state(amp));
      CaseRecord rec;
      rec.id = "nu=" + num_id(nu) + ",amp=" + num_id(amp);
      rec.parameters = {{"nu", nu}, {"amplitude", amp}, {"k_max", double(nc.k_max)}, {"N", double(model.grid().order)},
                        {"dt", model.dt()}, {"t_end", r.t_final}};
      rec.results = {{"verdict", std::string(to_string(r.verdict))},
                     {"energy_total", r.energy.total},
                     {"energy_e0", r.energy.e0},
                     {"energy_at_tenth", r.energy_at_tenth},
                     {"C", amp > 0.0 ? r.energy.total / amp : 0.0},
                     {"guard_tripped", r.guard_tripped ? "true" : "false"},
                     {"max_cfl", r.max_cfl},
                     {"max_tail", r.max_tail},
                     {"max_moment", r.max_moment},
                     {"max_reality_defect", r.max_reality_defect},
                     {"u_linf_l2", r.u_linf_l2},
                     {"initial_h2", r.initial_h2},
                     {"steps", double(r.steps)}};
      for (std::size_t k = 0; k < r.energy.ek.size(); ++k) rec.results["E_" + std::to_string(k + 1)] = r.energy.ek[k];
      if (!r.note.empty()) rec.results["note"] = r.note;
      rec.config_hash = hash;
      d.records.push_back(rec);
      refs.push_back(rec.id);
      if (amp > 0.0) c_max = std::max(c_max, r.energy.total / amp);
      all_ok = all_ok && r.verdict == Verdict::stable && !r.guard_tripped;
      Table t{"series_" + std::to_string(d.tables.size()), {"nu", "amplitude", "t", "energy_total", "w_l2", "u_l2", "tail"}, {}};
      for (const auto& q : r.series) t.rows.push_back({nu, amp, q.t, q.energy_total, q.w_l2, q.u_l2, q.tail});
      d.tables.push_back(std::move(t));
    }
  }
  CaseRecord cr;
  cr.id = "constant";
  cr.results["C"] = c_max;
  cr.config_hash = hash;
  d.records.push_back(cr);
  refs.push_back("constant");
  d.verdicts.push_back({"threshold.small_data_stable", all_ok,
                        "sum_k E_k <= C |u0|_H2 with C = " + format_double(c_max), refs});

  if (th.probe.amplitude_lo > 0.0 || th.probe.amplitude_hi > 0.0) {
    // exploratory: recorded, never a verdict
    const ThresholdResult tr = probe_threshold(th.probe);
    for (std::size_t i = 0; i < tr.runs.size(); ++i) {
      const ProbeRun& p = tr.runs[i];
      CaseRecord rec;
      rec.id = "probe/" + std::to_string(i);
      rec.parameters = {{"nu", p.nu}, {"amplitude", p.amplitude}};
      rec.results = {{"verdict", std::string(to_string(p.verdict))}, {"energy_ratio", p.energy_ratio},
                     {"energy_total", p.energy_total}};
      rec.config_hash = hash;
      d.records.push_back(rec);
    }
    CaseRecord sum;
    sum.id = "probe/summary";
    for (std::size_t i = 0; i < tr.thresholds.size(); ++i)
      if (std::isfinite(tr.thresholds[i])) sum.results["threshold_nu=" + num_id(th.probe.nu_values[i])] = tr.thresholds[i];
    sum.results["monotone"] = std::string(tr.monotone ? "true" : "false");
    if (tr.fitted_beta) sum.results["fitted_beta_exploratory"] = *tr.fitted_beta;
    std::string flags;
    for (const auto& f : tr.flags) flags += (flags.empty() ? "" : "; ") + f;
    if (!flags.empty()) sum.results["flags"] = flags;
    sum.config_hash = hash;
    d.records.push_back(sum);
  }
  return d;
}

// ---- report ------------------------------------------------------------------

ReportDocument run_report(const RunSpec& s) {
  if (s.report.inputs.empty()) throw std::invalid_argument("report: no input files");
  std::vector<ReportDocument> docs;
  for (const auto& path : s.report.inputs) {
    std::ifstream f(path, std::ios::binary);
    if (!f) throw std::runtime_error("cannot read " + path);
    std::stringstream ss;
    ss << f.rdbuf();
    docs.push_back(from_json(ss.str()));
  }
  return merge(docs, s.report.name);
}

namespace {

// record ids become "<command>/<id>" so reports from different commands merge
ReportDocument scoped(ReportDocument d) {
  std::map<std::string, std::string> renamed;
  for (CaseRecord& r : d.records) {
    const std::string id = d.name + "/" + r.id;
    renamed[r.id] = id;
    r.id = id;
  }
  for (VerdictEntry& v : d.verdicts)
    for (std::string& ref : v.refs)
      if (auto it = renamed.find(ref); it != renamed.end()) ref = it->second;
  return d;
}

}  // namespace

ReportDocument run_command(const RunSpec& s) {
  const std::string& c = s.command;
  if (c == "airy") return scoped(run_airy(s));
  if (c == "resolvent") return scoped(run_resolvent(s));
  if (c == "homog") return scoped(run_homog(s));
  if (c == "sweep") return scoped(run_sweep(s));
  if (c == "spectrum") return scoped(run_spectrum(s));
  if (c == "evolve") return scoped(run_evolve(s));
  if (c == "threshold") return scoped(run_threshold(s));
  if (c == "report") return run_report(s);
  throw std::invalid_argument("unknown command '" + c + "'");
}

}  // namespace couette
