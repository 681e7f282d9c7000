#include "couette/config.hpp"
#include "couette/airy.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <functional>
#include <map>
#include <set>
#include <sstream>

namespace couette {

ConfigError::ConfigError(std::string key_path, int line, const std::string& reason)
    : std::invalid_argument(key_path + " (line " + std::to_string(line) + "): " + reason),
      key_path_(std::move(key_path)),
      line_(line) {}

const std::vector<std::string>& config_commands() {
  static const std::vector<std::string> c{"airy", "resolvent", "homog", "sweep", "spectrum",
                                          "evolve", "threshold", "report"};
  return c;
}

namespace {

struct Entry {
  std::string path, value;
  int line = 0;
};

std::string trim(const std::string& s) {
  const auto b = s.find_first_not_of(" \t\r");
  if (b == std::string::npos) return "";
  const auto e = s.find_last_not_of(" \t\r");
  return s.substr(b, e - b + 1);
}

std::vector<std::string> split_list(const std::string& s) {
  std::vector<std::string> out;
  std::stringstream ss(s);
  std::string item;
  while (std::getline(ss, item, ',')) {
    item = trim(item);
    if (!item.empty()) out.push_back(item);
  }
  return out;
}

double to_double(const Entry& e, const std::string& text) {
  double v = 0.0;
  const char* end = text.data() + text.size();
  const auto [p, ec] = std::from_chars(text.data(), end, v);
  if (ec != std::errc() || p != end || !std::isfinite(v))
    throw ConfigError(e.path, e.line, "expected a number, got '" + text + "'");
  return v;
}

long long to_integer(const Entry& e, const std::string& text) {
  long long v = 0;
  const char* end = text.data() + text.size();
  const auto [p, ec] = std::from_chars(text.data(), end, v);
  if (ec != std::errc() || p != end) throw ConfigError(e.path, e.line, "expected an integer, got '" + text + "'");
  return v;
}

double num(const Entry& e) { return to_double(e, e.value); }
int integer(const Entry& e) {
  const long long v = to_integer(e, e.value);
  if (v < -2147483647LL || v > 2147483647LL) throw ConfigError(e.path, e.line, "integer out of range");
  return int(v);
}

bool boolean(const Entry& e) {
  std::string v = e.value;
  std::transform(v.begin(), v.end(), v.begin(), [](unsigned char c) { return char(std::tolower(c)); });
  if (v == "true" || v == "yes" || v == "on" || v == "1") return true;
  if (v == "false" || v == "no" || v == "off" || v == "0") return false;
  throw ConfigError(e.path, e.line, "expected a boolean, got '" + e.value + "'");
}

std::vector<double> num_list(const Entry& e) {
  std::vector<double> out;
  for (const std::string& s : split_list(e.value)) out.push_back(to_double(e, s));
  if (out.empty()) throw ConfigError(e.path, e.line, "expected a non-empty number list");
  return out;
}

std::vector<int> int_list(const Entry& e) {
  std::vector<int> out;
  for (const std::string& s : split_list(e.value)) out.push_back(int(to_integer(e, s)));
  if (out.empty()) throw ConfigError(e.path, e.line, "expected a non-empty integer list");
  return out;
}

template <class T>
T choice(const Entry& e, const std::map<std::string, T>& options) {
  const auto it = options.find(e.value);
  if (it != options.end()) return it->second;
  std::string names;
  for (const auto& [k, v] : options) names += (names.empty() ? "" : ", ") + k;
  throw ConfigError(e.path, e.line, "expected one of {" + names + "}, got '" + e.value + "'");
}

void require(bool ok, const Entry& e, const std::string& reason) {
  if (!ok) throw ConfigError(e.path, e.line, reason);
}

double positive_nu(const Entry& e) {
  const double v = num(e);
  require(v > 0.0, e, "nu must be positive");
  return v;
}

std::vector<double> positive_nu_list(const Entry& e) {
  const std::vector<double> v = num_list(e);
  for (double x : v) require(x > 0.0, e, "nu must be positive");
  return v;
}

int wavenumber(const Entry& e) {
  const int k = integer(e);
  require(k != 0, e, "|k| must be >= 1");
  return k;
}

int order(const Entry& e) {
  const int n = integer(e);
  require(n == 0 || (n >= 16 && n <= kMaxOrder), e, "N must be 0 (order rule) or in [16, 1024]");
  return n;
}

const std::map<std::string, BoundaryCondition> kBc{{"navier_slip", BoundaryCondition::navier_slip},
                                                   {"non_slip", BoundaryCondition::non_slip}};

using Setter = std::function<void(const Entry&)>;

std::map<std::string, Setter> bindings(RunSpec& s) {
  std::map<std::string, Setter> b;
  // run
  b["run.jobs"] = [&](const Entry& e) {
    s.run.jobs = integer(e);
    require(s.run.jobs >= 0, e, "jobs must be >= 0");
  };
  b["run.seed"] = [&](const Entry& e) {
    const long long v = to_integer(e, e.value);
    require(v >= 0, e, "seed must be >= 0");
    s.run.seed = std::uint64_t(v);
  };
  b["run.formats"] = [&](const Entry& e) {
    s.run.formats.clear();
    for (const std::string& f : split_list(e.value)) {
      require(f == "csv" || f == "json" || f == "svg", e, "unknown format '" + f + "'");
      s.run.formats.push_back(f);
    }
    require(!s.run.formats.empty(), e, "formats must not be empty");
  };
  // airy
  b["airy.re_min"] = [&](const Entry& e) { s.airy.re_min = num(e); };
  b["airy.re_max"] = [&](const Entry& e) { s.airy.re_max = num(e); };
  b["airy.points"] = [&](const Entry& e) {
    s.airy.points = integer(e);
    require(s.airy.points >= 1 && s.airy.points <= 100000, e, "points must be in [1, 100000]");
  };
  b["airy.im"] = [&](const Entry& e) { s.airy.im = num(e); };
  b["airy.deltas"] = [&](const Entry& e) {
    s.airy.deltas = num_list(e);
    for (double d : s.airy.deltas) require(d >= 0.0 && d <= kDelta0, e, "deltas must lie in [0, 0.15]");
  };
  // resolvent
  b["resolvent.nu"] = [&](const Entry& e) { s.resolvent.rc.nu = positive_nu(e); };
  b["resolvent.k"] = [&](const Entry& e) { s.resolvent.rc.k = wavenumber(e); };
  b["resolvent.lambda"] = [&](const Entry& e) { s.resolvent.rc.lambda = num(e); };
  b["resolvent.epsilon"] = [&](const Entry& e) {
    s.resolvent.rc.epsilon = num(e);
    require(s.resolvent.rc.epsilon >= 0.0, e, "epsilon must be nonnegative");
  };
  b["resolvent.bc"] = [&](const Entry& e) { s.resolvent.rc.bc = choice(e, kBc); };
  b["resolvent.N"] = [&](const Entry& e) { s.resolvent.N = order(e); };
  b["resolvent.forcing"] = [&](const Entry& e) {
    s.resolvent.forcing = choice<ForcingShape>(
        e, {{"one", ForcingShape::one}, {"cosine", ForcingShape::cosine}, {"pair_cosine", ForcingShape::pair_cosine}});
  };
  b["resolvent.path"] = [&](const Entry& e) {
    s.resolvent.path =
        choice<NonslipPath>(e, {{"decomposed", NonslipPath::decomposed}, {"monolithic", NonslipPath::monolithic}});
  };
  b["resolvent.source"] = [&](const Entry& e) {
    s.resolvent.source =
        choice<HomogeneousSource>(e, {{"airy", HomogeneousSource::airy}, {"bvp", HomogeneousSource::bvp}});
  };
  // homog
  b["homog.nu"] = [&](const Entry& e) { s.homog.rc.nu = positive_nu(e); };
  b["homog.k"] = [&](const Entry& e) { s.homog.rc.k = wavenumber(e); };
  b["homog.lambda"] = [&](const Entry& e) { s.homog.rc.lambda = num(e); };
  b["homog.N"] = [&](const Entry& e) { s.homog.N = order(e); };
  // sweep
  b["sweep.kind"] = [&](const Entry& e) {
    s.sweep.kind = choice<SweepKind>(e, {{"navier_l2", SweepKind::navier_l2},
                                         {"navier_hm1", SweepKind::navier_hm1},
                                         {"nonslip", SweepKind::nonslip},
                                         {"c_bounds", SweepKind::c_bounds},
                                         {"w12", SweepKind::w12}});
  };
  b["sweep.nu"] = [&](const Entry& e) { s.sweep.sweep.nu_values = positive_nu_list(e); };
  b["sweep.k"] = [&](const Entry& e) {
    s.sweep.sweep.k_values = int_list(e);
    for (int k : s.sweep.sweep.k_values) require(k != 0, e, "|k| must be >= 1");
  };
  b["sweep.lambda"] = [&](const Entry& e) { s.sweep.sweep.lambda_list = num_list(e); };
  b["sweep.strategy"] = [&](const Entry& e) {
    s.sweep.sweep.lambda_strategy = choice<SweepSpec::LambdaStrategy>(
        e, {{"sup", SweepSpec::LambdaStrategy::sup_search}, {"fixed", SweepSpec::LambdaStrategy::fixed_list}});
  };
  b["sweep.data"] = [&](const Entry& e) { s.sweep.sweep.data = choice<DataKind>(e, {{"l2", DataKind::l2}, {"hm1", DataKind::hm1}}); };
  b["sweep.refine"] = [&](const Entry& e) {
    s.sweep.sweep.refine = integer(e);
    require(s.sweep.sweep.refine >= 1 && s.sweep.sweep.refine <= 4, e, "refine must be in [1, 4]");
  };
  b["sweep.fit"] = [&](const Entry& e) { s.sweep.fit = boolean(e); };
  b["sweep.lambda_points"] = [&](const Entry& e) {
    s.sweep.lambda_points = integer(e);
    require(s.sweep.lambda_points >= 3, e, "lambda_points must be >= 3");
  };
  b["sweep.window_points"] = [&](const Entry& e) {
    s.sweep.window_points = integer(e);
    require(s.sweep.window_points >= 1, e, "window_points must be >= 1");
  };
  // spectrum
  b["spectrum.nu"] = [&](const Entry& e) { s.spectrum.nu_values = positive_nu_list(e); };
  b["spectrum.k"] = [&](const Entry& e) { s.spectrum.k = wavenumber(e); };
  b["spectrum.bc"] = [&](const Entry& e) { s.spectrum.bc = choice(e, kBc); };
  b["spectrum.N"] = [&](const Entry& e) { s.spectrum.N = order(e); };
  b["spectrum.pseudospectra"] = [&](const Entry& e) { s.spectrum.pseudospectra = boolean(e); };
  b["spectrum.fit"] = [&](const Entry& e) { s.spectrum.fit = boolean(e); };
  // evolve
  b["evolve.nu"] = [&](const Entry& e) { s.evolve.nu = positive_nu(e); };
  b["evolve.k"] = [&](const Entry& e) { s.evolve.k = wavenumber(e); };
  b["evolve.bc"] = [&](const Entry& e) { s.evolve.bc = choice(e, kBc); };
  b["evolve.dt"] = [&](const Entry& e) {
    s.evolve.dt = num(e);
    require(s.evolve.dt >= 0.0, e, "dt must be positive (0 selects the accuracy rule)");
  };
  b["evolve.t_end"] = [&](const Entry& e) {
    s.evolve.t_end = num(e);
    require(s.evolve.t_end >= 0.0, e, "t_end must be nonnegative");
  };
  b["evolve.N"] = [&](const Entry& e) { s.evolve.N = order(e); };
  b["evolve.initial"] = [&](const Entry& e) {
    s.evolve.initial = choice<InitialShape>(e, {{"clamped", InitialShape::clamped}, {"sine", InitialShape::sine}});
  };
  b["evolve.forced"] = [&](const Entry& e) { s.evolve.forced = boolean(e); };
  b["evolve.sample_every"] = [&](const Entry& e) {
    s.evolve.sample_every = integer(e);
    require(s.evolve.sample_every >= 1, e, "sample_every must be >= 1");
  };
  // threshold
  b["threshold.nu"] = [&](const Entry& e) { s.threshold.probe.nu_values = positive_nu_list(e); };
  b["threshold.amplitude_lo"] = [&](const Entry& e) { s.threshold.probe.amplitude_lo = num(e); };
  b["threshold.amplitude_hi"] = [&](const Entry& e) { s.threshold.probe.amplitude_hi = num(e); };
  b["threshold.scale_by_sqrt_nu"] = [&](const Entry& e) { s.threshold.probe.scale_by_sqrt_nu = boolean(e); };
  b["threshold.k_max"] = [&](const Entry& e) { s.threshold.probe.k_max = integer(e); };
  b["threshold.t_end"] = [&](const Entry& e) {
    s.threshold.probe.t_end = num(e);
    require(s.threshold.probe.t_end >= 0.0, e, "t_end must be nonnegative");
  };
  b["threshold.N"] = [&](const Entry& e) { s.threshold.probe.N = order(e); };
  b["threshold.bracket"] = [&](const Entry& e) { s.threshold.probe.bracket = num(e); };
  b["threshold.max_bisections"] = [&](const Entry& e) { s.threshold.probe.max_bisections = integer(e); };
  b["threshold.amplitudes"] = [&](const Entry& e) {
    s.threshold.amplitudes = num_list(e);
    for (double a : s.threshold.amplitudes) require(a >= 0.0, e, "amplitudes must be nonnegative");
  };
  // report
  b["report.inputs"] = [&](const Entry& e) { s.report.inputs = split_list(e.value); };
  b["report.name"] = [&](const Entry& e) {
    s.report.name = e.value;
    require(!e.value.empty() && e.value.find_first_of("/\\ ") == std::string::npos, e,
            "name must be a plain file stem");
  };
  return b;
}

// Cross-key checks; errors point at the most relevant key that was set.
void validate_sections(RunSpec& s, const std::map<std::string, Entry>& seen, const std::set<std::string>& sections) {
  auto where = [&](const std::vector<std::string>& keys, const std::string& section) {
    for (const std::string& k : keys)
      if (auto it = seen.find(k); it != seen.end()) return it->second;
    Entry e;
    e.path = section;
    if (auto it = seen.find(section); it != seen.end()) e.line = it->second.line;
    return e;
  };
  auto wrap = [&](const std::string& section, const std::vector<std::string>& keys, const std::function<void()>& f) {
    if (!sections.count(section)) return;
    try {
      f();
    } catch (const ConfigError&) {
      throw;
    } catch (const std::invalid_argument& ex) {
      const Entry e = where(keys, section);
      throw ConfigError(e.path, e.line, ex.what());
    }
  };

  wrap("airy", {"airy.re_max", "airy.re_min"}, [&] {
    if (!(s.airy.re_max >= s.airy.re_min)) throw std::invalid_argument("re_max must be >= re_min");
  });
  wrap("sweep", {"sweep.nu", "sweep.k", "sweep.fit", "sweep.lambda"}, [&] {
    const SweepKind k = s.sweep.kind;
    if (k == SweepKind::navier_l2 || k == SweepKind::navier_hm1 || k == SweepKind::nonslip) {
      s.sweep.sweep.bc = k == SweepKind::nonslip ? BoundaryCondition::non_slip : BoundaryCondition::navier_slip;
      if (k == SweepKind::navier_hm1) s.sweep.sweep.data = DataKind::hm1;
      s.sweep.sweep.validate(s.sweep.fit);
    } else {
      if (s.sweep.sweep.nu_values.empty() || s.sweep.sweep.k_values.empty())
        throw std::invalid_argument("nu and k lists must not be empty");
      if (k == SweepKind::w12 && s.sweep.sweep.lambda_list.empty())
        throw std::invalid_argument("w12 sweeps need a lambda list");
    }
  });
  wrap("evolve", {"evolve.dt", "evolve.nu", "evolve.k"}, [&] {
    if (s.evolve.dt > EvolutionCase::dt_rule(s.evolve.nu, s.evolve.k) * (1 + 1e-12))
      throw std::invalid_argument("dt exceeds the accuracy rule 0.1 min(1/|k|, nu^{-1/3}|k|^{-2/3})");
    if (s.evolve.forced && s.evolve.t_end == 0.0) throw std::invalid_argument("t_end must be positive for forced runs");
  });
  wrap("threshold", {"threshold.nu", "threshold.amplitude_lo", "threshold.amplitude_hi", "threshold.k_max"}, [&] {
    const ThresholdSpec& p = s.threshold.probe;
    if (p.amplitude_lo == 0.0 && p.amplitude_hi == 0.0) {
      // single-amplitude runs only
      if (s.threshold.amplitudes.empty()) throw std::invalid_argument("set amplitudes or an amplitude bracket");
      ThresholdSpec q = p;
      q.amplitude_lo = 1.0;
      q.amplitude_hi = 2.0;
      q.validate();
    } else {
      p.validate();
    }
  });
  wrap("report", {"report.inputs"}, [&] {
    if (s.report.inputs.empty()) throw std::invalid_argument("report needs at least one input");
  });
}

}  // namespace

RunSpec parse_config(const std::string& text, const std::string& command) {
  const auto& cmds = config_commands();
  if (std::find(cmds.begin(), cmds.end(), command) == cmds.end())
    throw std::invalid_argument("unknown command '" + command + "'");

  RunSpec s;
  s.command = command;
  s.text = text;
  s.sweep.sweep.nu_values = {1e-3, 1e-4, 1e-5, 1e-6};
  s.sweep.sweep.k_values = {1};
  s.threshold.probe.nu_values = {1e-3};
  s.threshold.amplitudes = {0.01};
  s.threshold.probe.scale_by_sqrt_nu = true;

  const std::set<std::string> known{"run", "airy", "resolvent", "homog", "sweep",
                                    "spectrum", "evolve", "threshold", "report"};
  const std::map<std::string, Setter> bind = bindings(s);
  std::map<std::string, Entry> seen;
  std::set<std::string> sections{command};
  if (command == "report") sections.erase("report");  // inputs usually come from the command line

  std::istringstream in(text);
  std::string raw, section;
  int line = 0;
  while (std::getline(in, raw)) {
    ++line;
    std::string l = raw;
    if (const auto h = l.find('#'); h != std::string::npos) l = l.substr(0, h);
    l = trim(l);
    if (l.empty()) continue;
    if (l.front() == '[') {
      if (l.back() != ']') throw ConfigError(l, line, "malformed section header");
      section = trim(l.substr(1, l.size() - 2));
      if (!known.count(section)) throw ConfigError(section, line, "unknown section");
      if (seen.count(section)) throw ConfigError(section, line, "duplicate section");
      Entry e;
      e.path = section;
      e.line = line;
      seen[section] = e;
      sections.insert(section);
      continue;
    }
    const auto eq = l.find('=');
    if (eq == std::string::npos) throw ConfigError(section.empty() ? l : section + "." + l, line, "expected key = value");
    const std::string key = trim(l.substr(0, eq));
    if (section.empty()) throw ConfigError(key, line, "key outside a section");
    Entry e;
    e.path = section + "." + key;
    e.value = trim(l.substr(eq + 1));
    e.line = line;
    const auto it = bind.find(e.path);
    if (it == bind.end()) throw ConfigError(e.path, line, "unknown key");
    if (seen.count(e.path)) throw ConfigError(e.path, line, "duplicate key");
    if (e.value.empty()) throw ConfigError(e.path, line, "missing value");
    it->second(e);
    seen[e.path] = e;
  }
  validate_sections(s, seen, sections);
  return s;
}

}  // namespace couette
