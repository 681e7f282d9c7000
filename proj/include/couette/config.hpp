#pragma once

#include <cstdint>
#include <stdexcept>
#include <string>
#include <vector>

#include "couette/evolution.hpp"
#include "couette/harness.hpp"
#include "couette/nonlinear.hpp"

namespace couette {

// Raised for unknown keys, type mismatches and constraint violations. The
// message starts with "<section>.<key> (line N): ".
class ConfigError : public std::invalid_argument {
 public:
  ConfigError(std::string key_path, int line, const std::string& reason);
  const std::string& key_path() const { return key_path_; }
  int line() const { return line_; }

 private:
  std::string key_path_;
  int line_;
};

struct RunSettings {
  int jobs = 0;  // 0: OpenMP default
  std::uint64_t seed = 20240611;
  std::vector<std::string> formats{"csv", "json"};
};

struct AiryRunSpec {
  double re_min = -4.0, re_max = 4.0;
  int points = 17;
  double im = 0.0;
  std::vector<double> deltas{0.0, 0.05, 0.1, 0.15};  // for a(delta)
};

enum class ForcingShape { one, cosine, pair_cosine };

struct ResolventRunSpec {
  ResolventCase rc;
  int N = 0;  // 0: order rule
  ForcingShape forcing = ForcingShape::one;
  NonslipPath path = NonslipPath::decomposed;
  HomogeneousSource source = HomogeneousSource::bvp;
};

struct HomogRunSpec {
  ResolventCase rc{1e-3, 1, 0.0, 0.0, BoundaryCondition::non_slip};
  int N = 0;
};

enum class SweepKind { navier_l2, navier_hm1, nonslip, c_bounds, w12 };

struct SweepRunSpec {
  SweepKind kind = SweepKind::navier_l2;
  SweepSpec sweep;
  bool fit = true;
  int lambda_points = 81, window_points = 11;  // c_bounds
};

struct SpectrumRunSpec {
  std::vector<double> nu_values{1e-3, 1e-4, 1e-5};
  int k = 1;
  BoundaryCondition bc = BoundaryCondition::non_slip;
  int N = 0;
  bool pseudospectra = true;
  bool fit = true;
};

enum class InitialShape { clamped, sine };

struct EvolveRunSpec {
  double nu = 1e-3;
  int k = 1;
  BoundaryCondition bc = BoundaryCondition::non_slip;
  double dt = 0.0;
  double t_end = 0.0;
  int N = 0;
  InitialShape initial = InitialShape::clamped;
  bool forced = false;  // f1 = 0, f2 = e^{-t} cos(pi y / 2)
  int sample_every = 1;
};

struct ThresholdRunSpec {
  ThresholdSpec probe;
  std::vector<double> amplitudes;  // single runs at these |u0|_{H^2} (in units of nu^{1/2} if scaled)
};

struct ReportRunSpec {
  std::vector<std::string> inputs;  // JSON reports to merge
  std::string name = "report";
};

struct RunSpec {
  std::string command;
  RunSettings run;
  AiryRunSpec airy;
  ResolventRunSpec resolvent;
  HomogRunSpec homog;
  SweepRunSpec sweep;
  SpectrumRunSpec spectrum;
  EvolveRunSpec evolve;
  ThresholdRunSpec threshold;
  ReportRunSpec report;
  std::string text;  // the configuration as read, for provenance
};

// Line-oriented `key = value` text with [section] headers and # comments.
// Sections: run, airy, resolvent, homog, sweep, spectrum, evolve, threshold,
// report. Lists are comma separated. Unset keys keep their defaults.
RunSpec parse_config(const std::string& text, const std::string& command);

const std::vector<std::string>& config_commands();

}  // namespace couette
