#include <fstream>
#include <iostream>
#include <sstream>

#include "CLI11.hpp"
#include "couette/commands.hpp"
#include "couette/parallel.hpp"

namespace {

struct Flags {
  std::string config;
  std::string out = "out";
  int jobs = -1;
  long long seed = -1;
  std::vector<std::string> formats;
  std::vector<std::string> inputs;  // report only
};

std::string read_file(const std::string& path) {
  std::ifstream f(path, std::ios::binary);
  if (!f) throw std::runtime_error("cannot read " + path);
  std::stringstream ss;
  ss << f.rdbuf();
  return ss.str();
}

int execute(const std::string& command, const Flags& fl) {
  using namespace couette;
  const std::string text = fl.config.empty() ? std::string() : read_file(fl.config);
  RunSpec spec = parse_config(text, command);
  if (fl.jobs >= 0) spec.run.jobs = fl.jobs;
  if (fl.seed >= 0) spec.run.seed = std::uint64_t(fl.seed);
  if (!fl.formats.empty()) spec.run.formats = fl.formats;
  if (!fl.inputs.empty()) spec.report.inputs = fl.inputs;
  set_jobs(spec.run.jobs);

  ReportDocument doc = run_command(spec);
  for (const std::string& f : spec.run.formats) emit(doc, parse_format(f), fl.out);
  for (const VerdictEntry& v : doc.verdicts)
    std::cout << (v.pass ? "PASS " : "FAIL ") << v.key << (v.detail.empty() ? "" : ": " + v.detail) << "\n";
  for (const std::string& f : doc.emitted) std::cout << "wrote " << (std::filesystem::path(fl.out) / f).string() << "\n";
  return doc.pass() ? 0 : 1;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Couette flow resolvent, Airy and evolution verification toolkit"};
  app.set_version_flag("--version", std::string(couette::kToolVersion));
  app.require_subcommand(1);
  Flags fl;
  const std::map<std::string, std::string> help{
      {"airy", "Airy and A0 value tables, a(delta) suprema"},
      {"resolvent", "solve one resolvent case"},
      {"homog", "homogeneous solutions, Airy representation against the BVP"},
      {"sweep", "resolvent norm sweeps with scaling fits"},
      {"spectrum", "spectral gap and pseudospectra"},
      {"evolve", "linearized time evolution with space-time ledgers"},
      {"threshold", "nonlinear runs and the exploratory threshold probe"},
      {"report", "merge JSON reports"}};
  for (const std::string& name : couette::config_commands()) {
    CLI::App* sub = app.add_subcommand(name, help.at(name));
    sub->add_option("--config", fl.config, "configuration file")->check(CLI::ExistingFile);
    sub->add_option("--out", fl.out, "output directory")->capture_default_str();
    sub->add_option("--jobs", fl.jobs, "worker threads (0: OpenMP default)")->check(CLI::NonNegativeNumber);
    sub->add_option("--seed", fl.seed, "seed for sampled test points")->check(CLI::NonNegativeNumber);
    sub->add_option("--format", fl.formats, "csv, json or svg (repeatable)")
        ->check(CLI::IsMember({"csv", "json", "svg"}));
    if (name == "report") sub->add_option("inputs", fl.inputs, "JSON reports to merge");
  }
  CLI11_PARSE(app, argc, argv);

  try {
    for (CLI::App* sub : app.get_subcommands()) return execute(sub->get_name(), fl);
  } catch (const couette::ConfigError& e) {
    std::cerr << "config error: " << e.what() << "\n";
    return 2;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 2;
  }
  return 2;
}
