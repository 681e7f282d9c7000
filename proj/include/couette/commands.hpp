#pragma once

#include <string>

#include "couette/config.hpp"
#include "couette/report.hpp"

namespace couette {

// One report per subcommand. Verdict keys are prefixed with the command name;
// the process exit status follows ReportDocument::pass().
ReportDocument run_airy(const RunSpec& s);
ReportDocument run_resolvent(const RunSpec& s);
ReportDocument run_homog(const RunSpec& s);
ReportDocument run_sweep(const RunSpec& s);
ReportDocument run_spectrum(const RunSpec& s);
ReportDocument run_evolve(const RunSpec& s);
ReportDocument run_threshold(const RunSpec& s);
// merges the JSON reports listed in s.report.inputs
ReportDocument run_report(const RunSpec& s);

ReportDocument run_command(const RunSpec& s);

// Log-log plot of one fitted quantity with its target slope.
PlotSpec fit_plot(const std::string& name, const VerifyReport& rep, const ScalingFit& fit, const std::string& prefix);

}  // namespace couette
