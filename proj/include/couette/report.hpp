#pragma once

#include <filesystem>
#include <map>
#include <string>
#include <variant>
#include <vector>

#include "couette/harness.hpp"

namespace couette {

inline constexpr int kSchemaVersion = 1;
inline constexpr const char* kToolVersion = "1.0.0";

using FieldValue = std::variant<double, std::string>;
using FieldMap = std::map<std::string, FieldValue>;

struct CaseRecord {
  std::string id;
  FieldMap parameters;
  FieldMap results;
  std::string tool_version = kToolVersion;
  std::string config_hash;
};

struct VerdictEntry {
  std::string key;
  bool pass = false;
  std::string detail;
  std::vector<std::string> refs;  // record ids or fit names
};

struct PlotSeries {
  std::string label;
  std::vector<double> x, y;
};

// Log-log plot; every fit named in `fits` is drawn as a line, and each target
// exponent gets one dashed reference line through the first series.
struct PlotSpec {
  std::string name;
  std::string title, x_label, y_label;
  std::vector<PlotSeries> series;
  std::vector<std::string> fits;
  std::vector<double> target_exponents;
};

// Bulk numeric output (time series, nodal profiles); written as CSV only.
struct Table {
  std::string name;
  std::vector<std::string> columns;
  std::vector<std::vector<double>> rows;
};

struct ReportDocument {
  std::string name = "report";
  std::vector<CaseRecord> records;
  std::vector<ScalingFit> fits;
  std::vector<VerdictEntry> verdicts;
  std::vector<PlotSpec> plots;
  std::vector<Table> tables;
  std::vector<std::string> emitted;  // file names written by emit()

  // unique ids, finite numbers, verdict references resolve
  void validate() const;
  bool pass() const;
  const ScalingFit* fit(const std::string& name) const;
};

enum class Format { csv, json, svg };
Format parse_format(const std::string& s);

// Shortest text that reads back to the same double.
std::string format_double(double v);
// FNV-1a 64-bit of the configuration text, hex.
std::string config_hash(const std::string& text);

std::string records_csv(const ReportDocument& doc);
std::string fits_csv(const ReportDocument& doc);
std::string verdicts_csv(const ReportDocument& doc);
std::string table_csv(const Table& t);
std::string to_json(const ReportDocument& doc);
ReportDocument from_json(const std::string& text);
std::string to_svg(const ReportDocument& doc, const PlotSpec& plot);

// Writes <name>.csv (+ _fits, _verdicts, _<table>), <name>.json or <name>_<plot>.svg
// into dir and appends the file names to doc.emitted.
std::vector<std::string> emit(ReportDocument& doc, Format format, const std::filesystem::path& dir);

// Concatenates records, fits, verdicts and plots; ids must stay unique.
ReportDocument merge(const std::vector<ReportDocument>& docs, const std::string& name);

// Helpers for building records from library results.
CaseRecord record_from_row(const std::string& id, const SweepRow& row, const std::string& hash);
void add_verify_report(ReportDocument& doc, const VerifyReport& r, const std::string& hash);

}  // namespace couette
