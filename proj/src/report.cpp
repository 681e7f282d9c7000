#include "couette/report.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <set>
#include <sstream>
#include <stdexcept>

#include <json.hpp>

namespace couette {

using json = nlohmann::json;

std::string format_double(double v) {
  if (!std::isfinite(v)) throw std::invalid_argument("format_double: non-finite value");
  char buf[64];
  const auto [p, ec] = std::to_chars(buf, buf + sizeof buf, v);
  if (ec != std::errc()) throw std::runtime_error("format_double: conversion failed");
  return std::string(buf, p);
}

std::string config_hash(const std::string& text) {
  std::uint64_t h = 1469598103934665603ULL;
  for (unsigned char c : text) {
    h ^= c;
    h *= 1099511628211ULL;
  }
  char buf[17];
  std::snprintf(buf, sizeof buf, "%016llx", static_cast<unsigned long long>(h));
  return buf;
}

Format parse_format(const std::string& s) {
  if (s == "csv") return Format::csv;
  if (s == "json") return Format::json;
  if (s == "svg") return Format::svg;
  throw std::invalid_argument("unknown format '" + s + "' (csv, json, svg)");
}

const ScalingFit* ReportDocument::fit(const std::string& name) const {
  for (const auto& f : fits)
    if (f.name == name) return &f;
  return nullptr;
}

void ReportDocument::validate() const {
  std::set<std::string> ids;
  auto finite = [](const FieldMap& m, const std::string& where) {
    for (const auto& [k, v] : m)
      if (const double* d = std::get_if<double>(&v); d && !std::isfinite(*d))
        throw std::invalid_argument("report: non-finite value " + where + "." + k);
  };
  for (const auto& r : records) {
    if (r.id.empty()) throw std::invalid_argument("report: empty record id");
    if (!ids.insert(r.id).second) throw std::invalid_argument("report: duplicate record id '" + r.id + "'");
    finite(r.parameters, r.id);
    finite(r.results, r.id);
  }
  std::set<std::string> fit_names;
  for (const auto& f : fits) {
    if (!std::isfinite(f.exponent) || !std::isfinite(f.intercept) || !std::isfinite(f.r2))
      throw std::invalid_argument("report: non-finite fit '" + f.name + "'");
    fit_names.insert(f.name);
  }
  std::set<std::string> keys;
  for (const auto& v : verdicts) {
    if (!keys.insert(v.key).second) throw std::invalid_argument("report: duplicate verdict '" + v.key + "'");
    for (const auto& ref : v.refs)
      if (!ids.count(ref) && !fit_names.count(ref))
        throw std::invalid_argument("report: verdict '" + v.key + "' references unknown '" + ref + "'");
  }
  std::set<std::string> table_names;
  for (const auto& t : tables)
    if (!table_names.insert(t.name).second) throw std::invalid_argument("report: duplicate table '" + t.name + "'");
  for (const auto& p : plots)
    for (const auto& f : p.fits)
      if (!fit_names.count(f)) throw std::invalid_argument("report: plot '" + p.name + "' references unknown fit");
}

bool ReportDocument::pass() const {
  return std::all_of(verdicts.begin(), verdicts.end(), [](const VerdictEntry& v) { return v.pass; });
}

// ---- CSV -------------------------------------------------------------------

namespace {

std::string csv_field(const std::string& s) {
  if (s.find_first_of(",\"\n\r") == std::string::npos) return s;
  std::string out = "\"";
  for (char c : s) {
    if (c == '"') out += '"';
    out += c;
  }
  return out + "\"";
}

std::string field_text(const FieldValue& v) {
  if (const double* d = std::get_if<double>(&v)) return format_double(*d);
  return std::get<std::string>(v);
}

template <class Row>
std::string join(const Row& cells) {
  std::string line;
  for (size_t i = 0; i < cells.size(); ++i) line += (i ? "," : "") + csv_field(cells[i]);
  return line + "\n";
}

}  // namespace

std::string records_csv(const ReportDocument& doc) {
  std::set<std::string> pkeys, rkeys;
  for (const auto& r : doc.records) {
    for (const auto& [k, v] : r.parameters) pkeys.insert(k);
    for (const auto& [k, v] : r.results) rkeys.insert(k);
  }
  std::vector<std::string> head{"id"};
  for (const auto& k : pkeys) head.push_back("param." + k);
  for (const auto& k : rkeys) head.push_back("result." + k);
  head.push_back("tool_version");
  head.push_back("config_hash");
  std::string out = join(head);
  for (const auto& r : doc.records) {
    std::vector<std::string> row{r.id};
    for (const auto& k : pkeys) row.push_back(r.parameters.count(k) ? field_text(r.parameters.at(k)) : "");
    for (const auto& k : rkeys) row.push_back(r.results.count(k) ? field_text(r.results.at(k)) : "");
    row.push_back(r.tool_version);
    row.push_back(r.config_hash);
    out += join(row);
  }
  return out;
}

std::string fits_csv(const ReportDocument& doc) {
  std::string out = join(std::vector<std::string>{"name", "exponent", "intercept", "r2", "target_exponent", "tolerance", "pass"});
  for (const auto& f : doc.fits)
    out += join(std::vector<std::string>{f.name, format_double(f.exponent), format_double(f.intercept),
                                         format_double(f.r2), format_double(f.target_exponent),
                                         format_double(f.tolerance), f.pass ? "true" : "false"});
  return out;
}

std::string verdicts_csv(const ReportDocument& doc) {
  std::string out = join(std::vector<std::string>{"key", "pass", "detail", "refs"});
  for (const auto& v : doc.verdicts) {
    std::string refs;
    for (const auto& r : v.refs) refs += (refs.empty() ? "" : ";") + r;
    out += join(std::vector<std::string>{v.key, v.pass ? "true" : "false", v.detail, refs});
  }
  return out;
}

std::string table_csv(const Table& t) {
  std::string out = join(t.columns);
  for (const auto& r : t.rows) {
    if (r.size() != t.columns.size()) throw std::invalid_argument("table '" + t.name + "': row width mismatch");
    std::vector<std::string> cells;
    for (double v : r) cells.push_back(std::isfinite(v) ? format_double(v) : "");
    out += join(cells);
  }
  return out;
}

// ---- JSON ------------------------------------------------------------------

namespace {

json fields_json(const FieldMap& m) {
  json j = json::object();
  for (const auto& [k, v] : m) {
    if (const double* d = std::get_if<double>(&v))
      j[k] = *d;
    else
      j[k] = std::get<std::string>(v);
  }
  return j;
}

FieldMap fields_from(const json& j) {
  FieldMap m;
  for (const auto& [k, v] : j.items()) {
    if (v.is_number())
      m[k] = v.get<double>();
    else if (v.is_string())
      m[k] = v.get<std::string>();
    else
      throw std::invalid_argument("report json: field '" + k + "' must be a number or string");
  }
  return m;
}

}  // namespace

std::string to_json(const ReportDocument& doc) {
  doc.validate();
  json j;
  j["schema_version"] = kSchemaVersion;
  j["tool_version"] = kToolVersion;
  j["name"] = doc.name;
  j["records"] = json::array();
  for (const auto& r : doc.records)
    j["records"].push_back({{"id", r.id},
                            {"parameters", fields_json(r.parameters)},
                            {"results", fields_json(r.results)},
                            {"provenance", {{"tool_version", r.tool_version}, {"config_hash", r.config_hash}}}});
  j["fits"] = json::array();
  for (const auto& f : doc.fits)
    j["fits"].push_back({{"name", f.name},
                         {"exponent", f.exponent},
                         {"intercept", f.intercept},
                         {"r2", f.r2},
                         {"target_exponent", f.target_exponent},
                         {"tolerance", f.tolerance},
                         {"pass", f.pass}});
  j["verdicts"] = json::array();
  for (const auto& v : doc.verdicts)
    j["verdicts"].push_back({{"key", v.key}, {"pass", v.pass}, {"detail", v.detail}, {"refs", v.refs}});
  j["plots"] = json::array();
  for (const auto& p : doc.plots) {
    json series = json::array();
    for (const auto& s : p.series) series.push_back({{"label", s.label}, {"x", s.x}, {"y", s.y}});
    j["plots"].push_back({{"name", p.name},
                          {"title", p.title},
                          {"x_label", p.x_label},
                          {"y_label", p.y_label},
                          {"series", series},
                          {"fits", p.fits},
                          {"target_exponents", p.target_exponents}});
  }
  return j.dump(2) + "\n";
}

ReportDocument from_json(const std::string& text) {
  json j;
  try {
    j = json::parse(text);
  } catch (const json::exception& e) {
    throw std::invalid_argument(std::string("report json: ") + e.what());
  }
  try {
    if (j.at("schema_version").get<int>() != kSchemaVersion)
      throw std::invalid_argument("report json: unsupported schema_version");
    ReportDocument d;
    d.name = j.at("name").get<std::string>();
    for (const auto& r : j.at("records")) {
      CaseRecord c;
      c.id = r.at("id").get<std::string>();
      c.parameters = fields_from(r.at("parameters"));
      c.results = fields_from(r.at("results"));
      c.tool_version = r.at("provenance").at("tool_version").get<std::string>();
      c.config_hash = r.at("provenance").at("config_hash").get<std::string>();
      d.records.push_back(std::move(c));
    }
    for (const auto& f : j.at("fits")) {
      ScalingFit s;
      s.name = f.at("name").get<std::string>();
      s.exponent = f.at("exponent").get<double>();
      s.intercept = f.at("intercept").get<double>();
      s.r2 = f.at("r2").get<double>();
      s.target_exponent = f.at("target_exponent").get<double>();
      s.tolerance = f.at("tolerance").get<double>();
      s.pass = f.at("pass").get<bool>();
      d.fits.push_back(s);
    }
    for (const auto& v : j.at("verdicts"))
      d.verdicts.push_back({v.at("key").get<std::string>(), v.at("pass").get<bool>(), v.at("detail").get<std::string>(),
                            v.at("refs").get<std::vector<std::string>>()});
    for (const auto& p : j.at("plots")) {
      PlotSpec s;
      s.name = p.at("name").get<std::string>();
      s.title = p.at("title").get<std::string>();
      s.x_label = p.at("x_label").get<std::string>();
      s.y_label = p.at("y_label").get<std::string>();
      for (const auto& q : p.at("series"))
        s.series.push_back({q.at("label").get<std::string>(), q.at("x").get<std::vector<double>>(),
                            q.at("y").get<std::vector<double>>()});
      s.fits = p.at("fits").get<std::vector<std::string>>();
      s.target_exponents = p.at("target_exponents").get<std::vector<double>>();
      d.plots.push_back(std::move(s));
    }
    d.validate();
    return d;
  } catch (const json::exception& e) {
    throw std::invalid_argument(std::string("report json: ") + e.what());
  }
}

// ---- SVG -------------------------------------------------------------------

namespace {

std::string xml_escape(const std::string& s) {
  std::string out;
  for (char c : s) {
    switch (c) {
      case '&': out += "&amp;"; break;
      case '<': out += "&lt;"; break;
      case '>': out += "&gt;"; break;
      case '"': out += "&quot;"; break;
      default: out += c;
    }
  }
  return out;
}

std::string fixed(double v) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.2f", v);
  return buf;
}

}  // namespace

std::string to_svg(const ReportDocument& doc, const PlotSpec& plot) {
  constexpr double W = 640, H = 480, ml = 70, mr = 20, mt = 40, mb = 60;
  double xlo = 1e300, xhi = -1e300, ylo = 1e300, yhi = -1e300;
  for (const auto& s : plot.series)
    for (size_t i = 0; i < s.x.size() && i < s.y.size(); ++i) {
      if (!(s.x[i] > 0.0) || !(s.y[i] > 0.0)) continue;
      xlo = std::min(xlo, std::log10(s.x[i]));
      xhi = std::max(xhi, std::log10(s.x[i]));
      ylo = std::min(ylo, std::log10(s.y[i]));
      yhi = std::max(yhi, std::log10(s.y[i]));
    }
  if (xlo > xhi) xlo = 0, xhi = 1, ylo = 0, yhi = 1;
  if (xhi - xlo < 1e-12) xlo -= 0.5, xhi += 0.5;
  if (yhi - ylo < 1e-12) ylo -= 0.5, yhi += 0.5;
  const double padx = 0.05 * (xhi - xlo), pady = 0.1 * (yhi - ylo);
  xlo -= padx, xhi += padx, ylo -= pady, yhi += pady;
  auto px = [&](double lx) { return ml + (lx - xlo) / (xhi - xlo) * (W - ml - mr); };
  auto py = [&](double ly) { return H - mb - (ly - ylo) / (yhi - ylo) * (H - mt - mb); };
  auto clip_line = [&](double slope, double icpt_log10, const std::string& cls, const std::string& extra) {
    const double y0 = icpt_log10 + slope * xlo, y1 = icpt_log10 + slope * xhi;
    return "<line class=\"" + cls + "\" x1=\"" + fixed(px(xlo)) + "\" y1=\"" + fixed(py(y0)) + "\" x2=\"" +
           fixed(px(xhi)) + "\" y2=\"" + fixed(py(y1)) + "\" " + extra + "/>\n";
  };

  std::ostringstream o;
  o << "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"" << W << "\" height=\"" << H << "\" viewBox=\"0 0 " << W
    << " " << H << "\">\n";
  o << "<defs><clipPath id=\"area\"><rect x=\"" << ml << "\" y=\"" << mt << "\" width=\"" << W - ml - mr
    << "\" height=\"" << H - mt - mb << "\"/></clipPath></defs>\n";
  o << "<rect x=\"0\" y=\"0\" width=\"" << W << "\" height=\"" << H << "\" fill=\"white\"/>\n";
  o << "<text x=\"" << W / 2 << "\" y=\"24\" text-anchor=\"middle\" font-size=\"16\">" << xml_escape(plot.title)
    << "</text>\n";
  o << "<rect x=\"" << ml << "\" y=\"" << mt << "\" width=\"" << W - ml - mr << "\" height=\"" << H - mt - mb
    << "\" fill=\"none\" stroke=\"black\"/>\n";
  for (int d = int(std::ceil(xlo)); d <= int(std::floor(xhi)); ++d)
    o << "<text x=\"" << fixed(px(d)) << "\" y=\"" << H - mb + 18 << "\" text-anchor=\"middle\" font-size=\"11\">1e"
      << d << "</text>\n";
  for (int d = int(std::ceil(ylo)); d <= int(std::floor(yhi)); ++d)
    o << "<text x=\"" << ml - 6 << "\" y=\"" << fixed(py(d) + 4) << "\" text-anchor=\"end\" font-size=\"11\">1e" << d
      << "</text>\n";
  o << "<text x=\"" << W / 2 << "\" y=\"" << H - 16 << "\" text-anchor=\"middle\" font-size=\"13\">"
    << xml_escape(plot.x_label) << "</text>\n";
  o << "<text x=\"16\" y=\"" << H / 2 << "\" text-anchor=\"middle\" font-size=\"13\" transform=\"rotate(-90 16 "
    << H / 2 << ")\">" << xml_escape(plot.y_label) << "</text>\n";

  static const char* colors[] = {"#1f77b4", "#d62728", "#2ca02c", "#9467bd", "#ff7f0e", "#8c564b"};
  o << "<g clip-path=\"url(#area)\">\n";
  for (size_t si = 0; si < plot.series.size(); ++si) {
    const auto& s = plot.series[si];
    const char* col = colors[si % 6];
    for (size_t i = 0; i < s.x.size() && i < s.y.size(); ++i) {
      if (!(s.x[i] > 0.0) || !(s.y[i] > 0.0)) continue;
      o << "<circle class=\"data\" cx=\"" << fixed(px(std::log10(s.x[i]))) << "\" cy=\""
        << fixed(py(std::log10(s.y[i]))) << "\" r=\"3.5\" fill=\"" << col << "\"/>\n";
    }
  }
  for (const auto& name : plot.fits) {
    const ScalingFit* f = doc.fit(name);
    if (!f) throw std::invalid_argument("to_svg: unknown fit '" + name + "'");
    o << clip_line(f->exponent, f->intercept / std::log(10.0), "fit", "stroke=\"black\" stroke-width=\"1.5\"");
  }
  // reference slopes pass through the log-centroid of the first series
  double cx = 0.5 * (xlo + xhi), cy = 0.5 * (ylo + yhi);
  if (!plot.series.empty()) {
    double sx = 0, sy = 0;
    int n = 0;
    const auto& s = plot.series.front();
    for (size_t i = 0; i < s.x.size() && i < s.y.size(); ++i)
      if (s.x[i] > 0.0 && s.y[i] > 0.0) sx += std::log10(s.x[i]), sy += std::log10(s.y[i]), ++n;
    if (n) cx = sx / n, cy = sy / n;
  }
  for (double t : plot.target_exponents)
    o << clip_line(t, cy - t * cx, "reference", "stroke=\"gray\" stroke-dasharray=\"6 4\"");
  o << "</g>\n";
  double ly = mt + 16;
  for (size_t si = 0; si < plot.series.size(); ++si, ly += 16)
    o << "<text x=\"" << ml + 10 << "\" y=\"" << ly << "\" font-size=\"11\" fill=\"" << colors[si % 6] << "\">"
      << xml_escape(plot.series[si].label) << "</text>\n";
  for (double t : plot.target_exponents) {
    o << "<text x=\"" << ml + 10 << "\" y=\"" << ly << "\" font-size=\"11\" fill=\"gray\">reference slope "
      << format_double(t) << "</text>\n";
    ly += 16;
  }
  o << "</svg>\n";
  return o.str();
}

// ---- emission --------------------------------------------------------------

namespace {

void write_file(const std::filesystem::path& p, const std::string& text) {
  std::ofstream f(p, std::ios::binary | std::ios::trunc);
  if (!f) throw std::runtime_error("cannot write " + p.string());
  f << text;
  f.close();
  if (!f) throw std::runtime_error("cannot write " + p.string());
}

}  // namespace

std::vector<std::string> emit(ReportDocument& doc, Format format, const std::filesystem::path& dir) {
  doc.validate();
  std::error_code ec;
  std::filesystem::create_directories(dir, ec);
  if (ec || !std::filesystem::is_directory(dir)) throw std::runtime_error("cannot write " + dir.string());
  std::vector<std::pair<std::string, std::string>> files;
  switch (format) {
    case Format::csv:
      files.emplace_back(doc.name + ".csv", records_csv(doc));
      files.emplace_back(doc.name + "_fits.csv", fits_csv(doc));
      files.emplace_back(doc.name + "_verdicts.csv", verdicts_csv(doc));
      for (const auto& t : doc.tables) files.emplace_back(doc.name + "_" + t.name + ".csv", table_csv(t));
      break;
    case Format::json:
      files.emplace_back(doc.name + ".json", to_json(doc));
      break;
    case Format::svg:
      for (const auto& p : doc.plots) files.emplace_back(doc.name + "_" + p.name + ".svg", to_svg(doc, p));
      break;
  }
  std::vector<std::string> names;
  for (const auto& [name, text] : files) {
    write_file(dir / name, text);
    names.push_back(name);
    doc.emitted.push_back(name);
  }
  return names;
}

ReportDocument merge(const std::vector<ReportDocument>& docs, const std::string& name) {
  ReportDocument out;
  out.name = name;
  for (const auto& d : docs) {
    out.records.insert(out.records.end(), d.records.begin(), d.records.end());
    out.fits.insert(out.fits.end(), d.fits.begin(), d.fits.end());
    out.verdicts.insert(out.verdicts.end(), d.verdicts.begin(), d.verdicts.end());
    out.plots.insert(out.plots.end(), d.plots.begin(), d.plots.end());
    out.tables.insert(out.tables.end(), d.tables.begin(), d.tables.end());
  }
  out.validate();
  return out;
}

CaseRecord record_from_row(const std::string& id, const SweepRow& row, const std::string& hash) {
  CaseRecord r;
  r.id = id;
  r.parameters["nu"] = row.nu;
  r.parameters["k"] = double(row.k);
  r.parameters["N"] = double(row.N);
  for (const auto& [k, v] : row.values)
    if (std::isfinite(v)) r.results[k] = v;
  r.config_hash = hash;
  return r;
}

void add_verify_report(ReportDocument& doc, const VerifyReport& rep, const std::string& hash) {
  std::vector<std::string> refs;
  for (size_t i = 0; i < rep.rows.size(); ++i) {
    const std::string id = rep.name + "/" + std::to_string(i);
    doc.records.push_back(record_from_row(id, rep.rows[i], hash));
    refs.push_back(id);
  }
  for (const auto& f : rep.fits) {
    ScalingFit g = f;
    g.name = rep.name + ": " + f.name;
    doc.fits.push_back(g);
    refs.push_back(g.name);
  }
  CaseRecord c;
  c.id = rep.name + "/constants";
  for (const auto& [k, v] : rep.constants)
    if (std::isfinite(v)) c.results[k] = v;
  c.config_hash = hash;
  doc.records.push_back(c);
  refs.push_back(c.id);
  std::string detail;
  for (const auto& f : rep.flags) detail += (detail.empty() ? "" : "; ") + f;
  doc.verdicts.push_back({rep.name, rep.pass(), detail, refs});
}

}  // namespace couette
