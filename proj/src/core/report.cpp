#include "core/report.hpp"

#include <cmath>
#include <cstdio>
#include <fstream>
#include <ostream>
#include <sstream>

#include <json.hpp>

#include "core/config.hpp"

namespace pql {

using nlohmann::ordered_json;

Check Check::make(std::string quantity, double value, std::string comparator, double threshold) {
  Check c;
  c.quantity = std::move(quantity);
  c.value = value;
  c.comparator = std::move(comparator);
  c.threshold = threshold;
  c.pass = c.recompute();
  return c;
}

Check Check::trivial(std::string quantity) {
  Check c;
  c.quantity = std::move(quantity);
  c.comparator = "trivial";
  c.pass = true;
  return c;
}

bool Check::recompute() const {
  if (comparator == "trivial") return true;
  if (!value || !std::isfinite(*value)) return false;
  if (comparator == "<=") return *value <= threshold;
  if (comparator == ">=") return *value >= threshold;
  if (comparator == "==") return *value == threshold;
  fail(ErrorCode::InvalidArgument, "unknown comparator '" + comparator + "'");
}

std::optional<DecayFit> sweep_slope(const Sweep& s) {
  if (s.points.size() < 3 || s.fit == SweepFit::None) return std::nullopt;
  std::vector<double> x, y;
  for (const auto& [a, b] : s.points) {
    switch (s.fit) {
      case SweepFit::Exponential:
        if (!(b > 0.0)) return std::nullopt;
        x.push_back(a);
        y.push_back(std::log(b));
        break;
      case SweepFit::LogLinear:
        x.push_back(a);
        y.push_back(b);
        break;
      case SweepFit::LogLog:
        if (!(a > 0.0 && b > 0.0)) return std::nullopt;
        x.push_back(std::log(a));
        y.push_back(std::log(b));
        break;
      case SweepFit::None:
        return std::nullopt;
    }
  }
  try {
    return fit_log_linear(x, y);
  } catch (const Error&) {
    return std::nullopt;
  }
}

bool ReportRecord::passed() const {
  for (const Check& c : checks)
    if (!c.pass) return false;
  return true;
}

namespace {

const char* fit_name(SweepFit f) {
  switch (f) {
    case SweepFit::None: return "none";
    case SweepFit::Exponential: return "exponential";
    case SweepFit::LogLinear: return "log-linear";
    case SweepFit::LogLog: return "log-log";
  }
  return "none";
}

SweepFit fit_from_name(const std::string& s) {
  if (s == "none") return SweepFit::None;
  if (s == "exponential") return SweepFit::Exponential;
  if (s == "log-linear") return SweepFit::LogLinear;
  if (s == "log-log") return SweepFit::LogLog;
  fail(ErrorCode::InvalidArgument, "unknown sweep fit '" + s + "'");
}

void require_finite(double v, const std::string& what) {
  require(std::isfinite(v), ErrorCode::InvalidArgument, what + " is not finite");
}

ordered_json body_json(const ReportRecord& r) {
  ordered_json j;
  j["schema_version"] = kReportSchemaVersion;
  j["experiment"] = r.experiment;
  j["pass"] = r.passed();
  ordered_json params = ordered_json::object();
  for (const auto& [k, v] : r.params) params[k] = v;
  j["params"] = params;
  ordered_json meas = ordered_json::object();
  for (const auto& [k, v] : r.measurements) {
    require_finite(v, "measurement '" + k + "'");
    meas[k] = v;
  }
  j["measurements"] = meas;
  ordered_json checks = ordered_json::array();
  for (const Check& c : r.checks) {
    ordered_json cj;
    cj["quantity"] = c.quantity;
    if (c.value) {
      require_finite(*c.value, "check '" + c.quantity + "'");
      cj["value"] = *c.value;
    } else {
      cj["value"] = nullptr;
    }
    cj["threshold"] = c.threshold;
    cj["comparator"] = c.comparator;
    cj["pass"] = c.pass;
    checks.push_back(cj);
  }
  j["checks"] = checks;
  ordered_json sweeps = ordered_json::array();
  for (const Sweep& s : r.sweeps) {
    ordered_json sj;
    sj["name"] = s.name;
    sj["x_label"] = s.x_label;
    sj["y_label"] = s.y_label;
    sj["fit"] = fit_name(s.fit);
    ordered_json pts = ordered_json::array();
    for (const auto& [x, y] : s.points) {
      require_finite(x, "sweep '" + s.name + "' abscissa");
      require_finite(y, "sweep '" + s.name + "' ordinate");
      pts.push_back({x, y});
    }
    sj["points"] = pts;
    if (auto fit = sweep_slope(s)) sj["slope"] = fit->slope;
    sweeps.push_back(sj);
  }
  j["sweeps"] = sweeps;
  j["warnings"] = r.warnings;
  return j;
}

std::string fnv1a_hex(const std::string& s) {
  std::uint64_t h = 1469598103934665603ull;
  for (unsigned char c : s) {
    h ^= c;
    h *= 1099511628211ull;
  }
  char buf[17];
  std::snprintf(buf, sizeof buf, "%016llx", static_cast<unsigned long long>(h));
  return buf;
}

}  // namespace

std::string ReportRecord::content_hash() const { return fnv1a_hex(body_json(*this).dump()); }

std::string report_to_json(const ReportRecord& r) {
  ordered_json j = body_json(r);
  j["content_hash"] = fnv1a_hex(j.dump());
  j["wall_clock_seconds"] = r.wall_clock_seconds;
  return j.dump(2) + "\n";
}

ReportRecord report_from_json(const std::string& text) {
  ordered_json j;
  try {
    j = ordered_json::parse(text);
  } catch (const std::exception& e) {
    fail(ErrorCode::Io, std::string("report is not valid JSON: ") + e.what());
  }
  try {
    require(j.at("schema_version").get<int>() == kReportSchemaVersion, ErrorCode::Io, "unsupported report schema version");
    ReportRecord r;
    r.experiment = j.at("experiment").get<std::string>();
    for (auto& [k, v] : j.at("params").items()) r.params[k] = v.get<std::string>();
    for (auto& [k, v] : j.at("measurements").items()) r.measurements[k] = v.get<double>();
    for (const auto& cj : j.at("checks")) {
      Check c;
      c.quantity = cj.at("quantity").get<std::string>();
      if (!cj.at("value").is_null()) c.value = cj.at("value").get<double>();
      c.threshold = cj.at("threshold").get<double>();
      c.comparator = cj.at("comparator").get<std::string>();
      c.pass = cj.at("pass").get<bool>();
      r.checks.push_back(c);
    }
    for (const auto& sj : j.at("sweeps")) {
      Sweep s;
      s.name = sj.at("name").get<std::string>();
      s.x_label = sj.at("x_label").get<std::string>();
      s.y_label = sj.at("y_label").get<std::string>();
      s.fit = fit_from_name(sj.at("fit").get<std::string>());
      for (const auto& p : sj.at("points")) s.points.emplace_back(p.at(0).get<double>(), p.at(1).get<double>());
      r.sweeps.push_back(s);
    }
    r.warnings = j.at("warnings").get<std::vector<std::string>>();
    if (j.contains("wall_clock_seconds")) r.wall_clock_seconds = j.at("wall_clock_seconds").get<double>();
    return r;
  } catch (const nlohmann::json::exception& e) {
    fail(ErrorCode::Io, std::string("malformed report: ") + e.what());
  }
}

void write_report_csv(const std::vector<ReportRecord>& records, std::ostream& out) {
  out << "experiment,quantity,value,threshold,comparator,pass\n";
  for (const ReportRecord& r : records)
    for (const Check& c : r.checks)
      out << r.experiment << ',' << c.quantity << ',' << (c.value ? format_double(*c.value) : std::string()) << ','
          << format_double(c.threshold) << ',' << c.comparator << ',' << (c.pass ? "true" : "false") << '\n';
}

namespace {

void write_file(const std::string& path, const std::string& content) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  require(static_cast<bool>(out), ErrorCode::Io, "cannot open '" + path + "' for writing");
  out << content;
  out.flush();
  require(static_cast<bool>(out), ErrorCode::Io, "write failed for '" + path + "'");
}

}  // namespace

void emit_report(const std::vector<ReportRecord>& records, ReportFormat format, const std::string& path) {
  std::ostringstream ss;
  if (format == ReportFormat::Csv) {
    write_report_csv(records, ss);
  } else if (records.size() == 1) {
    ss << report_to_json(records.front());
  } else {
    ordered_json arr = ordered_json::array();
    for (const ReportRecord& r : records) arr.push_back(ordered_json::parse(report_to_json(r)));
    ss << arr.dump(2) << "\n";
  }
  write_file(path, ss.str());
}

void emit_report(const ReportRecord& record, ReportFormat format, const std::string& path) {
  emit_report(std::vector<ReportRecord>{record}, format, path);
}

void write_plot_data(const Sweep& sweep, const std::string& experiment, std::ostream& out) {
  for (const auto& [x, y] : sweep.points) {
    require_finite(x, "plot abscissa");
    require_finite(y, "plot ordinate");
  }
  out << "# experiment=" << experiment << "\n";
  out << "# sweep=" << sweep.name << "\n";
  out << "# columns: " << sweep.x_label << ' ' << sweep.y_label << "\n";
  if (auto fit = sweep_slope(sweep)) {
    out << "# fit=" << fit_name(sweep.fit) << "\n";
    out << "# slope=" << format_double(fit->slope) << " intercept=" << format_double(fit->intercept)
        << " residual=" << format_double(fit->residual) << "\n";
  }
  for (const auto& [x, y] : sweep.points) out << format_double(x) << ' ' << format_double(y) << '\n';
}

void emit_plot_data(const Sweep& sweep, const std::string& experiment, const std::string& path) {
  std::ostringstream ss;
  write_plot_data(sweep, experiment, ss);
  write_file(path, ss.str());
}

}  // namespace pql
