#pragma once

#include <iosfwd>
#include <map>
#include <optional>
#include <string>
#include <utility>
#include <vector>

#include "core/numerics.hpp"

namespace pql {

/// One pass/fail verdict. `comparator` is one of "<=", ">=", "==" or "trivial";
/// "trivial" marks a check whose quantity is undefined (value absent) and passes.
struct Check {
  std::string quantity;
  std::optional<double> value;
  double threshold = 0.0;
  std::string comparator = "<=";
  bool pass = false;

  static Check make(std::string quantity, double value, std::string comparator, double threshold);
  static Check trivial(std::string quantity);
  /// Re-evaluates the verdict from value, comparator and threshold.
  bool recompute() const;
  bool operator==(const Check&) const = default;
};

/// How the plot-data writer fits a slope to a sweep.
enum class SweepFit {
  None,         // no fit
  Exponential,  // y is a positive magnitude; fit log y against x
  LogLinear,    // y is already a logarithm; fit y against x
  LogLog,       // fit log y against log x (convergence orders)
};

struct Sweep {
  std::string name;
  std::string x_label = "x";
  std::string y_label = "y";
  SweepFit fit = SweepFit::None;
  std::vector<std::pair<double, double>> points;
  bool operator==(const Sweep&) const = default;
};

/// Slope of a sweep per its fit kind; empty when fewer than 3 points or no fit applies.
std::optional<DecayFit> sweep_slope(const Sweep& s);

struct ReportRecord {
  std::string experiment;
  std::map<std::string, std::string> params;    // config echo
  std::map<std::string, double> measurements;   // named scalar results
  std::vector<Check> checks;
  std::vector<Sweep> sweeps;
  std::vector<std::string> warnings;
  double wall_clock_seconds = 0.0;

  bool passed() const;
  void add(Check c) { checks.push_back(std::move(c)); }
  void measure(const std::string& name, double v) { measurements[name] = v; }
  /// Everything except wall-clock time; equal records give equal hashes.
  std::string content_hash() const;
  bool operator==(const ReportRecord&) const = default;
};

inline constexpr int kReportSchemaVersion = 1;

std::string report_to_json(const ReportRecord& r);
ReportRecord report_from_json(const std::string& text);

/// Header `experiment,quantity,value,threshold,comparator,pass` then one row per check.
void write_report_csv(const std::vector<ReportRecord>& records, std::ostream& out);

enum class ReportFormat { Csv, Json };
void emit_report(const std::vector<ReportRecord>& records, ReportFormat format, const std::string& path);
void emit_report(const ReportRecord& record, ReportFormat format, const std::string& path);

/// Two whitespace-separated columns after '#' comment lines naming the experiment and the sweep,
/// plus "# slope=..." when a fit applies. Non-finite values are rejected.
void write_plot_data(const Sweep& sweep, const std::string& experiment, std::ostream& out);
void emit_plot_data(const Sweep& sweep, const std::string& experiment, const std::string& path);

}  // namespace pql
