#pragma once

#include <cstdint>
#include <iosfwd>
#include <map>
#include <set>
#include <string>
#include <vector>

#include "core/error.hpp"

namespace pql {

/// Flat key=value configuration. Lines starting with '#' are comments; keys are
/// [a-z0-9_.-]+ and values run to the end of the line with surrounding blanks trimmed.
///
/// Every typed getter records the value it used (explicit or default) in the echo,
/// so the echo alone reproduces a run. Keys that no getter consumed are rejected by
/// reject_unknown().
class Config {
 public:
  Config() = default;

  static Config parse(std::istream& in, const std::string& source = "<config>");
  static Config from_file(const std::string& path);
  static Config from_map(const std::map<std::string, std::string>& entries);

  /// Applies one "key=value" override; later overrides win.
  void apply_override(const std::string& assignment);
  void set(const std::string& key, const std::string& value);
  bool has(const std::string& key) const { return entries_.count(key) != 0; }

  std::string get_string(const std::string& key, const std::string& fallback);
  double get_double(const std::string& key, double fallback);
  long get_int(const std::string& key, long fallback);
  std::size_t get_count(const std::string& key, std::size_t fallback);
  std::uint64_t get_seed(const std::string& key, std::uint64_t fallback);
  bool get_bool(const std::string& key, bool fallback);
  /// Comma-separated list of reals.
  std::vector<double> get_list(const std::string& key, const std::vector<double>& fallback);

  /// Raises a Configuration error naming `key` unless `ok`.
  static void check(bool ok, const std::string& key, const std::string& constraint);

  /// Fails with a Configuration error when some key was never read.
  void reject_unknown() const;

  const std::map<std::string, std::string>& echo() const { return echo_; }
  const std::map<std::string, std::string>& entries() const { return entries_; }

 private:
  const std::string* lookup(const std::string& key);
  void record(const std::string& key, const std::string& value) { echo_[key] = value; }

  std::map<std::string, std::string> entries_;
  std::map<std::string, std::string> echo_;
  std::set<std::string> consumed_;
};

/// Shortest round-trip decimal form, used in echoes and reports.
std::string format_double(double v);
std::string format_list(const std::vector<double>& v);

}  // namespace pql
