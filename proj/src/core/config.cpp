#include "core/config.hpp"

#include <algorithm>
#include <cctype>
#include <charconv>
#include <cmath>
#include <fstream>
#include <istream>
#include <sstream>

namespace pql {

namespace {

std::string trim(const std::string& s) {
  const auto b = s.find_first_not_of(" \t\r");
  if (b == std::string::npos) return {};
  const auto e = s.find_last_not_of(" \t\r");
  return s.substr(b, e - b + 1);
}

bool valid_key(const std::string& k) {
  if (k.empty()) return false;
  return std::all_of(k.begin(), k.end(), [](unsigned char c) {
    return std::islower(c) || std::isdigit(c) || c == '_' || c == '.' || c == '-';
  });
}

std::pair<std::string, std::string> split_assignment(const std::string& line, const std::string& where) {
  const auto eq = line.find('=');
  require(eq != std::string::npos, ErrorCode::Configuration, where + ": expected key=value, got '" + line + "'");
  std::string key = trim(line.substr(0, eq));
  std::string value = trim(line.substr(eq + 1));
  require(valid_key(key), ErrorCode::Configuration, where + ": invalid key '" + key + "'");
  return {key, value};
}

double parse_double(const std::string& key, const std::string& text) {
  double v = 0.0;
  const char* b = text.data();
  const char* e = b + text.size();
  auto [ptr, ec] = std::from_chars(b, e, v);
  if (ec != std::errc() || ptr != e) {
    // Named angles.
    if (text == "pi") return 3.141592653589793238462643;
    if (text == "pi/6") return 3.141592653589793238462643 / 6.0;
    if (text == "pi/4") return 3.141592653589793238462643 / 4.0;
    if (text == "pi/3") return 3.141592653589793238462643 / 3.0;
    fail(ErrorCode::Configuration, "key '" + key + "': '" + text + "' is not a number");
  }
  require(std::isfinite(v), ErrorCode::Configuration, "key '" + key + "' must be finite");
  return v;
}

long parse_long(const std::string& key, const std::string& text) {
  long v = 0;
  auto [ptr, ec] = std::from_chars(text.data(), text.data() + text.size(), v);
  require(ec == std::errc() && ptr == text.data() + text.size(), ErrorCode::Configuration,
          "key '" + key + "': '" + text + "' is not an integer");
  return v;
}

}  // namespace

std::string format_double(double v) {
  char buf[64];
  auto [ptr, ec] = std::to_chars(buf, buf + sizeof buf, v);
  if (ec != std::errc()) return "nan";
  return std::string(buf, ptr);
}

std::string format_list(const std::vector<double>& v) {
  std::string s;
  for (std::size_t i = 0; i < v.size(); ++i) {
    if (i) s += ',';
    s += format_double(v[i]);
  }
  return s;
}

Config Config::parse(std::istream& in, const std::string& source) {
  Config c;
  std::string line;
  std::size_t lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    const std::string t = trim(line);
    if (t.empty() || t[0] == '#') continue;
    auto [k, v] = split_assignment(t, source + ":" + std::to_string(lineno));
    c.entries_[k] = v;
  }
  return c;
}

Config Config::from_file(const std::string& path) {
  std::ifstream in(path);
  require(static_cast<bool>(in), ErrorCode::Io, "cannot open config file '" + path + "'");
  return parse(in, path);
}

Config Config::from_map(const std::map<std::string, std::string>& entries) {
  Config c;
  for (const auto& [k, v] : entries) c.set(k, v);
  return c;
}

void Config::apply_override(const std::string& assignment) {
  auto [k, v] = split_assignment(trim(assignment), "--set");
  entries_[k] = v;
}

void Config::set(const std::string& key, const std::string& value) {
  require(valid_key(key), ErrorCode::Configuration, "invalid key '" + key + "'");
  entries_[key] = trim(value);
}

const std::string* Config::lookup(const std::string& key) {
  consumed_.insert(key);
  auto it = entries_.find(key);
  return it == entries_.end() ? nullptr : &it->second;
}

std::string Config::get_string(const std::string& key, const std::string& fallback) {
  const std::string* v = lookup(key);
  std::string out = v ? *v : fallback;
  record(key, out);
  return out;
}

double Config::get_double(const std::string& key, double fallback) {
  const std::string* v = lookup(key);
  const double out = v ? parse_double(key, *v) : fallback;
  record(key, format_double(out));
  return out;
}

long Config::get_int(const std::string& key, long fallback) {
  const std::string* v = lookup(key);
  const long out = v ? parse_long(key, *v) : fallback;
  record(key, std::to_string(out));
  return out;
}

std::size_t Config::get_count(const std::string& key, std::size_t fallback) {
  const long v = get_int(key, static_cast<long>(fallback));
  check(v >= 0, key, "must be non-negative");
  return static_cast<std::size_t>(v);
}

std::uint64_t Config::get_seed(const std::string& key, std::uint64_t fallback) {
  const std::string* v = lookup(key);
  std::uint64_t out = fallback;
  if (v) {
    auto [ptr, ec] = std::from_chars(v->data(), v->data() + v->size(), out);
    require(ec == std::errc() && ptr == v->data() + v->size(), ErrorCode::Configuration,
            "key '" + key + "': '" + *v + "' is not an unsigned integer");
  }
  record(key, std::to_string(out));
  return out;
}

bool Config::get_bool(const std::string& key, bool fallback) {
  const std::string* v = lookup(key);
  bool out = fallback;
  if (v) {
    if (*v == "true" || *v == "1" || *v == "yes") out = true;
    else if (*v == "false" || *v == "0" || *v == "no") out = false;
    else fail(ErrorCode::Configuration, "key '" + key + "': '" + *v + "' is not a boolean");
  }
  record(key, out ? "true" : "false");
  return out;
}

std::vector<double> Config::get_list(const std::string& key, const std::vector<double>& fallback) {
  const std::string* v = lookup(key);
  std::vector<double> out = fallback;
  if (v) {
    out.clear();
    std::stringstream ss(*v);
    std::string item;
    while (std::getline(ss, item, ',')) {
      item = trim(item);
      if (!item.empty()) out.push_back(parse_double(key, item));
    }
    check(!out.empty(), key, "list must not be empty");
  }
  record(key, format_list(out));
  return out;
}

void Config::check(bool ok, const std::string& key, const std::string& constraint) {
  if (!ok) fail(ErrorCode::Configuration, "key '" + key + "' " + constraint);
}

void Config::reject_unknown() const {
  for (const auto& [k, v] : entries_)
    require(consumed_.count(k) != 0, ErrorCode::Configuration, "unknown key '" + k + "'");
}

}  // namespace pql
