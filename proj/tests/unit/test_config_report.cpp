#include <algorithm>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <sstream>

#include "core/config.hpp"
#include "core/report.hpp"
#include "test_support.hpp"

using namespace pql;

namespace {

std::string slurp(const std::string& path) {
  std::ifstream in(path);
  std::stringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

ReportRecord sample_record() {
  ReportRecord r;
  r.experiment = "demo";
  r.params = {{"tau", "100"}, {"gamma", "0.5235987755982988"}};
  r.measure("max_residual", 1.25e-9);
  r.add(Check::make("max_residual", 1.25e-9, "<=", 1e-8));
  r.add(Check::trivial("slope"));
  r.sweeps.push_back({"decay", "tau", "norm", SweepFit::Exponential, {{1.0, std::exp(-2.0)}, {2.0, std::exp(-4.0)}, {3.0, std::exp(-6.0)}}});
  r.warnings.push_back("sample warning");
  r.wall_clock_seconds = 0.5;
  return r;
}

}  // namespace

TEST_CASE("config parsing") {
  std::istringstream in("# comment\n tau = 25\nlist=1, 2,3\n\nname = pi/6\nflag=yes\n");
  Config c = Config::parse(in);
  CHECK(c.get_double("tau", 1.0) == 25.0);
  CHECK(c.get_list("list", {}) == std::vector<double>{1.0, 2.0, 3.0});
  CHECK(c.get_double("name", 0.0) == doctest::Approx(kPi / 6.0).epsilon(1e-16));
  CHECK(c.get_bool("flag", false));
  CHECK(c.get_int("missing", 7) == 7);
  CHECK(c.echo().at("missing") == "7");
  CHECK_NOTHROW(c.reject_unknown());
}

TEST_CASE("config errors") {
  std::istringstream bad_line("no equals sign\n");
  CHECK_PQL_ERROR(Config::parse(bad_line), ErrorCode::Configuration);
  std::istringstream bad_key("Bad Key=1\n");
  CHECK_PQL_ERROR(Config::parse(bad_key), ErrorCode::Configuration);

  Config c = Config::from_map({{"x", "abc"}, {"n", "-3"}, {"b", "maybe"}, {"extra", "1"}, {"inf", "inf"}});
  CHECK_PQL_ERROR(c.get_double("x", 0.0), ErrorCode::Configuration);
  CHECK_PQL_ERROR(c.get_count("n", 1), ErrorCode::Configuration);
  CHECK_PQL_ERROR(c.get_bool("b", false), ErrorCode::Configuration);
  CHECK_PQL_ERROR(c.get_double("inf", 0.0), ErrorCode::Configuration);
  CHECK_PQL_ERROR(c.reject_unknown(), ErrorCode::Configuration);
  CHECK_PQL_ERROR(Config::from_file("/nonexistent/dir/file.cfg"), ErrorCode::Io);
}

TEST_CASE("overrides win over file values") {
  std::istringstream in("tau=10\n");
  Config c = Config::parse(in);
  c.apply_override("tau=20");
  c.apply_override("tau=30");
  CHECK(c.get_double("tau", 0.0) == 30.0);
  CHECK_PQL_ERROR(c.apply_override("tau"), ErrorCode::Configuration);
}

TEST_CASE("format_double round-trips") {
  for (double v : {0.1, 1.0 / 3.0, 1e-300, -2.5e17, kPi}) CHECK(std::stod(format_double(v)) == v);
  CHECK(format_list({1.0, 0.5}) == format_double(1.0) + "," + format_double(0.5));
}

TEST_CASE("checks") {
  CHECK(Check::make("a", 1.0, "<=", 1.0).pass);
  CHECK_FALSE(Check::make("a", 1.1, "<=", 1.0).pass);
  CHECK(Check::make("a", 2.0, ">=", 1.0).pass);
  CHECK(Check::make("a", 3.0, "==", 3.0).pass);
  CHECK_FALSE(Check::make("a", NAN, "<=", 1.0).pass);
  const Check t = Check::trivial("undefined");
  CHECK(t.pass);
  CHECK_FALSE(t.value.has_value());
  CHECK_PQL_ERROR(Check::make("a", 1.0, "<", 2.0), ErrorCode::InvalidArgument);
}

TEST_CASE("CSV report") {
  std::ostringstream empty;
  write_report_csv({}, empty);
  CHECK(empty.str() == "experiment,quantity,value,threshold,comparator,pass\n");
  std::ostringstream full;
  write_report_csv({sample_record()}, full);
  const std::string s = full.str();
  CHECK(std::count(s.begin(), s.end(), '\n') == 3);
}

TEST_CASE("JSON report round trip and hashing") {
  const ReportRecord r = sample_record();
  const ReportRecord back = report_from_json(report_to_json(r));
  CHECK(back == r);
  CHECK(back.content_hash() == r.content_hash());
  ReportRecord slower = r;
  slower.wall_clock_seconds = 99.0;
  CHECK(slower.content_hash() == r.content_hash());
  ReportRecord other = r;
  other.measure("max_residual", 1.5e-9);
  CHECK(other.content_hash() != r.content_hash());
  CHECK(report_to_json(r).find("\"schema_version\": 1") != std::string::npos);
  CHECK_PQL_ERROR(report_from_json("{not json"), ErrorCode::Io);
  CHECK_PQL_ERROR(report_from_json("{}"), ErrorCode::Io);

  ReportRecord nan = r;
  nan.measure("bad", NAN);
  CHECK_PQL_ERROR(report_to_json(nan), ErrorCode::InvalidArgument);
}

TEST_CASE("emitted files are identical for identical records") {
  const auto dir = std::filesystem::temp_directory_path() / "pqlab_report_test";
  std::filesystem::create_directories(dir);
  const ReportRecord r = sample_record();
  for (ReportFormat f : {ReportFormat::Csv, ReportFormat::Json}) {
    const std::string a = (dir / "a.out").string(), b = (dir / "b.out").string();
    emit_report(r, f, a);
    emit_report(r, f, b);
    CHECK(slurp(a) == slurp(b));
    CHECK_FALSE(slurp(a).empty());
  }
  std::filesystem::remove_all(dir);
}

TEST_CASE("plot data") {
  const ReportRecord r = sample_record();
  std::ostringstream os;
  write_plot_data(r.sweeps[0], r.experiment, os);
  const std::string s = os.str();
  CHECK(s.find("# experiment=demo") != std::string::npos);
  const auto pos = s.find("# slope=");
  REQUIRE(pos != std::string::npos);
  CHECK(std::stod(s.substr(pos + 8)) == doctest::Approx(-2.0).epsilon(1e-12));

  Sweep one{"single", "x", "y", SweepFit::Exponential, {{1.0, 2.0}}};
  std::ostringstream o1;
  write_plot_data(one, "demo", o1);
  CHECK(o1.str().find("# slope=") == std::string::npos);
  CHECK_FALSE(sweep_slope(one).has_value());

  Sweep loglog{"order", "h", "err", SweepFit::LogLog, {{0.1, 0.01}, {0.05, 0.0025}, {0.025, 0.000625}}};
  CHECK(sweep_slope(loglog)->slope == doctest::Approx(2.0).epsilon(1e-12));

  Sweep bad{"nan", "x", "y", SweepFit::None, {{1.0, NAN}}};
  std::ostringstream o2;
  CHECK_PQL_ERROR(write_plot_data(bad, "demo", o2), ErrorCode::InvalidArgument);
}
