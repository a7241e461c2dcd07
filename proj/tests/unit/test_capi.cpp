#include <doctest.h>

#include <cmath>
#include <cstdio>
#include <filesystem>
#include <string>

#include <pqlab/pqlab.h>

TEST_CASE("library metadata") {
  CHECK(std::string(pql_version()).size() > 0);
  CHECK(std::string(pql_status_name(PQL_OK)).size() > 0);
  CHECK(std::string(pql_status_name(PQL_ERR_POLE_PROXIMITY)) != std::string(pql_status_name(PQL_OK)));
  REQUIRE(pql_experiment_count() == 13);
  for (size_t i = 0; i < pql_experiment_count(); ++i) {
    CHECK(pql_experiment_name(i) != nullptr);
    CHECK(pql_experiment_summary(i) != nullptr);
  }
  CHECK(pql_experiment_name(pql_experiment_count()) == nullptr);
}

TEST_CASE("config handles") {
  pql_config* c = nullptr;
  REQUIRE(pql_config_create(&c) == PQL_OK);
  CHECK(pql_config_set(c, "tau_count", "4") == PQL_OK);
  CHECK(pql_config_override(c, "tau_count=5") == PQL_OK);
  CHECK(pql_config_override(c, "missing-equals") == PQL_ERR_CONFIGURATION);
  CHECK(std::string(pql_last_error()).size() > 0);
  CHECK(pql_config_set(c, "Bad Key", "1") == PQL_ERR_CONFIGURATION);
  CHECK(pql_config_set(nullptr, "a", "1") == PQL_ERR_INVALID_ARGUMENT);
  CHECK(pql_config_create(nullptr) == PQL_ERR_INVALID_ARGUMENT);
  pql_config* loaded = nullptr;
  CHECK(pql_config_load("/nonexistent/file.cfg", &loaded) == PQL_ERR_IO);
  CHECK(loaded == nullptr);
  pql_config_destroy(c);
  pql_config_destroy(nullptr);
}

TEST_CASE("running an experiment") {
  pql_config* c = nullptr;
  REQUIRE(pql_config_create(&c) == PQL_OK);
  pql_report* r = nullptr;
  REQUIRE(pql_run_experiment("amplitude-odes", c, &r) == PQL_OK);
  CHECK(pql_report_passed(r) == 1);
  CHECK(std::string(pql_report_experiment(r)) == "amplitude-odes");
  CHECK(pql_report_wall_clock(r) >= 0.0);
  CHECK(std::string(pql_report_content_hash(r)).size() > 0);
  const size_t n = pql_report_check_count(r);
  REQUIRE(n > 0);
  for (size_t i = 0; i < n; ++i) {
    const char* q = nullptr;
    int pass = 0;
    CHECK(pql_report_check(r, i, &q, nullptr, nullptr, nullptr, nullptr, &pass) == PQL_OK);
    CHECK(q != nullptr);
    CHECK(pass == 1);
  }
  CHECK(pql_report_check(r, n, nullptr, nullptr, nullptr, nullptr, nullptr, nullptr) == PQL_ERR_INVALID_ARGUMENT);
  double v = 0.0;
  CHECK(pql_report_measurement(r, "no such measurement", &v) == PQL_ERR_INVALID_ARGUMENT);
  CHECK(std::string(pql_report_json(r)).find("\"experiment\"") != std::string::npos);

  const auto dir = std::filesystem::temp_directory_path() / "pqlab_capi_test";
  std::filesystem::remove_all(dir);
  CHECK(pql_report_write_outputs(r, dir.string().c_str()) == PQL_OK);
  CHECK(std::filesystem::exists(dir / "report.json"));
  CHECK(pql_report_write_json(r, (dir / "copy.json").string().c_str()) == PQL_OK);
  CHECK(pql_report_write_csv(r, (dir / "copy.csv").string().c_str()) == PQL_OK);
  CHECK(pql_report_write_csv(r, "/nonexistent/dir/x.csv") == PQL_ERR_IO);
  std::filesystem::remove_all(dir);

  pql_report* r2 = nullptr;
  REQUIRE(pql_run_experiment("amplitude-odes", c, &r2) == PQL_OK);
  CHECK(std::string(pql_report_content_hash(r)) == pql_report_content_hash(r2));
  pql_report_destroy(r2);
  pql_report_destroy(r);

  pql_report* bad = nullptr;
  CHECK(pql_run_experiment("no-such", c, &bad) == PQL_ERR_USAGE);
  CHECK(bad == nullptr);
  CHECK(pql_run_experiment(nullptr, c, &bad) == PQL_ERR_INVALID_ARGUMENT);
  CHECK(pql_config_set(c, "bogus_key", "1") == PQL_OK);
  CHECK(pql_run_experiment("amplitude-odes", c, &bad) == PQL_ERR_CONFIGURATION);
  pql_config_destroy(c);
}

TEST_CASE("amplitude handles") {
  pql_amplitude_table* t = nullptr;
  REQUIRE(pql_amplitude_create(2, 0.0, 3, &t) == PQL_OK);
  CHECK(pql_amplitude_order(t) == 3);
  double v = 0.0;
  CHECK(pql_amplitude_coeff(t, 1, &v) == PQL_OK);
  CHECK(v == -0.125);
  int sign = 0;
  double la = 0.0;
  CHECK(pql_amplitude_coeff_log(t, 2, &sign, &la) == PQL_OK);
  CHECK(sign == 1);
  CHECK(la == doctest::Approx(std::log(9.0 / 128.0)));
  CHECK(pql_amplitude_eval(t, 1, 2.0, &v) == PQL_OK);
  CHECK(v == doctest::Approx(-0.0441942).epsilon(1e-6));
  CHECK(pql_amplitude_eval(t, 1, -1.0, &v) == PQL_ERR_INVALID_ARGUMENT);
  CHECK(pql_amplitude_ode_residual(t, 1, 1.0, &v) == PQL_OK);
  CHECK(std::abs(v) <= 1e-13);
  CHECK(pql_amplitude_coeff(t, 9, &v) == PQL_ERR_INVALID_ARGUMENT);
  pql_amplitude_destroy(t);

  pql_amplitude_table* big = nullptr;
  REQUIRE(pql_amplitude_create(2, 1.0, 400, &big) == PQL_OK);
  CHECK(pql_amplitude_coeff(big, 400, &v) == PQL_ERR_NUMERICAL);
  pql_amplitude_destroy(big);
  CHECK(pql_amplitude_create(2, 2.0, 3, &t) == PQL_ERR_INVALID_ARGUMENT);
}

TEST_CASE("eigen handles") {
  pql_eigen_table* e = nullptr;
  REQUIRE(pql_eigen_create(M_PI, M_PI, 10.0, &e) == PQL_OK);
  REQUIRE(pql_eigen_group_count(e) >= 3);
  double lambda = 0.0;
  size_t mult = 0;
  CHECK(pql_eigen_group(e, 1, &lambda, &mult) == PQL_OK);
  CHECK(lambda == doctest::Approx(5.0));
  CHECK(mult == 2);
  int j = 0, k = 0;
  CHECK(pql_eigen_mode(e, 0, 0, &j, &k) == PQL_OK);
  CHECK(j == 1);
  CHECK(k == 1);
  CHECK(pql_eigen_mode(e, 0, 5, &j, &k) == PQL_ERR_INVALID_ARGUMENT);
  pql_eigen_destroy(e);
  CHECK(pql_eigen_create(M_PI, M_PI, 1.0, &e) == PQL_ERR_EMPTY_TABLE);
}
