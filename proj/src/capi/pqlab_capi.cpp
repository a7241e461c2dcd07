#include "pqlab/pqlab.h"

#include <exception>
#include <new>
#include <string>

#include "core/amplitudes.hpp"
#include "core/config.hpp"
#include "core/experiments.hpp"
#include "core/report.hpp"
#include "core/spectral.hpp"

struct pql_config {
  pql::Config config;
};

struct pql_report {
  pql::ReportRecord record;
  std::string json;
  std::string hash;
};

struct pql_amplitude_table {
  pql::AmplitudeTable table;
};

struct pql_eigen_table {
  pql::EigenData data;
};

namespace {

thread_local std::string g_last_error;

pql_status set_error(pql_status s, const std::string& msg) {
  g_last_error = msg;
  return s;
}

template <class F>
pql_status guarded(F&& f) {
  try {
    g_last_error.clear();
    f();
    return PQL_OK;
  } catch (const pql::Error& e) {
    return set_error(static_cast<pql_status>(static_cast<int>(e.code())), e.what());
  } catch (const std::bad_alloc&) {
    return set_error(PQL_ERR_INTERNAL, "out of memory");
  } catch (const std::exception& e) {
    return set_error(PQL_ERR_INTERNAL, e.what());
  } catch (...) {
    return set_error(PQL_ERR_INTERNAL, "unknown failure");
  }
}

pql_status null_arg(const char* what) { return set_error(PQL_ERR_INVALID_ARGUMENT, std::string(what) + " is null"); }

}  // namespace

extern "C" {

const char* pql_version(void) { return "0.1.0"; }

const char* pql_status_name(pql_status status) {
  if (status == PQL_OK) return "ok";
  if (status == PQL_ERR_INTERNAL) return "internal";
  return pql::error_code_name(static_cast<pql::ErrorCode>(static_cast<int>(status)));
}

const char* pql_last_error(void) { return g_last_error.c_str(); }

size_t pql_experiment_count(void) { return pql::experiment_list().size(); }

const char* pql_experiment_name(size_t index) {
  const auto& l = pql::experiment_list();
  return index < l.size() ? l[index].name.c_str() : nullptr;
}

const char* pql_experiment_summary(size_t index) {
  const auto& l = pql::experiment_list();
  return index < l.size() ? l[index].summary.c_str() : nullptr;
}

pql_status pql_config_create(pql_config** out) {
  if (!out) return null_arg("out");
  *out = nullptr;
  return guarded([&] { *out = new pql_config{}; });
}

pql_status pql_config_load(const char* path, pql_config** out) {
  if (!path) return null_arg("path");
  if (!out) return null_arg("out");
  *out = nullptr;
  return guarded([&] { *out = new pql_config{pql::Config::from_file(path)}; });
}

pql_status pql_config_set(pql_config* config, const char* key, const char* value) {
  if (!config) return null_arg("config");
  if (!key || !value) return null_arg("key/value");
  return guarded([&] { config->config.set(key, value); });
}

pql_status pql_config_override(pql_config* config, const char* assignment) {
  if (!config) return null_arg("config");
  if (!assignment) return null_arg("assignment");
  return guarded([&] { config->config.apply_override(assignment); });
}

void pql_config_destroy(pql_config* config) { delete config; }

pql_status pql_run_experiment(const char* name, const pql_config* config, pql_report** out) {
  if (!name) return null_arg("name");
  if (!out) return null_arg("out");
  *out = nullptr;
  return guarded([&] {
    pql::Config cfg = config ? pql::Config::from_map(config->config.entries()) : pql::Config{};
    auto* r = new pql_report{};
    try {
      r->record = pql::run_experiment(name, cfg);
      r->json = pql::report_to_json(r->record);
      r->hash = r->record.content_hash();
    } catch (...) {
      delete r;
      throw;
    }
    *out = r;
  });
}

int pql_report_passed(const pql_report* report) { return report && report->record.passed() ? 1 : 0; }

const char* pql_report_experiment(const pql_report* report) { return report ? report->record.experiment.c_str() : nullptr; }

double pql_report_wall_clock(const pql_report* report) { return report ? report->record.wall_clock_seconds : 0.0; }

const char* pql_report_content_hash(const pql_report* report) { return report ? report->hash.c_str() : nullptr; }

size_t pql_report_check_count(const pql_report* report) { return report ? report->record.checks.size() : 0; }

pql_status pql_report_check(const pql_report* report, size_t index, const char** quantity, int* has_value,
                            double* value, const char** comparator, double* threshold, int* pass) {
  if (!report) return null_arg("report");
  if (index >= report->record.checks.size()) return set_error(PQL_ERR_INVALID_ARGUMENT, "check index out of range");
  const pql::Check& c = report->record.checks[index];
  if (quantity) *quantity = c.quantity.c_str();
  if (has_value) *has_value = c.value ? 1 : 0;
  if (value) *value = c.value.value_or(0.0);
  if (comparator) *comparator = c.comparator.c_str();
  if (threshold) *threshold = c.threshold;
  if (pass) *pass = c.pass ? 1 : 0;
  return PQL_OK;
}

pql_status pql_report_measurement(const pql_report* report, const char* name, double* value) {
  if (!report) return null_arg("report");
  if (!name || !value) return null_arg("name/value");
  const auto it = report->record.measurements.find(name);
  if (it == report->record.measurements.end())
    return set_error(PQL_ERR_INVALID_ARGUMENT, std::string("no measurement named '") + name + "'");
  *value = it->second;
  return PQL_OK;
}

size_t pql_report_warning_count(const pql_report* report) { return report ? report->record.warnings.size() : 0; }

const char* pql_report_warning(const pql_report* report, size_t index) {
  if (!report || index >= report->record.warnings.size()) return nullptr;
  return report->record.warnings[index].c_str();
}

const char* pql_report_json(const pql_report* report) { return report ? report->json.c_str() : nullptr; }

pql_status pql_report_write_json(const pql_report* report, const char* path) {
  if (!report) return null_arg("report");
  if (!path) return null_arg("path");
  return guarded([&] { pql::emit_report(report->record, pql::ReportFormat::Json, path); });
}

pql_status pql_report_write_csv(const pql_report* report, const char* path) {
  if (!report) return null_arg("report");
  if (!path) return null_arg("path");
  return guarded([&] { pql::emit_report(report->record, pql::ReportFormat::Csv, path); });
}

pql_status pql_report_write_outputs(const pql_report* report, const char* dir) {
  if (!report) return null_arg("report");
  if (!dir) return null_arg("dir");
  return guarded([&] { pql::write_experiment_outputs(report->record, dir); });
}

void pql_report_destroy(pql_report* report) { delete report; }

pql_status pql_amplitude_create(int n, double sigma, int order, pql_amplitude_table** out) {
  if (!out) return null_arg("out");
  *out = nullptr;
  return guarded([&] { *out = new pql_amplitude_table{pql::amplitude_coeffs(n, sigma, order)}; });
}

int pql_amplitude_order(const pql_amplitude_table* table) { return table ? table->table.order() : -1; }

pql_status pql_amplitude_coeff(const pql_amplitude_table* table, int k, double* value) {
  if (!table) return null_arg("table");
  if (!value) return null_arg("value");
  return guarded([&] {
    pql::require(k >= 0 && k <= table->table.order(), pql::ErrorCode::InvalidArgument, "k outside the table");
    *value = table->table.coeff(k);
  });
}

pql_status pql_amplitude_coeff_log(const pql_amplitude_table* table, int k, int* sign, double* log_abs) {
  if (!table) return null_arg("table");
  if (!sign || !log_abs) return null_arg("sign/log_abs");
  return guarded([&] {
    pql::require(k >= 0 && k <= table->table.order(), pql::ErrorCode::InvalidArgument, "k outside the table");
    const pql::LogReal& c = table->table.coeff_log(k);
    *sign = c.sign;
    *log_abs = c.log_abs;
  });
}

pql_status pql_amplitude_eval(const pql_amplitude_table* table, int k, double r, double* value) {
  if (!table) return null_arg("table");
  if (!value) return null_arg("value");
  return guarded([&] { *value = pql::eval_a_k(table->table, k, r); });
}

pql_status pql_amplitude_ode_residual(const pql_amplitude_table* table, int k, double r, double* value) {
  if (!table) return null_arg("table");
  if (!value) return null_arg("value");
  return guarded([&] { *value = pql::ode_residual(table->table, k, r); });
}

void pql_amplitude_destroy(pql_amplitude_table* table) { delete table; }

pql_status pql_eigen_create(double lx, double ly, double lambda_max, pql_eigen_table** out) {
  if (!out) return null_arg("out");
  *out = nullptr;
  return guarded([&] { *out = new pql_eigen_table{pql::eigen_table(lx, ly, lambda_max)}; });
}

size_t pql_eigen_group_count(const pql_eigen_table* table) { return table ? table->data.group_count() : 0; }

pql_status pql_eigen_group(const pql_eigen_table* table, size_t group, double* lambda, size_t* multiplicity) {
  if (!table) return null_arg("table");
  return guarded([&] {
    const pql::EigenGroup& g = table->data.group(group);
    if (lambda) *lambda = g.lambda;
    if (multiplicity) *multiplicity = g.multiplicity();
  });
}

pql_status pql_eigen_mode(const pql_eigen_table* table, size_t group, size_t index, int* j, int* k) {
  if (!table) return null_arg("table");
  return guarded([&] {
    const pql::EigenGroup& g = table->data.group(group);
    pql::require(index < g.modes.size(), pql::ErrorCode::InvalidArgument, "mode index outside the group");
    if (j) *j = g.modes[index].j;
    if (k) *k = g.modes[index].k;
  });
}

void pql_eigen_destroy(pql_eigen_table* table) { delete table; }

}  // extern "C"
