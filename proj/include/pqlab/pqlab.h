#ifndef PQLAB_PQLAB_H
#define PQLAB_PQLAB_H

#include <stddef.h>

#if defined(PQLAB_BUILDING_LIBRARY)
#define PQL_API __attribute__((visibility("default")))
#else
#define PQL_API
#endif

#ifdef __cplusplus
extern "C" {
#endif

/* Status codes. Nonzero values mirror the library's internal error categories. */
typedef enum pql_status {
  PQL_OK = 0,
  PQL_ERR_INVALID_ARGUMENT = 1,
  PQL_ERR_DOMAIN = 2,
  PQL_ERR_PRECONDITION = 3,
  PQL_ERR_NUMERICAL = 4,
  PQL_ERR_CONFIGURATION = 5,
  PQL_ERR_IO = 6,
  PQL_ERR_USAGE = 7,
  PQL_ERR_RANK_DEFICIENT = 8,
  PQL_ERR_POLE_PROXIMITY = 9,
  PQL_ERR_FAMILY_DEFICIENT = 10,
  PQL_ERR_DATA_TOO_LARGE = 11,
  PQL_ERR_EMPTY_TABLE = 12,
  PQL_ERR_INTERNAL = 99
} pql_status;

typedef struct pql_config pql_config;
typedef struct pql_report pql_report;
typedef struct pql_amplitude_table pql_amplitude_table;
typedef struct pql_eigen_table pql_eigen_table;

PQL_API const char* pql_version(void);
PQL_API const char* pql_status_name(pql_status status);
/* Message of the most recent failure on the calling thread ("" if none). */
PQL_API const char* pql_last_error(void);

/* ---- experiments ---- */
PQL_API size_t pql_experiment_count(void);
PQL_API const char* pql_experiment_name(size_t index);
PQL_API const char* pql_experiment_summary(size_t index);

/* ---- configuration ---- */
PQL_API pql_status pql_config_create(pql_config** out);
PQL_API pql_status pql_config_load(const char* path, pql_config** out);
PQL_API pql_status pql_config_set(pql_config* config, const char* key, const char* value);
/* "key=value" */
PQL_API pql_status pql_config_override(pql_config* config, const char* assignment);
PQL_API void pql_config_destroy(pql_config* config);

/* Runs a named experiment. The config is consumed read-only (a copy is used). */
PQL_API pql_status pql_run_experiment(const char* name, const pql_config* config, pql_report** out);

/* ---- reports ---- */
PQL_API int pql_report_passed(const pql_report* report);
PQL_API const char* pql_report_experiment(const pql_report* report);
PQL_API double pql_report_wall_clock(const pql_report* report);
PQL_API const char* pql_report_content_hash(const pql_report* report);
PQL_API size_t pql_report_check_count(const pql_report* report);
/* Any output pointer may be NULL. *has_value is 0 for checks whose quantity is undefined. */
PQL_API pql_status pql_report_check(const pql_report* report, size_t index, const char** quantity, int* has_value,
                                    double* value, const char** comparator, double* threshold, int* pass);
PQL_API pql_status pql_report_measurement(const pql_report* report, const char* name, double* value);
PQL_API size_t pql_report_warning_count(const pql_report* report);
PQL_API const char* pql_report_warning(const pql_report* report, size_t index);
/* JSON text of the report, owned by the handle. */
PQL_API const char* pql_report_json(const pql_report* report);
PQL_API pql_status pql_report_write_json(const pql_report* report, const char* path);
PQL_API pql_status pql_report_write_csv(const pql_report* report, const char* path);
/* report.json, report.csv and one <sweep>.dat per sweep under dir. */
PQL_API pql_status pql_report_write_outputs(const pql_report* report, const char* dir);
PQL_API void pql_report_destroy(pql_report* report);

/* ---- amplitude tables ---- */
PQL_API pql_status pql_amplitude_create(int n, double sigma, int order, pql_amplitude_table** out);
PQL_API int pql_amplitude_order(const pql_amplitude_table* table);
PQL_API pql_status pql_amplitude_coeff(const pql_amplitude_table* table, int k, double* value);
PQL_API pql_status pql_amplitude_coeff_log(const pql_amplitude_table* table, int k, int* sign, double* log_abs);
PQL_API pql_status pql_amplitude_eval(const pql_amplitude_table* table, int k, double r, double* value);
PQL_API pql_status pql_amplitude_ode_residual(const pql_amplitude_table* table, int k, double r, double* value);
PQL_API void pql_amplitude_destroy(pql_amplitude_table* table);

/* ---- Dirichlet eigen tables of a rectangle ---- */
PQL_API pql_status pql_eigen_create(double lx, double ly, double lambda_max, pql_eigen_table** out);
PQL_API size_t pql_eigen_group_count(const pql_eigen_table* table);
PQL_API pql_status pql_eigen_group(const pql_eigen_table* table, size_t group, double* lambda, size_t* multiplicity);
PQL_API pql_status pql_eigen_mode(const pql_eigen_table* table, size_t group, size_t index, int* j, int* k);
PQL_API void pql_eigen_destroy(pql_eigen_table* table);

#ifdef __cplusplus
}
#endif

#endif
