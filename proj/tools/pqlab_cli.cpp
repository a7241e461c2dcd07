// pqlab: batch driver for the named experiments.
//
//   pqlab <experiment> [--config <path>] [--set key=value]... --out <dir>
//   pqlab list
//
// Exit codes: 0 every check passed, 1 some check failed, 2 usage or configuration
// error, 3 any other failure while running or writing outputs.

#include <cstdio>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "pqlab/pqlab.h"

namespace {

constexpr int kExitPass = 0;
constexpr int kExitFail = 1;
constexpr int kExitConfig = 2;
constexpr int kExitRuntime = 3;

int exit_for(pql_status s) {
  switch (s) {
    case PQL_OK: return kExitPass;
    case PQL_ERR_CONFIGURATION:
    case PQL_ERR_USAGE:
      return kExitConfig;
    default:
      return kExitRuntime;
  }
}

int report_error(const char* what, pql_status s) {
  std::fprintf(stderr, "pqlab: %s failed (%s): %s\n", what, pql_status_name(s), pql_last_error());
  return exit_for(s);
}

void print_list() {
  for (size_t i = 0; i < pql_experiment_count(); ++i)
    std::printf("%-22s %s\n", pql_experiment_name(i), pql_experiment_summary(i));
}

void print_summary(const pql_report* r) {
  for (size_t i = 0; i < pql_report_check_count(r); ++i) {
    const char *q = nullptr, *cmp = nullptr;
    int has = 0, pass = 0;
    double v = 0.0, thr = 0.0;
    pql_report_check(r, i, &q, &has, &v, &cmp, &thr, &pass);
    if (has)
      std::printf("  %-4s %-48s %.6g %s %.6g\n", pass ? "ok" : "FAIL", q, v, cmp, thr);
    else
      std::printf("  %-4s %-48s (undefined, %s)\n", pass ? "ok" : "FAIL", q, cmp);
  }
  for (size_t i = 0; i < pql_report_warning_count(r); ++i) std::printf("  warning: %s\n", pql_report_warning(r, i));
  std::printf("%s: %s in %.2f s (hash %s)\n", pql_report_experiment(r), pql_report_passed(r) ? "PASS" : "FAIL",
              pql_report_wall_clock(r), pql_report_content_hash(r));
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"pqlab: numerical checks for parabolic quasimode and inverse-problem machinery"};
  std::string experiment, config_path, out_dir;
  std::vector<std::string> overrides;
  bool quiet = false;
  app.add_option("experiment", experiment, "experiment name, or 'list'")->required();
  app.add_option("--config", config_path, "flat key=value configuration file");
  app.add_option("--set", overrides, "override one key (key=value); repeatable")->take_all();
  app.add_option("--out", out_dir, "output directory for report.json, report.csv and plot data");
  app.add_flag("--quiet", quiet, "print only the verdict line");
  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? kExitPass : kExitConfig;
  }

  if (experiment == "list") {
    print_list();
    return kExitPass;
  }
  if (out_dir.empty()) {
    std::fprintf(stderr, "pqlab: --out <dir> is required\n");
    return kExitConfig;
  }

  pql_config* cfg = nullptr;
  pql_status s = config_path.empty() ? pql_config_create(&cfg) : pql_config_load(config_path.c_str(), &cfg);
  if (s != PQL_OK) {
    report_error("reading config", s);
    return kExitConfig;
  }
  for (const std::string& o : overrides) {
    s = pql_config_override(cfg, o.c_str());
    if (s != PQL_OK) {
      pql_config_destroy(cfg);
      return report_error("applying --set", s);
    }
  }

  pql_report* rep = nullptr;
  s = pql_run_experiment(experiment.c_str(), cfg, &rep);
  pql_config_destroy(cfg);
  if (s != PQL_OK) return report_error(experiment.c_str(), s);

  if (quiet)
    std::printf("%s: %s\n", pql_report_experiment(rep), pql_report_passed(rep) ? "PASS" : "FAIL");
  else
    print_summary(rep);
  s = pql_report_write_outputs(rep, out_dir.c_str());
  const int passed = pql_report_passed(rep);
  pql_report_destroy(rep);
  if (s != PQL_OK) {
    report_error("writing outputs", s);
    return kExitRuntime;
  }
  return passed ? kExitPass : kExitFail;
}
