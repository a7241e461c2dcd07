#pragma once

#include <string>
#include <vector>

#include "core/config.hpp"
#include "core/report.hpp"

namespace pql {

struct ExperimentInfo {
  std::string name;
  std::string summary;
};

const std::vector<ExperimentInfo>& experiment_list();
bool is_experiment(const std::string& name);

/// Reads every key the experiment needs (validating ranges), rejects unknown keys, then runs.
/// Unknown names raise Usage; invalid parameters raise Configuration.
ReportRecord run_experiment(const std::string& name, Config& config);

/// Writes report.json, report.csv and one <sweep>.dat per sweep into `dir` (created if missing).
void write_experiment_outputs(const ReportRecord& record, const std::string& dir);

}  // namespace pql
