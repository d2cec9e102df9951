#pragma once

#include <cstddef>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include <json.hpp>

#include "sublab/harness.hpp"

namespace sublab {

struct StageError {
  std::string stage;
  std::string message;
  bool config = false;  // malformed or missing configuration, as opposed to a runtime failure
};

struct ViolationEntry {
  std::string check;
  std::optional<std::size_t> node;
  double margin = 0.0;
};

// Outcome of one scenario run. runtime_ms is kept in memory only so that
// written reports are byte-identical across runs.
struct ScenarioReport {
  std::string scenario_id;
  double max_interior_gap = 0.0;
  double max_boundary_gap = 0.0;
  std::vector<std::size_t> argmax_nodes;
  std::map<std::string, double> fitted_constants;
  std::vector<ViolationEntry> violations;
  std::vector<StageError> stage_errors;
  std::map<std::string, bool> checks;
  nlohmann::ordered_json details = nlohmann::ordered_json::object();
  double runtime_ms = 0.0;

  bool has_config_error() const;
  // "pass", "fail" (some check failed) or "error" (some stage raised).
  std::string verdict() const;
  nlohmann::ordered_json to_json() const;
};

ScenarioReport comparison_report(const ComparisonResult& r, std::string scenario_id);

// SUBLAB_OUT if set, otherwise fallback.
std::string output_directory(const std::string& fallback = "sublab-out");

// Runs the configured pipeline. Stage failures are recorded, never thrown.
// When out_dir is nonempty the report and CSV side files are written there.
ScenarioReport scenario_run(const nlohmann::json& config, const std::string& out_dir = {});
// Parse errors surface as a "config" stage error.
ScenarioReport scenario_run_file(const std::string& path, const std::string& out_dir = {});

}  // namespace sublab
