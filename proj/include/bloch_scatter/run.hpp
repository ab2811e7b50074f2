#pragma once

#include <filesystem>
#include <optional>
#include <string>

#include <json.hpp>

#include "bloch_scatter/config.hpp"
#include "bloch_scatter/error.hpp"

namespace bloch_scatter {

struct RunOverrides {
  int threads = 0;
  std::optional<GridMode> grid_mode;
  std::optional<int> M;
  std::optional<CoupledPath> solver;
};

void apply_overrides(RunConfig& config, const RunOverrides& o);

/// Pipeline result for one grid; shared by solve and the quadrature study.
struct PipelineResult {
  std::shared_ptr<const CellDiscretization> disc;
  std::optional<AlphaGrid> grid;
  PhysicalSolution physical;
  std::optional<CellSolution> cell;  // direct quasi-periodic solve (unperturbed plane waves)
  std::optional<CoupledResult> coupled;
  double snap_distance = 0.0;
  double alpha_used = 0.0;
};

PipelineResult run_pipeline(const RunConfig& config, int threads, const std::optional<AlphaGrid>& grid = std::nullopt);

/// solve: writes manifest.json, field_cell_<j>.csv, efficiencies.csv (plane
/// waves on unperturbed surfaces), alpha_grid.csv, singular_set.csv and the mesh.
nlohmann::json cmd_solve(const RunConfig& config, const std::filesystem::path& out, int threads);

/// analyze: square-root fits on both sides of every anomaly inside the open
/// dual cell, exponent estimates, the interval model and, optionally, the
/// quadrature study. Writes analysis.json, samples_*.csv, convergence.csv.
nlohmann::json cmd_analyze(const RunConfig& config, const std::filesystem::path& out, int threads);

/// {"error": {"module", "operation", "message"}}
std::string error_record(const Error& e);
std::string error_record(const std::string& module, const std::string& operation, const std::string& message);

}  // namespace bloch_scatter
