#pragma once

#include <filesystem>
#include <iosfwd>
#include <string>
#include <vector>

#include "bemtopo/optimizer.hpp"

namespace bemtopo {

namespace fs = std::filesystem;

/// Parses the INI-style run description. Keys missing from the file take
/// their defaults; their dotted names ("optimizer.alpha") are appended to
/// `defaulted`. Errors name the offending key.
OptimizationConfig parse_config(std::istream& in, std::vector<std::string>* defaulted = nullptr);
OptimizationConfig load_config(const fs::path& path, std::vector<std::string>* defaulted = nullptr);

/// Writes every key, with doubles at round-trip precision.
void write_config(std::ostream& out, const OptimizationConfig& config);

/// Creates `dir` if needed and checks that a file can be written there.
void ensure_writable(const fs::path& dir);

/// Side information recorded in the manifest.
struct RunInfo {
  std::string config_source;
  std::vector<std::string> defaulted;
  std::vector<std::string> overrides;
};

struct RunArtifacts {
  fs::path dir;
  std::vector<fs::path> snapshots;
  fs::path energy_table;
  fs::path timing;
  fs::path manifest;
  fs::path config_echo;
};

/// SVG picture of one configuration: material cells and boundary elements
/// colored by condition. Coordinates use 9 significant digits.
std::string svg_snapshot(const CellGrid& grid, const BoundaryModel& model);

/// One row per history record, timings last.
std::string energy_table(const OptimizationState& state);

/// Writes iter_NNN.svg per iteration, energy.csv, timing.json, config.ini
/// and manifest.json into `outdir`.
RunArtifacts emit_artifacts(const OptimizationState& state, const OptimizationConfig& config, const fs::path& outdir,
                            const RunInfo& info = {});

struct PhaseTotals {
  double solve = 0.0;
  double td = 0.0;
  double remesh = 0.0;
  double assemble = 0.0;
  double update = 0.0;
  double audit = 0.0;
};
PhaseTotals phase_totals(const OptimizationState& state);

struct BenchmarkResult {
  OptimizationState lu;
  OptimizationState block;
  RunArtifacts lu_artifacts;
  RunArtifacts block_artifacts;
  /// Status grids equal at every iteration and at the end.
  bool identical = false;
  fs::path report;
};

/// Runs the config with full LU, then with blockwise updates, writing each
/// run under outdir/lu and outdir/block and the comparison to
/// outdir/timing.json.
BenchmarkResult benchmark_mode(const OptimizationConfig& config, const fs::path& outdir, const RunInfo& info = {});

}  // namespace bemtopo
