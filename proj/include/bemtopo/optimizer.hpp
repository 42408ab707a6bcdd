#pragma once

#include <limits>
#include <memory>
#include <optional>
#include <string>
#include <vector>

#include "bemtopo/bem.hpp"
#include "bemtopo/inverse.hpp"
#include "bemtopo/model.hpp"
#include "bemtopo/remesher.hpp"
#include "bemtopo/td.hpp"

namespace bemtopo {

enum class SolverMode { FullLU, Blockwise };

std::string to_string(SolverMode mode);
SolverMode parse_solver_mode(const std::string& text);

enum class Corner { BottomLeft, BottomRight, TopLeft, TopRight };

std::string to_string(Corner corner);
Corner parse_corner(const std::string& text);
Face parse_face(const std::string& text);

/// Prescribed displacement on the exterior faces of one grid side. Cells
/// whose center lies in the [from, to] fraction of the side are clamped.
struct ClampSpec {
  std::string name;
  Face side = Face::Left;
  double from = 0.0;
  double to = 1.0;
  Vec2 displacement = Vec2::Zero();

  bool operator==(const ClampSpec&) const = default;
};

/// A point force (spread over the single finest-level face at `corner` on
/// `side`, traction = force / h) or a uniform traction over a side range.
struct LoadSpec {
  enum class Type { Point, Traction };

  std::string name;
  Type type = Type::Point;
  Face side = Face::Top;
  Corner corner = Corner::TopRight;
  double from = 0.0;
  double to = 1.0;
  Vec2 value = Vec2(0.0, -1.0);

  bool operator==(const LoadSpec&) const = default;
};

struct OptimizationConfig {
  Material material;
  Vec2 origin = Vec2::Zero();
  std::size_t nx = 20;
  std::size_t ny = 20;
  double cell_size = 0.05;
  int levels = 1;

  double alpha = 0.003;
  double target_fraction = 0.5;
  std::size_t max_iterations = 200;
  SolverMode solver = SolverMode::Blockwise;

  std::vector<ClampSpec> clamps;
  std::vector<LoadSpec> loads;
  /// Loaded cells are always kept; this also keeps every clamped cell.
  bool protect_supports = false;

  /// Audit ||M M^-1 - I|| every `audit_stride` updates (0 disables).
  std::size_t audit_stride = 1;
  double drift_tolerance = 1e-6;
  double svd_rel_tol = 1e-10;
  /// Also solve every configuration by LU and record the discrepancy.
  bool shadow_check = false;

  /// Throws Error naming the offending key.
  void validate() const;
  bool operator==(const OptimizationConfig&) const = default;
};

/// Square cantilever support: left side clamped, downward point load at the
/// top-right corner.
OptimizationConfig benchmark_config();

enum class Termination { TargetReached, MaxIterations, NoChange, Failed };
std::string to_string(Termination t);

struct IterationRecord {
  std::size_t k = 0;
  double R = 1.0;
  double E = 0.0;
  std::size_t n_s = 0;
  std::size_t n_a = 0;
  std::size_t n_r = 0;
  std::size_t n_samples = 0;
  std::size_t n_evaluations = 0;
  double d_min = 0.0;
  double d_max = 0.0;
  double cutoff = 0.0;
  double t_solve = 0.0;
  double t_td = 0.0;
  double t_remesh = 0.0;
  double t_assemble = 0.0;
  double t_update = 0.0;
  double t_audit = 0.0;
  double drift = std::numeric_limits<double>::quiet_NaN();
  double shadow_error = std::numeric_limits<double>::quiet_NaN();
  bool regularized = false;
  bool refreshed = false;
  /// Status grid solved at this iteration (before removal).
  CellGrid grid;
};

struct OptimizationState {
  std::size_t k = 0;
  CellGrid grid;
  BoundaryModel model;
  double R = 1.0;
  double E = 0.0;
  double E0 = 0.0;
  std::vector<IterationRecord> history;
  Termination termination = Termination::Failed;
  std::string message;
  /// Discrepancy of the final configuration's solve against LU (shadow mode).
  double final_shadow_error = std::numeric_limits<double>::quiet_NaN();
  double final_drift = std::numeric_limits<double>::quiet_NaN();
};

/// Raised when a boundary value problem cannot be solved mid-run; carries
/// the state reached so far.
class OptimizationError : public Error {
 public:
  OptimizationError(const std::string& what, OptimizationState snapshot)
      : Error(what), state(std::move(snapshot)) {}
  OptimizationState state;
};

/// Initial fine-level grid with the BC-carrying cells protected.
CellGrid initial_grid(const OptimizationConfig& config);
/// Boundary condition for every face key under the config's BC specs.
BcAssigner make_bc_assigner(const OptimizationConfig& config, const CellGrid& fine_grid);

/// Result of one interior TD sampling pass.
struct SamplingResult {
  TdField field;
  std::size_t n_evaluations = 0;
};

/// Samples the TD on the current geometry: uniform cell centers when
/// levels == 1, otherwise the quadtree scheme on the coarse grid.
SamplingResult sample_td(const OptimizationConfig& config, const CellGrid& fine_grid, const BoundarySolution& sol,
                         const BoundaryModel& model);

/// Hard-kill loop: solve, sample, classify, remesh, update; stops at
/// R <= R0, on a no-change iteration, or at max_iterations.
OptimizationState run(const OptimizationConfig& config);

}  // namespace bemtopo
