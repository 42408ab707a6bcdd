#pragma once

#include <cstdint>
#include <span>
#include <unordered_map>
#include <vector>

#include <Eigen/Dense>

#include "bemtopo/bem.hpp"
#include "bemtopo/remesher.hpp"

namespace bemtopo {

/// Multiplication-count probe for the dense products inside an update.
struct OpCounter {
  std::uint64_t multiplies = 0;
  /// Largest min(rows, inner, cols) over all recorded products.
  Eigen::Index largest_min_dim = 0;

  void record(Eigen::Index rows, Eigen::Index inner, Eigen::Index cols);
  void reset() { *this = OpCounter{}; }
};

/// Explicit inverse of the current system matrix.
struct InverseState {
  Eigen::MatrixXd inverse;
  std::vector<ElementId> order;
  std::unordered_map<ElementId, std::size_t> dof_map;
  double drift = 0.0;  // ||M * inverse - I||_inf at the last audit
  bool regularized = false;

  std::size_t size() const { return static_cast<std::size_t>(inverse.rows()); }
};

struct UpdateOptions {
  double svd_rel_tol = 1e-10;
  bool allow_regularization = true;
  /// Reciprocal-condition threshold below which S is inverted by truncated SVD.
  double schur_rcond = 1e-12;
  double drift_tolerance = 1e-6;
  bool audit = true;
  OpCounter* counter = nullptr;
};

/// What apply_diff actually did.
struct UpdateReport {
  bool refreshed = false;
  bool regularized = false;
  bool audited = false;
  double drift = 0.0;
  double t_shrink = 0.0;
  double t_extend = 0.0;
  double t_audit = 0.0;
  double t_refresh = 0.0;
  std::string refresh_reason;
};

/// Raised when a Schur complement or removed block cannot be inverted.
class SingularUpdate : public Error {
 public:
  using Error::Error;
};

/// Truncated-SVD pseudo-inverse: singular values below rel_tol * sigma_max
/// are dropped. Sets *truncated when any value was dropped.
Eigen::MatrixXd regularized_inverse(const Eigen::MatrixXd& s, double rel_tol = 1e-10, bool* truncated = nullptr);

/// Inverse of [[A, B], [C, D]] from A^-1 through the Schur complement
/// S = D - C A^-1 B. Sets *regularized when S needed truncated SVD.
Eigen::MatrixXd extend_inverse(const Eigen::MatrixXd& a_inv, const Eigen::MatrixXd& b, const Eigen::MatrixXd& c,
                               const Eigen::MatrixXd& d, const UpdateOptions& opts = {},
                               bool* regularized = nullptr);

/// Inverse of the leading block A of a matrix whose inverse is
/// [[E, F], [G, H]]: A^-1 = E - F H^-1 G.
Eigen::MatrixXd shrink_inverse(const Eigen::MatrixXd& e, const Eigen::MatrixXd& f, const Eigen::MatrixXd& g,
                               const Eigen::MatrixXd& h, OpCounter* counter = nullptr);

/// Same, with the removed rows/columns addressed by index instead of being
/// moved to the trailing position.
Eigen::MatrixXd shrink_inverse(const Eigen::MatrixXd& full_inv, std::span<const Eigen::Index> keep,
                               std::span<const Eigen::Index> removed, OpCounter* counter = nullptr);

/// ||matrix * inverse - I||_inf (max absolute row sum).
double inverse_drift(const Eigen::MatrixXd& matrix, const Eigen::MatrixXd& inverse);

/// Fresh inverse by LU; throws SingularSystem if the matrix is singular.
InverseState refresh_inverse(const BemSystem& system);

/// Removes then adds element blocks. `system_new` must list the surviving
/// elements first (in the state's order) followed by the added ones. Any
/// failure, or an audited drift above tolerance, falls back to a refresh.
InverseState apply_diff(const InverseState& state, const BemSystem& system_new, const BoundaryDiff& diff,
                        const UpdateOptions& opts = {}, UpdateReport* report = nullptr);

Eigen::VectorXd solve_unknowns(const InverseState& state, const BemSystem& system);
BoundarySolution solve(const BemSystem& system, const BoundaryModel& model, const InverseState& state);

}  // namespace bemtopo
