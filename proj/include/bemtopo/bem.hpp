#pragma once

#include <array>
#include <span>
#include <unordered_map>
#include <vector>

#include <Eigen/Dense>

#include "bemtopo/model.hpp"

namespace bemtopo {

using Block6 = Eigen::Matrix<double, 6, 6>;
using Vector6 = Eigen::Matrix<double, 6, 1>;

inline constexpr std::size_t kDofsPerElement = 6;

/// Raised when an interior evaluation point is too close to the boundary.
class DistanceViolation : public Error {
 public:
  DistanceViolation(const Vec2& point, double distance, double required);
  Vec2 point;
  double distance;
  double required;
};

/// Raised when the system matrix cannot be factorized.
class SingularSystem : public Error {
 public:
  using Error::Error;
};

/// Dense collocation system. Unknowns per collocation point are the
/// displacement on Neumann elements and the traction on Dirichlet elements;
/// element blocks follow `order`.
struct BemSystem {
  Eigen::MatrixXd matrix;
  Eigen::VectorXd rhs;
  std::vector<ElementId> order;
  std::unordered_map<ElementId, std::size_t> dof_map;  // element -> first dof

  std::size_t size() const { return static_cast<std::size_t>(rhs.size()); }
};

/// Boundary data at every collocation point, aligned with the model order.
struct BoundarySolution {
  std::vector<std::array<Vec2, 3>> u;
  std::vector<std::array<Vec2, 3>> t;
};

/// Displacement, stress and strain at an interior point.
struct InteriorState {
  Vec2 u = Vec2::Zero();
  Mat2 sigma = Mat2::Zero();
  Mat2 epsilon = Mat2::Zero();
};

/// Quadratic Lagrange shape functions through the collocation points.
std::array<double, 3> shape_functions(double xi);

/// Boundary integrals of the Kelvin kernels over one element, for a source
/// point that is not one of the element's own collocation points:
///   H(i, 2k+j) = int T_ij phi_k ds,  G(i, 2k+j) = int U_ij phi_k ds.
struct ElementIntegrals {
  Eigen::Matrix<double, 2, 6> H;
  Eigen::Matrix<double, 2, 6> G;
};
ElementIntegrals integrate_element(const Vec2& source, const BoundaryElement& element, const Material& mat);

/// Integrals for the element's own collocation point `node`: Cauchy principal
/// value of T (without the free term) and the weakly singular U integral.
ElementIntegrals integrate_self(int node, const BoundaryElement& element, const Material& mat);

/// The 6x6 system-matrix block coupling collocation rows of `row` with the
/// unknowns of `col`.
Block6 influence_block(const BoundaryElement& row, const BoundaryElement& col, const Material& mat);
/// Contribution of the prescribed data on `col` to the right-hand side rows of `row`.
Vector6 rhs_block(const BoundaryElement& row, const BoundaryElement& col, const Material& mat);

/// Right-hand side for the whole model (only elements with non-zero data contribute).
Eigen::VectorXd assemble_rhs(const BoundaryModel& model, const Material& mat);

/// Throws Error for an empty model.
BemSystem assemble(const BoundaryModel& model, const Material& mat);

/// Assembles `model`, copying every block whose row and column elements both
/// appear in `previous` instead of recomputing it.
BemSystem assemble_incremental(const BemSystem& previous, const BoundaryModel& model, const Material& mat);

/// Solves with a partial-pivot LU factorization of the system matrix.
BoundarySolution solve(const BemSystem& system, const BoundaryModel& model);
/// LU solve returning the raw unknown vector.
Eigen::VectorXd solve_unknowns(const BemSystem& system);

/// Expands an unknown vector into the boundary solution, echoing prescribed data.
BoundarySolution make_solution(const BoundaryModel& model, const Eigen::VectorXd& unknowns);

/// Plane-strain Hooke's law, and its inverse.
Mat2 stress_from_strain(const Mat2& epsilon, const Material& mat);
Mat2 strain_from_stress(const Mat2& sigma, const Material& mat);

/// Somigliana evaluation. Throws DistanceViolation when `p` is closer than
/// 0.4 times the finest element length to the boundary.
InteriorState interior_state(const Vec2& p, const BoundarySolution& sol, const BoundaryModel& model,
                             const Material& mat);
/// Displacement only; no stand-off check.
Vec2 interior_displacement(const Vec2& p, const BoundarySolution& sol, const BoundaryModel& model,
                           const Material& mat);

/// Distance from `p` to the closest element.
double boundary_distance(const Vec2& p, const BoundaryModel& model);

/// E = 1/2 closed-integral of t.u over the boundary.
double strain_energy(const BoundarySolution& sol, const BoundaryModel& model);

}  // namespace bemtopo
