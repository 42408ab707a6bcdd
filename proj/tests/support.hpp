#pragma once

#include <cmath>
#include <numbers>
#include <random>

#include "bemtopo/bem.hpp"
#include "bemtopo/remesher.hpp"

namespace testing {

using namespace bemtopo;

// Exact plane-strain state for uniaxial stress sigma_xx = s.
struct Uniaxial {
  Material mat;
  double s = 1.0;

  double exx() const { return (1.0 - mat.poisson_ratio * mat.poisson_ratio) / mat.young_modulus * s; }
  double eyy() const { return -mat.poisson_ratio * (1.0 + mat.poisson_ratio) / mat.young_modulus * s; }
  Vec2 u(const Vec2& p) const { return {exx() * p.x(), eyy() * p.y()}; }
};

// Unit square on an n x n grid: left side held at the exact displacement
// (x fixed, y free to contract), right side pulled by s, top/bottom free.
inline BoundaryModel patch_model(std::size_t n, const Uniaxial& exact, CellGrid* grid_out = nullptr) {
  CellGrid grid(Vec2::Zero(), 1.0 / static_cast<double>(n), n, n);
  BcAssigner assign = [&grid, exact](const FaceKey& key) {
    if (key.face == Face::Left && grid.col(key.cell) == 0) {
      const auto ends = grid.face_endpoints(key.cell, key.face);
      BoundaryCondition bc;
      bc.kind = BoundaryCondition::Kind::Dirichlet;
      for (int k = 0; k < 3; ++k) {
        const double xi = kCollocationXi[static_cast<std::size_t>(k)];
        bc.values[static_cast<std::size_t>(k)] = exact.u(ends[0] + xi * (ends[1] - ends[0]));
      }
      return bc;
    }
    if (key.face == Face::Right) return BoundaryCondition::neumann(Vec2(exact.s, 0.0));
    return BoundaryCondition::traction_free();
  };
  BoundaryModel model = generate_boundary(grid, assign);
  if (grid_out) *grid_out = grid;
  return model;
}

// Plane-strain Lame form of the Kelvin displacement kernel.
inline Mat2 kelvin_u_lame(const Vec2& source, const Vec2& field, const Material& m) {
  const double mu = m.shear_modulus();
  const double lam = m.lame_lambda();
  const Vec2 d = field - source;
  const double r2 = d.squaredNorm();
  const double a = (lam + 3.0 * mu) * std::log(1.0 / std::sqrt(r2));
  Mat2 u;
  for (int i = 0; i < 2; ++i) {
    for (int j = 0; j < 2; ++j) u(i, j) = (i == j ? a : 0.0) + (lam + mu) * d[i] * d[j] / r2;
  }
  return u / (4.0 * std::numbers::pi * mu * (lam + 2.0 * mu));
}

// Stress of a displacement gradient g(i, j) = du_i/dx_j.
inline Mat2 hooke(const Mat2& g, const Material& m) {
  const Mat2 eps = 0.5 * (g + g.transpose());
  return m.lame_lambda() * eps.trace() * Mat2::Identity() + 2.0 * m.shear_modulus() * eps;
}

inline double rel_err(double a, double b) { return std::abs(a - b) / std::max(std::abs(b), 1e-300); }

inline Eigen::MatrixXd random_matrix(std::mt19937& rng, Eigen::Index r, Eigen::Index c) {
  std::uniform_real_distribution<double> u(-1.0, 1.0);
  Eigen::MatrixXd m(r, c);
  for (Eigen::Index i = 0; i < m.size(); ++i) m.data()[i] = u(rng);
  return m;
}

// Diagonally shifted random matrix: comfortably invertible.
inline Eigen::MatrixXd well_conditioned(std::mt19937& rng, Eigen::Index n) {
  return random_matrix(rng, n, n) + static_cast<double>(n) * Eigen::MatrixXd::Identity(n, n);
}

inline double rel_fro(const Eigen::MatrixXd& a, const Eigen::MatrixXd& b) { return (a - b).norm() / b.norm(); }

}  // namespace testing
