#pragma once

#include <array>

#include "bemtopo/model.hpp"

namespace bemtopo {

/// Kelvin plane-strain fundamental solution for a unit point force at
/// `source`, observed at `field` on a boundary with unit `normal`.
/// U(i,j): displacement j due to force i. T(i,j): traction j due to force i.
struct KelvinKernels {
  Mat2 U;
  Mat2 T;
};

/// Throws Error when source and field coincide.
KelvinKernels kelvin_kernels(const Vec2& source, const Vec2& field, const Vec2& normal, const Material& mat);

/// Kernels of the differentiated Somigliana identity for interior stress:
///   sigma_ij(source) = sum_k  int D[k](i,j) t_k ds  -  int S[k](i,j) u_k ds
struct StressKernels {
  std::array<Mat2, 2> D;
  std::array<Mat2, 2> S;
};

StressKernels stress_kernels(const Vec2& source, const Vec2& field, const Vec2& normal, const Material& mat);

}  // namespace bemtopo
