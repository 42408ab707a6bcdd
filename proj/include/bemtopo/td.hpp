#pragma once

#include <cstddef>
#include <span>
#include <vector>

#include "bemtopo/bem.hpp"

namespace bemtopo {

/// Interior sampling location: a point and the cell (at `level` relative to
/// the coarse grid) whose center it is.
struct SamplePoint {
  Vec2 point = Vec2::Zero();
  std::size_t cell = 0;
  int level = 0;
};

struct TdSample {
  Vec2 point = Vec2::Zero();
  std::size_t cell = 0;
  int level = 0;
  double value = 0.0;
};

/// Topological-derivative values with their extrema and the removal cutoff.
struct TdField {
  std::vector<TdSample> samples;
  double d_min = 0.0;
  double d_max = 0.0;
  double cutoff = 0.0;
  double alpha = 0.0;
};

/// Thrown when a sample cannot be evaluated; carries the offending cell.
class SampleError : public Error {
 public:
  SampleError(const std::string& what, std::size_t cell, int level)
      : Error(what), cell(cell), level(level) {}
  std::size_t cell;
  int level;
};

/// Strain-energy topological derivative for a circular hole in plane strain:
///   D = 2/((1+nu)(1-2nu)) sigma:eps + (1-nu)(4nu-1)/(2(1-2nu)) tr(sigma) tr(eps)
double topological_derivative(const Mat2& sigma, const Mat2& epsilon, double poisson_ratio);
double topological_derivative(const InteriorState& state, double poisson_ratio);

/// D0 = d_min + alpha (d_max - d_min). Throws for alpha outside [0, 1] or d_min > d_max.
double cutoff(double d_min, double d_max, double alpha);

/// Recomputes extrema and cutoff from the samples (empty field -> zeros).
void update_extrema(TdField& field);

/// Evaluates D at every point. Distance violations are rethrown as
/// SampleError naming the cell.
TdField td_field(std::span<const SamplePoint> points, const BoundarySolution& sol, const BoundaryModel& model,
                 const Material& mat, double alpha);

}  // namespace bemtopo
