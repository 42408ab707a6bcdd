#include "bemtopo/td.hpp"

#include <algorithm>
#include <cmath>

namespace bemtopo {

double topological_derivative(const Mat2& sigma, const Mat2& epsilon, double nu) {
  if (!(nu >= 0.0 && nu < 0.5)) throw Error("topological derivative requires 0 <= nu < 0.5");
  const double contraction = sigma.cwiseProduct(epsilon).sum();
  const double c1 = 2.0 / ((1.0 + nu) * (1.0 - 2.0 * nu));
  const double c2 = (1.0 - nu) * (4.0 * nu - 1.0) / (2.0 * (1.0 - 2.0 * nu));
  return c1 * contraction + c2 * sigma.trace() * epsilon.trace();
}

double topological_derivative(const InteriorState& state, double nu) {
  return topological_derivative(state.sigma, state.epsilon, nu);
}

double cutoff(double d_min, double d_max, double alpha) {
  if (!(alpha >= 0.0 && alpha <= 1.0)) throw Error("alpha must be in [0,1]");
  if (d_min > d_max) throw Error("cutoff requires d_min <= d_max");
  return std::clamp(d_min + alpha * (d_max - d_min), d_min, d_max);
}

void update_extrema(TdField& field) {
  if (field.samples.empty()) {
    field.d_min = field.d_max = field.cutoff = 0.0;
    return;
  }
  const auto [lo, hi] = std::minmax_element(field.samples.begin(), field.samples.end(),
                                            [](const TdSample& a, const TdSample& b) { return a.value < b.value; });
  field.d_min = lo->value;
  field.d_max = hi->value;
  field.cutoff = cutoff(field.d_min, field.d_max, field.alpha);
}

TdField td_field(std::span<const SamplePoint> points, const BoundarySolution& sol, const BoundaryModel& model,
                 const Material& mat, double alpha) {
  TdField field;
  field.alpha = alpha;
  field.samples.reserve(points.size());
  for (const auto& p : points) {
    InteriorState st;
    try {
      st = interior_state(p.point, sol, model, mat);
    } catch (const DistanceViolation& e) {
      throw SampleError(std::string(e.what()) + " (cell " + std::to_string(p.cell) + ", level " +
                            std::to_string(p.level) + ")",
                        p.cell, p.level);
    }
    field.samples.push_back({p.point, p.cell, p.level, topological_derivative(st, mat.poisson_ratio)});
  }
  update_extrema(field);
  return field;
}

}  // namespace bemtopo
