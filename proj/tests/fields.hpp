#pragma once

#include <algorithm>
#include <cmath>
#include <numbers>
#include <random>

#include "bemtopo/sampler.hpp"

namespace testing {

using namespace bemtopo;

// Random status fields the coarse grid can resolve. Disks keep one coarse
// cell between their rim and the domain edge and have radius >= 2h; half-plane
// interfaces cross the edges at 30..60 degrees and stay 1.5h from corners.
// Features below that (a corner clipped inside one cell, an interface hugging
// an edge) never show up in a coarse center and are invisible to the rule.
inline PointClassifier resolvable_field(std::mt19937& rng, const CellGrid& coarse, bool disk) {
  const double h = coarse.cell_size();
  const double w = h * static_cast<double>(coarse.nx());
  const double ht = h * static_cast<double>(coarse.ny());
  const Vec2 o = coarse.origin();
  std::uniform_real_distribution<double> u(0.0, 1.0);
  if (disk) {
    Vec2 c;
    double room = 0.0;
    do {
      c = o + Vec2(u(rng) * w, u(rng) * ht);
      room = std::min({c.x() - o.x(), o.x() + w - c.x(), c.y() - o.y(), o.y() + ht - c.y()}) - h;
    } while (room < 2.0 * h);
    const double r = 2.0 * h + u(rng) * (room - 2.0 * h);
    const bool inside = u(rng) < 0.5;
    return [c, r, inside](const Vec2& p) { return ((p - c).norm() < r) == inside; };
  }
  Vec2 c;
  Vec2 n;
  double corner = 0.0;
  do {
    c = o + Vec2(u(rng) * w, u(rng) * ht);
    const double t = std::numbers::pi / 6.0 * (1.0 + u(rng)) + std::numbers::pi / 2.0 * std::floor(4.0 * u(rng));
    n = Vec2(std::cos(t), std::sin(t));
    corner = 1e300;
    for (const Vec2& k : {Vec2(o), Vec2(o + Vec2(w, 0)), Vec2(o + Vec2(0, ht)), Vec2(o + Vec2(w, ht))}) {
      corner = std::min(corner, std::abs(n.dot(k - c)));
    }
  } while (corner < 1.5 * h);
  return [c, n](const Vec2& p) { return n.dot(p - c) < 0.0; };
}

}  // namespace testing
