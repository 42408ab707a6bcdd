#pragma once

#include <cstddef>
#include <functional>
#include <vector>

#include "bemtopo/model.hpp"
#include "bemtopo/td.hpp"

namespace bemtopo {

/// Classification of a quadtree cell. Mixed forces refinement.
enum class CellClass : std::uint8_t { Void, Material, Mixed };

/// A cell of the quadtree at `level`; `col`/`row` index the uniform grid of
/// that level (coarse dimensions times 2^level).
struct QuadCell {
  int level = 0;
  std::size_t col = 0;
  std::size_t row = 0;
  Vec2 center = Vec2::Zero();
  double size = 0.0;
};

struct QuadLeaf {
  QuadCell cell;
  std::size_t index = 0;  // row-major index in the level grid
  bool status = false;
};

struct LevelLog {
  int level = 0;
  std::size_t classified = 0;
  std::size_t refined = 0;
};

struct QuadtreePlan {
  int levels = 1;
  std::size_t coarse_nx = 0;
  std::size_t coarse_ny = 0;
  std::vector<QuadLeaf> leaves;
  std::vector<LevelLog> log;

  std::size_t fine_uniform_count() const;
  std::size_t classified_count() const;
};

using QuadClassifier = std::function<CellClass(const QuadCell&)>;
using PointClassifier = std::function<bool(const Vec2&)>;

/// One sample per material cell, at the cell center.
std::vector<SamplePoint> uniform_points(const CellGrid& grid);

/// Quadtree sampling: classify the coarse cells, then refine (2x2) every
/// Mixed cell and both cells of every face-adjacent pair whose statuses
/// differ, until no refinable pair remains or the finest level L-1 is reached.
/// Comparisons across levels use the finest abutting leaves.
QuadtreePlan quadtree_refine(const CellGrid& coarse, const QuadClassifier& classify, int levels);
QuadtreePlan quadtree_refine(const CellGrid& coarse, const PointClassifier& classify, int levels);

/// Status grid at the finest level implied by the plan's leaves.
CellGrid fine_status_grid(const QuadtreePlan& plan, const CellGrid& coarse);

/// Status grid from classifying every finest-level cell center directly.
CellGrid fine_uniform_grid(const CellGrid& coarse, const PointClassifier& classify, int levels);

/// Geometry of a cell of the level grid under `coarse`.
QuadCell quad_cell(const CellGrid& coarse, int level, std::size_t col, std::size_t row);

}  // namespace bemtopo
