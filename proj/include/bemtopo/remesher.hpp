#pragma once

#include <functional>
#include <vector>

#include "bemtopo/model.hpp"
#include "bemtopo/td.hpp"

namespace bemtopo {

/// Element ids added to and removed from the boundary by a remesh.
struct BoundaryDiff {
  std::vector<ElementId> added;
  std::vector<ElementId> removed;

  std::size_t n_added() const { return added.size(); }
  std::size_t n_removed() const { return removed.size(); }
  bool empty() const { return added.empty() && removed.empty(); }
};

using BcAssigner = std::function<BoundaryCondition(const FaceKey&)>;

/// Hard-kill status update on `grid` (the finest sampling level):
///  1. material, unprotected cells with D < D0 become void;
///  2. material cells without a material face-neighbor become void;
///  3. material not face-connected to a protected cell becomes void.
/// Samples at a coarser level cover their whole block of fine cells.
/// Throws if the grid has no protected cell or a material cell has no sample.
CellGrid classify_cells(const CellGrid& grid, const TdField& field);

/// One element per (material cell, face whose neighbor is void or exterior).
/// Throws when the grid has no material.
BoundaryModel generate_boundary(const CellGrid& grid, const BcAssigner& bc_assigner = {});

/// Face-key set difference between two models.
BoundaryDiff diff_boundaries(const BoundaryModel& previous, const BoundaryModel& next);

/// Reorders `next` so elements shared with `previous` keep their relative
/// order and come first, followed by the added elements.
BoundaryModel align_to(const BoundaryModel& previous, const BoundaryModel& next);

/// Cells face-connected (through material) to any protected cell.
std::vector<std::uint8_t> connected_to_protected(const CellGrid& grid);

}  // namespace bemtopo
