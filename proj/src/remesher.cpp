#include "bemtopo/remesher.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <set>
#include <unordered_map>
#include <unordered_set>

namespace bemtopo {

namespace {

// D value per fine cell; NaN where no sample covers the cell.
std::vector<double> expand_samples(const CellGrid& grid, const TdField& field) {
  std::vector<double> values(grid.size(), std::numeric_limits<double>::quiet_NaN());
  for (const auto& s : field.samples) {
    if (s.level > grid.level()) throw Error("TD sample is finer than the status grid");
    const std::size_t m = std::size_t{1} << (grid.level() - s.level);
    const std::size_t width = grid.nx() / m;
    const std::size_t c0 = (s.cell % width) * m;
    const std::size_t r0 = (s.cell / width) * m;
    if (r0 + m > grid.ny()) throw Error("TD sample cell index out of range");
    for (std::size_t r = r0; r < r0 + m; ++r) {
      for (std::size_t c = c0; c < c0 + m; ++c) values[grid.index(c, r)] = s.value;
    }
  }
  return values;
}

}  // namespace

std::vector<std::uint8_t> connected_to_protected(const CellGrid& grid) {
  std::vector<std::uint8_t> reached(grid.size(), 0);
  std::vector<std::size_t> stack;
  for (std::size_t i = 0; i < grid.size(); ++i) {
    if (grid.is_protected(i)) {
      reached[i] = 1;
      stack.push_back(i);
    }
  }
  while (!stack.empty()) {
    const std::size_t i = stack.back();
    stack.pop_back();
    for (Face f : kAllFaces) {
      const auto n = grid.neighbor(i, f);
      if (n && !reached[*n] && grid.status(*n)) {
        reached[*n] = 1;
        stack.push_back(*n);
      }
    }
  }
  return reached;
}

CellGrid classify_cells(const CellGrid& grid, const TdField& field) {
  bool any_protected = false;
  for (std::size_t i = 0; i < grid.size() && !any_protected; ++i) any_protected = grid.is_protected(i);
  if (!any_protected) throw Error("classify_cells: grid has no protected cell to anchor connectivity");

  const auto values = expand_samples(grid, field);
  CellGrid out = grid;
  for (std::size_t i = 0; i < grid.size(); ++i) {
    if (!grid.status(i) || grid.is_protected(i)) continue;
    if (std::isnan(values[i])) {
      throw Error("classify_cells: material cell " + std::to_string(i) + " has no TD sample");
    }
    if (values[i] < field.cutoff) out.set_status(i, false);
  }

  const CellGrid after_cut = out;
  for (std::size_t i = 0; i < out.size(); ++i) {
    if (!after_cut.status(i) || out.is_protected(i)) continue;
    const bool has_neighbor = std::any_of(kAllFaces.begin(), kAllFaces.end(),
                                          [&](Face f) { return after_cut.neighbor_status(i, f); });
    if (!has_neighbor) out.set_status(i, false);
  }

  const auto reached = connected_to_protected(out);
  for (std::size_t i = 0; i < out.size(); ++i) {
    if (out.status(i) && !reached[i]) out.set_status(i, false);
  }
  return out;
}

BoundaryModel generate_boundary(const CellGrid& grid, const BcAssigner& bc_assigner) {
  if (grid.material_count() == 0) throw Error("generate_boundary: no material cells");
  BoundaryModel model;
  for (std::size_t i = 0; i < grid.size(); ++i) {
    if (!grid.status(i)) continue;
    for (Face f : kAllFaces) {
      if (grid.neighbor_status(i, f)) continue;
      BoundaryElement e;
      e.face_key = {i, f};
      e.id = ElementId::from_face(e.face_key);
      const auto ends = grid.face_endpoints(i, f);
      e.start = ends[0];
      e.end = ends[1];
      e.bc = bc_assigner ? bc_assigner(e.face_key) : BoundaryCondition::traction_free();
      model.elements.push_back(e);
    }
  }
  return model;
}

BoundaryDiff diff_boundaries(const BoundaryModel& previous, const BoundaryModel& next) {
  std::unordered_set<ElementId> old_ids;
  std::unordered_set<ElementId> new_ids;
  for (const auto& e : previous.elements) old_ids.insert(e.id);
  for (const auto& e : next.elements) new_ids.insert(e.id);
  BoundaryDiff diff;
  for (const auto& e : next.elements) {
    if (!old_ids.contains(e.id)) diff.added.push_back(e.id);
  }
  for (const auto& e : previous.elements) {
    if (!new_ids.contains(e.id)) diff.removed.push_back(e.id);
  }
  return diff;
}

BoundaryModel align_to(const BoundaryModel& previous, const BoundaryModel& next) {
  std::unordered_map<ElementId, std::size_t> position;
  for (std::size_t i = 0; i < next.size(); ++i) position.emplace(next.elements[i].id, i);
  BoundaryModel out;
  out.elements.reserve(next.size());
  std::vector<std::uint8_t> used(next.size(), 0);
  for (const auto& e : previous.elements) {
    const auto it = position.find(e.id);
    if (it == position.end()) continue;
    out.elements.push_back(next.elements[it->second]);
    used[it->second] = 1;
  }
  for (std::size_t i = 0; i < next.size(); ++i) {
    if (!used[i]) out.elements.push_back(next.elements[i]);
  }
  return out;
}

}  // namespace bemtopo
