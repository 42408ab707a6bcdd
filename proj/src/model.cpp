#include "bemtopo/model.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <map>
#include <utility>

namespace bemtopo {

void Material::validate() const {
  if (!(young_modulus > 0.0) || !std::isfinite(young_modulus)) {
    throw Error("young_modulus must be > 0");
  }
  if (!(poisson_ratio >= 0.0 && poisson_ratio < 0.5)) {
    throw Error("poisson_ratio must be in [0, 0.5)");
  }
}

std::string to_string(Face face) {
  switch (face) {
    case Face::Right: return "right";
    case Face::Top: return "top";
    case Face::Left: return "left";
    case Face::Bottom: return "bottom";
  }
  return "?";
}

CellGrid::CellGrid(Vec2 origin, double cell_size, std::size_t nx, std::size_t ny, int level)
    : origin_(std::move(origin)), h_(cell_size), nx_(nx), ny_(ny), level_(level) {
  if (nx == 0 || ny == 0) throw Error("grid must have nx >= 1 and ny >= 1");
  if (!(cell_size > 0.0)) throw Error("grid cell size must be > 0");
  if (level < 0) throw Error("grid level must be >= 0");
  status_.assign(nx * ny, 1);
  protected_.assign(nx * ny, 0);
}

void CellGrid::check_index(std::size_t i) const {
  if (i >= size()) {
    throw Error("cell index " + std::to_string(i) + " out of range (" + std::to_string(size()) + " cells)");
  }
}

bool CellGrid::status(std::size_t i) const {
  check_index(i);
  return status_[i] != 0;
}

bool CellGrid::status_at(std::ptrdiff_t c, std::ptrdiff_t r) const {
  if (c < 0 || r < 0 || c >= static_cast<std::ptrdiff_t>(nx_) || r >= static_cast<std::ptrdiff_t>(ny_)) {
    return false;
  }
  return status_[index(static_cast<std::size_t>(c), static_cast<std::size_t>(r))] != 0;
}

bool CellGrid::is_protected(std::size_t i) const {
  check_index(i);
  return protected_[i] != 0;
}

void CellGrid::set_status(std::size_t i, bool material) {
  check_index(i);
  if (!material && protected_[i]) {
    throw Error("cannot remove protected cell " + std::to_string(i));
  }
  status_[i] = material ? 1 : 0;
}

void CellGrid::protect(std::size_t i) {
  check_index(i);
  protected_[i] = 1;
  status_[i] = 1;
}

std::optional<std::size_t> CellGrid::neighbor(std::size_t i, Face face) const {
  check_index(i);
  const std::size_t c = col(i);
  const std::size_t r = row(i);
  switch (face) {
    case Face::Right:
      if (c + 1 < nx_) return index(c + 1, r);
      break;
    case Face::Top:
      if (r + 1 < ny_) return index(c, r + 1);
      break;
    case Face::Left:
      if (c > 0) return index(c - 1, r);
      break;
    case Face::Bottom:
      if (r > 0) return index(c, r - 1);
      break;
  }
  return std::nullopt;
}

bool CellGrid::neighbor_status(std::size_t i, Face face) const {
  const auto n = neighbor(i, face);
  return n && status_[*n] != 0;
}

Vec2 CellGrid::cell_center(std::size_t i) const {
  check_index(i);
  return origin_ + Vec2((static_cast<double>(col(i)) + 0.5) * h_, (static_cast<double>(row(i)) + 0.5) * h_);
}

std::array<Vec2, 2> CellGrid::face_endpoints(std::size_t i, Face face) const {
  check_index(i);
  const double x0 = origin_.x() + static_cast<double>(col(i)) * h_;
  const double y0 = origin_.y() + static_cast<double>(row(i)) * h_;
  const double x1 = x0 + h_;
  const double y1 = y0 + h_;
  switch (face) {
    case Face::Right: return {Vec2(x1, y0), Vec2(x1, y1)};
    case Face::Top: return {Vec2(x1, y1), Vec2(x0, y1)};
    case Face::Left: return {Vec2(x0, y1), Vec2(x0, y0)};
    case Face::Bottom: return {Vec2(x0, y0), Vec2(x1, y0)};
  }
  return {Vec2::Zero(), Vec2::Zero()};
}

std::size_t CellGrid::material_count() const {
  return static_cast<std::size_t>(std::count(status_.begin(), status_.end(), std::uint8_t{1}));
}

bool CellGrid::operator==(const CellGrid& o) const {
  return nx_ == o.nx_ && ny_ == o.ny_ && h_ == o.h_ && origin_ == o.origin_ && level_ == o.level_ &&
         status_ == o.status_ && protected_ == o.protected_;
}

Vec2 cell_center(const CellGrid& grid, std::size_t i) { return grid.cell_center(i); }

bool BoundaryCondition::is_homogeneous() const {
  return std::all_of(values.begin(), values.end(), [](const Vec2& v) { return v.isZero(0.0); });
}

bool BoundaryModel::loops_closed() const {
  if (elements.empty()) return true;
  const double scale = min_element_length() * 1e-6;
  std::map<std::pair<long long, long long>, int> incidence;
  auto key = [scale](const Vec2& p) {
    return std::make_pair(std::llround(p.x() / scale), std::llround(p.y() / scale));
  };
  for (const auto& e : elements) {
    ++incidence[key(e.start)];
    ++incidence[key(e.end)];
  }
  return std::all_of(incidence.begin(), incidence.end(), [](const auto& kv) { return kv.second % 2 == 0; });
}

std::optional<std::size_t> BoundaryModel::find(ElementId id) const {
  for (std::size_t i = 0; i < elements.size(); ++i) {
    if (elements[i].id == id) return i;
  }
  return std::nullopt;
}

double BoundaryModel::min_element_length() const {
  if (elements.empty()) return 0.0;
  double m = std::numeric_limits<double>::infinity();
  for (const auto& e : elements) m = std::min(m, e.length());
  return m;
}

}  // namespace bemtopo
