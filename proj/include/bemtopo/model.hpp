#pragma once

#include <array>
#include <compare>
#include <cstddef>
#include <cstdint>
#include <functional>
#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

#include <Eigen/Dense>

namespace bemtopo {

using Vec2 = Eigen::Vector2d;
using Mat2 = Eigen::Matrix2d;

/// Base class for every error raised by the library.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Isotropic linear-elastic material in plane strain.
struct Material {
  double young_modulus = 1.0;
  double poisson_ratio = 0.3;

  double shear_modulus() const { return young_modulus / (2.0 * (1.0 + poisson_ratio)); }
  double lame_lambda() const {
    return young_modulus * poisson_ratio / ((1.0 + poisson_ratio) * (1.0 - 2.0 * poisson_ratio));
  }

  /// Throws Error unless E > 0 and 0 <= nu < 0.5.
  void validate() const;
  bool operator==(const Material&) const = default;
};

/// Faces of a square cell, in the order boundary generation scans them.
enum class Face : std::uint8_t { Right = 0, Top = 1, Left = 2, Bottom = 3 };

inline constexpr std::array<Face, 4> kAllFaces{Face::Right, Face::Top, Face::Left, Face::Bottom};

std::string to_string(Face face);

/// Identifies the cell face that produced a boundary element.
struct FaceKey {
  std::size_t cell = 0;
  Face face = Face::Right;

  auto operator<=>(const FaceKey&) const = default;
};

/// Stable element identifier: derived from the face key, so an element that
/// survives a remesh keeps its id.
struct ElementId {
  std::uint64_t value = 0;

  static ElementId from_face(const FaceKey& key) {
    return ElementId{static_cast<std::uint64_t>(key.cell) * 4u + static_cast<std::uint64_t>(key.face)};
  }
  auto operator<=>(const ElementId&) const = default;
};

/// Rectangular array of square material/void cells.
///
/// `level` is the refinement depth of this grid relative to the coarse
/// sampling grid (0 = coarse). Queries outside the grid report void.
class CellGrid {
 public:
  CellGrid() = default;
  CellGrid(Vec2 origin, double cell_size, std::size_t nx, std::size_t ny, int level = 0);

  const Vec2& origin() const { return origin_; }
  double cell_size() const { return h_; }
  std::size_t nx() const { return nx_; }
  std::size_t ny() const { return ny_; }
  std::size_t size() const { return nx_ * ny_; }
  int level() const { return level_; }

  std::size_t index(std::size_t col, std::size_t row) const { return row * nx_ + col; }
  std::size_t col(std::size_t i) const { return i % nx_; }
  std::size_t row(std::size_t i) const { return i / nx_; }

  bool status(std::size_t i) const;
  /// Status by signed coordinates; anything outside the grid is void.
  bool status_at(std::ptrdiff_t col, std::ptrdiff_t row) const;
  bool is_protected(std::size_t i) const;

  /// Setting a protected cell to void is rejected.
  void set_status(std::size_t i, bool material);
  /// Protecting a cell also makes it material.
  void protect(std::size_t i);

  /// Neighbor index across `face`, or nullopt when it lies outside the grid.
  std::optional<std::size_t> neighbor(std::size_t i, Face face) const;
  bool neighbor_status(std::size_t i, Face face) const;

  Vec2 cell_center(std::size_t i) const;
  /// Counter-clockwise endpoints of a cell face (material on the left).
  std::array<Vec2, 2> face_endpoints(std::size_t i, Face face) const;

  std::size_t material_count() const;
  const std::vector<std::uint8_t>& statuses() const { return status_; }

  bool operator==(const CellGrid&) const;

 private:
  void check_index(std::size_t i) const;

  Vec2 origin_ = Vec2::Zero();
  double h_ = 1.0;
  std::size_t nx_ = 0;
  std::size_t ny_ = 0;
  int level_ = 0;
  std::vector<std::uint8_t> status_;
  std::vector<std::uint8_t> protected_;
};

Vec2 cell_center(const CellGrid& grid, std::size_t i);

/// Either the displacement (Dirichlet) or the traction (Neumann) is
/// prescribed on the whole element. Values are given per collocation point;
/// the constant factories cover the common case.
struct BoundaryCondition {
  enum class Kind : std::uint8_t { Dirichlet, Neumann };

  Kind kind = Kind::Neumann;
  std::array<Vec2, 3> values{Vec2::Zero(), Vec2::Zero(), Vec2::Zero()};

  static BoundaryCondition dirichlet(const Vec2& u) { return {Kind::Dirichlet, {u, u, u}}; }
  static BoundaryCondition neumann(const Vec2& t) { return {Kind::Neumann, {t, t, t}}; }
  static BoundaryCondition traction_free() { return neumann(Vec2::Zero()); }

  bool is_dirichlet() const { return kind == Kind::Dirichlet; }
  bool is_homogeneous() const;

  bool operator==(const BoundaryCondition&) const = default;
};

/// Parametric positions of the three element-local collocation points.
inline constexpr std::array<double, 3> kCollocationXi{0.25, 0.5, 0.75};

/// Straight boundary segment with three interior collocation points.
struct BoundaryElement {
  ElementId id;
  Vec2 start = Vec2::Zero();
  Vec2 end = Vec2::Zero();
  BoundaryCondition bc;
  FaceKey face_key;

  double length() const { return (end - start).norm(); }
  Vec2 tangent() const { return (end - start) / length(); }
  /// Outward normal: points from the material into the void.
  Vec2 normal() const {
    const Vec2 t = tangent();
    return {t.y(), -t.x()};
  }
  Vec2 point_at(double xi) const { return start + xi * (end - start); }
  Vec2 collocation(int k) const { return point_at(kCollocationXi[static_cast<std::size_t>(k)]); }
};

/// Ordered set of boundary elements forming closed loops.
struct BoundaryModel {
  std::vector<BoundaryElement> elements;

  std::size_t size() const { return elements.size(); }
  bool empty() const { return elements.empty(); }

  /// Every vertex must be incident to an even number of segment endpoints.
  bool loops_closed() const;
  std::optional<std::size_t> find(ElementId id) const;
  /// Smallest element length; 0 when empty.
  double min_element_length() const;
};

}  // namespace bemtopo

template <>
struct std::hash<bemtopo::ElementId> {
  std::size_t operator()(const bemtopo::ElementId& id) const noexcept {
    return std::hash<std::uint64_t>{}(id.value);
  }
};
