#include "bemtopo/sampler.hpp"

#include <algorithm>

namespace bemtopo {

namespace {

constexpr std::size_t kNone = static_cast<std::size_t>(-1);

struct Node {
  QuadCell cell;
  CellClass cls = CellClass::Void;
  bool alive = true;
};

class Quadtree {
 public:
  Quadtree(const CellGrid& coarse, const QuadClassifier& classify, int levels)
      : coarse_(coarse), classify_(classify), levels_(levels) {
    scale_ = std::size_t{1} << (levels - 1);
    fnx_ = coarse.nx() * scale_;
    fny_ = coarse.ny() * scale_;
    owner_.assign(fnx_ * fny_, kNone);
    log_.resize(static_cast<std::size_t>(levels));
    for (int l = 0; l < levels; ++l) log_[static_cast<std::size_t>(l)].level = l;
    for (std::size_t r = 0; r < coarse.ny(); ++r) {
      for (std::size_t c = 0; c < coarse.nx(); ++c) add(quad_cell(coarse, 0, c, r));
    }
  }

  void refine_to_fixpoint() {
    for (;;) {
      std::vector<std::size_t> refine;
      for (std::size_t i = 0; i < nodes_.size(); ++i) {
        if (nodes_[i].alive && nodes_[i].cell.level < levels_ - 1 && needs_refinement(i)) refine.push_back(i);
      }
      if (refine.empty()) break;
      for (std::size_t i : refine) split(i);
    }
    for (const auto& n : nodes_) {
      if (n.alive && n.cls == CellClass::Mixed) throw Error("quadtree classifier returned Mixed at the finest level");
    }
  }

  QuadtreePlan plan() const {
    QuadtreePlan p;
    p.levels = levels_;
    p.coarse_nx = coarse_.nx();
    p.coarse_ny = coarse_.ny();
    p.log = log_;
    for (const auto& n : nodes_) {
      if (!n.alive) continue;
      const std::size_t width = coarse_.nx() << n.cell.level;
      p.leaves.push_back({n.cell, n.cell.row * width + n.cell.col, n.cls == CellClass::Material});
    }
    return p;
  }

 private:
  std::size_t span(int level) const { return scale_ >> level; }

  void add(const QuadCell& cell) {
    const std::size_t id = nodes_.size();
    nodes_.push_back({cell, classify_(cell), true});
    ++log_[static_cast<std::size_t>(cell.level)].classified;
    const std::size_t m = span(cell.level);
    for (std::size_t r = cell.row * m; r < (cell.row + 1) * m; ++r) {
      for (std::size_t c = cell.col * m; c < (cell.col + 1) * m; ++c) owner_[r * fnx_ + c] = id;
    }
  }

  void split(std::size_t i) {
    nodes_[i].alive = false;
    const QuadCell parent = nodes_[i].cell;
    ++log_[static_cast<std::size_t>(parent.level)].refined;
    for (std::size_t dr = 0; dr < 2; ++dr) {
      for (std::size_t dc = 0; dc < 2; ++dc) {
        add(quad_cell(coarse_, parent.level + 1, 2 * parent.col + dc, 2 * parent.row + dr));
      }
    }
  }

  bool needs_refinement(std::size_t i) const {
    const Node& n = nodes_[i];
    if (n.cls == CellClass::Mixed) return true;
    const std::size_t m = span(n.cell.level);
    const std::size_t c0 = n.cell.col * m;
    const std::size_t r0 = n.cell.row * m;
    auto differs = [&](std::size_t c, std::size_t r) {
      const Node& o = nodes_[owner_[r * fnx_ + c]];
      return o.cls != CellClass::Mixed && o.cls != n.cls;
    };
    for (std::size_t k = 0; k < m; ++k) {
      if (c0 + m < fnx_ && differs(c0 + m, r0 + k)) return true;
      if (c0 > 0 && differs(c0 - 1, r0 + k)) return true;
      if (r0 + m < fny_ && differs(c0 + k, r0 + m)) return true;
      if (r0 > 0 && differs(c0 + k, r0 - 1)) return true;
    }
    return false;
  }

  const CellGrid& coarse_;
  const QuadClassifier& classify_;
  int levels_;
  std::size_t scale_ = 1;
  std::size_t fnx_ = 0;
  std::size_t fny_ = 0;
  std::vector<Node> nodes_;
  std::vector<std::size_t> owner_;  // finest cell -> leaf node
  std::vector<LevelLog> log_;
};

}  // namespace

std::size_t QuadtreePlan::fine_uniform_count() const {
  const std::size_t s = std::size_t{1} << (levels - 1);
  return coarse_nx * s * coarse_ny * s;
}

std::size_t QuadtreePlan::classified_count() const {
  std::size_t n = 0;
  for (const auto& l : log) n += l.classified;
  return n;
}

QuadCell quad_cell(const CellGrid& coarse, int level, std::size_t col, std::size_t row) {
  const double size = coarse.cell_size() / static_cast<double>(std::size_t{1} << level);
  return {level, col, row,
          coarse.origin() + Vec2((static_cast<double>(col) + 0.5) * size, (static_cast<double>(row) + 0.5) * size),
          size};
}

std::vector<SamplePoint> uniform_points(const CellGrid& grid) {
  std::vector<SamplePoint> pts;
  for (std::size_t i = 0; i < grid.size(); ++i) {
    if (grid.status(i)) pts.push_back({grid.cell_center(i), i, grid.level()});
  }
  return pts;
}

QuadtreePlan quadtree_refine(const CellGrid& coarse, const QuadClassifier& classify, int levels) {
  if (levels < 1) throw Error("quadtree needs at least one level");
  Quadtree tree(coarse, classify, levels);
  tree.refine_to_fixpoint();
  return tree.plan();
}

QuadtreePlan quadtree_refine(const CellGrid& coarse, const PointClassifier& classify, int levels) {
  const QuadClassifier wrapped = [&classify](const QuadCell& c) {
    return classify(c.center) ? CellClass::Material : CellClass::Void;
  };
  return quadtree_refine(coarse, wrapped, levels);
}

CellGrid fine_status_grid(const QuadtreePlan& plan, const CellGrid& coarse) {
  const std::size_t scale = std::size_t{1} << (plan.levels - 1);
  CellGrid fine(coarse.origin(), coarse.cell_size() / static_cast<double>(scale), coarse.nx() * scale,
                coarse.ny() * scale, plan.levels - 1);
  for (const auto& leaf : plan.leaves) {
    const std::size_t m = scale >> leaf.cell.level;
    for (std::size_t r = leaf.cell.row * m; r < (leaf.cell.row + 1) * m; ++r) {
      for (std::size_t c = leaf.cell.col * m; c < (leaf.cell.col + 1) * m; ++c) {
        fine.set_status(fine.index(c, r), leaf.status);
      }
    }
  }
  return fine;
}

CellGrid fine_uniform_grid(const CellGrid& coarse, const PointClassifier& classify, int levels) {
  const std::size_t scale = std::size_t{1} << (levels - 1);
  CellGrid fine(coarse.origin(), coarse.cell_size() / static_cast<double>(scale), coarse.nx() * scale,
                coarse.ny() * scale, levels - 1);
  for (std::size_t i = 0; i < fine.size(); ++i) fine.set_status(i, classify(fine.cell_center(i)));
  return fine;
}

}  // namespace bemtopo
