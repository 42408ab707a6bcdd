#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include "doctest.h"

#include <random>
#include <set>

#include "bemtopo/remesher.hpp"
#include "bemtopo/sampler.hpp"
#include "fields.hpp"

using namespace bemtopo;

namespace {

// Fine status grid built by classifying every fine center directly.
CellGrid direct_fine(const CellGrid& coarse, const PointClassifier& f, int levels) {
  const std::size_t s = std::size_t{1} << (levels - 1);
  CellGrid g(coarse.origin(), coarse.cell_size() / static_cast<double>(s), coarse.nx() * s, coarse.ny() * s,
             levels - 1);
  for (std::size_t i = 0; i < g.size(); ++i) g.set_status(i, f(g.cell_center(i)));
  return g;
}

std::set<std::pair<std::uint64_t, std::pair<double, double>>> boundary_set(const CellGrid& g) {
  std::set<std::pair<std::uint64_t, std::pair<double, double>>> out;
  if (g.material_count() == 0) return out;
  for (const auto& e : generate_boundary(g).elements) out.insert({e.id.value, {e.start.x(), e.start.y()}});
  return out;
}

}  // namespace

TEST_CASE("uniform points") {
  CellGrid g(Vec2::Zero(), 0.05, 20, 20);
  const auto pts = uniform_points(g);
  CHECK(pts.size() == 400);
  CHECK(pts[21].cell == 21);
  CHECK(pts[21].point.isApprox(g.cell_center(21)));
  for (std::size_t i = 0; i < g.size(); ++i) g.set_status(i, false);
  CHECK(uniform_points(g).empty());
  g.set_status(7, true);
  CHECK(uniform_points(g).size() == 1);
}

TEST_CASE("uniform classification needs no refinement") {
  CellGrid coarse(Vec2::Zero(), 1.0, 5, 4);
  const auto plan = quadtree_refine(coarse, PointClassifier([](const Vec2&) { return true; }), 3);
  CHECK(plan.leaves.size() == 20);
  CHECK(plan.fine_uniform_count() == 20 * 16);
  CHECK(plan.classified_count() == 20);
}

TEST_CASE("half-plane on a 4x4 grid refines exactly the two middle columns") {
  CellGrid coarse(Vec2::Zero(), 1.0, 4, 4);
  const PointClassifier left = [](const Vec2& p) { return p.x() < 2.0; };
  const auto plan = quadtree_refine(coarse, left, 2);
  CHECK(plan.leaves.size() == 40);
  CHECK(plan.fine_uniform_count() == 64);
  std::size_t coarse_leaves = 0;
  for (const auto& l : plan.leaves) {
    if (l.cell.level == 0) {
      ++coarse_leaves;
      CHECK((l.cell.col == 0 || l.cell.col == 3));
    } else {
      CHECK((l.cell.col >= 2 && l.cell.col <= 5));
    }
  }
  CHECK(coarse_leaves == 8);
  CHECK(fine_status_grid(plan, coarse) == direct_fine(coarse, left, 2));
}

TEST_CASE("quadtree plan reproduces the fine-uniform boundary") {
  std::mt19937 rng(31337);
  for (int levels : {2, 3, 4}) {
    for (int t = 0; t < 40; ++t) {
      CellGrid coarse(Vec2(-0.3, 0.7), 0.05, 20, 16);
      const auto f = testing::resolvable_field(rng, coarse, t % 2 == 1);
      const auto plan = quadtree_refine(coarse, f, levels);
      const CellGrid fine = direct_fine(coarse, f, levels);
      CHECK(fine_uniform_grid(coarse, f, levels) == fine);
      INFO("levels " << levels << " trial " << t);
      CHECK(boundary_set(fine_status_grid(plan, coarse)) == boundary_set(fine));
      CHECK(plan.leaves.size() < plan.fine_uniform_count());
      CHECK(plan.classified_count() >= plan.leaves.size());
    }
  }
}

TEST_CASE("plans are deterministic") {
  std::mt19937 rng(5);
  CellGrid coarse(Vec2::Zero(), 0.1, 10, 10);
  const auto f = testing::resolvable_field(rng, coarse, true);
  const auto a = quadtree_refine(coarse, f, 3);
  const auto b = quadtree_refine(coarse, f, 3);
  REQUIRE(a.leaves.size() == b.leaves.size());
  for (std::size_t i = 0; i < a.leaves.size(); ++i) {
    CHECK(a.leaves[i].cell.level == b.leaves[i].cell.level);
    CHECK(a.leaves[i].index == b.leaves[i].index);
    CHECK(a.leaves[i].status == b.leaves[i].status);
  }
}

TEST_CASE("mixed cells are split and may not survive at the finest level") {
  CellGrid coarse(Vec2::Zero(), 1.0, 2, 2);
  const QuadClassifier mixed_coarse = [](const QuadCell& c) {
    if (c.level == 0 && c.col == 0 && c.row == 0) return CellClass::Mixed;
    return CellClass::Material;
  };
  const auto plan = quadtree_refine(coarse, mixed_coarse, 2);
  CHECK(plan.leaves.size() == 7);

  const QuadClassifier always_mixed = [](const QuadCell&) { return CellClass::Mixed; };
  CHECK_THROWS_AS(quadtree_refine(coarse, always_mixed, 2), Error);
  CHECK_THROWS_AS(quadtree_refine(coarse, mixed_coarse, 0), Error);
}

TEST_CASE("quad cell geometry") {
  CellGrid coarse(Vec2(1, 2), 0.5, 3, 3);
  const auto c = quad_cell(coarse, 1, 3, 0);
  CHECK(c.size == doctest::Approx(0.25));
  CHECK(c.center.isApprox(Vec2(1.875, 2.125)));
}
