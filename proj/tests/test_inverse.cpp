#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include "doctest.h"

#include <numeric>
#include <random>

#include "bemtopo/inverse.hpp"
#include "support.hpp"

using namespace bemtopo;
using Eigen::MatrixXd;
using testing::random_matrix;
using testing::rel_fro;
using testing::well_conditioned;

namespace {

struct Loop {
  CellGrid grid;
  BcAssigner assign;
  BoundaryModel model;
};

// Square block clamped on the left, pulled on the right.
Loop clamped_block(std::size_t n) {
  Loop l{CellGrid(Vec2::Zero(), 1.0 / static_cast<double>(n), n, n), {}, {}};
  const std::size_t nx = n;
  l.assign = [nx](const FaceKey& k) {
    if (k.face == Face::Left && k.cell % nx == 0) return BoundaryCondition::dirichlet(Vec2::Zero());
    if (k.face == Face::Right && k.cell % nx == nx - 1) return BoundaryCondition::neumann(Vec2(1.0, 0.3));
    return BoundaryCondition::traction_free();
  };
  l.model = generate_boundary(l.grid, l.assign);
  return l;
}

}  // namespace

TEST_CASE("block-diagonal append") {
  const MatrixXd a = MatrixXd::Identity(2, 2);
  const MatrixXd out = extend_inverse(a, MatrixXd::Zero(2, 1), MatrixXd::Zero(1, 2), MatrixXd::Constant(1, 1, 2.0));
  MatrixXd expected = MatrixXd::Zero(3, 3);
  expected.diagonal() << 1.0, 1.0, 0.5;
  CHECK((out - expected).norm() == doctest::Approx(0.0));
}

TEST_CASE("extension matches direct inversion") {
  std::mt19937 rng(3);
  const MatrixXd full = well_conditioned(rng, 18);
  const MatrixXd a = full.topLeftCorner(12, 12);
  const MatrixXd out = extend_inverse(a.inverse(), full.topRightCorner(12, 6), full.bottomLeftCorner(6, 12),
                                      full.bottomRightCorner(6, 6));
  CHECK(rel_fro(out, full.inverse()) < 1e-10);
}

TEST_CASE("empty extension is the identity operation") {
  std::mt19937 rng(4);
  const MatrixXd a_inv = well_conditioned(rng, 12).inverse();
  const MatrixXd out = extend_inverse(a_inv, MatrixXd(12, 0), MatrixXd(0, 12), MatrixXd(0, 0));
  CHECK(out == a_inv);
}

TEST_CASE("shrinking decoupled blocks returns the kept block exactly") {
  std::mt19937 rng(5);
  const MatrixXd p_inv = well_conditioned(rng, 6).inverse();
  const MatrixXd q_inv = well_conditioned(rng, 3).inverse();
  const MatrixXd out = shrink_inverse(p_inv, MatrixXd::Zero(6, 3), MatrixXd::Zero(3, 6), q_inv);
  CHECK(out == p_inv);
}

TEST_CASE("removing trailing dofs matches direct inversion") {
  std::mt19937 rng(6);
  const MatrixXd full = well_conditioned(rng, 18);
  const MatrixXd inv = full.inverse();
  const MatrixXd out = shrink_inverse(inv.topLeftCorner(12, 12), inv.topRightCorner(12, 6),
                                      inv.bottomLeftCorner(6, 12), inv.bottomRightCorner(6, 6));
  CHECK(rel_fro(out, full.topLeftCorner(12, 12).inverse()) < 1e-10);
}

TEST_CASE("index-addressed removal equals permuted removal") {
  std::mt19937 rng(7);
  const MatrixXd full = well_conditioned(rng, 18);
  std::vector<Eigen::Index> keep;
  std::vector<Eigen::Index> removed;
  for (Eigen::Index i = 0; i < 18; ++i) (i % 3 == 1 ? removed : keep).push_back(i);
  const MatrixXd out = shrink_inverse(full.inverse(), keep, removed);
  MatrixXd kept(12, 12);
  for (Eigen::Index r = 0; r < 12; ++r) {
    for (Eigen::Index c = 0; c < 12; ++c) kept(r, c) = full(keep[r], keep[c]);
  }
  CHECK(rel_fro(out, kept.inverse()) < 1e-10);

  const std::vector<Eigen::Index> bad{0, 99};
  CHECK_THROWS_AS(shrink_inverse(full.inverse(), keep, bad), Error);
}

TEST_CASE("extend then shrink round trip") {
  std::mt19937 rng(8);
  const MatrixXd full = well_conditioned(rng, 30);
  const MatrixXd a_inv = full.topLeftCorner(24, 24).inverse();
  const MatrixXd ext = extend_inverse(a_inv, full.topRightCorner(24, 6), full.bottomLeftCorner(6, 24),
                                      full.bottomRightCorner(6, 6));
  const MatrixXd back = shrink_inverse(ext.topLeftCorner(24, 24), ext.topRightCorner(24, 6),
                                       ext.bottomLeftCorner(6, 24), ext.bottomRightCorner(6, 6));
  CHECK(rel_fro(back, a_inv) < 1e-9);
}

TEST_CASE("random update ranks agree with direct inversion") {
  std::mt19937 rng(9);
  std::uniform_int_distribution<int> size(1, 40);
  double worst = 0.0;
  for (int t = 0; t < 100; ++t) {
    const Eigen::Index m = size(rng);
    const Eigen::Index k = std::uniform_int_distribution<Eigen::Index>(1, m)(rng);
    const MatrixXd full = well_conditioned(rng, m + k);
    const MatrixXd direct = full.inverse();
    const MatrixXd ext = extend_inverse(full.topLeftCorner(m, m).inverse(), full.topRightCorner(m, k),
                                        full.bottomLeftCorner(k, m), full.bottomRightCorner(k, k));
    const MatrixXd shr = shrink_inverse(direct.topLeftCorner(m, m), direct.topRightCorner(m, k),
                                        direct.bottomLeftCorner(k, m), direct.bottomRightCorner(k, k));
    worst = std::max({worst, rel_fro(ext, direct), rel_fro(shr, full.topLeftCorner(m, m).inverse())});
  }
  CHECK(worst < 1e-9);
}

TEST_CASE("update cost is dominated by M^2 K products") {
  std::mt19937 rng(10);
  const Eigen::Index m = 60;
  const Eigen::Index k = 6;
  const MatrixXd full = well_conditioned(rng, m + k);
  OpCounter ext_count;
  UpdateOptions opts;
  opts.counter = &ext_count;
  extend_inverse(full.topLeftCorner(m, m).inverse(), full.topRightCorner(m, k), full.bottomLeftCorner(k, m),
                 full.bottomRightCorner(k, k), opts);
  CHECK(ext_count.largest_min_dim <= k);
  CHECK(ext_count.multiplies >= static_cast<std::uint64_t>(m * m * k));
  CHECK(ext_count.multiplies <= static_cast<std::uint64_t>(4 * m * m * k));

  const MatrixXd inv = full.inverse();
  OpCounter shr_count;
  shrink_inverse(inv.topLeftCorner(m, m), inv.topRightCorner(m, k), inv.bottomLeftCorner(k, m),
                 inv.bottomRightCorner(k, k), &shr_count);
  CHECK(shr_count.largest_min_dim <= k);
  CHECK(shr_count.multiplies <= static_cast<std::uint64_t>(2 * m * m * k));
}

TEST_CASE("truncated SVD") {
  MatrixXd s = MatrixXd::Zero(2, 2);
  s.diagonal() << 1.0, 1e-16;
  bool truncated = false;
  const MatrixXd p = regularized_inverse(s, 1e-10, &truncated);
  CHECK(truncated);
  CHECK(p(0, 0) == doctest::Approx(1.0));
  CHECK(p(1, 1) == 0.0);
  CHECK(regularized_inverse(MatrixXd::Zero(3, 3)).norm() == 0.0);

  std::mt19937 rng(12);
  const MatrixXd w = well_conditioned(rng, 8);
  CHECK(rel_fro(regularized_inverse(w, 1e-10, &truncated), w.inverse()) < 1e-12);
  CHECK_FALSE(truncated);
  CHECK_THROWS_AS(regularized_inverse(w, 0.0), Error);
}

TEST_CASE("singular Schur complement") {
  const MatrixXd a = MatrixXd::Identity(2, 2);
  UpdateOptions strict;
  strict.allow_regularization = false;
  CHECK_THROWS_AS(extend_inverse(a, MatrixXd::Zero(2, 1), MatrixXd::Zero(1, 2), MatrixXd::Zero(1, 1), strict),
                  SingularUpdate);
  bool reg = false;
  const MatrixXd out = extend_inverse(a, MatrixXd::Zero(2, 1), MatrixXd::Zero(1, 2), MatrixXd::Zero(1, 1), {}, &reg);
  CHECK(reg);
  CHECK(out(2, 2) == 0.0);
}

TEST_CASE("empty diff leaves the state untouched") {
  const auto l = clamped_block(3);
  const auto sys = assemble(l.model, Material{});
  const auto state = refresh_inverse(sys);
  UpdateReport rep;
  const auto out = apply_diff(state, sys, BoundaryDiff{}, {}, &rep);
  CHECK(out.inverse == state.inverse);
  CHECK(out.drift == state.drift);
  CHECK_FALSE(rep.refreshed);
}

TEST_CASE("updated inverse solves like a fresh factorization") {
  const Material mat;
  auto l = clamped_block(3);
  REQUIRE(l.model.size() == 12);
  auto sys = assemble(l.model, mat);
  auto state = refresh_inverse(sys);

  // knock out the top-right corner cell, then the cell below it
  for (std::size_t cell : {8u, 5u}) {
    CellGrid next = l.grid;
    next.set_status(cell, false);
    const auto next_model = align_to(l.model, generate_boundary(next, l.assign));
    const auto diff = diff_boundaries(l.model, next_model);
    const auto next_sys = assemble_incremental(sys, next_model, mat);
    UpdateReport rep;
    state = apply_diff(state, next_sys, diff, {}, &rep);
    CHECK_FALSE(rep.refreshed);
    CHECK(rep.audited);
    CHECK(state.drift <= 1e-6);
    const Eigen::VectorXd x = solve_unknowns(state, next_sys);
    const Eigen::VectorXd ref = next_sys.matrix.partialPivLu().solve(next_sys.rhs);
    CHECK((x - ref).norm() / ref.norm() < 1e-8);
    l.grid = next;
    l.model = next_model;
    sys = next_sys;
  }
}

TEST_CASE("failed updates fall back to a refresh") {
  const Material mat;
  const auto l = clamped_block(3);
  const auto sys = assemble(l.model, mat);
  const auto state = refresh_inverse(sys);
  CellGrid next = l.grid;
  next.set_status(8, false);
  const auto fresh_model = generate_boundary(next, l.assign);
  const auto diff = diff_boundaries(l.model, fresh_model);

  SUBCASE("model not aligned") {
    const auto unaligned = assemble(fresh_model, mat);
    UpdateReport rep;
    const auto out = apply_diff(state, unaligned, diff, {}, &rep);
    CHECK(rep.refreshed);
    CHECK(out.order == unaligned.order);
    CHECK(inverse_drift(unaligned.matrix, out.inverse) <= 1e-6);
  }
  SUBCASE("drift above tolerance") {
    const auto aligned = assemble(align_to(l.model, fresh_model), mat);
    UpdateOptions opts;
    opts.drift_tolerance = 0.0;
    UpdateReport rep;
    const auto out = apply_diff(state, aligned, diff, opts, &rep);
    CHECK(rep.refreshed);
    CHECK(rep.refresh_reason.find("drift") != std::string::npos);
    CHECK(out.drift <= 1e-6);
  }
}
