#include "bemtopo/optimizer.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <map>

#include "bemtopo/sampler.hpp"

namespace bemtopo {

namespace {

using Clock = std::chrono::steady_clock;

template <class F>
double timed(F&& f) {
  const auto t0 = Clock::now();
  f();
  return std::chrono::duration<double>(Clock::now() - t0).count();
}

std::string lower(std::string s) {
  std::transform(s.begin(), s.end(), s.begin(), [](unsigned char c) { return static_cast<char>(std::tolower(c)); });
  return s;
}

bool corner_has_face(Corner c, Face f) {
  switch (c) {
    case Corner::BottomLeft: return f == Face::Bottom || f == Face::Left;
    case Corner::BottomRight: return f == Face::Bottom || f == Face::Right;
    case Corner::TopLeft: return f == Face::Top || f == Face::Left;
    case Corner::TopRight: return f == Face::Top || f == Face::Right;
  }
  return false;
}

/// Exterior cells of `side` whose center lies in the [from, to] fraction of it.
std::vector<std::size_t> side_cells(const CellGrid& g, Face side, double from, double to) {
  std::vector<std::size_t> cells;
  const bool vertical = side == Face::Left || side == Face::Right;
  const std::size_t n = vertical ? g.ny() : g.nx();
  for (std::size_t k = 0; k < n; ++k) {
    const double t = (static_cast<double>(k) + 0.5) / static_cast<double>(n);
    if (t < from || t > to) continue;
    switch (side) {
      case Face::Left: cells.push_back(g.index(0, k)); break;
      case Face::Right: cells.push_back(g.index(g.nx() - 1, k)); break;
      case Face::Bottom: cells.push_back(g.index(k, 0)); break;
      case Face::Top: cells.push_back(g.index(k, g.ny() - 1)); break;
    }
  }
  return cells;
}

std::size_t corner_cell(const CellGrid& g, Corner c) {
  switch (c) {
    case Corner::BottomLeft: return g.index(0, 0);
    case Corner::BottomRight: return g.index(g.nx() - 1, 0);
    case Corner::TopLeft: return g.index(0, g.ny() - 1);
    case Corner::TopRight: return g.index(g.nx() - 1, g.ny() - 1);
  }
  return 0;
}

std::map<FaceKey, BoundaryCondition> prescribed_faces(const OptimizationConfig& cfg, const CellGrid& g) {
  std::map<FaceKey, BoundaryCondition> faces;
  auto put = [&faces](const FaceKey& key, const BoundaryCondition& bc, const std::string& name) {
    if (!faces.emplace(key, bc).second) {
      throw Error("boundary condition '" + name + "' overlaps another condition on cell " + std::to_string(key.cell));
    }
  };
  for (const auto& c : cfg.clamps) {
    for (std::size_t cell : side_cells(g, c.side, c.from, c.to)) {
      put({cell, c.side}, BoundaryCondition::dirichlet(c.displacement), c.name);
    }
  }
  for (const auto& l : cfg.loads) {
    if (l.type == LoadSpec::Type::Point) {
      put({corner_cell(g, l.corner), l.side}, BoundaryCondition::neumann(l.value / g.cell_size()), l.name);
    } else {
      for (std::size_t cell : side_cells(g, l.side, l.from, l.to)) {
        put({cell, l.side}, BoundaryCondition::neumann(l.value), l.name);
      }
    }
  }
  return faces;
}

double relative_inf_error(const Eigen::VectorXd& x, const Eigen::VectorXd& reference) {
  const double scale = reference.cwiseAbs().maxCoeff();
  const double diff = (x - reference).cwiseAbs().maxCoeff();
  return scale > 0.0 ? diff / scale : diff;
}

// Per-iteration solver state: LU factorization each time, or the
// incrementally updated inverse.
class Solver {
 public:
  explicit Solver(const OptimizationConfig& cfg) : cfg_(cfg) {}

  Eigen::VectorXd solve(const BemSystem& system, const BoundaryDiff* diff, IterationRecord& rec) {
    Eigen::VectorXd x;
    if (cfg_.solver == SolverMode::FullLU) {
      Eigen::PartialPivLU<Eigen::MatrixXd> lu;
      rec.t_update = timed([&] { lu.compute(system.matrix); });
      if (!(lu.rcond() > 1e-14)) throw SingularSystem("system matrix is singular after remesh");
      rec.t_solve = timed([&] { x = lu.solve(system.rhs); });
    } else {
      if (!inverse_ || diff == nullptr) {
        rec.t_update = timed([&] { inverse_ = refresh_inverse(system); });
        rec.drift = inverse_->drift;
        rec.refreshed = true;
      } else {
        UpdateOptions opts;
        opts.svd_rel_tol = cfg_.svd_rel_tol;
        opts.drift_tolerance = cfg_.drift_tolerance;
        ++updates_;
        opts.audit = cfg_.audit_stride > 0 && updates_ % cfg_.audit_stride == 0;
        UpdateReport rep;
        inverse_ = apply_diff(*inverse_, system, *diff, opts, &rep);
        rec.t_update = rep.t_shrink + rep.t_extend + rep.t_refresh;
        rec.t_audit = rep.t_audit;
        rec.refreshed = rep.refreshed;
        rec.regularized = rep.regularized;
        if (rep.audited) rec.drift = rep.drift;
      }
      rec.t_solve = timed([&] { x = solve_unknowns(*inverse_, system); });
    }
    if (!x.allFinite()) throw SingularSystem("solve produced non-finite unknowns");
    if (cfg_.shadow_check) rec.shadow_error = relative_inf_error(x, solve_unknowns(system));
    return x;
  }

 private:
  const OptimizationConfig& cfg_;
  std::optional<InverseState> inverse_;
  std::size_t updates_ = 0;
};

}  // namespace

std::string to_string(SolverMode mode) { return mode == SolverMode::FullLU ? "lu" : "block"; }

SolverMode parse_solver_mode(const std::string& text) {
  const auto t = lower(text);
  if (t == "lu") return SolverMode::FullLU;
  if (t == "block") return SolverMode::Blockwise;
  throw Error("solver must be 'lu' or 'block', got '" + text + "'");
}

std::string to_string(Corner c) {
  switch (c) {
    case Corner::BottomLeft: return "bottom_left";
    case Corner::BottomRight: return "bottom_right";
    case Corner::TopLeft: return "top_left";
    case Corner::TopRight: return "top_right";
  }
  return "?";
}

Corner parse_corner(const std::string& text) {
  const auto t = lower(text);
  for (Corner c : {Corner::BottomLeft, Corner::BottomRight, Corner::TopLeft, Corner::TopRight}) {
    if (to_string(c) == t) return c;
  }
  throw Error("corner must be one of bottom_left, bottom_right, top_left, top_right, got '" + text + "'");
}

Face parse_face(const std::string& text) {
  const auto t = lower(text);
  for (Face f : kAllFaces) {
    if (to_string(f) == t) return f;
  }
  throw Error("side must be one of left, right, top, bottom, got '" + text + "'");
}

std::string to_string(Termination t) {
  switch (t) {
    case Termination::TargetReached: return "target_reached";
    case Termination::MaxIterations: return "max_iterations";
    case Termination::NoChange: return "no_change";
    case Termination::Failed: return "failed";
  }
  return "?";
}

void OptimizationConfig::validate() const {
  try {
    material.validate();
  } catch (const Error& e) {
    throw Error(std::string("material: ") + e.what());
  }
  if (nx < 1 || ny < 1) throw Error("grid.nx, grid.ny: must be >= 1");
  if (!(cell_size > 0.0)) throw Error("grid.cell_size: must be > 0");
  if (levels < 1 || levels > 8) throw Error("grid.levels: must be in [1, 8]");
  if (!(alpha >= 0.0 && alpha <= 1.0)) throw Error("optimizer.alpha: alpha must be in [0,1]");
  if (!(target_fraction > 0.0 && target_fraction < 1.0)) throw Error("optimizer.target_fraction: must be in (0,1)");
  if (max_iterations < 1) throw Error("optimizer.max_iterations: must be >= 1");
  if (!(drift_tolerance > 0.0)) throw Error("optimizer.drift_tolerance: must be > 0");
  if (!(svd_rel_tol > 0.0)) throw Error("optimizer.svd_rel_tol: must be > 0");
  if (clamps.empty()) throw Error("at least one clamp section is required to fix rigid-body motion");
  if (loads.empty() && !protect_supports) {
    throw Error("at least one load section is required (loaded cells anchor the connectivity check)");
  }
  for (const auto& c : clamps) {
    if (!(c.from >= 0.0 && c.to <= 1.0 && c.from <= c.to)) {
      throw Error("clamp." + c.name + ".from/to: must satisfy 0 <= from <= to <= 1");
    }
  }
  for (const auto& l : loads) {
    if (l.type == LoadSpec::Type::Point && !corner_has_face(l.corner, l.side)) {
      throw Error("load." + l.name + ".side: " + to_string(l.side) + " does not touch corner " +
                  to_string(l.corner));
    }
    if (l.type == LoadSpec::Type::Traction && !(l.from >= 0.0 && l.to <= 1.0 && l.from <= l.to)) {
      throw Error("load." + l.name + ".from/to: must satisfy 0 <= from <= to <= 1");
    }
  }
}

OptimizationConfig benchmark_config() {
  OptimizationConfig cfg;
  cfg.clamps.push_back({"support", Face::Left, 0.0, 1.0, Vec2::Zero()});
  cfg.loads.push_back({"tip", LoadSpec::Type::Point, Face::Top, Corner::TopRight, 0.0, 1.0, Vec2(0.0, -1.0)});
  return cfg;
}

CellGrid initial_grid(const OptimizationConfig& cfg) {
  const std::size_t scale = std::size_t{1} << (cfg.levels - 1);
  CellGrid grid(cfg.origin, cfg.cell_size / static_cast<double>(scale), cfg.nx * scale, cfg.ny * scale,
                cfg.levels - 1);
  for (const auto& [key, bc] : prescribed_faces(cfg, grid)) {
    if (cfg.protect_supports || !bc.is_dirichlet()) grid.protect(key.cell);
  }
  return grid;
}

BcAssigner make_bc_assigner(const OptimizationConfig& cfg, const CellGrid& fine_grid) {
  auto faces = std::make_shared<const std::map<FaceKey, BoundaryCondition>>(prescribed_faces(cfg, fine_grid));
  return [faces](const FaceKey& key) {
    const auto it = faces->find(key);
    return it == faces->end() ? BoundaryCondition::traction_free() : it->second;
  };
}

SamplingResult sample_td(const OptimizationConfig& cfg, const CellGrid& fine, const BoundarySolution& sol,
                         const BoundaryModel& model) {
  SamplingResult out;
  if (cfg.levels == 1) {
    const auto pts = uniform_points(fine);
    out.field = td_field(pts, sol, model, cfg.material, cfg.alpha);
    out.n_evaluations = pts.size();
    return out;
  }

  const CellGrid coarse(cfg.origin, cfg.cell_size, cfg.nx, cfg.ny, 0);
  const int finest = cfg.levels - 1;

  struct Block {
    bool all_material = true;
    bool all_void = true;
    bool any_protected = false;
    bool all_protected = true;
  };
  auto block = [&](const QuadCell& c) {
    Block b;
    const std::size_t m = std::size_t{1} << (finest - c.level);
    for (std::size_t r = c.row * m; r < (c.row + 1) * m; ++r) {
      for (std::size_t col = c.col * m; col < (c.col + 1) * m; ++col) {
        const std::size_t i = fine.index(col, r);
        const bool s = fine.status(i);
        const bool p = fine.is_protected(i);
        b.all_material = b.all_material && s;
        b.all_void = b.all_void && !s;
        b.any_protected = b.any_protected || p;
        b.all_protected = b.all_protected && p;
      }
    }
    return b;
  };

  std::map<std::pair<int, std::size_t>, double> cache;
  auto evaluate = [&](const QuadCell& c) {
    const std::size_t index = c.row * (cfg.nx << c.level) + c.col;
    const auto key = std::make_pair(c.level, index);
    if (const auto it = cache.find(key); it != cache.end()) return it->second;
    const SamplePoint p{c.center, index, c.level};
    const double d = td_field(std::span(&p, 1), sol, model, cfg.material, 0.0).samples.front().value;
    cache.emplace(key, d);
    return d;
  };

  // Provisional cutoff from the current geometry: split cells straddling the
  // boundary, sample every material leaf.
  TdField provisional;
  provisional.alpha = cfg.alpha;
  std::vector<QuadCell> stack;
  for (std::size_t r = 0; r < cfg.ny; ++r) {
    for (std::size_t c = 0; c < cfg.nx; ++c) stack.push_back(quad_cell(coarse, 0, c, r));
  }
  while (!stack.empty()) {
    const QuadCell c = stack.back();
    stack.pop_back();
    const Block b = block(c);
    if (b.all_material) {
      provisional.samples.push_back({c.center, 0, c.level, evaluate(c)});
    } else if (!b.all_void) {
      for (std::size_t dr = 0; dr < 2; ++dr) {
        for (std::size_t dc = 0; dc < 2; ++dc) {
          stack.push_back(quad_cell(coarse, c.level + 1, 2 * c.col + dc, 2 * c.row + dr));
        }
      }
    }
  }
  update_extrema(provisional);
  const double d0 = provisional.cutoff;

  const QuadClassifier classify = [&](const QuadCell& c) {
    const Block b = block(c);
    if (b.all_void) return CellClass::Void;
    if (!b.all_material) return CellClass::Mixed;
    if (b.all_protected || evaluate(c) >= d0) return CellClass::Material;
    return b.any_protected ? CellClass::Mixed : CellClass::Void;
  };
  const auto plan = quadtree_refine(coarse, classify, cfg.levels);

  out.field.alpha = cfg.alpha;
  for (const auto& leaf : plan.leaves) {
    const Block b = block(leaf.cell);
    if (!b.all_material) continue;
    out.field.samples.push_back({leaf.cell.center, leaf.index, leaf.cell.level, evaluate(leaf.cell)});
  }
  update_extrema(out.field);
  out.n_evaluations = cache.size();
  return out;
}

OptimizationState run(const OptimizationConfig& cfg) {
  cfg.validate();
  OptimizationState st;
  st.grid = initial_grid(cfg);
  const BcAssigner assign = make_bc_assigner(cfg, st.grid);
  st.model = generate_boundary(st.grid, assign);
  const double initial_area = static_cast<double>(st.grid.material_count());

  Solver solver(cfg);
  BemSystem system;
  IterationRecord pending;
  Eigen::VectorXd x;
  auto fail = [&st](const std::string& what) {
    st.termination = Termination::Failed;
    st.message = what;
    return OptimizationError(what, st);
  };

  pending.t_assemble = timed([&] { system = assemble(st.model, cfg.material); });
  try {
    x = solver.solve(system, nullptr, pending);
  } catch (const Error& e) {
    throw fail(std::string("initial boundary value problem: ") + e.what());
  }

  for (;;) {
    IterationRecord rec = pending;
    rec.k = st.history.size();
    rec.R = static_cast<double>(st.grid.material_count()) / initial_area;
    rec.n_s = st.model.size();
    rec.grid = st.grid;
    const BoundarySolution sol = make_solution(st.model, x);
    rec.E = strain_energy(sol, st.model);
    if (rec.k == 0) st.E0 = rec.E;
    st.R = rec.R;
    st.E = rec.E;

    SamplingResult sampled;
    rec.t_td = timed([&] { sampled = sample_td(cfg, st.grid, sol, st.model); });
    rec.n_samples = sampled.field.samples.size();
    rec.n_evaluations = sampled.n_evaluations;
    rec.d_min = sampled.field.d_min;
    rec.d_max = sampled.field.d_max;
    rec.cutoff = sampled.field.cutoff;

    CellGrid next_grid;
    BoundaryModel next_model;
    BoundaryDiff diff;
    rec.t_remesh = timed([&] {
      next_grid = classify_cells(st.grid, sampled.field);
      next_model = align_to(st.model, generate_boundary(next_grid, assign));
      diff = diff_boundaries(st.model, next_model);
    });
    rec.n_a = diff.n_added();
    rec.n_r = diff.n_removed();
    st.history.push_back(std::move(rec));
    st.k = st.history.size();

    if (diff.empty()) {
      st.termination = Termination::NoChange;
      break;
    }

    st.grid = std::move(next_grid);
    st.model = std::move(next_model);
    const bool clamped = std::any_of(st.model.elements.begin(), st.model.elements.end(),
                                     [](const BoundaryElement& e) { return e.bc.is_dirichlet(); });
    if (!clamped) throw fail("iteration " + std::to_string(st.k) + ": every clamped cell was removed");
    pending = IterationRecord{};
    pending.t_assemble = timed([&] { system = assemble_incremental(system, st.model, cfg.material); });
    try {
      x = solver.solve(system, &diff, pending);
    } catch (const Error& e) {
      throw fail("iteration " + std::to_string(st.k) + ": " + e.what());
    }

    const double R = static_cast<double>(st.grid.material_count()) / initial_area;
    const bool reached = R <= cfg.target_fraction;
    if (reached || st.history.size() >= cfg.max_iterations) {
      st.termination = reached ? Termination::TargetReached : Termination::MaxIterations;
      st.R = R;
      st.E = strain_energy(make_solution(st.model, x), st.model);
      st.final_shadow_error = pending.shadow_error;
      st.final_drift = pending.drift;
      break;
    }
  }
  return st;
}

}  // namespace bemtopo
