#include "bemtopo/cli.hpp"

#include <charconv>
#include <cstdio>
#include <fstream>
#include <map>
#include <set>
#include <sstream>

#include <Eigen/Core>
#include <boost/property_tree/ini_parser.hpp>
#include <boost/property_tree/ptree.hpp>
#include "json.hpp"

#ifndef BEMTOPO_VERSION
#define BEMTOPO_VERSION "0.0.0"
#endif

namespace bemtopo {

namespace {

namespace pt = boost::property_tree;
using json = nlohmann::ordered_json;

std::string fmt(const char* spec, double v) {
  char buf[64];
  std::snprintf(buf, sizeof buf, spec, v);
  return buf;
}

std::string g9(double v) { return fmt("%.9g", v); }
std::string g17(double v) { return fmt("%.17g", v); }

// Typed access to one INI section, remembering which keys were read.
class Section {
 public:
  Section(std::string name, const pt::ptree* tree, std::vector<std::string>* defaulted)
      : name_(std::move(name)), tree_(tree), defaulted_(defaulted) {}

  double number(const std::string& key, double fallback) {
    const auto text = raw(key);
    if (!text) return fallback;
    double v = 0.0;
    const auto* end = text->data() + text->size();
    const auto [p, ec] = std::from_chars(text->data(), end, v);
    if (ec != std::errc() || p != end) fail(key, "expected a number, got '" + *text + "'");
    return v;
  }

  std::size_t count(const std::string& key, std::size_t fallback) {
    const auto text = raw(key);
    if (!text) return fallback;
    std::size_t v = 0;
    const auto* end = text->data() + text->size();
    const auto [p, ec] = std::from_chars(text->data(), end, v);
    if (ec != std::errc() || p != end) fail(key, "expected a non-negative integer, got '" + *text + "'");
    return v;
  }

  bool flag(const std::string& key, bool fallback) {
    const auto text = raw(key);
    if (!text) return fallback;
    if (*text == "true" || *text == "1" || *text == "yes") return true;
    if (*text == "false" || *text == "0" || *text == "no") return false;
    fail(key, "expected true or false, got '" + *text + "'");
  }

  template <class T, class Parse>
  T choice(const std::string& key, T fallback, Parse parse) {
    const auto text = raw(key);
    if (!text) return fallback;
    try {
      return parse(*text);
    } catch (const Error& e) {
      fail(key, e.what());
    }
  }

  // Every key present in the file must have been consumed.
  void check_unknown() const {
    if (!tree_) return;
    for (const auto& [key, value] : *tree_) {
      if (!used_.contains(key)) throw Error("unknown key '" + name_ + "." + key + "'");
    }
  }

  [[noreturn]] void fail(const std::string& key, const std::string& what) const {
    throw Error(name_ + "." + key + ": " + what);
  }

 private:
  std::optional<std::string> raw(const std::string& key) {
    used_.insert(key);
    std::optional<std::string> text;
    if (tree_) {
      if (const auto child = tree_->get_child_optional(pt::ptree::path_type(key, '\0'))) text = child->data();
    }
    if (!text && defaulted_) defaulted_->push_back(name_ + "." + key);
    return text;
  }

  std::string name_;
  const pt::ptree* tree_;
  std::vector<std::string>* defaulted_;
  std::set<std::string> used_;
};

LoadSpec::Type parse_load_type(const std::string& text) {
  if (text == "point") return LoadSpec::Type::Point;
  if (text == "traction") return LoadSpec::Type::Traction;
  throw Error("type must be 'point' or 'traction', got '" + text + "'");
}

std::string to_string(LoadSpec::Type t) { return t == LoadSpec::Type::Point ? "point" : "traction"; }

void write_file(const fs::path& path, const std::string& content) {
  std::ofstream out(path, std::ios::binary);
  out << content;
  if (!out) throw Error("cannot write " + path.string());
}

json to_json(const PhaseTotals& t) {
  return {{"solve", t.solve}, {"td", t.td},         {"remesh", t.remesh},
          {"assemble", t.assemble}, {"update", t.update}, {"audit", t.audit}};
}

bool same_statuses(const CellGrid& a, const CellGrid& b) { return a.statuses() == b.statuses(); }

}  // namespace

OptimizationConfig parse_config(std::istream& in, std::vector<std::string>* defaulted) {
  pt::ptree tree;
  try {
    pt::read_ini(in, tree);
  } catch (const pt::ini_parser_error& e) {
    throw Error("config line " + std::to_string(e.line()) + ": " + e.message());
  }

  OptimizationConfig cfg;
  cfg.clamps.clear();
  cfg.loads.clear();
  std::map<std::string, const pt::ptree*> sections;
  for (const auto& [name, sub] : tree) {
    if (!sub.data().empty()) throw Error("key '" + name + "' must be inside a section");
    sections[name] = &sub;
  }
  auto find = [&](const std::string& name) -> const pt::ptree* {
    const auto it = sections.find(name);
    return it == sections.end() ? nullptr : it->second;
  };

  std::vector<Section> checked;
  {
    Section s("material", find("material"), defaulted);
    cfg.material.young_modulus = s.number("young_modulus", cfg.material.young_modulus);
    cfg.material.poisson_ratio = s.number("poisson_ratio", cfg.material.poisson_ratio);
    checked.push_back(std::move(s));
  }
  {
    Section s("grid", find("grid"), defaulted);
    cfg.origin.x() = s.number("origin_x", cfg.origin.x());
    cfg.origin.y() = s.number("origin_y", cfg.origin.y());
    cfg.nx = s.count("nx", cfg.nx);
    cfg.ny = s.count("ny", cfg.ny);
    cfg.cell_size = s.number("cell_size", cfg.cell_size);
    cfg.levels = static_cast<int>(s.count("levels", static_cast<std::size_t>(cfg.levels)));
    checked.push_back(std::move(s));
  }
  {
    Section s("optimizer", find("optimizer"), defaulted);
    cfg.alpha = s.number("alpha", cfg.alpha);
    cfg.target_fraction = s.number("target_fraction", cfg.target_fraction);
    cfg.max_iterations = s.count("max_iterations", cfg.max_iterations);
    cfg.solver = s.choice("solver", cfg.solver, parse_solver_mode);
    cfg.protect_supports = s.flag("protect_supports", cfg.protect_supports);
    cfg.audit_stride = s.count("audit_stride", cfg.audit_stride);
    cfg.drift_tolerance = s.number("drift_tolerance", cfg.drift_tolerance);
    cfg.svd_rel_tol = s.number("svd_rel_tol", cfg.svd_rel_tol);
    cfg.shadow_check = s.flag("shadow_check", cfg.shadow_check);
    checked.push_back(std::move(s));
  }

  for (const auto& [name, sub] : sections) {
    if (name == "material" || name == "grid" || name == "optimizer") continue;
    const auto dot = name.find('.');
    const std::string kind = name.substr(0, dot);
    const std::string label = dot == std::string::npos ? "" : name.substr(dot + 1);
    if ((kind != "clamp" && kind != "load") || label.empty()) {
      throw Error("unknown section '" + name + "' (expected material, grid, optimizer, clamp.NAME or load.NAME)");
    }
    // Optional keys of BC sections are not reported as defaulted.
    Section s(name, sub, nullptr);
    if (kind == "clamp") {
      ClampSpec c;
      c.name = label;
      c.side = s.choice("side", c.side, parse_face);
      c.from = s.number("from", c.from);
      c.to = s.number("to", c.to);
      c.displacement.x() = s.number("ux", 0.0);
      c.displacement.y() = s.number("uy", 0.0);
      cfg.clamps.push_back(c);
    } else {
      LoadSpec l;
      l.name = label;
      l.type = s.choice("type", l.type, parse_load_type);
      l.side = s.choice("side", l.side, parse_face);
      l.corner = s.choice("corner", l.corner, parse_corner);
      l.from = s.number("from", l.from);
      l.to = s.number("to", l.to);
      l.value.x() = s.number("fx", 0.0);
      l.value.y() = s.number("fy", 0.0);
      cfg.loads.push_back(l);
    }
    checked.push_back(std::move(s));
  }
  for (const auto& s : checked) s.check_unknown();

  cfg.validate();
  return cfg;
}

OptimizationConfig load_config(const fs::path& path, std::vector<std::string>* defaulted) {
  std::ifstream in(path);
  if (!in) throw Error("cannot open config file " + path.string());
  try {
    return parse_config(in, defaulted);
  } catch (const Error& e) {
    throw Error(path.string() + ": " + e.what());
  }
}

void write_config(std::ostream& out, const OptimizationConfig& c) {
  out << "[material]\n"
      << "young_modulus = " << g17(c.material.young_modulus) << "\n"
      << "poisson_ratio = " << g17(c.material.poisson_ratio) << "\n\n"
      << "[grid]\n"
      << "origin_x = " << g17(c.origin.x()) << "\n"
      << "origin_y = " << g17(c.origin.y()) << "\n"
      << "nx = " << c.nx << "\n"
      << "ny = " << c.ny << "\n"
      << "cell_size = " << g17(c.cell_size) << "\n"
      << "levels = " << c.levels << "\n\n"
      << "[optimizer]\n"
      << "alpha = " << g17(c.alpha) << "\n"
      << "target_fraction = " << g17(c.target_fraction) << "\n"
      << "max_iterations = " << c.max_iterations << "\n"
      << "solver = " << to_string(c.solver) << "\n"
      << "protect_supports = " << (c.protect_supports ? "true" : "false") << "\n"
      << "audit_stride = " << c.audit_stride << "\n"
      << "drift_tolerance = " << g17(c.drift_tolerance) << "\n"
      << "svd_rel_tol = " << g17(c.svd_rel_tol) << "\n"
      << "shadow_check = " << (c.shadow_check ? "true" : "false") << "\n";
  for (const auto& cl : c.clamps) {
    out << "\n[clamp." << cl.name << "]\n"
        << "side = " << to_string(cl.side) << "\n"
        << "from = " << g17(cl.from) << "\n"
        << "to = " << g17(cl.to) << "\n"
        << "ux = " << g17(cl.displacement.x()) << "\n"
        << "uy = " << g17(cl.displacement.y()) << "\n";
  }
  for (const auto& l : c.loads) {
    out << "\n[load." << l.name << "]\n"
        << "type = " << to_string(l.type) << "\n"
        << "side = " << to_string(l.side) << "\n"
        << "corner = " << to_string(l.corner) << "\n"
        << "from = " << g17(l.from) << "\n"
        << "to = " << g17(l.to) << "\n"
        << "fx = " << g17(l.value.x()) << "\n"
        << "fy = " << g17(l.value.y()) << "\n";
  }
}

void ensure_writable(const fs::path& dir) {
  std::error_code ec;
  fs::create_directories(dir, ec);
  if (ec) throw Error("cannot create output directory " + dir.string() + ": " + ec.message());
  const fs::path probe = dir / ".write_probe";
  {
    std::ofstream out(probe);
    out << "ok";
    if (!out) throw Error("output directory " + dir.string() + " is not writable");
  }
  fs::remove(probe, ec);
}

std::string svg_snapshot(const CellGrid& grid, const BoundaryModel& model) {
  const double h = grid.cell_size();
  const double w = h * static_cast<double>(grid.nx());
  const double ht = h * static_cast<double>(grid.ny());
  const double x0 = grid.origin().x();
  const double y0 = grid.origin().y();
  const double pad = 0.05 * std::max(w, ht);
  const double px = 600.0 / (w + 2 * pad);
  // Flip y so the picture is upright.
  auto X = [&](double x) { return g9((x - x0 + pad) * px); };
  auto Y = [&](double y) { return g9((ht - (y - y0) + pad) * px); };

  std::ostringstream os;
  os << "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"" << g9((w + 2 * pad) * px) << "\" height=\""
     << g9((ht + 2 * pad) * px) << "\">\n";
  os << "<g stroke=\"none\">\n";
  for (std::size_t i = 0; i < grid.size(); ++i) {
    if (!grid.status(i)) continue;
    const auto c = grid.cell_center(i);
    os << "<rect x=\"" << X(c.x() - h / 2) << "\" y=\"" << Y(c.y() + h / 2) << "\" width=\"" << g9(h * px)
       << "\" height=\"" << g9(h * px) << "\" fill=\"" << (grid.is_protected(i) ? "#7a7a7a" : "#c8c8c8")
       << "\"/>\n";
  }
  os << "</g>\n<g stroke-width=\"" << g9(std::max(1.0, 0.12 * h * px)) << "\" stroke-linecap=\"round\">\n";
  for (const auto& e : model.elements) {
    const char* color = e.bc.is_dirichlet() ? "#1f4fd1" : (e.bc.is_homogeneous() ? "#000000" : "#d11f1f");
    os << "<line x1=\"" << X(e.start.x()) << "\" y1=\"" << Y(e.start.y()) << "\" x2=\"" << X(e.end.x())
       << "\" y2=\"" << Y(e.end.y()) << "\" stroke=\"" << color << "\"/>\n";
  }
  os << "</g>\n</svg>\n";
  return os.str();
}

std::string energy_table(const OptimizationState& st) {
  std::ostringstream os;
  os << "k,R,E,E/E0,n_s,n_a,n_r,t_solve,t_td,t_remesh,t_update,t_assemble,t_audit,n_samples,n_evaluations,"
        "d_min,d_max,cutoff,drift,refreshed,regularized\n";
  for (const auto& r : st.history) {
    os << r.k << ',' << g17(r.R) << ',' << g17(r.E) << ',' << g17(r.E / st.E0) << ',' << r.n_s << ',' << r.n_a
       << ',' << r.n_r << ',' << g9(r.t_solve) << ',' << g9(r.t_td) << ',' << g9(r.t_remesh) << ','
       << g9(r.t_update) << ',' << g9(r.t_assemble) << ',' << g9(r.t_audit) << ',' << r.n_samples << ','
       << r.n_evaluations << ',' << g17(r.d_min) << ',' << g17(r.d_max) << ',' << g17(r.cutoff) << ','
       << g9(r.drift) << ',' << int(r.refreshed) << ',' << int(r.regularized) << '\n';
  }
  return os.str();
}

PhaseTotals phase_totals(const OptimizationState& st) {
  PhaseTotals t;
  for (const auto& r : st.history) {
    t.solve += r.t_solve;
    t.td += r.t_td;
    t.remesh += r.t_remesh;
    t.assemble += r.t_assemble;
    t.update += r.t_update;
    t.audit += r.t_audit;
  }
  return t;
}

RunArtifacts emit_artifacts(const OptimizationState& st, const OptimizationConfig& cfg, const fs::path& outdir,
                            const RunInfo& info) {
  ensure_writable(outdir);
  RunArtifacts a;
  a.dir = outdir;

  const BcAssigner assign = make_bc_assigner(cfg, initial_grid(cfg));
  for (const auto& r : st.history) {
    char name[32];
    std::snprintf(name, sizeof name, "iter_%03zu.svg", r.k);
    a.snapshots.push_back(outdir / name);
    write_file(a.snapshots.back(), svg_snapshot(r.grid, generate_boundary(r.grid, assign)));
  }

  a.energy_table = outdir / "energy.csv";
  write_file(a.energy_table, energy_table(st));

  a.config_echo = outdir / "config.ini";
  {
    std::ostringstream os;
    write_config(os, cfg);
    write_file(a.config_echo, os.str());
  }

  a.timing = outdir / "timing.json";
  {
    json t;
    t["solver"] = to_string(cfg.solver);
    t["totals"] = to_json(phase_totals(st));
    json rows = json::array();
    for (const auto& r : st.history) {
      rows.push_back({{"k", r.k},
                      {"n_s", r.n_s},
                      {"n_a", r.n_a},
                      {"n_r", r.n_r},
                      {"t_solve", r.t_solve},
                      {"t_td", r.t_td},
                      {"t_remesh", r.t_remesh},
                      {"t_assemble", r.t_assemble},
                      {"t_update", r.t_update},
                      {"t_audit", r.t_audit}});
    }
    t["iterations"] = rows;
    write_file(a.timing, t.dump(2) + "\n");
  }

  a.manifest = outdir / "manifest.json";
  {
    json m;
    m["program"] = "bemtopo";
    m["version"] = BEMTOPO_VERSION;
    m["eigen_version"] = std::to_string(EIGEN_WORLD_VERSION) + "." + std::to_string(EIGEN_MAJOR_VERSION) + "." +
                         std::to_string(EIGEN_MINOR_VERSION);
    m["compiler"] = __VERSION__;
    m["config_source"] = info.config_source;
    m["config"] = a.config_echo.filename().string();
    m["defaults_applied"] = info.defaulted;
    m["overrides"] = info.overrides;
    m["termination"] = to_string(st.termination);
    m["message"] = st.message;
    m["iterations"] = st.history.size();
    m["final"] = {{"R", st.R}, {"E", st.E}, {"E0", st.E0}, {"material_cells", st.grid.material_count()}};
    m["energy_table"] = a.energy_table.filename().string();
    m["timing"] = a.timing.filename().string();
    json snaps = json::array();
    for (const auto& p : a.snapshots) snaps.push_back(p.filename().string());
    m["snapshots"] = snaps;
    write_file(a.manifest, m.dump(2) + "\n");
  }
  return a;
}

BenchmarkResult benchmark_mode(const OptimizationConfig& config, const fs::path& outdir, const RunInfo& info) {
  ensure_writable(outdir / "lu");
  ensure_writable(outdir / "block");

  BenchmarkResult b;
  OptimizationConfig lu_cfg = config;
  lu_cfg.solver = SolverMode::FullLU;
  OptimizationConfig block_cfg = config;
  block_cfg.solver = SolverMode::Blockwise;

  b.lu = run(lu_cfg);
  b.lu_artifacts = emit_artifacts(b.lu, lu_cfg, outdir / "lu", info);
  b.block = run(block_cfg);
  b.block_artifacts = emit_artifacts(b.block, block_cfg, outdir / "block", info);

  b.identical = b.lu.history.size() == b.block.history.size() && same_statuses(b.lu.grid, b.block.grid);
  for (std::size_t i = 0; b.identical && i < b.lu.history.size(); ++i) {
    b.identical = same_statuses(b.lu.history[i].grid, b.block.history[i].grid);
  }

  const PhaseTotals lu = phase_totals(b.lu);
  const PhaseTotals bl = phase_totals(b.block);
  std::size_t peak = 0;
  json rows = json::array();
  for (std::size_t i = 0; i < std::min(b.lu.history.size(), b.block.history.size()); ++i) {
    const auto& l = b.lu.history[i];
    const auto& k = b.block.history[i];
    peak = std::max(peak, k.n_s);
    rows.push_back({{"k", l.k},
                    {"n_s", k.n_s},
                    {"n_a", k.n_a},
                    {"n_r", k.n_r},
                    {"lu_factor", l.t_update + l.t_solve},
                    {"block_update", k.t_update + k.t_solve},
                    {"block_refreshed", k.refreshed}});
  }
  const double lu_total = lu.update + lu.solve;
  const double block_total = bl.update + bl.solve;

  json report;
  report["topology_identical"] = b.identical;
  report["iterations"] = {{"lu", b.lu.history.size()}, {"block", b.block.history.size()}};
  report["peak_elements"] = peak;
  report["lu"] = to_json(lu);
  report["block"] = to_json(bl);
  report["lu_factor_and_solve_total"] = lu_total;
  report["block_update_and_solve_total"] = block_total;
  report["ratio"] = lu_total > 0.0 ? block_total / lu_total : 0.0;
  report["per_iteration"] = rows;
  b.report = outdir / "timing.json";
  write_file(b.report, report.dump(2) + "\n");
  return b;
}

}  // namespace bemtopo
