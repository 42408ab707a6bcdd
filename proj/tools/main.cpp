#include <cstdio>
#include <iostream>

#include "CLI11.hpp"
#include "bemtopo/cli.hpp"

using namespace bemtopo;

namespace {

void print_summary(const OptimizationState& st) {
  std::printf("%s after %zu iterations: R = %.4f, E/E0 = %.4f\n", to_string(st.termination).c_str(),
              st.history.size(), st.R, st.E0 > 0.0 ? st.E / st.E0 : 0.0);
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Boundary-element topology optimization by topological derivatives"};
  app.require_subcommand(1);

  auto* run_cmd = app.add_subcommand("run", "Run an optimization described by an INI file");
  std::string config_path;
  std::string outdir;
  std::string solver;
  int levels = 0;
  std::size_t max_iter = 0;
  unsigned long seed = 0;
  bool benchmark = false;
  run_cmd->add_option("config", config_path, "Run description (INI)")->required()->check(CLI::ExistingFile);
  run_cmd->add_option("--out", outdir, "Output directory")->required();
  run_cmd->add_option("--solver", solver, "lu or block")->check(CLI::IsMember({"lu", "block"}));
  run_cmd->add_flag("--benchmark", benchmark, "Run with full LU and with blockwise updates and compare");
  run_cmd->add_option("--levels", levels, "Quadtree levels (1 = uniform sampling)")->check(CLI::Range(1, 8));
  run_cmd->add_option("--max-iter", max_iter, "Iteration limit")->check(CLI::PositiveNumber);
  run_cmd->add_option("--seed", seed, "Accepted for reproducibility records; the pipeline is deterministic");

  CLI11_PARSE(app, argc, argv);

  RunInfo info;
  OptimizationConfig cfg;
  try {
    info.config_source = config_path;
    cfg = load_config(config_path, &info.defaulted);
    if (!solver.empty()) {
      cfg.solver = parse_solver_mode(solver);
      info.overrides.push_back("optimizer.solver=" + solver);
    }
    if (levels > 0) {
      cfg.levels = levels;
      info.overrides.push_back("grid.levels=" + std::to_string(levels));
    }
    if (max_iter > 0) {
      cfg.max_iterations = max_iter;
      info.overrides.push_back("optimizer.max_iterations=" + std::to_string(max_iter));
    }
    if (run_cmd->count("--seed") > 0) info.overrides.push_back("seed=" + std::to_string(seed));
    cfg.validate();
    ensure_writable(outdir);
  } catch (const Error& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  }

  try {
    if (benchmark) {
      const auto b = benchmark_mode(cfg, outdir, info);
      std::printf("lu:    ");
      print_summary(b.lu);
      std::printf("block: ");
      print_summary(b.block);
      const auto lu = phase_totals(b.lu);
      const auto bl = phase_totals(b.block);
      std::printf("factor/update time: lu %.3f s, block %.3f s; topology %s\n", lu.update + lu.solve,
                  bl.update + bl.solve, b.identical ? "identical" : "DIFFERS");
      return b.identical ? 0 : 3;
    }
    const auto st = run(cfg);
    emit_artifacts(st, cfg, outdir, info);
    print_summary(st);
    return 0;
  } catch (const OptimizationError& e) {
    std::cerr << "error: " << e.what() << "\n";
    try {
      emit_artifacts(e.state, cfg, outdir, info);
      std::cerr << "partial results written to " << outdir << "\n";
    } catch (const Error& inner) {
      std::cerr << "error: could not write partial results: " << inner.what() << "\n";
    }
    return 2;
  } catch (const Error& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 2;
  }
}
