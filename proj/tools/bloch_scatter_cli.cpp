// bloch_scatter: solve, analyze and verify subcommands.
#include <iostream>
#include <optional>
#include <string>

#include <CLI11.hpp>

#include "bloch_scatter/error.hpp"
#include "bloch_scatter/parallel.hpp"
#include "bloch_scatter/run.hpp"
#include "bloch_scatter/verify.hpp"

using namespace bloch_scatter;

int main(int argc, char** argv) {
  CLI::App app{"Scattering from locally perturbed periodic surfaces"};
  app.require_subcommand(1);

  std::string config_path, out_dir = "out", grid_mode, solver;
  int threads = 0, M = 0;
  auto add_common = [&](CLI::App* sub) {
    sub->add_option("--config", config_path, "run configuration (JSON)")->required();
    sub->add_option("--out", out_dir, "output directory");
    sub->add_option("--grid-mode", grid_mode, "override grid mode")->check(CLI::IsMember({"uniform", "graded"}));
    sub->add_option("--M", M, "override the number of alpha nodes");
    sub->add_option("--solver", solver, "override the coupled solver")->check(CLI::IsMember({"schur", "fixedpoint"}));
  };
  app.add_option("--threads", threads, "worker threads (falls back to BLOCH_SCATTER_THREADS)");
  CLI::App* solve = app.add_subcommand("solve", "solve one scattering problem");
  CLI::App* analyze = app.add_subcommand("analyze", "sample and fit the alpha dependence near anomalies");
  CLI::App* verify = app.add_subcommand("verify", "run the property suite");
  add_common(solve);
  add_common(analyze);
  for (auto* sub : {solve, analyze, verify}) sub->add_option("--threads", threads, "worker threads");

  CLI11_PARSE(app, argc, argv);

  try {
    const int nthreads = resolve_threads(threads);
    if (verify->parsed()) {
      auto results = run_properties({}, nthreads);
      return report_properties(results, std::cout) ? 0 : 1;
    }
    RunConfig cfg = load_config(config_path);
    RunOverrides ov;
    ov.threads = nthreads;
    if (!grid_mode.empty()) ov.grid_mode = grid_mode == "uniform" ? GridMode::uniform : GridMode::graded;
    if (M != 0) ov.M = M;
    if (!solver.empty()) ov.solver = solver == "schur" ? CoupledPath::schur : CoupledPath::fixedpoint;
    apply_overrides(cfg, ov);
    if (solve->parsed()) {
      auto man = cmd_solve(cfg, out_dir, nthreads);
      std::cout << man.dump(2) << '\n';
    } else {
      auto rep = cmd_analyze(cfg, out_dir, nthreads);
      std::cout << rep.dump(2) << '\n';
    }
  } catch (const Error& e) {
    std::cerr << error_record(e) << '\n';
    return 2;
  } catch (const std::exception& e) {
    std::cerr << error_record("cli", "run", e.what()) << '\n';
    return 2;
  }
  return 0;
}
