#pragma once

#include <cstdint>
#include <optional>
#include <string>

#include "baselines.hpp"
#include "optimus.hpp"

namespace optlab::runner {

// One solver entry of an evaluation battery. `name` selects the algorithm;
// `label` names it in result files (defaults to name).
struct SolverSpec {
  std::string name;  // optimus | adafactor_mlp | adam | gdm | bfgs | basin_hopping
  std::string label;
  double lr = 0.01;        // adam / gdm (and basin-hopping inner when first-order)
  std::string checkpoint;  // learned solvers
  int hops = 4;            // basin hopping
  double perturb_scale = 0.0;  // 0 -> 5% of the domain box width
  std::string inner = "bfgs";  // basin-hopping inner solver

  std::string out_label() const { return label.empty() ? name : label; }
};

bool is_known_solver(const std::string& name);
bool solver_needs_checkpoint(const std::string& name);

// Solver with its checkpoint resolved (loaded once per battery).
struct LoadedSolver {
  SolverSpec spec;
  std::optional<nnet::OptimizerParams> params;
};
LoadedSolver load_solver(const SolverSpec& spec);

// Deterministic problem cell: offset instance + start point, a pure function
// of (master_seed, function, dim, seed_index). Shared by tuning, evaluation,
// and the acceptance battery so their seed batteries match.
struct SeededTask {
  testfuncs::ObjectiveInstance inst;
  Vec x0;
};
SeededTask seeded_task(std::uint64_t master_seed, testfuncs::FunctionId fn,
                       int dim, int seed_index, bool offsets = true);

// Run one solver on one cell. run_seed feeds solver-internal randomness
// (basin-hopping perturbations); record_geometry keeps iterates and steps
// for direction analysis.
Trajectory run_one(const LoadedSolver& solver,
                   const testfuncs::ObjectiveInstance& inst, const Vec& x0,
                   const optimus::StopConfig& stop, std::uint64_t run_seed,
                   bool record_geometry = false);

}  // namespace optlab::runner
