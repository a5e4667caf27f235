#include "runner.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

#include "status.hpp"

namespace optlab::runner {

namespace {

constexpr std::uint64_t kOffsetStream = 0;
constexpr std::uint64_t kInitStream = 1;

// Best iterate of a run that recorded its iterates. A run that errored before
// recording anything falls back to its start point at +infinity.
void extract_best(const Trajectory& traj, const Vec& start,
                  baselines::InnerRun& out) {
  require(traj.iterates.size() == traj.losses.size(), Status::InternalError,
          "inner run did not record iterates");
  if (traj.losses.empty()) {
    out.best_f = std::numeric_limits<double>::infinity();
    out.best_x = start;
    return;
  }
  std::size_t best = 0;
  for (std::size_t i = 1; i < traj.losses.size(); ++i) {
    if (traj.losses[i] < traj.losses[best]) best = i;
  }
  out.best_f = traj.losses[best];
  out.best_x = traj.iterates[best];
}

}  // namespace

bool is_known_solver(const std::string& name) {
  return name == "optimus" || name == "adafactor_mlp" || name == "adam" ||
         name == "gdm" || name == "bfgs" || name == "basin_hopping";
}

bool solver_needs_checkpoint(const std::string& name) {
  return name == "optimus" || name == "adafactor_mlp";
}

LoadedSolver load_solver(const SolverSpec& spec) {
  require(is_known_solver(spec.name), Status::ConfigError,
          "unknown solver: " + spec.name);
  LoadedSolver out;
  out.spec = spec;
  bool learned = solver_needs_checkpoint(spec.name) ||
                 (spec.name == "basin_hopping" &&
                  solver_needs_checkpoint(spec.inner));
  if (learned) {
    require(!spec.checkpoint.empty(), Status::ConfigError,
            "solver " + spec.name + " requires a checkpoint path");
    out.params = nnet::OptimizerParams::load(spec.checkpoint);
  }
  if (spec.name == "basin_hopping") {
    require(is_known_solver(spec.inner) && spec.inner != "basin_hopping",
            Status::ConfigError,
            "basin_hopping inner solver must be a non-nested solver");
    require(spec.hops >= 1, Status::ConfigError,
            "basin_hopping hops must be >= 1");
  }
  if (spec.name == "adam" || spec.name == "gdm") {
    require(spec.lr > 0.0, Status::ConfigError,
            "solver " + spec.name + " requires a positive learning rate");
  }
  return out;
}

SeededTask seeded_task(std::uint64_t master_seed, testfuncs::FunctionId fn,
                       int dim, int seed_index, bool offsets) {
  const std::uint64_t cell = mix_seed(
      mix_seed(mix_seed(master_seed, std::uint64_t(fn)), std::uint64_t(dim)),
      std::uint64_t(seed_index));
  const int eff = testfuncs::effective_dim(fn, dim);
  Vec offset;
  if (offsets) {
    const testfuncs::DomainBox box = testfuncs::domain_box(fn, eff);
    Rng orng(mix_seed(cell, kOffsetStream));
    offset.resize(eff);
    for (int i = 0; i < eff; ++i) offset[i] = orng.uniform(box.lo, box.hi);
  }
  testfuncs::ObjectiveInstance inst(fn, dim, offset);
  Rng xrng(mix_seed(cell, kInitStream));
  Vec x0 = inst.sample_x0(xrng);
  return SeededTask{std::move(inst), std::move(x0)};
}

Trajectory run_one(const LoadedSolver& solver,
                   const testfuncs::ObjectiveInstance& inst, const Vec& x0,
                   const optimus::StopConfig& stop, std::uint64_t run_seed,
                   bool record_geometry) {
  optimus::RunOptions opts;
  opts.stop = stop;
  opts.use_value_rule = true;
  opts.record_iterates = record_geometry;
  opts.record_steps = record_geometry;

  const std::string& name = solver.spec.name;
  if (name == "optimus" || name == "adafactor_mlp") {
    require(solver.params.has_value(), Status::InternalError,
            "learned solver has no parameters loaded");
    return optimus::run(*solver.params, inst, x0, opts, name == "optimus");
  }
  if (name == "adam") return baselines::run_adam(inst, x0, solver.spec.lr, opts);
  if (name == "gdm") return baselines::run_gdm(inst, x0, solver.spec.lr, opts);
  if (name == "bfgs") return baselines::run_bfgs(inst, x0, opts);

  require(name == "basin_hopping", Status::InternalError,
          "unhandled solver: " + name);
  LoadedSolver inner;
  inner.spec = solver.spec;
  inner.spec.name = solver.spec.inner;
  inner.params = solver.params;
  optimus::StopConfig inner_stop = stop;
  baselines::InnerRunFn run_inner = [&](const Vec& start) {
    baselines::InnerRun res;
    // Inner runs always record iterates so the best-ever point can be carried
    // across hops; the concatenated output drops them.
    res.traj = run_one(inner, inst, start, inner_stop, 0, true);
    extract_best(res.traj, start, res);
    if (!record_geometry) {
      res.traj.iterates.clear();
      res.traj.steps.clear();
    }
    return res;
  };
  double scale = solver.spec.perturb_scale;
  if (scale <= 0.0) scale = 0.05 * inst.box().width();
  Rng rng(mix_seed(run_seed, 0x62686f70u));  // basin-hopping stream
  baselines::BasinHoppingResult bh = baselines::basin_hopping(
      run_inner, x0, scale, solver.spec.hops, rng);
  // The concatenated trajectory spans several restarts; per-iterate geometry
  // is only meaningful within one, so it is never exposed here.
  bh.trajectory.iterates.clear();
  bh.trajectory.steps.clear();
  return bh.trajectory;
}

}  // namespace optlab::runner
