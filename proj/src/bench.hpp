#pragma once

#include <functional>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include "testfuncs.hpp"
#include "trajectory.hpp"

namespace optlab::bench {

// Normalized regret of a solver on one problem:
//   m = (f_hat - f_star) / (f_worst - f_star), in [0, 1].
// All solvers at the optimum (f_worst == f_star up to slack) score 0; a
// non-finite f_hat scores 1. Ordering violated beyond the scale-aware slack
// (1e-9 + 1e-12 |f_star|) is a data error.
double performance_measure(double f_hat, double f_star, double f_worst);

// Per-problem performance ratios r = m / max(min_solver m, 1e-12), with the
// (tied-)best solvers pinned to exactly 1. measures is problems x solvers.
Mat performance_ratios(const Mat& measures);

struct ProfileResult {
  std::vector<double> t_grid;        // thresholds >= 1, ascending
  std::vector<std::string> solvers;  // column order
  Mat rho;                           // t_grid.size() x solvers: fraction r <= t
};

ProfileResult performance_profile(const Mat& measures,
                                  const std::vector<std::string>& solvers,
                                  const std::vector<double>& t_grid);

// The exact breakpoints of the profile step functions: sorted unique finite
// ratios (always starting at 1).
std::vector<double> default_t_grid(const Mat& ratios);

// Cumulative minimum of a loss curve.
std::vector<double> best_so_far(std::span<const double> losses);

// Mean best-so-far curve over several runs; shorter runs hold their final
// best value (a stopped optimizer keeps its best iterate).
std::vector<double> mean_best_so_far(const std::vector<std::vector<double>>& curves);

// How many times faster the candidate reaches the baseline's level:
//   target  = baseline best-so-far at iteration base_budget (or its last);
//   i_base  = first iteration the baseline is <= target  (clamped >= 1);
//   i_opt   = first iteration the candidate is <= target (clamped >= 1);
//   ratio   = i_base / i_opt, or 0 when the candidate never reaches it.
// Curves are best-so-far losses indexed by iteration (entry 0 = start).
struct RelIterResult {
  double ratio = 0.0;
  int i_opt = -1;  // -1 when unreached
  int i_base = 1;
  bool reached = false;
};
RelIterResult relative_iterations(std::span<const double> opt_curve,
                                  std::span<const double> base_curve,
                                  int base_budget = 100);

// Absolute cosine similarity of a step against the steepest-descent and
// Newton directions at the same point. The Hessian is regularized by
// 1e-8 I when not invertible. Zero-norm dx or grad is an argument error
// (callers skip those samples).
std::pair<double, double> direction_similarity(const Vec& dx, const Vec& grad,
                                               const Mat& hess);

// Per-iteration mean |cos| over a batch of trajectories (which must carry
// iterates and steps) against the analytic directions of their objective
// instances. insts must have one entry per trajectory, or exactly one entry
// shared by all.
struct DirectionStats {
  std::vector<double> mean_cos_grad;
  std::vector<double> mean_cos_newton;
  std::vector<int> samples;  // contributing (trajectory, iteration) pairs
};
DirectionStats direction_analysis(
    const std::vector<Trajectory>& trajs,
    const std::vector<testfuncs::ObjectiveInstance>& insts);

// Median wall seconds of one optimizer step per dimension. make_stepper(dim)
// returns a thunk performing one step on persistent state; `warmup` calls are
// discarded before `reps` timed ones.
struct RuntimeRow {
  int dim;
  double median_seconds;
};
std::vector<RuntimeRow> runtime_scaling(
    const std::function<std::function<void()>(int)>& make_stepper,
    const std::vector<int>& dims, int reps, int warmup = 3);

}  // namespace optlab::bench
