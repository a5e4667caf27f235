#pragma once

#include <functional>

#include "optimus.hpp"
#include "trajectory.hpp"

namespace optlab::baselines {

using optimus::RunOptions;

// Adam with bias correction: dx = -lr * mhat / (sqrt(vhat) + eps).
struct AdamState {
  Vec m, v;
  std::int64_t t = 0;
  double lr;
  double beta1 = 0.9, beta2 = 0.999, eps = 1e-8;

  static AdamState init(int n, double lr);
};
Vec adam_step(AdamState& s, const Vec& grad);

// Heavy-ball: velocity <- mu * velocity + grad; dx = -lr * velocity.
struct GdmState {
  Vec velocity;
  double lr;
  double mu = 0.9;

  static GdmState init(int n, double lr);
};
Vec gdm_step(GdmState& s, const Vec& grad);

// ---------------------------------------------------------------------------
// BFGS with a strong-Wolfe line search (c1 = 1e-4, c2 = 0.9, cubic zoom).

struct BfgsOptions {
  double c1 = 1e-4;
  double c2 = 0.9;
  int max_trials = 20;      // line-search trial evaluations
  double curvature_floor = 1e-10;  // skip H update when y's <= this
  double fallback_scale = 1e-8;    // step on line-search failure
};

struct BfgsState {
  Mat h_inv;   // inverse-Hessian approximation
  Vec x;
  Vec grad;
  double f = 0.0;
  std::int64_t func_evals = 0;  // every point evaluation, trials included
  int line_search_failures = 0;

  static BfgsState init(const Vec& x0);
};

using ValueFn = std::function<double(const Vec&)>;
using GradFn = std::function<Vec(const Vec&)>;

struct LineSearchResult {
  bool ok = false;
  double alpha = 0.0;
  double f = 0.0;
  Vec x;
  Vec grad;
  int evals = 0;
};

// Strong Wolfe conditions on phi(a) = f(x + a p); p must be a descent
// direction. Counts one eval per trial point (value and gradient together).
LineSearchResult strong_wolfe_search(const ValueFn& value, const GradFn& grad,
                                     const Vec& x, const Vec& p, double f0,
                                     const Vec& g0, const BfgsOptions& opts);

// One BFGS iteration: line search along -H g, inverse-Hessian update with
// the curvature skip, tiny fallback step if the search fails. Requires
// state.f/state.grad to be current; returns evals consumed.
int bfgs_step(BfgsState& s, const ValueFn& value, const GradFn& grad,
              const BfgsOptions& opts = BfgsOptions());

// Full loops used by the evaluation harness. All record one loss per
// iteration; BFGS additionally tracks true cumulative evaluations.
Trajectory run_adam(const testfuncs::ObjectiveInstance& inst, const Vec& x0,
                    double lr, const RunOptions& opts);
Trajectory run_gdm(const testfuncs::ObjectiveInstance& inst, const Vec& x0,
                   double lr, const RunOptions& opts);
Trajectory run_bfgs(const testfuncs::ObjectiveInstance& inst, const Vec& x0,
                    const RunOptions& opts,
                    const BfgsOptions& bopts = BfgsOptions());

// ---------------------------------------------------------------------------
// Learning-rate tuning: `grid_size` log-spaced rates spanning [lo, hi]
// (endpoints exact), each scored by the mean final loss of `inits` seeded
// runs of `budget_iters` iterations; non-finite runs score +inf.

struct TuneResult {
  std::vector<double> grid;
  std::vector<double> mean_final_loss;
  double best_lr = 0.0;
  int best_index = -1;
  bool any_finite = false;
};

std::vector<double> log_spaced_grid(double lo, double hi, int n);

// run_for_rate(lr, init_index) -> final loss of that run.
TuneResult tune_learning_rate(
    const std::function<double(double, int)>& run_for_rate, int inits,
    double lo = 1e-6, double hi = 1.0, int grid_size = 100, int jobs = 1);

// ---------------------------------------------------------------------------
// Basin hopping: run the inner solver to its stopping point, Gaussian-pertub
// the best-ever iterate (per-coordinate sigma = perturb_scale), repeat.
// Trajectories are concatenated; the best-ever iterate is carried across hops.

struct InnerRun {
  Trajectory traj;
  Vec best_x;      // iterate attaining the best loss of this run
  double best_f = 0.0;
};

struct BasinHoppingResult {
  Trajectory trajectory;  // concatenated curve
  Vec best_x;
  double best_f = 0.0;
  int hops_done = 0;
};

using InnerRunFn = std::function<InnerRun(const Vec& x0)>;

BasinHoppingResult basin_hopping(const InnerRunFn& run_inner, const Vec& x0,
                                 double perturb_scale, int hops, Rng& rng);

}  // namespace optlab::baselines
