#pragma once

#include <span>

#include "features.hpp"
#include "nnet.hpp"
#include "trajectory.hpp"

namespace optlab::optimus {

using nnet::OptimizerParams;
using nnet::StepConfig;

// Value-based stopping rule: stop when the current loss exceeds
// beta * mean(previous `window` losses) + epsilon. Not applied until
// `window` previous losses exist.
struct StopConfig {
  int window = 5;        // N_s
  double beta = 1.0;
  double epsilon = 1e-8;
  int max_iters = 200;
};

// losses = recorded values f(x^0..x^k), current last.
bool should_stop(std::span<const double> losses, const StopConfig& cfg);

// Per-trajectory optimizer state: the iterate, the feature accumulators, and
// the preconditioner (identity at start, unit Frobenius norm after the first
// update, symmetric PSD throughout).
struct InnerState {
  Vec x;
  features::FeatureState feat;
  Mat precond;

  static InnerState init(const Vec& x0);
};

// s = lambda_a * exp(lambda_b * alpha) .* d, with (alpha, d) the two output
// columns of the update MLP.
Vec direction_branch(const StepConfig& cfg, const Mat& mlp_out);

// B' = (B + sum_l u_l u_l^T) / ||B + sum_l u_l u_l^T||_F
Mat precondition_update(const Mat& b, const std::vector<Vec>& us);

// One full update: refresh accumulators with grad, build features, run both
// network branches, update the preconditioner, and return dx = B' s.
// Mutates state (x is NOT advanced; callers apply dx).
Vec optimus_step(const OptimizerParams& params, InnerState& state,
                 const Vec& grad);

// Like optimus_step but without the preconditioner path: dx = s.
Vec adafactor_mlp_step(const OptimizerParams& params, InnerState& state,
                       const Vec& grad);

struct RunOptions {
  StopConfig stop;
  bool use_value_rule = true;  // unrolled meta-training disables this
  bool record_iterates = false;
  bool record_steps = false;
};

// Full optimization loop: x <- x + dx until the stop rule or max_iters.
// One objective evaluation (value + gradient) per iteration plus the initial
// one; non-finite anywhere ends the run with Termination::Error.
Trajectory run(const OptimizerParams& params,
               const testfuncs::ObjectiveInstance& inst, const Vec& x0,
               const RunOptions& opts, bool use_preconditioner = true);

}  // namespace optlab::optimus
