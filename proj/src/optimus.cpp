#include "optimus.hpp"

#include <cmath>

#include "status.hpp"

namespace optlab::optimus {

bool should_stop(std::span<const double> losses, const StopConfig& cfg) {
  require(cfg.window >= 1, Status::ArgumentError, "stop: window must be >= 1");
  const int n = int(losses.size());
  if (n < cfg.window + 1) return false;  // warm-up: need `window` prior losses
  double mean = 0.0;
  for (int i = n - 1 - cfg.window; i < n - 1; ++i) mean += losses[i];
  mean /= double(cfg.window);
  return losses[n - 1] > cfg.beta * mean + cfg.epsilon;
}

InnerState InnerState::init(const Vec& x0) {
  require(x0.size() >= 1, Status::ArgumentError, "inner state: empty x0");
  InnerState s;
  s.x = x0;
  s.feat = features::FeatureState::init(int(x0.size()));
  s.precond = Mat::Identity(x0.size(), x0.size());
  return s;
}

Vec direction_branch(const StepConfig& cfg, const Mat& mlp_out) {
  require(mlp_out.cols() == 2, Status::ArgumentError,
          "direction branch: expected 2 output columns");
  return cfg.lambda_a *
         (cfg.lambda_b * mlp_out.col(0).array()).exp() *
         mlp_out.col(1).array();
}

Mat precondition_update(const Mat& b, const std::vector<Vec>& us) {
  require(b.rows() == b.cols(), Status::ArgumentError,
          "precondition: B must be square");
  Mat bt = b;
  for (const Vec& u : us) {
    require(u.size() == b.rows(), Status::ArgumentError,
            "precondition: u size mismatch");
    bt.noalias() += u * u.transpose();
  }
  const double norm = bt.norm();  // Frobenius
  require(std::isfinite(norm) && norm > 0.0, Status::NumericError,
          "precondition: non-finite or zero norm");
  return bt / norm;
}

namespace {

// Cheap release-mode audit of the preconditioner invariants, sampled every
// 64 updates; debug builds check every update.
void audit_precond(const Mat& b, std::int64_t step) {
#ifdef NDEBUG
  if (step % 64 != 1) return;
#endif
  const double asym = (b - b.transpose()).cwiseAbs().maxCoeff();
  require(asym <= 1e-10, Status::NumericError, "precondition: asymmetry");
  require(std::abs(b.norm() - 1.0) <= 1e-9, Status::NumericError,
          "precondition: norm drift");
}

Mat features_for_step(const OptimizerParams& params, InnerState& state,
                      const Vec& grad) {
  require(state.x.size() == grad.size(), Status::ArgumentError,
          "step: grad/x size mismatch");
  features::update_feature_state(state.feat, grad);
  Mat z = features::compute_features(state.feat, state.x, grad, state.feat.k);
  require(z.cols() == params.arch.feature_count, Status::ArgumentError,
          "step: arch feature_count does not match pipeline");
  return z;
}

}  // namespace

Vec optimus_step(const OptimizerParams& params, InnerState& state,
                 const Vec& grad) {
  const Mat z = features_for_step(params, state, grad);
  const Vec s = direction_branch(params.hyper, mlp_forward(params.mlp, z));
  const std::vector<Vec> us = encoder_stack_forward(params.encoders, z);
  state.precond = precondition_update(state.precond, us);
  audit_precond(state.precond, state.feat.k);
  return state.precond * s;
}

Vec adafactor_mlp_step(const OptimizerParams& params, InnerState& state,
                       const Vec& grad) {
  const Mat z = features_for_step(params, state, grad);
  return direction_branch(params.hyper, mlp_forward(params.mlp, z));
}

Trajectory run(const OptimizerParams& params,
               const testfuncs::ObjectiveInstance& inst, const Vec& x0,
               const RunOptions& opts, bool use_preconditioner) {
  require(int(x0.size()) == inst.dim(), Status::ArgumentError,
          "run: x0 dimension mismatch");
  Trajectory traj;
  if (!x0.allFinite()) {
    traj.terminated_by = Termination::Error;
    return traj;
  }
  InnerState state = InnerState::init(x0);
  const double f0 = inst.value(x0);
  traj.func_evals = 1;
  if (!std::isfinite(f0)) {  // keep recorded losses JSON-safe (finite)
    traj.terminated_by = Termination::Error;
    return traj;
  }
  traj.losses.push_back(f0);
  traj.evals_cum.push_back(1);
  if (opts.record_iterates) traj.iterates.push_back(x0);

  for (int iter = 0; iter < opts.stop.max_iters; ++iter) {
    const Vec grad = inst.gradient(state.x);
    if (!grad.allFinite()) {
      traj.terminated_by = Termination::Error;
      return traj;
    }
    const Vec dx = use_preconditioner ? optimus_step(params, state, grad)
                                      : adafactor_mlp_step(params, state, grad);
    if (!dx.allFinite()) {
      traj.terminated_by = Termination::Error;
      return traj;
    }
    state.x += dx;
    if (!state.x.allFinite()) {
      traj.terminated_by = Termination::Error;
      return traj;
    }
    const double loss = inst.value(state.x);
    if (!std::isfinite(loss)) {
      traj.terminated_by = Termination::Error;
      return traj;
    }
    traj.losses.push_back(loss);
    traj.func_evals += 1;
    traj.evals_cum.push_back(traj.func_evals);
    if (opts.record_iterates) traj.iterates.push_back(state.x);
    if (opts.record_steps) traj.steps.push_back(dx);
    if (opts.use_value_rule && should_stop(traj.losses, opts.stop)) {
      traj.terminated_by = Termination::Stopped;
      return traj;
    }
  }
  traj.terminated_by = Termination::MaxIters;
  return traj;
}

}  // namespace optlab::optimus
