#include "baselines.hpp"

#include <cmath>

#include "status.hpp"
#include "workpool.hpp"

namespace optlab::baselines {

AdamState AdamState::init(int n, double lr) {
  require(n >= 1, Status::ArgumentError, "adam: n must be >= 1");
  require(lr > 0.0 && std::isfinite(lr), Status::ArgumentError,
          "adam: lr must be positive");
  AdamState s;
  s.m = Vec::Zero(n);
  s.v = Vec::Zero(n);
  s.lr = lr;
  return s;
}

Vec adam_step(AdamState& s, const Vec& grad) {
  require(grad.size() == s.m.size(), Status::ArgumentError,
          "adam: grad size mismatch");
  s.t += 1;
  s.m = s.beta1 * s.m + (1.0 - s.beta1) * grad;
  s.v = s.beta2 * s.v + (1.0 - s.beta2) * grad.array().square().matrix();
  const double bc1 = 1.0 - std::pow(s.beta1, double(s.t));
  const double bc2 = 1.0 - std::pow(s.beta2, double(s.t));
  const Vec mhat = s.m / bc1;
  const Vec vhat = s.v / bc2;
  return (-s.lr * mhat.array() / (vhat.array().sqrt() + s.eps)).matrix();
}

GdmState GdmState::init(int n, double lr) {
  require(n >= 1, Status::ArgumentError, "gdm: n must be >= 1");
  require(lr > 0.0 && std::isfinite(lr), Status::ArgumentError,
          "gdm: lr must be positive");
  GdmState s;
  s.velocity = Vec::Zero(n);
  s.lr = lr;
  return s;
}

Vec gdm_step(GdmState& s, const Vec& grad) {
  require(grad.size() == s.velocity.size(), Status::ArgumentError,
          "gdm: grad size mismatch");
  s.velocity = s.mu * s.velocity + grad;
  return -s.lr * s.velocity;
}

// ---------------------------------------------------------------------------

BfgsState BfgsState::init(const Vec& x0) {
  require(x0.size() >= 1, Status::ArgumentError, "bfgs: empty x0");
  BfgsState s;
  s.h_inv = Mat::Identity(x0.size(), x0.size());
  s.x = x0;
  return s;
}

namespace {

// Cubic minimizer of a function with values/derivatives at a and b, clamped
// into [min(a,b), max(a,b)] with a small interior margin; falls back to
// bisection when the cubic is degenerate.
double cubic_interp(double a, double fa, double da, double b, double fb,
                    double db) {
  const double d1 = da + db - 3.0 * (fa - fb) / (a - b);
  const double disc = d1 * d1 - da * db;
  const double lo = std::min(a, b), hi = std::max(a, b);
  const double margin = 0.1 * (hi - lo);
  double cand = 0.5 * (a + b);
  if (disc >= 0.0) {
    const double d2 = std::copysign(std::sqrt(disc), b - a);
    const double t = b - (b - a) * (db + d2 - d1) / (db - da + 2.0 * d2);
    if (std::isfinite(t)) cand = t;
  }
  if (!(cand >= lo + margin && cand <= hi - margin)) cand = 0.5 * (a + b);
  return cand;
}

}  // namespace

LineSearchResult strong_wolfe_search(const ValueFn& value, const GradFn& grad,
                                     const Vec& x, const Vec& p, double f0,
                                     const Vec& g0, const BfgsOptions& opts) {
  LineSearchResult res;
  const double d0 = g0.dot(p);
  if (!(d0 < 0.0)) return res;  // not a descent direction

  auto eval_at = [&](double a, double& f, Vec& g, Vec& xa) {
    xa = x + a * p;
    f = value(xa);
    g = grad(xa);
    res.evals += 1;
  };

  auto zoom = [&](double lo, double flo, double dlo, double hi, double fhi,
                  double dhi) {
    for (int it = 0; it < opts.max_trials && res.evals < opts.max_trials;
         ++it) {
      const double a = cubic_interp(lo, flo, dlo, hi, fhi, dhi);
      double fa;
      Vec ga, xa;
      eval_at(a, fa, ga, xa);
      const double da = ga.dot(p);
      if (!std::isfinite(fa) || fa > f0 + opts.c1 * a * d0 || fa >= flo) {
        hi = a; fhi = fa; dhi = da;
      } else {
        if (std::abs(da) <= -opts.c2 * d0) {
          res.ok = true;
          res.alpha = a; res.f = fa; res.x = xa; res.grad = ga;
          return;
        }
        if (da * (hi - lo) >= 0.0) {
          hi = lo; fhi = flo; dhi = dlo;
        }
        lo = a; flo = fa; dlo = da;
      }
      if (std::abs(hi - lo) < 1e-16) break;
    }
  };

  double a_prev = 0.0, f_prev = f0, d_prev = d0;
  double a = 1.0;
  for (int it = 0; it < opts.max_trials && res.evals < opts.max_trials; ++it) {
    double fa;
    Vec ga, xa;
    eval_at(a, fa, ga, xa);
    const double da = ga.dot(p);
    if (!std::isfinite(fa) || fa > f0 + opts.c1 * a * d0 ||
        (it > 0 && fa >= f_prev)) {
      zoom(a_prev, f_prev, d_prev, a, fa, da);
      return res;
    }
    if (std::abs(da) <= -opts.c2 * d0) {
      res.ok = true;
      res.alpha = a; res.f = fa; res.x = xa; res.grad = ga;
      return res;
    }
    if (da >= 0.0) {
      zoom(a, fa, da, a_prev, f_prev, d_prev);
      return res;
    }
    a_prev = a; f_prev = fa; d_prev = da;
    a *= 2.0;
  }
  return res;
}

int bfgs_step(BfgsState& s, const ValueFn& value, const GradFn& grad,
              const BfgsOptions& opts) {
  const int n = int(s.x.size());
  const Vec p = -(s.h_inv * s.grad);
  LineSearchResult ls =
      strong_wolfe_search(value, grad, s.x, p, s.f, s.grad, opts);

  Vec x_new, g_new;
  double f_new;
  if (ls.ok) {
    x_new = ls.x; g_new = ls.grad; f_new = ls.f;
  } else {
    // Fallback: flag the failure and take a tiny step along p.
    s.line_search_failures += 1;
    x_new = s.x + opts.fallback_scale * p;
    f_new = value(x_new);
    g_new = grad(x_new);
    ls.evals += 1;
  }
  s.func_evals += ls.evals;

  const Vec step = x_new - s.x;
  const Vec y = g_new - s.grad;
  const double ys = y.dot(step);
  if (ys > opts.curvature_floor) {
    const double rho = 1.0 / ys;
    const Mat i = Mat::Identity(n, n);
    const Mat left = i - rho * step * y.transpose();
    s.h_inv = left * s.h_inv * left.transpose() +
              rho * step * step.transpose();
  }  // else: curvature too small, keep previous approximation
  s.x = x_new;
  s.grad = g_new;
  s.f = f_new;
  return ls.evals;
}

// ---------------------------------------------------------------------------

namespace {

template <typename StepFn>
Trajectory run_first_order(const testfuncs::ObjectiveInstance& inst,
                           const Vec& x0, const RunOptions& opts,
                           StepFn&& step_fn) {
  require(int(x0.size()) == inst.dim(), Status::ArgumentError,
          "run: x0 dimension mismatch");
  Trajectory traj;
  if (!x0.allFinite()) {
    traj.terminated_by = Termination::Error;
    return traj;
  }
  Vec x = x0;
  const double f0 = inst.value(x);
  traj.func_evals = 1;
  if (!std::isfinite(f0)) {  // keep recorded losses JSON-safe (finite)
    traj.terminated_by = Termination::Error;
    return traj;
  }
  traj.losses.push_back(f0);
  traj.evals_cum.push_back(1);
  if (opts.record_iterates) traj.iterates.push_back(x);

  for (int iter = 0; iter < opts.stop.max_iters; ++iter) {
    const Vec grad = inst.gradient(x);
    if (!grad.allFinite()) {
      traj.terminated_by = Termination::Error;
      return traj;
    }
    const Vec dx = step_fn(grad);
    x += dx;
    if (!x.allFinite()) {
      traj.terminated_by = Termination::Error;
      return traj;
    }
    const double loss = inst.value(x);
    if (!std::isfinite(loss)) {
      traj.terminated_by = Termination::Error;
      return traj;
    }
    traj.losses.push_back(loss);
    traj.func_evals += 1;
    traj.evals_cum.push_back(traj.func_evals);
    if (opts.record_iterates) traj.iterates.push_back(x);
    if (opts.record_steps) traj.steps.push_back(dx);
    if (opts.use_value_rule && optimus::should_stop(traj.losses, opts.stop)) {
      traj.terminated_by = Termination::Stopped;
      return traj;
    }
  }
  traj.terminated_by = Termination::MaxIters;
  return traj;
}

}  // namespace

Trajectory run_adam(const testfuncs::ObjectiveInstance& inst, const Vec& x0,
                    double lr, const RunOptions& opts) {
  AdamState s = AdamState::init(inst.dim(), lr);
  return run_first_order(inst, x0, opts,
                         [&](const Vec& g) { return adam_step(s, g); });
}

Trajectory run_gdm(const testfuncs::ObjectiveInstance& inst, const Vec& x0,
                   double lr, const RunOptions& opts) {
  GdmState s = GdmState::init(inst.dim(), lr);
  return run_first_order(inst, x0, opts,
                         [&](const Vec& g) { return gdm_step(s, g); });
}

Trajectory run_bfgs(const testfuncs::ObjectiveInstance& inst, const Vec& x0,
                    const RunOptions& opts, const BfgsOptions& bopts) {
  require(int(x0.size()) == inst.dim(), Status::ArgumentError,
          "bfgs: x0 dimension mismatch");
  Trajectory traj;
  if (!x0.allFinite()) {
    traj.terminated_by = Termination::Error;
    return traj;
  }
  auto value = [&](const Vec& x) {
    return x.allFinite() ? inst.value(x)
                         : std::numeric_limits<double>::infinity();
  };
  auto grad = [&](const Vec& x) {
    return x.allFinite() ? inst.gradient(x) : Vec(Vec::Constant(
        x.size(), std::numeric_limits<double>::quiet_NaN()));
  };

  BfgsState s = BfgsState::init(x0);
  s.f = inst.value(x0);
  s.grad = inst.gradient(x0);
  s.func_evals = 1;
  if (!std::isfinite(s.f)) {  // keep recorded losses JSON-safe (finite)
    traj.func_evals = s.func_evals;
    traj.terminated_by = Termination::Error;
    return traj;
  }
  traj.losses.push_back(s.f);
  traj.evals_cum.push_back(s.func_evals);
  if (opts.record_iterates) traj.iterates.push_back(s.x);

  for (int iter = 0; iter < opts.stop.max_iters; ++iter) {
    if (!s.grad.allFinite() || !std::isfinite(s.f)) {
      traj.terminated_by = Termination::Error;
      traj.func_evals = s.func_evals;
      return traj;
    }
    if (s.grad.norm() <= 1e-13) {  // stationary; nothing left to do
      traj.terminated_by = Termination::Stopped;
      traj.func_evals = s.func_evals;
      return traj;
    }
    const Vec x_before = s.x;
    bfgs_step(s, value, grad, bopts);
    if (!s.x.allFinite() || !std::isfinite(s.f)) {
      traj.terminated_by = Termination::Error;
      traj.func_evals = s.func_evals;
      return traj;
    }
    traj.losses.push_back(s.f);
    traj.evals_cum.push_back(s.func_evals);
    if (opts.record_iterates) traj.iterates.push_back(s.x);
    if (opts.record_steps) traj.steps.push_back(s.x - x_before);
    if (opts.use_value_rule && optimus::should_stop(traj.losses, opts.stop)) {
      traj.terminated_by = Termination::Stopped;
      traj.func_evals = s.func_evals;
      return traj;
    }
  }
  traj.terminated_by = Termination::MaxIters;
  traj.func_evals = s.func_evals;
  return traj;
}

// ---------------------------------------------------------------------------

std::vector<double> log_spaced_grid(double lo, double hi, int n) {
  require(n >= 2 && lo > 0.0 && hi > lo, Status::ArgumentError,
          "log grid: need n >= 2 and 0 < lo < hi");
  std::vector<double> g(n);
  const double llo = std::log10(lo), lhi = std::log10(hi);
  for (int i = 0; i < n; ++i)
    g[i] = std::pow(10.0, llo + (lhi - llo) * double(i) / double(n - 1));
  g.front() = lo;  // exact endpoints
  g.back() = hi;
  return g;
}

TuneResult tune_learning_rate(
    const std::function<double(double, int)>& run_for_rate, int inits,
    double lo, double hi, int grid_size, int jobs) {
  require(inits >= 1, Status::ArgumentError, "tune: inits must be >= 1");
  TuneResult res;
  res.grid = log_spaced_grid(lo, hi, grid_size);
  res.mean_final_loss.assign(res.grid.size(), 0.0);

  std::vector<double> finals(res.grid.size() * size_t(inits));
  parallel_for(int(res.grid.size()) * inits, jobs, [&](int idx) {
    const int gi = idx / inits;
    const int rep = idx % inits;
    finals[size_t(idx)] = run_for_rate(res.grid[size_t(gi)], rep);
  });
  // Reduce in fixed index order for run-to-run determinism.
  for (size_t gi = 0; gi < res.grid.size(); ++gi) {
    double sum = 0.0;
    for (int rep = 0; rep < inits; ++rep) {
      const double f = finals[gi * size_t(inits) + size_t(rep)];
      sum += std::isfinite(f) ? f : std::numeric_limits<double>::infinity();
    }
    res.mean_final_loss[gi] = sum / double(inits);
  }
  for (size_t gi = 0; gi < res.grid.size(); ++gi) {
    const double v = res.mean_final_loss[gi];
    if (std::isfinite(v) &&
        (res.best_index < 0 || v < res.mean_final_loss[size_t(res.best_index)])) {
      res.best_index = int(gi);
      res.any_finite = true;
    }
  }
  if (res.best_index < 0) res.best_index = 0;  // all diverged; caller warns
  res.best_lr = res.grid[size_t(res.best_index)];
  return res;
}

// ---------------------------------------------------------------------------

BasinHoppingResult basin_hopping(const InnerRunFn& run_inner, const Vec& x0,
                                 double perturb_scale, int hops, Rng& rng) {
  require(hops >= 1, Status::ArgumentError, "basin hopping: hops must be >= 1");
  require(perturb_scale >= 0.0, Status::ArgumentError,
          "basin hopping: negative perturbation");
  BasinHoppingResult out;
  Vec start = x0;
  for (int hop = 0; hop < hops; ++hop) {
    InnerRun inner = run_inner(start);
    out.hops_done += 1;
    if (hop == 0) {
      out.trajectory = inner.traj;
    } else {
      const std::int64_t base = out.trajectory.func_evals;
      out.trajectory.losses.insert(out.trajectory.losses.end(),
                                   inner.traj.losses.begin(),
                                   inner.traj.losses.end());
      for (auto e : inner.traj.evals_cum)
        out.trajectory.evals_cum.push_back(base + e);
      out.trajectory.func_evals = base + inner.traj.func_evals;
      out.trajectory.terminated_by = inner.traj.terminated_by;
    }
    if (hop == 0 || inner.best_f < out.best_f) {
      out.best_f = inner.best_f;
      out.best_x = inner.best_x;
    }
    // Perturb the best-ever iterate for the next hop.
    start = out.best_x;
    for (int i = 0; i < start.size(); ++i)
      start[i] += rng.normal(0.0, perturb_scale);
  }
  return out;
}

}  // namespace optlab::baselines
