#include "bench.hpp"

#include <Eigen/Dense>
#include <algorithm>
#include <chrono>
#include <cmath>
#include <limits>

#include "status.hpp"

namespace optlab::bench {

double performance_measure(double f_hat, double f_star, double f_worst) {
  const double tol = 1e-9 + 1e-12 * std::abs(f_star);
  if (!std::isfinite(f_hat)) return 1.0;  // diverged solver: worst score
  require(std::isfinite(f_star) && std::isfinite(f_worst), Status::DataError,
          "performance_measure: non-finite reference values");
  require(f_hat >= f_star - tol, Status::DataError,
          "performance_measure: best value below the global minimum");
  require(f_worst >= f_hat - tol, Status::DataError,
          "performance_measure: worst reference below the achieved value");
  const double denom = f_worst - f_star;
  if (denom <= tol) return 0.0;  // every solver at the optimum
  const double m = (f_hat - f_star) / denom;
  return std::clamp(m, 0.0, 1.0);
}

Mat performance_ratios(const Mat& measures) {
  Mat r(measures.rows(), measures.cols());
  for (Eigen::Index p = 0; p < measures.rows(); ++p) {
    const double mn = measures.row(p).minCoeff();
    const double denom = std::max(mn, 1e-12);
    for (Eigen::Index s = 0; s < measures.cols(); ++s) {
      r(p, s) = measures(p, s) == mn ? 1.0 : measures(p, s) / denom;
    }
  }
  return r;
}

ProfileResult performance_profile(const Mat& measures,
                                  const std::vector<std::string>& solvers,
                                  const std::vector<double>& t_grid) {
  require(measures.cols() == Eigen::Index(solvers.size()), Status::DataError,
          "performance_profile: solver count mismatch");
  require(measures.rows() > 0, Status::DataError,
          "performance_profile: no problems");
  for (std::size_t i = 0; i < t_grid.size(); ++i) {
    require(t_grid[i] >= 1.0, Status::ArgumentError,
            "performance_profile: thresholds must be >= 1");
    require(i == 0 || t_grid[i] > t_grid[i - 1], Status::ArgumentError,
            "performance_profile: thresholds must be strictly ascending");
  }
  const Mat r = performance_ratios(measures);
  ProfileResult out;
  out.t_grid = t_grid;
  out.solvers = solvers;
  out.rho = Mat::Zero(Eigen::Index(t_grid.size()), measures.cols());
  for (std::size_t ti = 0; ti < t_grid.size(); ++ti) {
    for (Eigen::Index s = 0; s < measures.cols(); ++s) {
      Eigen::Index hits = 0;
      for (Eigen::Index p = 0; p < r.rows(); ++p) {
        if (r(p, s) <= t_grid[ti]) ++hits;
      }
      out.rho(Eigen::Index(ti), s) = double(hits) / double(r.rows());
    }
  }
  return out;
}

std::vector<double> default_t_grid(const Mat& ratios) {
  std::vector<double> ts;
  ts.push_back(1.0);
  for (Eigen::Index p = 0; p < ratios.rows(); ++p) {
    for (Eigen::Index s = 0; s < ratios.cols(); ++s) {
      const double r = ratios(p, s);
      if (std::isfinite(r) && r > 1.0) ts.push_back(r);
    }
  }
  std::sort(ts.begin(), ts.end());
  ts.erase(std::unique(ts.begin(), ts.end()), ts.end());
  return ts;
}

std::vector<double> best_so_far(std::span<const double> losses) {
  std::vector<double> out;
  out.reserve(losses.size());
  double best = std::numeric_limits<double>::infinity();
  for (double v : losses) {
    best = std::min(best, v);
    out.push_back(best);
  }
  return out;
}

std::vector<double> mean_best_so_far(
    const std::vector<std::vector<double>>& curves) {
  require(!curves.empty(), Status::DataError, "mean_best_so_far: no curves");
  std::size_t len = 0;
  for (const auto& c : curves) {
    require(!c.empty(), Status::DataError, "mean_best_so_far: empty curve");
    len = std::max(len, c.size());
  }
  std::vector<double> mean(len, 0.0);
  for (const auto& c : curves) {
    const std::vector<double> b = best_so_far(c);
    for (std::size_t i = 0; i < len; ++i) {
      mean[i] += i < b.size() ? b[i] : b.back();
    }
  }
  for (double& v : mean) v /= double(curves.size());
  return mean;
}

namespace {
// First index with value <= target, clamped to >= 1; -1 when never reached.
int first_reach(std::span<const double> curve, double target) {
  for (std::size_t i = 0; i < curve.size(); ++i) {
    if (curve[i] <= target) return std::max(1, int(i));
  }
  return -1;
}
}  // namespace

RelIterResult relative_iterations(std::span<const double> opt_curve,
                                  std::span<const double> base_curve,
                                  int base_budget) {
  require(!opt_curve.empty() && !base_curve.empty(), Status::DataError,
          "relative_iterations: empty curve");
  require(base_budget >= 1, Status::ArgumentError,
          "relative_iterations: base_budget must be >= 1");
  const std::size_t ti =
      std::min(std::size_t(base_budget), base_curve.size() - 1);
  const double target = base_curve[ti];

  RelIterResult out;
  out.i_base = first_reach(base_curve, target);
  if (out.i_base < 0) out.i_base = int(ti);  // defensive; reached by definition
  out.i_base = std::max(1, out.i_base);
  const int io = first_reach(opt_curve, target);
  if (io < 0) {
    out.reached = false;
    out.i_opt = -1;
    out.ratio = 0.0;
  } else {
    out.reached = true;
    out.i_opt = io;
    out.ratio = double(out.i_base) / double(io);
  }
  return out;
}

std::pair<double, double> direction_similarity(const Vec& dx, const Vec& grad,
                                               const Mat& hess) {
  const double ndx = dx.norm();
  const double ng = grad.norm();
  require(ndx > 0.0 && ng > 0.0, Status::ArgumentError,
          "direction_similarity: zero step or gradient");
  require(hess.rows() == hess.cols() && hess.rows() == dx.size() &&
              grad.size() == dx.size(),
          Status::ArgumentError, "direction_similarity: shape mismatch");

  const double cos_grad = std::abs(dx.dot(grad)) / (ndx * ng);

  Eigen::FullPivLU<Mat> lu(hess);
  Vec newton;
  if (lu.isInvertible()) {
    newton = lu.solve(grad);
  }
  if (newton.size() == 0 || !newton.allFinite()) {
    Mat reg = hess + 1e-8 * Mat::Identity(hess.rows(), hess.cols());
    newton = Eigen::FullPivLU<Mat>(reg).solve(grad);
  }
  const double nn = newton.norm();
  double cos_newton = 0.0;
  if (nn > 0.0 && newton.allFinite()) {
    cos_newton = std::abs(dx.dot(newton)) / (ndx * nn);
  }
  return {cos_grad, cos_newton};
}

DirectionStats direction_analysis(
    const std::vector<Trajectory>& trajs,
    const std::vector<testfuncs::ObjectiveInstance>& insts) {
  require(!trajs.empty(), Status::DataError, "direction_analysis: no runs");
  require(insts.size() == trajs.size() || insts.size() == 1,
          Status::ArgumentError,
          "direction_analysis: one instance per trajectory (or one shared)");
  std::size_t len = 0;
  for (const auto& t : trajs) {
    require(!t.steps.empty() && t.iterates.size() >= t.steps.size(),
            Status::DataError,
            "direction_analysis: trajectories must record iterates and steps");
    len = std::max(len, t.steps.size());
  }
  DirectionStats out;
  out.mean_cos_grad.assign(len, 0.0);
  out.mean_cos_newton.assign(len, 0.0);
  out.samples.assign(len, 0);
  for (std::size_t ti = 0; ti < trajs.size(); ++ti) {
    const Trajectory& t = trajs[ti];
    const testfuncs::ObjectiveInstance& inst =
        insts.size() == 1 ? insts[0] : insts[ti];
    for (std::size_t k = 0; k < t.steps.size(); ++k) {
      const Vec& x = t.iterates[k];
      const Vec& dx = t.steps[k];
      Vec g = inst.gradient(x);
      if (dx.norm() == 0.0 || g.norm() == 0.0) continue;  // undefined: skip
      auto [cg, cn] = direction_similarity(dx, g, inst.hessian(x));
      out.mean_cos_grad[k] += cg;
      out.mean_cos_newton[k] += cn;
      out.samples[k] += 1;
    }
  }
  for (std::size_t k = 0; k < len; ++k) {
    if (out.samples[k] > 0) {
      out.mean_cos_grad[k] /= out.samples[k];
      out.mean_cos_newton[k] /= out.samples[k];
    }
  }
  return out;
}

std::vector<RuntimeRow> runtime_scaling(
    const std::function<std::function<void()>(int)>& make_stepper,
    const std::vector<int>& dims, int reps, int warmup) {
  require(reps >= 1, Status::ArgumentError, "runtime_scaling: reps must be >= 1");
  for (std::size_t i = 1; i < dims.size(); ++i) {
    require(dims[i] > dims[i - 1], Status::ArgumentError,
            "runtime_scaling: dims must be ascending");
  }
  std::vector<RuntimeRow> out;
  out.reserve(dims.size());
  for (int d : dims) {
    std::function<void()> step = make_stepper(d);
    for (int w = 0; w < warmup; ++w) step();
    std::vector<double> times;
    times.reserve(std::size_t(reps));
    for (int rep = 0; rep < reps; ++rep) {
      const auto t0 = std::chrono::steady_clock::now();
      step();
      const auto t1 = std::chrono::steady_clock::now();
      times.push_back(std::chrono::duration<double>(t1 - t0).count());
    }
    std::sort(times.begin(), times.end());
    const std::size_t n = times.size();
    const double median = n % 2 == 1
                              ? times[n / 2]
                              : 0.5 * (times[n / 2 - 1] + times[n / 2]);
    out.push_back(RuntimeRow{d, median});
  }
  return out;
}

}  // namespace optlab::bench
