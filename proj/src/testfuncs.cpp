#include "testfuncs.hpp"

#include <cmath>
#include <numbers>

#include "status.hpp"

namespace optlab::testfuncs {

namespace {

constexpr double kPi = std::numbers::pi;
// Stationary point of t^4/2 - 8t^2 + 2.5t (root of 4t^3 - 32t + 5 = 0).
constexpr double kStyblinskiArg = -2.9035340277711771;
constexpr double kPermBeta = 10.0;

double sq(double v) { return v * v; }

}  // namespace

const std::array<FunctionId, kFunctionCount>& all_functions() {
  static const std::array<FunctionId, kFunctionCount> fns = {
      FunctionId::Ackley,        FunctionId::DixonPrice,
      FunctionId::Griewank,      FunctionId::Levy,
      FunctionId::Perm0DBeta,    FunctionId::Powell,
      FunctionId::Rastrigin,     FunctionId::Rosenbrock,
      FunctionId::RotatedHyperEllipsoid, FunctionId::Sphere,
      FunctionId::StyblinskiTang, FunctionId::SumOfPowers,
      FunctionId::SumOfSquares,  FunctionId::Trid,
      FunctionId::Zakharov,
  };
  return fns;
}

std::string_view function_name(FunctionId id) {
  switch (id) {
    case FunctionId::Ackley: return "ackley";
    case FunctionId::DixonPrice: return "dixon_price";
    case FunctionId::Griewank: return "griewank";
    case FunctionId::Levy: return "levy";
    case FunctionId::Perm0DBeta: return "perm_0_d_beta";
    case FunctionId::Powell: return "powell";
    case FunctionId::Rastrigin: return "rastrigin";
    case FunctionId::Rosenbrock: return "rosenbrock";
    case FunctionId::RotatedHyperEllipsoid: return "rotated_hyper_ellipsoid";
    case FunctionId::Sphere: return "sphere";
    case FunctionId::StyblinskiTang: return "styblinski_tang";
    case FunctionId::SumOfPowers: return "sum_of_powers";
    case FunctionId::SumOfSquares: return "sum_of_squares";
    case FunctionId::Trid: return "trid";
    case FunctionId::Zakharov: return "zakharov";
  }
  fail(Status::InternalError, "function_name: bad id");
}

FunctionId function_from_name(std::string_view name) {
  for (FunctionId id : all_functions())
    if (function_name(id) == name) return id;
  fail(Status::ArgumentError,
       "unknown function id '" + std::string(name) + "'");
}

int effective_dim(FunctionId id, int requested_dim) {
  require(requested_dim >= 2, Status::ArgumentError,
          "dimension must be >= 2");
  if (id == FunctionId::Powell) {
    int d = (requested_dim / 4) * 4;
    return d < 4 ? 4 : d;
  }
  return requested_dim;
}

DomainBox domain_box(FunctionId id, int dim) {
  switch (id) {
    case FunctionId::Ackley: return {-32.768, 32.768};
    case FunctionId::DixonPrice: return {-10.0, 10.0};
    case FunctionId::Griewank: return {-600.0, 600.0};
    case FunctionId::Levy: return {-10.0, 10.0};
    case FunctionId::Perm0DBeta: return {-double(dim), double(dim)};
    case FunctionId::Powell: return {-4.0, 5.0};
    case FunctionId::Rastrigin: return {-5.12, 5.12};
    case FunctionId::Rosenbrock: return {-5.0, 10.0};
    case FunctionId::RotatedHyperEllipsoid: return {-65.536, 65.536};
    case FunctionId::Sphere: return {-5.12, 5.12};
    case FunctionId::StyblinskiTang: return {-5.0, 5.0};
    case FunctionId::SumOfPowers: return {-1.0, 1.0};
    case FunctionId::SumOfSquares: return {-10.0, 10.0};
    case FunctionId::Trid: return {-double(dim) * dim, double(dim) * dim};
    case FunctionId::Zakharov: return {-5.0, 10.0};
  }
  fail(Status::InternalError, "domain_box: bad id");
}

// ---------------------------------------------------------------------------
// Per-function value/gradient on the shifted variable y = x - offset.

namespace {

double value_ackley(const Vec& y) {
  const double d = double(y.size());
  const double a = 20.0, b = 0.2, c = 2.0 * kPi;
  const double r = std::sqrt(y.squaredNorm() / d);
  double cmean = 0.0;
  for (int i = 0; i < y.size(); ++i) cmean += std::cos(c * y[i]);
  cmean /= d;
  return -a * std::exp(-b * r) - std::exp(cmean) + a + std::numbers::e;
}

Vec grad_ackley(const Vec& y) {
  const double d = double(y.size());
  const double a = 20.0, b = 0.2, c = 2.0 * kPi;
  const double r = std::sqrt(y.squaredNorm() / d);
  double cmean = 0.0;
  for (int i = 0; i < y.size(); ++i) cmean += std::cos(c * y[i]);
  cmean /= d;
  const double ec = std::exp(cmean);
  Vec g(y.size());
  for (int i = 0; i < y.size(); ++i) {
    const double t1 = r > 0.0 ? a * b * std::exp(-b * r) * y[i] / (d * r) : 0.0;
    g[i] = t1 + (c / d) * ec * std::sin(c * y[i]);
  }
  return g;
}

// f = (y1 - 1)^2 + sum_{i>=2} i (2 y_i^2 - y_{i-1})^2
double value_dixon_price(const Vec& y) {
  double f = sq(y[0] - 1.0);
  for (int i = 1; i < y.size(); ++i)
    f += (i + 1) * sq(2.0 * y[i] * y[i] - y[i - 1]);
  return f;
}

Vec grad_dixon_price(const Vec& y) {
  const int d = int(y.size());
  Vec g = Vec::Zero(d);
  g[0] = 2.0 * (y[0] - 1.0);
  for (int i = 1; i < d; ++i) {
    const double t = 2.0 * y[i] * y[i] - y[i - 1];
    g[i] += 8.0 * (i + 1) * y[i] * t;
    g[i - 1] += -2.0 * (i + 1) * t;
  }
  return g;
}

double value_griewank(const Vec& y) {
  double s = 0.0, p = 1.0;
  for (int i = 0; i < y.size(); ++i) {
    s += y[i] * y[i];
    p *= std::cos(y[i] / std::sqrt(double(i + 1)));
  }
  return s / 4000.0 - p + 1.0;
}

Vec grad_griewank(const Vec& y) {
  const int d = int(y.size());
  // Leave-one-out cosine products via prefix/suffix (no division; a zero
  // cosine must not poison the others).
  std::vector<double> c(d), pre(d + 1, 1.0), suf(d + 1, 1.0);
  for (int i = 0; i < d; ++i) c[i] = std::cos(y[i] / std::sqrt(double(i + 1)));
  for (int i = 0; i < d; ++i) pre[i + 1] = pre[i] * c[i];
  for (int i = d - 1; i >= 0; --i) suf[i] = suf[i + 1] * c[i];
  Vec g(d);
  for (int i = 0; i < d; ++i) {
    const double rsq = std::sqrt(double(i + 1));
    g[i] = y[i] / 2000.0 +
           std::sin(y[i] / rsq) / rsq * (pre[i] * suf[i + 1]);
  }
  return g;
}

double value_levy(const Vec& y) {
  const int d = int(y.size());
  auto w = [&](int i) { return 1.0 + (y[i] - 1.0) / 4.0; };
  double f = sq(std::sin(kPi * w(0)));
  for (int i = 0; i < d - 1; ++i)
    f += sq(w(i) - 1.0) * (1.0 + 10.0 * sq(std::sin(kPi * w(i) + 1.0)));
  f += sq(w(d - 1) - 1.0) * (1.0 + sq(std::sin(2.0 * kPi * w(d - 1))));
  return f;
}

Vec grad_levy(const Vec& y) {
  const int d = int(y.size());
  Vec g = Vec::Zero(d);
  auto w = [&](int i) { return 1.0 + (y[i] - 1.0) / 4.0; };
  // d/dw, then chain rule dw/dy = 1/4.
  g[0] += kPi * std::sin(2.0 * kPi * w(0));
  for (int i = 0; i < d - 1; ++i) {
    const double wi = w(i), u = kPi * wi + 1.0;
    g[i] += 2.0 * (wi - 1.0) * (1.0 + 10.0 * sq(std::sin(u))) +
            sq(wi - 1.0) * 10.0 * kPi * std::sin(2.0 * u);
  }
  {
    const double wd = w(d - 1);
    g[d - 1] += 2.0 * (wd - 1.0) * (1.0 + sq(std::sin(2.0 * kPi * wd))) +
                sq(wd - 1.0) * 2.0 * kPi * std::sin(4.0 * kPi * wd);
  }
  return g * 0.25;
}

// f = sum_i [ sum_j (j + beta) (y_j^i - j^{-i}) ]^2   (1-based i, j)
double value_perm(const Vec& y) {
  const int d = int(y.size());
  std::vector<double> ypow(d, 1.0), jinv(d, 1.0);
  double f = 0.0;
  for (int i = 1; i <= d; ++i) {
    double s = 0.0;
    for (int j = 0; j < d; ++j) {
      ypow[j] *= y[j];
      jinv[j] /= double(j + 1);
      s += (double(j + 1) + kPermBeta) * (ypow[j] - jinv[j]);
    }
    f += s * s;
  }
  return f;
}

Vec grad_perm(const Vec& y) {
  const int d = int(y.size());
  std::vector<double> ypow(d, 1.0), jinv(d, 1.0), ypow_prev(d, 1.0);
  Vec g = Vec::Zero(d);
  for (int i = 1; i <= d; ++i) {
    double s = 0.0;
    for (int j = 0; j < d; ++j) {
      ypow_prev[j] = ypow[j];  // y_j^{i-1}
      ypow[j] *= y[j];
      jinv[j] /= double(j + 1);
      s += (double(j + 1) + kPermBeta) * (ypow[j] - jinv[j]);
    }
    for (int k = 0; k < d; ++k)
      g[k] += 2.0 * s * (double(k + 1) + kPermBeta) * double(i) * ypow_prev[k];
  }
  return g;
}

double value_powell(const Vec& y) {
  double f = 0.0;
  for (int k = 0; k + 3 < y.size(); k += 4) {
    const double t1 = y[k] + 10.0 * y[k + 1];
    const double t2 = y[k + 2] - y[k + 3];
    const double t3 = y[k + 1] - 2.0 * y[k + 2];
    const double t4 = y[k] - y[k + 3];
    f += t1 * t1 + 5.0 * t2 * t2 + sq(sq(t3)) + 10.0 * sq(sq(t4));
  }
  return f;
}

Vec grad_powell(const Vec& y) {
  Vec g = Vec::Zero(y.size());
  for (int k = 0; k + 3 < y.size(); k += 4) {
    const double t1 = y[k] + 10.0 * y[k + 1];
    const double t2 = y[k + 2] - y[k + 3];
    const double t3 = y[k + 1] - 2.0 * y[k + 2];
    const double t4 = y[k] - y[k + 3];
    const double t3c = t3 * t3 * t3, t4c = t4 * t4 * t4;
    g[k] += 2.0 * t1 + 40.0 * t4c;
    g[k + 1] += 20.0 * t1 + 4.0 * t3c;
    g[k + 2] += 10.0 * t2 - 8.0 * t3c;
    g[k + 3] += -10.0 * t2 - 40.0 * t4c;
  }
  return g;
}

double value_rastrigin(const Vec& y) {
  double f = 10.0 * double(y.size());
  for (int i = 0; i < y.size(); ++i)
    f += y[i] * y[i] - 10.0 * std::cos(2.0 * kPi * y[i]);
  return f;
}

Vec grad_rastrigin(const Vec& y) {
  Vec g(y.size());
  for (int i = 0; i < y.size(); ++i)
    g[i] = 2.0 * y[i] + 20.0 * kPi * std::sin(2.0 * kPi * y[i]);
  return g;
}

double value_rosenbrock(const Vec& y) {
  double f = 0.0;
  for (int i = 0; i + 1 < y.size(); ++i)
    f += 100.0 * sq(y[i + 1] - y[i] * y[i]) + sq(1.0 - y[i]);
  return f;
}

Vec grad_rosenbrock(const Vec& y) {
  const int d = int(y.size());
  Vec g = Vec::Zero(d);
  for (int i = 0; i + 1 < d; ++i) {
    const double t = y[i + 1] - y[i] * y[i];
    g[i] += -400.0 * y[i] * t - 2.0 * (1.0 - y[i]);
    g[i + 1] += 200.0 * t;
  }
  return g;
}

Mat hess_rosenbrock(const Vec& y) {
  const int d = int(y.size());
  Mat h = Mat::Zero(d, d);
  for (int i = 0; i + 1 < d; ++i) {
    h(i, i) += 1200.0 * y[i] * y[i] - 400.0 * y[i + 1] + 2.0;
    h(i + 1, i + 1) += 200.0;
    h(i, i + 1) += -400.0 * y[i];
    h(i + 1, i) += -400.0 * y[i];
  }
  return h;
}

// f = sum_i sum_{j<=i} y_j^2 = sum_j (d - j + 1) y_j^2  (1-based j)
double value_rhe(const Vec& y) {
  const int d = int(y.size());
  double f = 0.0;
  for (int j = 0; j < d; ++j) f += double(d - j) * y[j] * y[j];
  return f;
}

Vec grad_rhe(const Vec& y) {
  const int d = int(y.size());
  Vec g(d);
  for (int j = 0; j < d; ++j) g[j] = 2.0 * double(d - j) * y[j];
  return g;
}

double value_sphere(const Vec& y) { return y.squaredNorm(); }
Vec grad_sphere(const Vec& y) { return 2.0 * y; }

double value_styblinski(const Vec& y) {
  double f = 0.0;
  for (int i = 0; i < y.size(); ++i) {
    const double v = y[i];
    f += v * v * v * v - 16.0 * v * v + 5.0 * v;
  }
  return 0.5 * f;
}

Vec grad_styblinski(const Vec& y) {
  Vec g(y.size());
  for (int i = 0; i < y.size(); ++i)
    g[i] = 2.0 * y[i] * y[i] * y[i] - 16.0 * y[i] + 2.5;
  return g;
}

// f = sum_i |y_i|^{i+1}  (1-based i)
double value_sum_of_powers(const Vec& y) {
  double f = 0.0;
  for (int i = 0; i < y.size(); ++i)
    f += std::pow(std::abs(y[i]), double(i + 2));
  return f;
}

Vec grad_sum_of_powers(const Vec& y) {
  Vec g(y.size());
  for (int i = 0; i < y.size(); ++i) {
    const double p = double(i + 2);
    const double s = y[i] > 0.0 ? 1.0 : (y[i] < 0.0 ? -1.0 : 0.0);
    g[i] = p * std::pow(std::abs(y[i]), p - 1.0) * s;
  }
  return g;
}

double value_sum_of_squares(const Vec& y) {
  double f = 0.0;
  for (int i = 0; i < y.size(); ++i) f += double(i + 1) * y[i] * y[i];
  return f;
}

Vec grad_sum_of_squares(const Vec& y) {
  Vec g(y.size());
  for (int i = 0; i < y.size(); ++i) g[i] = 2.0 * double(i + 1) * y[i];
  return g;
}

double value_trid(const Vec& y) {
  double f = 0.0;
  for (int i = 0; i < y.size(); ++i) f += sq(y[i] - 1.0);
  for (int i = 1; i < y.size(); ++i) f -= y[i] * y[i - 1];
  return f;
}

Vec grad_trid(const Vec& y) {
  const int d = int(y.size());
  Vec g(d);
  for (int i = 0; i < d; ++i) {
    g[i] = 2.0 * (y[i] - 1.0);
    if (i > 0) g[i] -= y[i - 1];
    if (i + 1 < d) g[i] -= y[i + 1];
  }
  return g;
}

double value_zakharov(const Vec& y) {
  double s = 0.0;
  for (int i = 0; i < y.size(); ++i) s += 0.5 * double(i + 1) * y[i];
  return y.squaredNorm() + s * s + s * s * s * s;
}

Vec grad_zakharov(const Vec& y) {
  double s = 0.0;
  for (int i = 0; i < y.size(); ++i) s += 0.5 * double(i + 1) * y[i];
  const double c = s + 2.0 * s * s * s;  // (2s + 4s^3) * 0.5
  Vec g(y.size());
  for (int i = 0; i < y.size(); ++i) g[i] = 2.0 * y[i] + double(i + 1) * c;
  return g;
}

double value_shifted(FunctionId id, const Vec& y) {
  switch (id) {
    case FunctionId::Ackley: return value_ackley(y);
    case FunctionId::DixonPrice: return value_dixon_price(y);
    case FunctionId::Griewank: return value_griewank(y);
    case FunctionId::Levy: return value_levy(y);
    case FunctionId::Perm0DBeta: return value_perm(y);
    case FunctionId::Powell: return value_powell(y);
    case FunctionId::Rastrigin: return value_rastrigin(y);
    case FunctionId::Rosenbrock: return value_rosenbrock(y);
    case FunctionId::RotatedHyperEllipsoid: return value_rhe(y);
    case FunctionId::Sphere: return value_sphere(y);
    case FunctionId::StyblinskiTang: return value_styblinski(y);
    case FunctionId::SumOfPowers: return value_sum_of_powers(y);
    case FunctionId::SumOfSquares: return value_sum_of_squares(y);
    case FunctionId::Trid: return value_trid(y);
    case FunctionId::Zakharov: return value_zakharov(y);
  }
  fail(Status::InternalError, "value: bad id");
}

Vec grad_shifted(FunctionId id, const Vec& y) {
  switch (id) {
    case FunctionId::Ackley: return grad_ackley(y);
    case FunctionId::DixonPrice: return grad_dixon_price(y);
    case FunctionId::Griewank: return grad_griewank(y);
    case FunctionId::Levy: return grad_levy(y);
    case FunctionId::Perm0DBeta: return grad_perm(y);
    case FunctionId::Powell: return grad_powell(y);
    case FunctionId::Rastrigin: return grad_rastrigin(y);
    case FunctionId::Rosenbrock: return grad_rosenbrock(y);
    case FunctionId::RotatedHyperEllipsoid: return grad_rhe(y);
    case FunctionId::Sphere: return grad_sphere(y);
    case FunctionId::StyblinskiTang: return grad_styblinski(y);
    case FunctionId::SumOfPowers: return grad_sum_of_powers(y);
    case FunctionId::SumOfSquares: return grad_sum_of_squares(y);
    case FunctionId::Trid: return grad_trid(y);
    case FunctionId::Zakharov: return grad_zakharov(y);
  }
  fail(Status::InternalError, "gradient: bad id");
}

}  // namespace

// ---------------------------------------------------------------------------

ObjectiveInstance::ObjectiveInstance(FunctionId id, int requested_dim,
                                     Vec offset)
    : id_(id),
      dim_(effective_dim(id, requested_dim)),
      offset_(std::move(offset)),
      box_(domain_box(id, effective_dim(id, requested_dim))) {
  if (offset_.size() == 0) {
    offset_ = Vec::Zero(dim_);
  } else {
    require(int(offset_.size()) == dim_, Status::ArgumentError,
            "offset size does not match effective dimension");
    require(offset_.allFinite(), Status::DomainError, "offset is not finite");
  }
}

bool ObjectiveInstance::has_analytic_hessian() const {
  switch (id_) {
    case FunctionId::Sphere:
    case FunctionId::Rosenbrock:
    case FunctionId::SumOfSquares:
    case FunctionId::RotatedHyperEllipsoid:
    case FunctionId::Trid:
      return true;
    default:
      return false;
  }
}

void ObjectiveInstance::check_input(const Vec& x) const {
  require(int(x.size()) == dim_, Status::ArgumentError,
          "input dimension mismatch");
  require(x.allFinite(), Status::DomainError, "input is not finite");
}

double ObjectiveInstance::value(const Vec& x) const {
  check_input(x);
  return value_shifted(id_, x - offset_);
}

Vec ObjectiveInstance::gradient(const Vec& x) const {
  check_input(x);
  return grad_shifted(id_, x - offset_);
}

Mat ObjectiveInstance::hessian(const Vec& x) const {
  check_input(x);
  const Vec y = x - offset_;
  const int d = dim_;
  switch (id_) {
    case FunctionId::Sphere:
      return 2.0 * Mat::Identity(d, d);
    case FunctionId::Rosenbrock:
      return hess_rosenbrock(y);
    case FunctionId::SumOfSquares: {
      Mat h = Mat::Zero(d, d);
      for (int i = 0; i < d; ++i) h(i, i) = 2.0 * double(i + 1);
      return h;
    }
    case FunctionId::RotatedHyperEllipsoid: {
      Mat h = Mat::Zero(d, d);
      for (int j = 0; j < d; ++j) h(j, j) = 2.0 * double(d - j);
      return h;
    }
    case FunctionId::Trid: {
      Mat h = Mat::Zero(d, d);
      for (int i = 0; i < d; ++i) {
        h(i, i) = 2.0;
        if (i + 1 < d) {
          h(i, i + 1) = -1.0;
          h(i + 1, i) = -1.0;
        }
      }
      return h;
    }
    default:
      break;
  }
  // Central finite differences of the value, then symmetrize.
  const double h = 1e-4;
  Mat hess(d, d);
  Vec e = y;
  const double f0 = value_shifted(id_, y);
  for (int i = 0; i < d; ++i) {
    e[i] = y[i] + h;
    const double fp = value_shifted(id_, e);
    e[i] = y[i] - h;
    const double fm = value_shifted(id_, e);
    e[i] = y[i];
    hess(i, i) = (fp - 2.0 * f0 + fm) / (h * h);
    for (int j = i + 1; j < d; ++j) {
      e[i] = y[i] + h; e[j] = y[j] + h;
      const double fpp = value_shifted(id_, e);
      e[j] = y[j] - h;
      const double fpm = value_shifted(id_, e);
      e[i] = y[i] - h; e[j] = y[j] + h;
      const double fmp = value_shifted(id_, e);
      e[j] = y[j] - h;
      const double fmm = value_shifted(id_, e);
      e[i] = y[i]; e[j] = y[j];
      const double v = (fpp - fpm - fmp + fmm) / (4.0 * h * h);
      hess(i, j) = v;
      hess(j, i) = v;
    }
  }
  return 0.5 * (hess + hess.transpose());
}

std::pair<Vec, double> ObjectiveInstance::global_minimum() const {
  const int d = dim_;
  Vec xs = Vec::Zero(d);
  double fs = 0.0;
  switch (id_) {
    case FunctionId::Ackley:
    case FunctionId::Griewank:
    case FunctionId::Powell:
    case FunctionId::Rastrigin:
    case FunctionId::RotatedHyperEllipsoid:
    case FunctionId::Sphere:
    case FunctionId::SumOfPowers:
    case FunctionId::SumOfSquares:
    case FunctionId::Zakharov:
      break;  // origin, 0
    case FunctionId::DixonPrice:
      // 2 x_i^2 = x_{i-1} recurrence: x_i = 2^(2^(1-i) - 1), 1-based i.
      for (int i = 0; i < d; ++i)
        xs[i] = std::exp2(std::exp2(-double(i)) - 1.0);
      break;
    case FunctionId::Levy:
    case FunctionId::Rosenbrock:
      xs.setOnes();
      break;
    case FunctionId::Perm0DBeta:
      for (int i = 0; i < d; ++i) xs[i] = 1.0 / double(i + 1);
      break;
    case FunctionId::StyblinskiTang:
      xs.setConstant(kStyblinskiArg);
      fs = double(d) * 0.5 *
           (sq(sq(kStyblinskiArg)) - 16.0 * sq(kStyblinskiArg) +
            5.0 * kStyblinskiArg);
      break;
    case FunctionId::Trid:
      for (int i = 1; i <= d; ++i) xs[i - 1] = double(i) * double(d + 1 - i);
      fs = -double(d) * double(d + 4) * double(d - 1) / 6.0;
      break;
  }
  return {xs + offset_, fs};
}

Vec ObjectiveInstance::sample_x0(Rng& rng) const {
  Vec x(dim_);
  for (int i = 0; i < dim_; ++i) x[i] = rng.uniform(box_.lo, box_.hi);
  return x;
}

ObjectiveInstance sample_task(std::uint64_t seed,
                              const std::vector<FunctionId>& fn_set,
                              int dim_lo, int dim_hi) {
  require(!fn_set.empty(), Status::ArgumentError, "sample_task: empty fn_set");
  require(dim_lo >= 2 && dim_hi >= dim_lo, Status::ArgumentError,
          "sample_task: bad dim range");
  Rng rng(seed);
  const FunctionId id = fn_set[size_t(rng.uniform_int(int64_t(fn_set.size())))];
  const int req = dim_lo + int(rng.uniform_int(dim_hi - dim_lo + 1));
  const int d = effective_dim(id, req);
  const DomainBox box = domain_box(id, d);
  Vec offset(d);
  for (int i = 0; i < d; ++i) offset[i] = rng.uniform(box.lo, box.hi);
  return ObjectiveInstance(id, d, std::move(offset));
}

}  // namespace optlab::testfuncs
