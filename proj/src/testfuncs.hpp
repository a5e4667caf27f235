#pragma once

#include <Eigen/Core>
#include <array>
#include <cstdint>
#include <string_view>
#include <utility>
#include <vector>

#include "rng.hpp"

namespace optlab {

using Vec = Eigen::VectorXd;
using Mat = Eigen::MatrixXd;

namespace testfuncs {

enum class FunctionId {
  Ackley,
  DixonPrice,
  Griewank,
  Levy,
  Perm0DBeta,
  Powell,
  Rastrigin,
  Rosenbrock,
  RotatedHyperEllipsoid,
  Sphere,
  StyblinskiTang,
  SumOfPowers,
  SumOfSquares,
  Trid,
  Zakharov,
};

inline constexpr int kFunctionCount = 15;
const std::array<FunctionId, kFunctionCount>& all_functions();

// Serialized ids are lower_snake_case ("dixon_price", "perm_0_d_beta", ...).
std::string_view function_name(FunctionId id);
FunctionId function_from_name(std::string_view name);

// Powell rounds the requested dimension down to a multiple of 4 (floor 4);
// everything else keeps it. Requested dim < 2 is an argument error.
int effective_dim(FunctionId id, int requested_dim);

struct DomainBox {
  double lo;
  double hi;
  double width() const { return hi - lo; }
};
DomainBox domain_box(FunctionId id, int dim);

// A shifted instance: evaluates f(x - offset). Immutable after construction.
class ObjectiveInstance {
 public:
  // offset must match the effective dimension; empty offset means zero shift.
  ObjectiveInstance(FunctionId id, int requested_dim, Vec offset = Vec());

  FunctionId id() const { return id_; }
  int dim() const { return dim_; }
  const Vec& offset() const { return offset_; }
  DomainBox box() const { return box_; }
  bool has_analytic_hessian() const;

  double value(const Vec& x) const;
  Vec gradient(const Vec& x) const;
  // Analytic where available, else central finite differences (h = 1e-4),
  // symmetrized. Always exactly symmetric.
  Mat hessian(const Vec& x) const;
  // (x_star, f_star) of the shifted instance.
  std::pair<Vec, double> global_minimum() const;
  // Uniform draw from the domain box.
  Vec sample_x0(Rng& rng) const;

 private:
  void check_input(const Vec& x) const;

  FunctionId id_;
  int dim_;
  Vec offset_;
  DomainBox box_;
};

// Uniform function from fn_set, uniform dim in [dim_lo, dim_hi] (then Powell
// rounding), offset uniform in the function's domain box. Deterministic in
// the seed. Draw order: function, dim, offset coordinates.
ObjectiveInstance sample_task(std::uint64_t seed,
                              const std::vector<FunctionId>& fn_set,
                              int dim_lo, int dim_hi);

}  // namespace testfuncs
}  // namespace optlab
