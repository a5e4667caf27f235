#include "optlab/optlab.h"

#include <cstring>
#include <new>
#include <string>

#include "commands.hpp"
#include "nnet.hpp"
#include "runner.hpp"
#include "status.hpp"
#include "testfuncs.hpp"
#include "version.hpp"

namespace {

using namespace optlab;

thread_local std::string g_last_error;

int status_code(Status s) {
  switch (s) {
    case Status::Ok: return OPTLAB_OK;
    case Status::ArgumentError: return OPTLAB_ERR_ARGUMENT;
    case Status::DomainError: return OPTLAB_ERR_DOMAIN;
    case Status::ConfigError: return OPTLAB_ERR_CONFIG;
    case Status::CheckpointError: return OPTLAB_ERR_CHECKPOINT;
    case Status::DataError: return OPTLAB_ERR_DATA;
    case Status::NumericError: return OPTLAB_ERR_NUMERIC;
    case Status::IoError: return OPTLAB_ERR_IO;
    case Status::InternalError: return OPTLAB_ERR_INTERNAL;
  }
  return OPTLAB_ERR_INTERNAL;
}

template <typename Fn>
int guarded(Fn&& fn) {
  try {
    fn();
    return OPTLAB_OK;
  } catch (const Error& e) {
    g_last_error = e.what();
    return status_code(e.status());
  } catch (const std::bad_alloc&) {
    g_last_error = "out of memory";
    return OPTLAB_ERR_INTERNAL;
  } catch (const std::exception& e) {
    g_last_error = e.what();
    return OPTLAB_ERR_INTERNAL;
  } catch (...) {
    g_last_error = "unknown error";
    return OPTLAB_ERR_INTERNAL;
  }
}

int arg_error(const char* msg) {
  g_last_error = msg;
  return OPTLAB_ERR_ARGUMENT;
}

nlohmann::json parse_json_arg(const char* text, const char* what) {
  if (text == nullptr || text[0] == '\0') return nlohmann::json::object();
  try {
    return nlohmann::json::parse(text);
  } catch (const nlohmann::json::exception& e) {
    fail(Status::ConfigError, std::string(what) + ": " + e.what());
  }
}

}  // namespace

struct optlab_objective {
  optlab::testfuncs::ObjectiveInstance inst;
};

struct optlab_params {
  optlab::nnet::OptimizerParams params;
};

extern "C" {

const char* optlab_version(void) { return optlab::kVersion; }

const char* optlab_last_error(void) { return g_last_error.c_str(); }

int optlab_objective_create(const char* name, int dim, const double* offset,
                            optlab_objective** out) {
  if (out == nullptr) return arg_error("out is NULL");
  *out = nullptr;
  if (name == nullptr) return arg_error("name is NULL");
  return guarded([&] {
    const auto id = testfuncs::function_from_name(name);
    Vec off;
    if (offset != nullptr) {
      off = Eigen::Map<const Vec>(offset, dim);
    }
    *out = new optlab_objective{
        testfuncs::ObjectiveInstance(id, dim, off)};
  });
}

void optlab_objective_destroy(optlab_objective* obj) { delete obj; }

int optlab_objective_dim(const optlab_objective* obj) {
  return obj == nullptr ? 0 : obj->inst.dim();
}

int optlab_objective_value(const optlab_objective* obj, const double* x,
                           size_t n, double* out) {
  if (obj == nullptr || x == nullptr || out == nullptr)
    return arg_error("NULL argument to optlab_objective_value");
  return guarded([&] {
    require(int(n) == obj->inst.dim(), Status::ArgumentError,
            "x has wrong length");
    *out = obj->inst.value(Eigen::Map<const Vec>(x, Eigen::Index(n)));
  });
}

int optlab_objective_gradient(const optlab_objective* obj, const double* x,
                              size_t n, double* out) {
  if (obj == nullptr || x == nullptr || out == nullptr)
    return arg_error("NULL argument to optlab_objective_gradient");
  return guarded([&] {
    require(int(n) == obj->inst.dim(), Status::ArgumentError,
            "x has wrong length");
    const Vec g = obj->inst.gradient(Eigen::Map<const Vec>(x, Eigen::Index(n)));
    Eigen::Map<Vec>(out, g.size()) = g;
  });
}

int optlab_objective_minimum(const optlab_objective* obj, double* x_star,
                             double* f_star) {
  if (obj == nullptr) return arg_error("obj is NULL");
  return guarded([&] {
    const auto [xs, fs] = obj->inst.global_minimum();
    if (x_star != nullptr) Eigen::Map<Vec>(x_star, xs.size()) = xs;
    if (f_star != nullptr) *f_star = fs;
  });
}

int optlab_params_init(const char* arch_json, uint64_t seed,
                       optlab_params** out) {
  if (out == nullptr) return arg_error("out is NULL");
  *out = nullptr;
  return guarded([&] {
    const nlohmann::json j = parse_json_arg(arch_json, "arch_json");
    nnet::ArchConfig arch;
    nnet::StepConfig hyper;
    for (auto it = j.begin(); it != j.end(); ++it) {
      const std::string& k = it.key();
      if (k == "num_encoders") arch.num_encoders = it.value().get<int>();
      else if (k == "d_model") arch.d_model = it.value().get<int>();
      else if (k == "heads") arch.heads = it.value().get<int>();
      else if (k == "ffn_width") arch.ffn_width = it.value().get<int>();
      else if (k == "feature_count") arch.feature_count = it.value().get<int>();
      else if (k == "lambda_a") hyper.lambda_a = it.value().get<double>();
      else if (k == "lambda_b") hyper.lambda_b = it.value().get<double>();
      else fail(Status::ConfigError, "arch_json: unknown key " + k);
    }
    *out = new optlab_params{nnet::init_params(seed, arch, hyper)};
  });
}

int optlab_params_load(const char* path, optlab_params** out) {
  if (out == nullptr) return arg_error("out is NULL");
  *out = nullptr;
  if (path == nullptr) return arg_error("path is NULL");
  return guarded([&] {
    *out = new optlab_params{nnet::OptimizerParams::load(path)};
  });
}

int optlab_params_save(const optlab_params* params, const char* path) {
  if (params == nullptr || path == nullptr)
    return arg_error("NULL argument to optlab_params_save");
  return guarded([&] { params->params.save(path, 0); });
}

void optlab_params_destroy(optlab_params* params) { delete params; }

int64_t optlab_params_count(const optlab_params* params) {
  return params == nullptr ? 0 : params->params.param_count();
}

int optlab_run_solver(const char* solver_json, const optlab_params* params,
                      const optlab_objective* objective, const double* x0,
                      size_t n, const char* stop_json, uint64_t run_seed,
                      optlab_trajectory* out) {
  if (out == nullptr) return arg_error("out is NULL");
  std::memset(out, 0, sizeof(*out));
  if (objective == nullptr || x0 == nullptr)
    return arg_error("NULL argument to optlab_run_solver");
  if (solver_json == nullptr) return arg_error("solver_json is NULL");
  return guarded([&] {
    const nlohmann::json sj = parse_json_arg(solver_json, "solver_json");
    require(sj.is_object() && sj.contains("name"), Status::ConfigError,
            "solver_json must be an object with a \"name\" key");
    runner::SolverSpec spec;
    for (auto it = sj.begin(); it != sj.end(); ++it) {
      const std::string& k = it.key();
      if (k == "name") spec.name = it.value().get<std::string>();
      else if (k == "label") spec.label = it.value().get<std::string>();
      else if (k == "lr") spec.lr = it.value().get<double>();
      else if (k == "hops") spec.hops = it.value().get<int>();
      else if (k == "perturb_scale")
        spec.perturb_scale = it.value().get<double>();
      else if (k == "inner") spec.inner = it.value().get<std::string>();
      else fail(Status::ConfigError, "solver_json: unknown key " + k);
    }
    require(runner::is_known_solver(spec.name), Status::ConfigError,
            "unknown solver: " + spec.name);

    optimus::StopConfig stop;
    const nlohmann::json st = parse_json_arg(stop_json, "stop_json");
    for (auto it = st.begin(); it != st.end(); ++it) {
      const std::string& k = it.key();
      if (k == "window") stop.window = it.value().get<int>();
      else if (k == "beta") stop.beta = it.value().get<double>();
      else if (k == "epsilon") stop.epsilon = it.value().get<double>();
      else if (k == "max_iters") stop.max_iters = it.value().get<int>();
      else fail(Status::ConfigError, "stop_json: unknown key " + k);
    }

    runner::LoadedSolver solver;
    solver.spec = spec;
    if (runner::solver_needs_checkpoint(spec.name) ||
        (spec.name == "basin_hopping" &&
         runner::solver_needs_checkpoint(spec.inner))) {
      require(params != nullptr, Status::ArgumentError,
              "learned solver requires params");
      solver.params = params->params;
    }

    const Vec x0v = Eigen::Map<const Vec>(x0, Eigen::Index(n));
    require(int(n) == objective->inst.dim(), Status::ArgumentError,
            "x0 has wrong length");
    Trajectory traj =
        runner::run_one(solver, objective->inst, x0v, stop, run_seed);

    const std::size_t len = traj.losses.size();
    out->losses = len ? new double[len] : nullptr;
    out->evals_cum = len ? new int64_t[len] : nullptr;
    for (std::size_t i = 0; i < len; ++i) {
      out->losses[i] = traj.losses[i];
      out->evals_cum[i] = traj.evals_cum[i];
    }
    out->len = len;
    out->func_evals = traj.func_evals;
    switch (traj.terminated_by) {
      case Termination::Stopped: out->terminated_by = 0; break;
      case Termination::MaxIters: out->terminated_by = 1; break;
      case Termination::Error: out->terminated_by = 2; break;
    }
  });
}

void optlab_trajectory_free(optlab_trajectory* traj) {
  if (traj == nullptr) return;
  delete[] traj->losses;
  delete[] traj->evals_cum;
  std::memset(traj, 0, sizeof(*traj));
}

int optlab_run_command(const char* command, const char* config_path,
                       const char* const* overrides, size_t n_overrides) {
  if (command == nullptr) return arg_error("command is NULL");
  if (n_overrides > 0 && overrides == nullptr)
    return arg_error("overrides is NULL");
  return guarded([&] {
    std::vector<std::string> ov;
    ov.reserve(n_overrides);
    for (size_t i = 0; i < n_overrides; ++i) {
      require(overrides[i] != nullptr, Status::ArgumentError,
              "override entry is NULL");
      ov.emplace_back(overrides[i]);
    }
    const nlohmann::json cfg = commands::load_config(
        config_path == nullptr ? std::string() : std::string(config_path), ov);
    commands::run_command(command, cfg);
  });
}

}  // extern "C"
