#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>
#include <cstring>
#include <filesystem>
#include <string>
#include <vector>

#include <optlab/optlab.h>

#include "testfuncs.hpp"

namespace fs = std::filesystem;

namespace {

fs::path fresh_dir(const std::string& name) {
  fs::path dir = fs::temp_directory_path() / name;
  fs::remove_all(dir);
  fs::create_directories(dir);
  return dir;
}

}  // namespace

TEST_CASE("version and error-message plumbing") {
  const char* v = optlab_version();
  REQUIRE(v != nullptr);
  CHECK(std::strlen(v) > 0);

  // A failing call sets a thread-local message.
  optlab_objective* obj = nullptr;
  CHECK(optlab_objective_create("not_a_function", 4, nullptr, &obj) ==
        OPTLAB_ERR_ARGUMENT);
  CHECK(obj == nullptr);
  CHECK(std::strlen(optlab_last_error()) > 0);
}

TEST_CASE("null arguments are argument errors, never crashes") {
  optlab_objective* obj = nullptr;
  CHECK(optlab_objective_create(nullptr, 4, nullptr, &obj) ==
        OPTLAB_ERR_ARGUMENT);
  CHECK(optlab_objective_create("sphere", 4, nullptr, nullptr) ==
        OPTLAB_ERR_ARGUMENT);
  CHECK(optlab_objective_dim(nullptr) == 0);
  double out = 0.0;
  CHECK(optlab_objective_value(nullptr, &out, 1, &out) ==
        OPTLAB_ERR_ARGUMENT);
  CHECK(optlab_params_count(nullptr) == 0);
  optlab_params* p = nullptr;
  CHECK(optlab_params_load(nullptr, &p) == OPTLAB_ERR_ARGUMENT);
  CHECK(optlab_params_save(nullptr, "/tmp/x") == OPTLAB_ERR_ARGUMENT);
  CHECK(optlab_run_command(nullptr, nullptr, nullptr, 0) ==
        OPTLAB_ERR_ARGUMENT);
  // Destroy functions accept NULL.
  optlab_objective_destroy(nullptr);
  optlab_params_destroy(nullptr);
  optlab_trajectory_free(nullptr);
}

TEST_CASE("objective lifecycle matches the core library") {
  optlab_objective* obj = nullptr;
  REQUIRE(optlab_objective_create("rosenbrock", 2, nullptr, &obj) ==
          OPTLAB_OK);
  REQUIRE(obj != nullptr);
  CHECK(optlab_objective_dim(obj) == 2);

  const double x[2] = {0.0, 0.0};
  double f = -1.0;
  CHECK(optlab_objective_value(obj, x, 2, &f) == OPTLAB_OK);
  CHECK(f == 1.0);  // (1-0)^2

  double g[2] = {0.0, 0.0};
  CHECK(optlab_objective_gradient(obj, x, 2, g) == OPTLAB_OK);
  CHECK(g[0] == -2.0);
  CHECK(g[1] == 0.0);

  double xs[2], fs;
  CHECK(optlab_objective_minimum(obj, xs, &fs) == OPTLAB_OK);
  CHECK(xs[0] == 1.0);
  CHECK(xs[1] == 1.0);
  CHECK(fs == 0.0);
  // Either output may be skipped.
  CHECK(optlab_objective_minimum(obj, nullptr, &fs) == OPTLAB_OK);
  CHECK(optlab_objective_minimum(obj, xs, nullptr) == OPTLAB_OK);

  // Dimension mismatch and non-finite input are mapped statuses.
  CHECK(optlab_objective_value(obj, x, 1, &f) != OPTLAB_OK);
  const double bad[2] = {std::nan(""), 0.0};
  CHECK(optlab_objective_value(obj, bad, 2, &f) == OPTLAB_ERR_DOMAIN);
  optlab_objective_destroy(obj);

  // Offsets shift the instance; Powell's dimension rounds down.
  const double offset[4] = {1.0, 2.0, 3.0, 4.0};
  optlab_objective* shifted = nullptr;
  REQUIRE(optlab_objective_create("sphere", 4, offset, &shifted) == OPTLAB_OK);
  double fo = -1.0;
  CHECK(optlab_objective_value(shifted, offset, 4, &fo) == OPTLAB_OK);
  CHECK(fo == 0.0);
  optlab_objective_destroy(shifted);

  optlab_objective* pw = nullptr;
  REQUIRE(optlab_objective_create("powell", 6, nullptr, &pw) == OPTLAB_OK);
  CHECK(optlab_objective_dim(pw) == 4);
  optlab_objective_destroy(pw);

  CHECK(optlab_objective_create("sphere", 0, nullptr, &obj) != OPTLAB_OK);
}

TEST_CASE("parameter handles initialize, save, load, and count") {
  auto dir = fresh_dir("optlab_capi_params");
  optlab_params* p = nullptr;
  REQUIRE(optlab_params_init("", 11, &p) == OPTLAB_OK);
  REQUIRE(p != nullptr);
  // The default architecture's exact scalar count.
  CHECK(optlab_params_count(p) == 638469);

  const std::string path = (dir / "ckpt").string();
  CHECK(optlab_params_save(p, path.c_str()) == OPTLAB_OK);
  optlab_params* q = nullptr;
  REQUIRE(optlab_params_load(path.c_str(), &q) == OPTLAB_OK);
  CHECK(optlab_params_count(q) == 638469);
  optlab_params_destroy(q);
  optlab_params_destroy(p);

  // Custom architecture via JSON, unknown keys rejected.
  optlab_params* tiny = nullptr;
  REQUIRE(optlab_params_init(
              R"({"num_encoders":1,"d_model":8,"heads":2,"ffn_width":16})", 5,
              &tiny) == OPTLAB_OK);
  CHECK(optlab_params_count(tiny) > 0);
  CHECK(optlab_params_count(tiny) < 638469);
  optlab_params_destroy(tiny);

  optlab_params* bad = nullptr;
  CHECK(optlab_params_init(R"({"layers":9})", 5, &bad) == OPTLAB_ERR_CONFIG);
  CHECK(bad == nullptr);
  CHECK(optlab_params_init("{not json", 5, &bad) == OPTLAB_ERR_CONFIG);
  CHECK(optlab_params_load((dir / "nope").string().c_str(), &bad) ==
        OPTLAB_ERR_CHECKPOINT);
  fs::remove_all(dir);
}

TEST_CASE("solver runs produce trajectories through the C surface") {
  optlab_objective* obj = nullptr;
  REQUIRE(optlab_objective_create("sphere", 4, nullptr, &obj) == OPTLAB_OK);
  std::vector<double> x0 = {2.0, -1.0, 0.5, 1.5};

  optlab_trajectory traj{};
  REQUIRE(optlab_run_solver(R"({"name":"bfgs"})", nullptr, obj, x0.data(),
                            x0.size(), R"({"max_iters":30})", 0,
                            &traj) == OPTLAB_OK);
  REQUIRE(traj.len >= 2);
  REQUIRE(traj.losses != nullptr);
  REQUIRE(traj.evals_cum != nullptr);
  CHECK(traj.losses[0] == doctest::Approx(4.0 + 1.0 + 0.25 + 2.25));
  double best = traj.losses[0];
  for (size_t i = 0; i < traj.len; ++i) best = std::min(best, traj.losses[i]);
  CHECK(best < 1e-12);
  CHECK(traj.evals_cum[0] >= 1);
  for (size_t i = 1; i < traj.len; ++i)
    CHECK(traj.evals_cum[i] > traj.evals_cum[i - 1]);
  CHECK(traj.func_evals >= traj.evals_cum[traj.len - 1]);
  CHECK((traj.terminated_by == 0 || traj.terminated_by == 1));
  optlab_trajectory_free(&traj);
  CHECK(traj.losses == nullptr);  // free resets the struct

  // Determinism through the C boundary.
  optlab_trajectory a{}, b{};
  REQUIRE(optlab_run_solver(R"({"name":"adam","lr":0.1})", nullptr, obj,
                            x0.data(), x0.size(), nullptr, 0, &a) ==
          OPTLAB_OK);
  REQUIRE(optlab_run_solver(R"({"name":"adam","lr":0.1})", nullptr, obj,
                            x0.data(), x0.size(), nullptr, 0, &b) ==
          OPTLAB_OK);
  REQUIRE(a.len == b.len);
  for (size_t i = 0; i < a.len; ++i) CHECK(a.losses[i] == b.losses[i]);
  optlab_trajectory_free(&a);
  optlab_trajectory_free(&b);

  // Learned solvers require parameters.
  optlab_trajectory t2{};
  CHECK(optlab_run_solver(R"({"name":"optimus"})", nullptr, obj, x0.data(),
                          x0.size(), nullptr, 0, &t2) == OPTLAB_ERR_ARGUMENT);
  optlab_params* p = nullptr;
  REQUIRE(optlab_params_init(
              R"({"num_encoders":1,"d_model":8,"heads":2,"ffn_width":16})", 3,
              &p) == OPTLAB_OK);
  REQUIRE(optlab_run_solver(R"({"name":"optimus"})", p, obj, x0.data(),
                            x0.size(), R"({"max_iters":10})", 0,
                            &t2) == OPTLAB_OK);
  CHECK(t2.len >= 1);
  for (size_t i = 0; i < t2.len; ++i) CHECK(std::isfinite(t2.losses[i]));
  optlab_trajectory_free(&t2);
  optlab_params_destroy(p);

  // Unknown solver key and bad JSON are config errors.
  CHECK(optlab_run_solver(R"({"name":"adam","momentum":0.9})", nullptr, obj,
                          x0.data(), x0.size(), nullptr, 0,
                          &t2) == OPTLAB_ERR_CONFIG);
  CHECK(optlab_run_solver("{oops", nullptr, obj, x0.data(), x0.size(),
                          nullptr, 0, &t2) == OPTLAB_ERR_CONFIG);
  CHECK(optlab_run_solver(R"({"name":"adam"})", nullptr, obj, x0.data(), 3,
                          nullptr, 0, &t2) == OPTLAB_ERR_ARGUMENT);
  optlab_objective_destroy(obj);
}

TEST_CASE("commands run through the C surface") {
  auto dir = fresh_dir("optlab_capi_cmd");
  const std::string out_override = "out_dir=" + (dir / "tune").string();
  const char* overrides[] = {
      out_override.c_str(), "optimizer=adam",   "functions=[\"sphere\"]",
      "dims=[2]",           "inits=2",          "budget_iters=5",
      "grid.size=3",        "seed=1",
  };
  CHECK(optlab_run_command("tune", nullptr, overrides, 8) == OPTLAB_OK);
  CHECK(fs::exists(dir / "tune" / "manifest.json"));
  CHECK(fs::exists(dir / "tune" / "tune_adam_sphere_d2.json"));

  CHECK(optlab_run_command("no-such-command", nullptr, nullptr, 0) ==
        OPTLAB_ERR_ARGUMENT);
  const char* bad[] = {"definitely_not_a_key=1"};
  CHECK(optlab_run_command("tune", nullptr, bad, 1) == OPTLAB_ERR_CONFIG);
  fs::remove_all(dir);
}
