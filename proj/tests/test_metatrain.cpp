#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>
#include <cstdint>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <string>
#include <vector>

#include "metatrain.hpp"
#include "nnet.hpp"
#include "rng.hpp"
#include "status.hpp"
#include "testfuncs.hpp"

using namespace optlab;
namespace mt = optlab::metatrain;
namespace fs = std::filesystem;

namespace {

nnet::ArchConfig tiny_arch() {
  nnet::ArchConfig a;
  a.num_encoders = 1;
  a.d_model = 8;
  a.heads = 2;
  a.ffn_width = 16;
  a.feature_count = 38;
  return a;
}

mt::TaskConfig sphere_tasks() {
  mt::TaskConfig t;
  t.functions = {testfuncs::FunctionId::Sphere};
  t.dim_lo = 2;
  t.dim_hi = 3;
  t.offsets = true;
  return t;
}

bool bitwise_equal(const Vec& a, const Vec& b) {
  if (a.size() != b.size()) return false;
  for (Eigen::Index i = 0; i < a.size(); ++i)
    if (a[i] != b[i]) return false;
  return true;
}

std::string read_bytes(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  REQUIRE(in.good());
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

fs::path fresh_dir(const std::string& name) {
  fs::path dir = fs::temp_directory_path() / name;
  fs::remove_all(dir);
  fs::create_directories(dir);
  return dir;
}

Status error_status(const std::function<void()>& fn) {
  try {
    fn();
  } catch (const Error& e) {
    return e.status();
  }
  return Status::Ok;
}

}  // namespace

TEST_CASE("normalized loss is floored log regret") {
  CHECK(mt::normalized_loss(2.0, 1.0) == doctest::Approx(0.0));
  CHECK(mt::normalized_loss(1.0 + std::exp(1.0), 1.0) ==
        doctest::Approx(1.0));
  // At or below the optimum the regret is floored at 1e-12.
  CHECK(mt::normalized_loss(1.0, 1.0) ==
        doctest::Approx(std::log(1e-12)));
  CHECK(mt::normalized_loss(0.5, 1.0) ==
        doctest::Approx(std::log(1e-12)));
  CHECK(mt::normalized_loss(3.5, -1.5) == doctest::Approx(std::log(5.0)));
}

TEST_CASE("antithetic contribution weights xi by the loss gap") {
  Vec xi(3);
  xi << 1.0, -2.0, 3.0;
  Vec c = mt::pes_contribution(xi, 5.0, 2.0, 0.1);
  // (5 - 2) / (2 * 0.01) = 150
  CHECK(c[0] == doctest::Approx(150.0));
  CHECK(c[1] == doctest::Approx(-300.0));
  CHECK(c[2] == doctest::Approx(450.0));

  Vec zero = mt::pes_contribution(xi, 4.0, 4.0, 0.1);
  CHECK(zero.norm() == 0.0);
}

TEST_CASE("antithetic estimator is unbiased on a linear objective") {
  // For L(theta) = a . theta the pair estimate eps * (L(theta+eps) -
  // L(theta-eps)) / (2 sigma^2) has expectation exactly a.
  Rng rng(123);
  Vec a(3);
  a << 1.0, -2.0, 1.5;
  Vec theta(3);
  theta << 0.3, -0.7, 0.2;
  const double sigma = 0.1;
  const int pairs = 20000;
  Vec mean = Vec::Zero(3);
  for (int p = 0; p < pairs; ++p) {
    Vec eps(3);
    for (int j = 0; j < 3; ++j) eps[j] = rng.normal(0.0, sigma);
    const double lp = a.dot(theta + eps);
    const double lm = a.dot(theta - eps);
    mean += mt::pes_contribution(eps, lp, lm, sigma);
  }
  mean /= double(pairs);
  for (int j = 0; j < 3; ++j) {
    CAPTURE(j);
    CHECK(std::abs(mean[j] - a[j]) <= 0.05 * std::abs(a[j]));
  }
}

TEST_CASE("particle initialization is deterministic and antithetic") {
  auto tasks = sphere_tasks();
  mt::MetaConfig meta;
  meta.batch_size = 3;
  meta.antithetic_pairs = 2;
  auto a = mt::init_particles(42, tasks, meta, 10);
  auto b = mt::init_particles(42, tasks, meta, 10);
  REQUIRE(a.size() == 6);  // batch_size * antithetic_pairs
  REQUIRE(b.size() == 6);
  for (std::size_t i = 0; i < a.size(); ++i) {
    CHECK(a[i].task.id() == b[i].task.id());
    CHECK(a[i].task.dim() == b[i].task.dim());
    CHECK(bitwise_equal(a[i].plus.x, b[i].plus.x));
    // Fresh particles: both trajectories start at the same point, xi = 0.
    CHECK(bitwise_equal(a[i].plus.x, a[i].minus.x));
    CHECK(a[i].xi.size() == 10);
    CHECK(a[i].xi.norm() == 0.0);
    CHECK(a[i].steps_done == 0);
    // Starting point lies inside the sampled function's domain box.
    auto box = testfuncs::domain_box(a[i].task.id(), a[i].task.dim());
    for (Eigen::Index j = 0; j < a[i].plus.x.size(); ++j) {
      CHECK(a[i].plus.x[j] >= box.lo);
      CHECK(a[i].plus.x[j] <= box.hi);
    }
  }
  // Reset draws a new episode and clears the accumulator.
  Vec old_x = a[0].plus.x;
  a[0].xi.setConstant(1.0);
  a[0].steps_done = 3;
  a[0].reset(tasks);
  CHECK(a[0].xi.norm() == 0.0);
  CHECK(a[0].steps_done == 0);
  CHECK(bitwise_equal(a[0].plus.x, a[0].minus.x));
  CHECK_FALSE(bitwise_equal(a[0].plus.x, old_x));
}

TEST_CASE("persistent and vanilla estimators agree when the window spans the episode") {
  auto arch = tiny_arch();
  nnet::StepConfig hyper;
  auto tasks = sphere_tasks();
  mt::MetaConfig meta;
  meta.unroll_length = 4;
  meta.truncation = 4;  // one window per episode
  meta.batch_size = 3;
  meta.antithetic_pairs = 1;
  meta.sigma = 0.01;
  Vec theta = nnet::init_params(5, arch, hyper).flatten();

  auto pa = mt::init_particles(9, tasks, meta, theta.size());
  auto pb = mt::init_particles(9, tasks, meta, theta.size());
  for (int window = 0; window < 2; ++window) {
    CAPTURE(window);
    auto gp = mt::pes_meta_gradient(theta, arch, hyper, pa, tasks, meta, 1);
    auto ge = mt::es_meta_gradient(theta, arch, hyper, pb, tasks, meta, 1);
    CHECK(bitwise_equal(gp.grad, ge.grad));
    CHECK(gp.mean_window_loss == ge.mean_window_loss);
    // Both reset every particle: persistent hits the episode boundary, the
    // vanilla estimator resets by definition.
    CHECK(gp.resets == 3);
    CHECK(ge.resets == 3);
    CHECK(gp.grad.allFinite());
    CHECK(gp.grad.norm() > 0.0);
  }
}

TEST_CASE("persistent estimator accumulates perturbations across windows") {
  auto arch = tiny_arch();
  nnet::StepConfig hyper;
  auto tasks = sphere_tasks();
  mt::MetaConfig meta;
  meta.unroll_length = 4;
  meta.truncation = 2;  // two windows per episode
  meta.batch_size = 2;
  meta.antithetic_pairs = 1;
  meta.sigma = 0.01;
  Vec theta = nnet::init_params(5, arch, hyper).flatten();

  auto pa = mt::init_particles(9, tasks, meta, theta.size());
  auto pb = mt::init_particles(9, tasks, meta, theta.size());

  // Window 1: xi equals the first perturbation, so both estimators see the
  // same weighting and must agree bit for bit. No particle is reset yet in
  // the persistent variant.
  auto gp1 = mt::pes_meta_gradient(theta, arch, hyper, pa, tasks, meta, 1);
  auto ge1 = mt::es_meta_gradient(theta, arch, hyper, pb, tasks, meta, 1);
  CHECK(bitwise_equal(gp1.grad, ge1.grad));
  CHECK(gp1.resets == 0);
  CHECK(ge1.resets == 2);
  for (const auto& p : pa) {
    CHECK(p.steps_done == 2);
    CHECK(p.xi.norm() > 0.0);
  }

  // Window 2: the persistent estimator keeps the old episode and weights by
  // the accumulated xi; the vanilla estimator starts fresh. They diverge.
  auto gp2 = mt::pes_meta_gradient(theta, arch, hyper, pa, tasks, meta, 1);
  auto ge2 = mt::es_meta_gradient(theta, arch, hyper, pb, tasks, meta, 1);
  CHECK_FALSE(bitwise_equal(gp2.grad, ge2.grad));
  // Second window reaches steps_done == unroll_length: every particle resets.
  CHECK(gp2.resets == 2);
  for (const auto& p : pa) {
    CHECK(p.steps_done == 0);
    CHECK(p.xi.norm() == 0.0);
  }
}

TEST_CASE("window clamps to the remaining episode budget") {
  auto arch = tiny_arch();
  nnet::StepConfig hyper;
  auto tasks = sphere_tasks();
  mt::MetaConfig meta;
  meta.unroll_length = 5;
  meta.truncation = 3;  // windows of 3 then 2
  meta.batch_size = 2;
  meta.antithetic_pairs = 1;
  Vec theta = nnet::init_params(5, arch, hyper).flatten();
  auto parts = mt::init_particles(11, tasks, meta, theta.size());

  auto g1 = mt::pes_meta_gradient(theta, arch, hyper, parts, tasks, meta, 1);
  CHECK(g1.resets == 0);
  for (const auto& p : parts) CHECK(p.steps_done == 3);
  auto g2 = mt::pes_meta_gradient(theta, arch, hyper, parts, tasks, meta, 1);
  CHECK(g2.resets == 2);  // 3 + 2 steps exhaust the 5-step episode
  for (const auto& p : parts) CHECK(p.steps_done == 0);
}

TEST_CASE("divergent inner trajectories earn the penalty and a reset") {
  auto arch = tiny_arch();
  nnet::StepConfig hyper;
  auto tasks = sphere_tasks();
  mt::MetaConfig meta;
  meta.unroll_length = 4;
  meta.truncation = 2;
  meta.batch_size = 2;
  meta.antithetic_pairs = 1;
  meta.penalty = 1e6;
  // Enormous parameters overflow the step magnitude immediately.
  Vec theta = nnet::init_params(5, arch, hyper).flatten() * 1e12;
  auto parts = mt::init_particles(3, tasks, meta, theta.size());

  auto g = mt::pes_meta_gradient(theta, arch, hyper, parts, tasks, meta, 1);
  // Both sides of every pair blow up, so each loss gap is zero and the mean
  // window loss is exactly the penalty.
  CHECK(g.mean_window_loss == 1e6);
  CHECK(g.grad.allFinite());
  CHECK(g.grad.norm() == 0.0);
  CHECK(g.resets == 2);
  for (const auto& p : parts) CHECK(p.steps_done == 0);
}

TEST_CASE("meta update clips the estimate then applies one Adam step") {
  Vec theta = Vec::Zero(4);
  auto adam = baselines::AdamState::init(4, 0.1);
  Vec grad(4);
  grad << 30.0, 0.0, 0.0, 0.0;  // norm 30 -> clipped to 3
  mt::meta_update(theta, adam, grad, 3.0);
  // Bias-corrected first Adam step is ~ -lr * sign(g).
  CHECK(theta[0] == doctest::Approx(-0.1).epsilon(1e-5));
  CHECK(theta[1] == 0.0);
  CHECK(theta[2] == 0.0);
  CHECK(theta[3] == 0.0);
  CHECK(adam.t == 1);

  // Below the clip threshold the update must match a raw Adam step exactly.
  Vec theta2 = Vec::Zero(4);
  auto adam2 = baselines::AdamState::init(4, 0.1);
  Vec small(4);
  small << 0.5, -1.0, 0.25, 0.0;  // norm < 3
  auto adam_ref = baselines::AdamState::init(4, 0.1);
  Vec expect = baselines::adam_step(adam_ref, small);
  mt::meta_update(theta2, adam2, small, 3.0);
  CHECK(bitwise_equal(theta2, expect));
}

TEST_CASE("meta gradient is invariant to the worker count") {
  auto arch = tiny_arch();
  nnet::StepConfig hyper;
  mt::TaskConfig tasks;
  tasks.functions = {testfuncs::FunctionId::Sphere,
                     testfuncs::FunctionId::Rosenbrock};
  tasks.dim_lo = 2;
  tasks.dim_hi = 4;
  mt::MetaConfig meta;
  meta.unroll_length = 4;
  meta.truncation = 2;
  meta.batch_size = 4;
  meta.antithetic_pairs = 1;
  Vec theta = nnet::init_params(21, arch, hyper).flatten();

  auto pa = mt::init_particles(33, tasks, meta, theta.size());
  auto pb = mt::init_particles(33, tasks, meta, theta.size());
  for (int window = 0; window < 3; ++window) {
    CAPTURE(window);
    auto g1 = mt::pes_meta_gradient(theta, arch, hyper, pa, tasks, meta, 1);
    auto g4 = mt::pes_meta_gradient(theta, arch, hyper, pb, tasks, meta, 4);
    CHECK(bitwise_equal(g1.grad, g4.grad));
    CHECK(g1.mean_window_loss == g4.mean_window_loss);
    CHECK(g1.resets == g4.resets);
    for (std::size_t i = 0; i < pa.size(); ++i) {
      CHECK(bitwise_equal(pa[i].xi, pb[i].xi));
      CHECK(bitwise_equal(pa[i].plus.x, pb[i].plus.x));
      CHECK(bitwise_equal(pa[i].minus.x, pb[i].minus.x));
      CHECK(pa[i].steps_done == pb[i].steps_done);
    }
  }
}

TEST_CASE("validation battery is deterministic and parallel-safe") {
  auto arch = tiny_arch();
  nnet::StepConfig hyper;
  auto tasks = sphere_tasks();
  Vec theta = nnet::init_params(77, arch, hyper).flatten();

  auto va = mt::make_validation_tasks(5, tasks, 4);
  auto vb = mt::make_validation_tasks(5, tasks, 4);
  REQUIRE(va.size() == 4);
  for (std::size_t i = 0; i < va.size(); ++i) {
    CHECK(va[i].task.id() == vb[i].task.id());
    CHECK(va[i].task.dim() == vb[i].task.dim());
    CHECK(va[i].f_star == vb[i].f_star);
    CHECK(bitwise_equal(va[i].x0, vb[i].x0));
  }
  double l1 = mt::validate(theta, arch, hyper, va, 5, 1);
  double l3 = mt::validate(theta, arch, hyper, vb, 5, 3);
  CHECK(l1 == l3);
  CHECK(std::isfinite(l1));
}

TEST_CASE("meta training writes a curve, checkpoints, and resumable state") {
  auto dir_a = fresh_dir("optlab_mt_full");
  auto dir_b = fresh_dir("optlab_mt_resume");

  mt::MetaTrainConfig cfg;
  cfg.seed = 2024;
  cfg.out_dir = dir_a.string();
  cfg.solver = "optimus";
  cfg.arch = tiny_arch();
  cfg.tasks = sphere_tasks();
  cfg.meta.unroll_length = 4;
  cfg.meta.truncation = 2;
  cfg.meta.batch_size = 2;
  cfg.meta.antithetic_pairs = 1;
  cfg.meta.total_meta_steps = 6;
  cfg.val_interval = 3;
  cfg.val_task_count = 2;
  cfg.val_budget = 5;
  cfg.checkpoint_interval = 3;
  cfg.save_state = true;
  cfg.jobs = 1;

  auto res = mt::meta_train(cfg);
  CHECK(fs::exists(dir_a / "curve.csv"));
  CHECK(fs::exists(dir_a / "ckpt_best"));
  CHECK(fs::exists(dir_a / "ckpt_3"));
  CHECK(fs::exists(dir_a / "state_3"));
  CHECK(fs::exists(dir_a / "ckpt_6"));
  CHECK(fs::exists(dir_a / "state_6"));
  CHECK(res.final_checkpoint == (dir_a / "ckpt_6").string());
  CHECK(res.best_checkpoint == (dir_a / "ckpt_best").string());
  REQUIRE(res.curve.size() == 3);  // steps 0, 3, 6
  CHECK(res.curve[0].meta_step == 0);
  CHECK(res.curve[1].meta_step == 3);
  CHECK(res.curve[2].meta_step == 6);
  for (const auto& row : res.curve) {
    CHECK(std::isfinite(row.train_loss));
    CHECK(std::isfinite(row.val_loss));
  }
  CHECK(res.val_first == res.curve[0].val_loss);
  CHECK(res.val_best <= res.val_first);

  // Curve file: header plus one line per emitted row.
  {
    std::ifstream in((dir_a / "curve.csv").string());
    std::string line;
    REQUIRE(std::getline(in, line));
    CHECK(line == "meta_step,wall_seconds,train_loss,val_loss");
    int rows = 0;
    while (std::getline(in, line))
      if (!line.empty()) ++rows;
    CHECK(rows == 3);
  }

  // Loading the final checkpoint reproduces the trained parameters exactly.
  auto loaded = nnet::OptimizerParams::load(res.final_checkpoint);
  CHECK(bitwise_equal(loaded.flatten(), res.params.flatten()));

  // Resume from the midpoint into a fresh directory: the continued run must
  // produce a byte-identical final checkpoint and identical curve numbers.
  mt::MetaTrainConfig cfg_b = cfg;
  cfg_b.out_dir = dir_b.string();
  cfg_b.resume_path = (dir_a / "state_3").string();
  auto res_b = mt::meta_train(cfg_b);
  CHECK(read_bytes((dir_a / "ckpt_6").string()) ==
        read_bytes((dir_b / "ckpt_6").string()));
  REQUIRE(res_b.curve.size() == 1);  // only the step-6 row
  CHECK(res_b.curve[0].meta_step == 6);
  CHECK(res_b.curve[0].train_loss == res.curve[2].train_loss);
  CHECK(res_b.curve[0].val_loss == res.curve[2].val_loss);
  CHECK(res_b.val_first == res.val_first);

  fs::remove_all(dir_a);
  fs::remove_all(dir_b);
}

TEST_CASE("resuming rejects mismatched architecture, solver, or batch") {
  auto dir = fresh_dir("optlab_mt_reject");

  mt::MetaTrainConfig cfg;
  cfg.seed = 3;
  cfg.out_dir = dir.string();
  cfg.arch = tiny_arch();
  cfg.tasks = sphere_tasks();
  cfg.meta.unroll_length = 2;
  cfg.meta.truncation = 2;
  cfg.meta.batch_size = 2;
  cfg.meta.total_meta_steps = 2;
  cfg.val_interval = 2;
  cfg.val_task_count = 1;
  cfg.val_budget = 2;
  cfg.checkpoint_interval = 1;
  cfg.save_state = true;
  auto res = mt::meta_train(cfg);
  const std::string state = (dir / "state_1").string();
  REQUIRE(fs::exists(state));

  mt::MetaTrainConfig bad = cfg;
  bad.resume_path = state;
  bad.arch.d_model = 16;
  bad.arch.ffn_width = 32;
  CHECK(error_status([&] { mt::meta_train(bad); }) ==
        Status::CheckpointError);

  bad = cfg;
  bad.resume_path = state;
  bad.solver = "adafactor_mlp";
  CHECK(error_status([&] { mt::meta_train(bad); }) ==
        Status::CheckpointError);

  bad = cfg;
  bad.resume_path = state;
  bad.meta.batch_size = 3;
  CHECK(error_status([&] { mt::meta_train(bad); }) ==
        Status::CheckpointError);

  bad = cfg;
  bad.resume_path = (dir / "no_such_state").string();
  CHECK(error_status([&] { mt::meta_train(bad); }) ==
        Status::CheckpointError);

  fs::remove_all(dir);
}

TEST_CASE("configuration validation rejects bad settings") {
  mt::MetaTrainConfig cfg;
  cfg.out_dir = (fs::temp_directory_path() / "optlab_mt_cfg").string();
  cfg.arch = tiny_arch();
  cfg.tasks = sphere_tasks();
  cfg.meta.total_meta_steps = 0;

  auto expect_config_error = [&](auto mutate) {
    mt::MetaTrainConfig c = cfg;
    mutate(c);
    CHECK(error_status([&] { mt::meta_train(c); }) == Status::ConfigError);
  };
  expect_config_error([](auto& c) { c.out_dir.clear(); });
  expect_config_error([](auto& c) { c.solver = "bfgs"; });
  expect_config_error([](auto& c) { c.meta.estimator = "spsa"; });
  expect_config_error([](auto& c) { c.meta.truncation = 0; });
  expect_config_error([](auto& c) {
    c.meta.unroll_length = 3;
    c.meta.truncation = 5;
  });
  expect_config_error([](auto& c) { c.meta.batch_size = 0; });
  expect_config_error([](auto& c) { c.meta.antithetic_pairs = 0; });
  expect_config_error([](auto& c) { c.meta.sigma = 0.0; });
  expect_config_error([](auto& c) { c.meta.meta_lr = 0.0; });
  expect_config_error([](auto& c) { c.meta.clip_norm = 0.0; });
  expect_config_error([](auto& c) { c.meta.total_meta_steps = -1; });
  expect_config_error([](auto& c) { c.val_interval = 0; });
  expect_config_error([](auto& c) { c.val_task_count = 0; });
  expect_config_error([](auto& c) { c.val_budget = 0; });
  expect_config_error([](auto& c) { c.tasks.functions.clear(); });
  expect_config_error([](auto& c) { c.tasks.dim_lo = 1; });
  expect_config_error([](auto& c) {
    c.tasks.dim_lo = 5;
    c.tasks.dim_hi = 3;
  });
  expect_config_error([](auto& c) { c.checkpoint_interval = -1; });
  fs::remove_all(cfg.out_dir);
}
