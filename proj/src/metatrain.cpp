#include "metatrain.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <limits>

#include "status.hpp"
#include "tensor_archive.hpp"
#include "workpool.hpp"

namespace optlab::metatrain {

namespace fs = std::filesystem;

namespace {

constexpr std::uint64_t kParticleStream = 0x70617274u;  // particle seeds
constexpr std::uint64_t kValStream = 0x76616c69u;       // validation battery

testfuncs::ObjectiveInstance sample_particle_task(std::uint64_t seed,
                                                  const TaskConfig& tasks) {
  auto task = testfuncs::sample_task(seed, tasks.functions, tasks.dim_lo,
                                     tasks.dim_hi);
  if (!tasks.offsets) {
    task = testfuncs::ObjectiveInstance(task.id(), task.dim());
  }
  return task;
}

struct WindowEval {
  double mean_norm_loss = 0.0;
  bool ok = true;
};

// Unroll `steps` inner updates from st; mean of normalized losses at the
// visited points. Anything non-finite (or a numeric failure inside the
// update) yields the penalty instead.
WindowEval unroll_window(const nnet::OptimizerParams& params,
                         const testfuncs::ObjectiveInstance& task,
                         double f_star, optimus::InnerState& st, int steps,
                         double penalty, bool use_preconditioner) {
  WindowEval out;
  double sum = 0.0;
  try {
    for (int k = 0; k < steps; ++k) {
      Vec g = task.gradient(st.x);
      Vec dx = use_preconditioner ? optimus::optimus_step(params, st, g)
                                  : optimus::adafactor_mlp_step(params, st, g);
      st.x += dx;
      double f = task.value(st.x);
      if (!std::isfinite(f)) {
        out.ok = false;
        break;
      }
      sum += normalized_loss(f, f_star);
    }
  } catch (const Error&) {
    out.ok = false;
  }
  out.mean_norm_loss = out.ok ? sum / std::max(1, steps) : penalty;
  return out;
}

std::string step_path(const std::string& dir, const std::string& stem,
                      int step) {
  return dir + "/" + stem + "_" + std::to_string(step);
}

NamedTensor vec_tensor(const std::string& name, const Vec& v) {
  NamedTensor t;
  t.name = name;
  t.shape = {v.size()};
  t.data.assign(v.data(), v.data() + v.size());
  return t;
}

NamedTensor mat_tensor(const std::string& name, const Mat& m) {
  NamedTensor t;
  t.name = name;
  t.shape = {m.rows(), m.cols()};
  t.data.resize(std::size_t(m.rows()) * std::size_t(m.cols()));
  for (Eigen::Index r = 0; r < m.rows(); ++r)
    for (Eigen::Index c = 0; c < m.cols(); ++c)
      t.data[std::size_t(r) * std::size_t(m.cols()) + std::size_t(c)] =
          m(r, c);
  return t;
}

Vec tensor_vec(const TensorArchive& ar, const std::string& name) {
  const NamedTensor& t = ar.find(name);
  require(t.shape.size() == 1, Status::CheckpointError,
          "tensor " + name + " is not a vector");
  return Eigen::Map<const Vec>(t.data.data(), Eigen::Index(t.data.size()));
}

Mat tensor_mat(const TensorArchive& ar, const std::string& name) {
  const NamedTensor& t = ar.find(name);
  require(t.shape.size() == 2, Status::CheckpointError,
          "tensor " + name + " is not a matrix");
  Mat m(t.shape[0], t.shape[1]);
  for (Eigen::Index r = 0; r < m.rows(); ++r)
    for (Eigen::Index c = 0; c < m.cols(); ++c)
      m(r, c) = t.data[std::size_t(r) * std::size_t(m.cols()) + std::size_t(c)];
  return m;
}

void append_inner_state(TensorArchive& ar, const std::string& prefix,
                        const optimus::InnerState& st) {
  ar.tensors.push_back(vec_tensor(prefix + ".x", st.x));
  for (int j = 0; j < 3; ++j) {
    ar.tensors.push_back(
        vec_tensor(prefix + ".m" + std::to_string(j), st.feat.m[j]));
    ar.tensors.push_back(
        vec_tensor(prefix + ".r" + std::to_string(j), st.feat.fac_row[j]));
  }
  ar.tensors.push_back(vec_tensor(prefix + ".v", st.feat.v));
  ar.tensors.push_back(mat_tensor(prefix + ".B", st.precond));
}

nlohmann::json inner_state_meta(const optimus::InnerState& st) {
  return nlohmann::json{
      {"k", st.feat.k},
      {"col", {st.feat.fac_col[0], st.feat.fac_col[1], st.feat.fac_col[2]}}};
}

optimus::InnerState read_inner_state(const TensorArchive& ar,
                                     const std::string& prefix,
                                     const nlohmann::json& meta) {
  optimus::InnerState st = optimus::InnerState::init(tensor_vec(ar, prefix + ".x"));
  for (int j = 0; j < 3; ++j) {
    st.feat.m[j] = tensor_vec(ar, prefix + ".m" + std::to_string(j));
    st.feat.fac_row[j] = tensor_vec(ar, prefix + ".r" + std::to_string(j));
  }
  st.feat.v = tensor_vec(ar, prefix + ".v");
  st.precond = tensor_mat(ar, prefix + ".B");
  st.feat.k = meta.at("k").get<std::int64_t>();
  for (int j = 0; j < 3; ++j) st.feat.fac_col[j] = meta.at("col")[j].get<double>();
  return st;
}

void save_training_state(const std::string& path, const MetaTrainConfig& cfg,
                         const Vec& theta, const baselines::AdamState& adam,
                         const std::vector<PesParticle>& particles,
                         int meta_step, double wall_seconds, double val_first,
                         double val_best, bool have_val) {
  TensorArchive ar;
  ar.meta = {
      {"format", "optlab-train-state"},
      {"meta_step", meta_step},
      {"wall_seconds", wall_seconds},
      {"adam_t", adam.t},
      {"val_first", val_first},
      {"val_best", val_best},
      {"have_val", have_val},
      {"solver", cfg.solver},
      {"arch",
       {{"num_encoders", cfg.arch.num_encoders},
        {"d_model", cfg.arch.d_model},
        {"heads", cfg.arch.heads},
        {"ffn_width", cfg.arch.ffn_width},
        {"feature_count", cfg.arch.feature_count}}},
  };
  ar.tensors.push_back(vec_tensor("theta", theta));
  ar.tensors.push_back(vec_tensor("adam.m", adam.m));
  ar.tensors.push_back(vec_tensor("adam.v", adam.v));
  nlohmann::json plist = nlohmann::json::array();
  for (std::size_t i = 0; i < particles.size(); ++i) {
    const PesParticle& p = particles[i];
    const std::string prefix = "p" + std::to_string(i);
    Vec offset = p.task.offset().size() ? p.task.offset()
                                        : Vec(Vec::Zero(p.task.dim()));
    ar.tensors.push_back(vec_tensor(prefix + ".task.offset", offset));
    ar.tensors.push_back(vec_tensor(prefix + ".xi", p.xi));
    append_inner_state(ar, prefix + ".plus", p.plus);
    append_inner_state(ar, prefix + ".minus", p.minus);
    plist.push_back({{"fn", std::string(testfuncs::function_name(p.task.id()))},
                     {"dim", p.task.dim()},
                     {"steps_done", p.steps_done},
                     {"plus", inner_state_meta(p.plus)},
                     {"minus", inner_state_meta(p.minus)},
                     {"rng", p.rng.save_state()}});
  }
  ar.meta["particles"] = std::move(plist);
  ar.write(path);
}

struct LoadedState {
  Vec theta;
  baselines::AdamState adam;
  std::vector<PesParticle> particles;
  int meta_step = 0;
  double wall_seconds = 0.0;
  double val_first = 0.0;
  double val_best = 0.0;
  bool have_val = false;
};

LoadedState load_training_state(const std::string& path,
                                const MetaTrainConfig& cfg,
                                std::int64_t theta_dim) {
  TensorArchive ar = TensorArchive::read(path);
  require(ar.meta.value("format", "") == "optlab-train-state",
          Status::CheckpointError, "not a training-state file: " + path);
  const auto& am = ar.meta.at("arch");
  bool arch_ok = am.at("num_encoders") == cfg.arch.num_encoders &&
                 am.at("d_model") == cfg.arch.d_model &&
                 am.at("heads") == cfg.arch.heads &&
                 am.at("ffn_width") == cfg.arch.ffn_width &&
                 am.at("feature_count") == cfg.arch.feature_count;
  require(arch_ok, Status::CheckpointError,
          "training state architecture does not match the configuration");
  require(ar.meta.value("solver", "optimus") == cfg.solver,
          Status::CheckpointError,
          "training state solver does not match the configuration");

  LoadedState out;
  out.theta = tensor_vec(ar, "theta");
  require(out.theta.size() == theta_dim, Status::CheckpointError,
          "training state parameter count mismatch");
  out.adam = baselines::AdamState::init(int(theta_dim), cfg.meta.meta_lr);
  out.adam.m = tensor_vec(ar, "adam.m");
  out.adam.v = tensor_vec(ar, "adam.v");
  out.adam.t = ar.meta.at("adam_t").get<std::int64_t>();
  out.meta_step = ar.meta.at("meta_step").get<int>();
  out.wall_seconds = ar.meta.at("wall_seconds").get<double>();
  out.val_first = ar.meta.at("val_first").get<double>();
  out.val_best = ar.meta.at("val_best").get<double>();
  out.have_val = ar.meta.at("have_val").get<bool>();

  const auto& plist = ar.meta.at("particles");
  const std::size_t expect =
      std::size_t(cfg.meta.batch_size) * std::size_t(cfg.meta.antithetic_pairs);
  require(plist.size() == expect, Status::CheckpointError,
          "training state particle count does not match the configuration");
  out.particles.reserve(plist.size());
  for (std::size_t i = 0; i < plist.size(); ++i) {
    const auto& pj = plist[i];
    const std::string prefix = "p" + std::to_string(i);
    PesParticle p(0, cfg.tasks, theta_dim);  // placeholder; fields overwritten
    auto fn = testfuncs::function_from_name(pj.at("fn").get<std::string>());
    int dim = pj.at("dim").get<int>();
    p.task = testfuncs::ObjectiveInstance(
        fn, dim, tensor_vec(ar, prefix + ".task.offset"));
    p.f_star = p.task.global_minimum().second;
    p.xi = tensor_vec(ar, prefix + ".xi");
    require(p.xi.size() == theta_dim, Status::CheckpointError,
            "training state xi size mismatch");
    p.plus = read_inner_state(ar, prefix + ".plus", pj.at("plus"));
    p.minus = read_inner_state(ar, prefix + ".minus", pj.at("minus"));
    p.steps_done = pj.at("steps_done").get<int>();
    p.rng.load_state(pj.at("rng").get<std::string>());
    out.particles.push_back(std::move(p));
  }
  return out;
}

// Mean unperturbed window loss over copies of the particle states; used for
// the train-loss column of the step-0 curve row. Consumes no randomness.
double probe_train_loss(const Vec& theta, const nnet::ArchConfig& arch,
                        const nnet::StepConfig& hyper,
                        const std::vector<PesParticle>& particles,
                        const MetaConfig& meta, int jobs,
                        bool use_preconditioner) {
  auto params = nnet::OptimizerParams::from_flat(arch, hyper, theta);
  std::vector<double> losses(particles.size(), 0.0);
  parallel_for(particles.size(), jobs, [&](std::size_t i) {
    optimus::InnerState st = particles[i].plus;
    int steps =
        std::min(meta.truncation, meta.unroll_length - particles[i].steps_done);
    WindowEval we =
        unroll_window(params, particles[i].task, particles[i].f_star, st,
                      steps, meta.penalty, use_preconditioner);
    losses[i] = we.mean_norm_loss;
  });
  double sum = 0.0;
  for (double v : losses) sum += v;
  return sum / double(losses.size());
}

void check_config(const MetaTrainConfig& cfg) {
  require(!cfg.out_dir.empty(), Status::ConfigError, "out_dir is required");
  require(cfg.solver == "optimus" || cfg.solver == "adafactor_mlp",
          Status::ConfigError, "solver must be optimus or adafactor_mlp");
  require(cfg.meta.estimator == "pes" || cfg.meta.estimator == "es",
          Status::ConfigError, "estimator must be pes or es");
  require(cfg.meta.truncation >= 1, Status::ConfigError,
          "truncation must be >= 1");
  require(cfg.meta.unroll_length >= cfg.meta.truncation, Status::ConfigError,
          "unroll_length must be >= truncation");
  require(cfg.meta.batch_size >= 1, Status::ConfigError,
          "batch_size must be >= 1");
  require(cfg.meta.antithetic_pairs >= 1, Status::ConfigError,
          "antithetic_pairs must be >= 1");
  require(cfg.meta.sigma > 0, Status::ConfigError, "sigma must be positive");
  require(cfg.meta.meta_lr > 0, Status::ConfigError,
          "meta_lr must be positive");
  require(cfg.meta.total_meta_steps >= 0, Status::ConfigError,
          "total_meta_steps must be >= 0");
  require(cfg.meta.clip_norm > 0, Status::ConfigError,
          "clip_norm must be positive");
  require(cfg.val_interval >= 1, Status::ConfigError,
          "val_interval must be >= 1");
  require(cfg.val_task_count >= 1, Status::ConfigError,
          "val_task_count must be >= 1");
  require(cfg.val_budget >= 1, Status::ConfigError, "val_budget must be >= 1");
  require(!cfg.tasks.functions.empty(), Status::ConfigError,
          "task function set is empty");
  require(cfg.tasks.dim_lo >= 2 && cfg.tasks.dim_hi >= cfg.tasks.dim_lo,
          Status::ConfigError, "task dimension range is invalid");
  require(cfg.checkpoint_interval >= 0, Status::ConfigError,
          "checkpoint_interval must be >= 0");
}

}  // namespace

double normalized_loss(double loss, double f_star) {
  return std::log(std::max(loss - f_star, 1e-12));
}

Vec pes_contribution(const Vec& xi, double lw_plus, double lw_minus,
                     double sigma) {
  return xi * ((lw_plus - lw_minus) / (2.0 * sigma * sigma));
}

PesParticle::PesParticle(std::uint64_t seed, const TaskConfig& tasks,
                         std::int64_t theta_dim)
    : task(testfuncs::FunctionId::Sphere, 2),  // replaced by reset()
      rng(seed) {
  xi = Vec::Zero(theta_dim);
  reset(tasks);
}

void PesParticle::reset(const TaskConfig& tasks) {
  task = sample_particle_task(rng.next_u64(), tasks);
  f_star = task.global_minimum().second;
  Vec x0 = task.sample_x0(rng);
  plus = optimus::InnerState::init(x0);
  minus = optimus::InnerState::init(x0);
  xi.setZero();
  steps_done = 0;
}

std::vector<PesParticle> init_particles(std::uint64_t seed,
                                        const TaskConfig& tasks,
                                        const MetaConfig& meta,
                                        std::int64_t theta_dim) {
  const std::size_t count =
      std::size_t(meta.batch_size) * std::size_t(meta.antithetic_pairs);
  std::vector<PesParticle> out;
  out.reserve(count);
  const std::uint64_t base = mix_seed(seed, kParticleStream);
  for (std::size_t i = 0; i < count; ++i) {
    out.emplace_back(mix_seed(base, i), tasks, theta_dim);
  }
  return out;
}

MetaGradientResult pes_meta_gradient(const Vec& theta,
                                     const nnet::ArchConfig& arch,
                                     const nnet::StepConfig& hyper,
                                     std::vector<PesParticle>& particles,
                                     const TaskConfig& tasks,
                                     const MetaConfig& meta, int jobs,
                                     bool use_preconditioner) {
  require(!particles.empty(), Status::ConfigError, "no particles");
  const std::size_t n = particles.size();
  std::vector<double> weight(n, 0.0), lossavg(n, 0.0);
  std::vector<char> diverged(n, 0);

  parallel_for(n, jobs, [&](std::size_t idx) {
    PesParticle& p = particles[idx];
    Vec eps(theta.size());
    for (Eigen::Index j = 0; j < eps.size(); ++j)
      eps[j] = p.rng.normal(0.0, meta.sigma);
    auto plus_params = nnet::OptimizerParams::from_flat(arch, hyper, theta + eps);
    auto minus_params =
        nnet::OptimizerParams::from_flat(arch, hyper, theta - eps);
    const int steps =
        std::min(meta.truncation, meta.unroll_length - p.steps_done);
    WindowEval wp = unroll_window(plus_params, p.task, p.f_star, p.plus, steps,
                                  meta.penalty, use_preconditioner);
    WindowEval wm = unroll_window(minus_params, p.task, p.f_star, p.minus,
                                  steps, meta.penalty, use_preconditioner);
    p.xi += eps;
    weight[idx] =
        (wp.mean_norm_loss - wm.mean_norm_loss) / (2.0 * meta.sigma * meta.sigma);
    lossavg[idx] = 0.5 * (wp.mean_norm_loss + wm.mean_norm_loss);
    diverged[idx] = (!wp.ok || !wm.ok) ? 1 : 0;
    p.steps_done += steps;
  });

  MetaGradientResult out;
  out.grad = Vec::Zero(theta.size());
  double lsum = 0.0;
  for (std::size_t i = 0; i < n; ++i) {  // fixed index order
    out.grad += weight[i] * particles[i].xi;
    lsum += lossavg[i];
  }
  out.grad /= double(n);
  out.mean_window_loss = lsum / double(n);
  if (!out.grad.allFinite()) out.grad.setZero();  // defensive; penalties are finite

  for (std::size_t i = 0; i < n; ++i) {
    PesParticle& p = particles[i];
    if (diverged[i] != 0 || p.steps_done >= meta.unroll_length) {
      p.reset(tasks);
      ++out.resets;
    }
  }
  return out;
}

MetaGradientResult es_meta_gradient(const Vec& theta,
                                    const nnet::ArchConfig& arch,
                                    const nnet::StepConfig& hyper,
                                    std::vector<PesParticle>& particles,
                                    const TaskConfig& tasks,
                                    const MetaConfig& meta, int jobs,
                                    bool use_preconditioner) {
  require(!particles.empty(), Status::ConfigError, "no particles");
  const std::size_t n = particles.size();
  std::vector<double> weight(n, 0.0), lossavg(n, 0.0);
  std::vector<Vec> eps_store(n);

  parallel_for(n, jobs, [&](std::size_t idx) {
    PesParticle& p = particles[idx];
    Vec eps(theta.size());
    for (Eigen::Index j = 0; j < eps.size(); ++j)
      eps[j] = p.rng.normal(0.0, meta.sigma);
    auto plus_params = nnet::OptimizerParams::from_flat(arch, hyper, theta + eps);
    auto minus_params =
        nnet::OptimizerParams::from_flat(arch, hyper, theta - eps);
    const int steps =
        std::min(meta.truncation, meta.unroll_length - p.steps_done);
    WindowEval wp = unroll_window(plus_params, p.task, p.f_star, p.plus, steps,
                                  meta.penalty, use_preconditioner);
    WindowEval wm = unroll_window(minus_params, p.task, p.f_star, p.minus,
                                  steps, meta.penalty, use_preconditioner);
    weight[idx] =
        (wp.mean_norm_loss - wm.mean_norm_loss) / (2.0 * meta.sigma * meta.sigma);
    lossavg[idx] = 0.5 * (wp.mean_norm_loss + wm.mean_norm_loss);
    eps_store[idx] = std::move(eps);
  });

  MetaGradientResult out;
  out.grad = Vec::Zero(theta.size());
  double lsum = 0.0;
  for (std::size_t i = 0; i < n; ++i) {  // fixed index order
    out.grad += weight[i] * eps_store[i];
    lsum += lossavg[i];
  }
  out.grad /= double(n);
  out.mean_window_loss = lsum / double(n);
  if (!out.grad.allFinite()) out.grad.setZero();

  // Every window is an independent episode.
  for (PesParticle& p : particles) {
    p.reset(tasks);
    ++out.resets;
  }
  return out;
}

void meta_update(Vec& theta, baselines::AdamState& adam,
                 const Vec& grad_estimate, double clip_norm) {
  Vec g = grad_estimate;
  const double gn = g.norm();
  if (std::isfinite(gn) && gn > clip_norm && gn > 0.0) g *= clip_norm / gn;
  theta += baselines::adam_step(adam, g);
}

std::vector<ValTask> make_validation_tasks(std::uint64_t seed,
                                           const TaskConfig& tasks,
                                           int count) {
  const std::uint64_t base = mix_seed(seed, kValStream);
  std::vector<ValTask> out;
  out.reserve(std::size_t(count));
  for (int i = 0; i < count; ++i) {
    auto task = sample_particle_task(mix_seed(base, std::uint64_t(2 * i)), tasks);
    double f_star = task.global_minimum().second;
    Rng rng(mix_seed(base, std::uint64_t(2 * i + 1)));
    Vec x0 = task.sample_x0(rng);
    out.push_back(ValTask{std::move(task), f_star, std::move(x0)});
  }
  return out;
}

double validate(const Vec& theta, const nnet::ArchConfig& arch,
                const nnet::StepConfig& hyper,
                const std::vector<ValTask>& val_tasks, int budget, int jobs,
                bool use_preconditioner) {
  require(!val_tasks.empty(), Status::ConfigError, "no validation tasks");
  auto params = nnet::OptimizerParams::from_flat(arch, hyper, theta);
  std::vector<double> losses(val_tasks.size(), 0.0);
  parallel_for(val_tasks.size(), jobs, [&](std::size_t i) {
    optimus::RunOptions opts;
    opts.use_value_rule = false;  // fixed budget, no early stop
    opts.stop.max_iters = budget;
    Trajectory traj = optimus::run(params, val_tasks[i].task, val_tasks[i].x0,
                                   opts, use_preconditioner);
    double f = traj.final_loss();
    losses[i] = (traj.terminated_by == Termination::Error || !std::isfinite(f))
                    ? 1e6
                    : normalized_loss(f, val_tasks[i].f_star);
  });
  double sum = 0.0;
  for (double v : losses) sum += v;
  return sum / double(losses.size());
}

MetaTrainResult meta_train(const MetaTrainConfig& cfg) {
  check_config(cfg);
  const int jobs = resolve_jobs(cfg.jobs);
  const bool use_precond = cfg.solver == "optimus";
  std::error_code ec;
  fs::create_directories(cfg.out_dir, ec);
  require(!ec, Status::IoError, "cannot create out_dir: " + cfg.out_dir);

  auto params0 = nnet::init_params(cfg.seed, cfg.arch, cfg.hyper);
  Vec theta = params0.flatten();
  const std::int64_t dim = theta.size();
  auto adam = baselines::AdamState::init(int(dim), cfg.meta.meta_lr);
  auto particles = init_particles(cfg.seed, cfg.tasks, cfg.meta, dim);
  auto val_tasks =
      make_validation_tasks(cfg.seed, cfg.tasks, cfg.val_task_count);

  MetaTrainResult res;
  int start_step = 0;
  double wall_offset = 0.0;
  double val_first = 0.0;
  double val_best = std::numeric_limits<double>::infinity();
  bool have_val = false;

  const bool resuming = !cfg.resume_path.empty();
  if (resuming) {
    LoadedState st = load_training_state(cfg.resume_path, cfg, dim);
    theta = std::move(st.theta);
    adam = std::move(st.adam);
    particles = std::move(st.particles);
    start_step = st.meta_step;
    wall_offset = st.wall_seconds;
    val_first = st.val_first;
    val_best = st.have_val ? st.val_best
                           : std::numeric_limits<double>::infinity();
    have_val = st.have_val;
  }

  const std::string curve_path = cfg.out_dir + "/curve.csv";
  const bool append_curve = resuming && fs::exists(curve_path);
  std::ofstream curve(curve_path,
                      append_curve ? std::ios::app : std::ios::trunc);
  require(curve.good(), Status::IoError, "cannot open " + curve_path);
  if (!append_curve) curve << "meta_step,wall_seconds,train_loss,val_loss\n";
  res.files_written.push_back(curve_path);

  const auto t0 = std::chrono::steady_clock::now();
  auto wall = [&] {
    return wall_offset + std::chrono::duration<double>(
                             std::chrono::steady_clock::now() - t0)
                             .count();
  };
  auto emit_row = [&](int step, double train_loss, double val_loss) {
    CurveRow row{step, wall(), train_loss, val_loss};
    char buf[160];
    std::snprintf(buf, sizeof(buf), "%d,%.6f,%.17g,%.17g\n", row.meta_step,
                  row.wall_seconds, row.train_loss, row.val_loss);
    curve << buf;
    curve.flush();
    res.curve.push_back(row);
  };
  auto save_ckpt = [&](const std::string& path) {
    nnet::OptimizerParams::from_flat(cfg.arch, cfg.hyper, theta)
        .save(path, cfg.seed);
    res.files_written.push_back(path);
  };
  const std::string best_path = cfg.out_dir + "/ckpt_best";
  auto save_state_file = [&](int step) {
    const std::string path = step_path(cfg.out_dir, "state", step);
    save_training_state(path, cfg, theta, adam, particles, step, wall(),
                        val_first, val_best, have_val);
    res.files_written.push_back(path);
  };

  if (start_step == 0) {
    double v0 = validate(theta, cfg.arch, cfg.hyper, val_tasks, cfg.val_budget,
                         jobs, use_precond);
    double p0 = probe_train_loss(theta, cfg.arch, cfg.hyper, particles,
                                 cfg.meta, jobs, use_precond);
    val_first = v0;
    val_best = v0;
    have_val = true;
    emit_row(0, p0, v0);
    save_ckpt(best_path);
  }

  double interval_sum = 0.0;
  int interval_n = 0;
  for (int s = start_step + 1; s <= cfg.meta.total_meta_steps; ++s) {
    MetaGradientResult g =
        cfg.meta.estimator == "pes"
            ? pes_meta_gradient(theta, cfg.arch, cfg.hyper, particles,
                                cfg.tasks, cfg.meta, jobs, use_precond)
            : es_meta_gradient(theta, cfg.arch, cfg.hyper, particles,
                               cfg.tasks, cfg.meta, jobs, use_precond);
    meta_update(theta, adam, g.grad, cfg.meta.clip_norm);
    interval_sum += g.mean_window_loss;
    ++interval_n;

    const bool last = s == cfg.meta.total_meta_steps;
    if (s % cfg.val_interval == 0 || last) {
      double v = validate(theta, cfg.arch, cfg.hyper, val_tasks,
                          cfg.val_budget, jobs, use_precond);
      emit_row(s, interval_sum / double(std::max(1, interval_n)), v);
      interval_sum = 0.0;
      interval_n = 0;
      if (!have_val || v < val_best) {
        val_best = v;
        have_val = true;
        save_ckpt(best_path);
      }
    }
    if (cfg.checkpoint_interval > 0 && s % cfg.checkpoint_interval == 0 &&
        !last) {
      save_ckpt(step_path(cfg.out_dir, "ckpt", s));
      if (cfg.save_state) save_state_file(s);
    }
  }

  const std::string final_path =
      step_path(cfg.out_dir, "ckpt", cfg.meta.total_meta_steps);
  save_ckpt(final_path);
  if (cfg.save_state) save_state_file(cfg.meta.total_meta_steps);

  res.params = nnet::OptimizerParams::from_flat(cfg.arch, cfg.hyper, theta);
  res.val_first = val_first;
  res.val_best = val_best;
  res.final_checkpoint = final_path;
  res.best_checkpoint = best_path;
  return res;
}

}  // namespace optlab::metatrain
