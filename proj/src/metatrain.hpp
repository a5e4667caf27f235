#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "baselines.hpp"
#include "optimus.hpp"

namespace optlab::metatrain {

struct TaskConfig {
  std::vector<testfuncs::FunctionId> functions;
  int dim_lo = 2;
  int dim_hi = 100;
  bool offsets = true;
};

struct MetaConfig {
  int unroll_length = 50;    // inner steps per episode (no stop rule inside)
  int truncation = 5;        // K, steps per PES window
  int antithetic_pairs = 1;  // >1 adds independent particles per batch slot
  double sigma = 0.01;       // perturbation std
  int batch_size = 32;
  double meta_lr = 5e-4;
  double clip_norm = 3.0;
  int total_meta_steps = 100;
  double penalty = 1e6;      // window loss when anything goes non-finite
  std::string estimator = "pes";  // "pes" | "es"
};

// Inner-loss normalization for benchmark tasks: log regret, floored.
double normalized_loss(double loss, double f_star);

// One antithetic contribution: xi * (lw_plus - lw_minus) / (2 sigma^2).
// xi must already include the current window's perturbation.
Vec pes_contribution(const Vec& xi, double lw_plus, double lw_minus,
                     double sigma);

// Persistent-pair particle: one sampled task, the theta+eps / theta-eps
// trajectories, and the accumulated perturbation xi.
struct PesParticle {
  testfuncs::ObjectiveInstance task;
  double f_star = 0.0;
  optimus::InnerState plus, minus;
  Vec xi;
  int steps_done = 0;
  Rng rng;  // particle-local stream; owns task/x0/eps draws

  PesParticle(std::uint64_t seed, const TaskConfig& tasks,
              std::int64_t theta_dim);
  // New task, fresh inner states, xi = 0.
  void reset(const TaskConfig& tasks);
};

std::vector<PesParticle> init_particles(std::uint64_t seed,
                                        const TaskConfig& tasks,
                                        const MetaConfig& meta,
                                        std::int64_t theta_dim);

struct MetaGradientResult {
  Vec grad;
  double mean_window_loss = 0.0;  // mean over particles of (lw+ + lw-)/2
  int resets = 0;
};

// Persistent evolution strategies: per particle draw eps ~ N(0, sigma^2 I),
// unroll both perturbed trajectories K steps, accumulate xi, and average the
// contributions in particle index order (parallel-safe determinism).
// Particles hitting the unroll boundary (or divergence) are reset.
MetaGradientResult pes_meta_gradient(const Vec& theta,
                                     const nnet::ArchConfig& arch,
                                     const nnet::StepConfig& hyper,
                                     std::vector<PesParticle>& particles,
                                     const TaskConfig& tasks,
                                     const MetaConfig& meta, int jobs,
                                     bool use_preconditioner = true);

// Vanilla antithetic ES: identical machinery, but every window starts a
// fresh episode and weights by the current eps alone. Bitwise-equal to PES
// when truncation == unroll_length.
MetaGradientResult es_meta_gradient(const Vec& theta,
                                    const nnet::ArchConfig& arch,
                                    const nnet::StepConfig& hyper,
                                    std::vector<PesParticle>& particles,
                                    const TaskConfig& tasks,
                                    const MetaConfig& meta, int jobs,
                                    bool use_preconditioner = true);

// Clip the estimate to clip_norm, then one Adam step on theta. The Adam
// state carries the meta learning rate.
void meta_update(Vec& theta, baselines::AdamState& adam,
                 const Vec& grad_estimate, double clip_norm);

// Fixed validation battery: full unperturbed rollouts, mean normalized
// final loss.
struct ValTask {
  testfuncs::ObjectiveInstance task;
  double f_star;
  Vec x0;
};
std::vector<ValTask> make_validation_tasks(std::uint64_t seed,
                                           const TaskConfig& tasks, int count);
double validate(const Vec& theta, const nnet::ArchConfig& arch,
                const nnet::StepConfig& hyper,
                const std::vector<ValTask>& val_tasks, int budget, int jobs,
                bool use_preconditioner = true);

// ---------------------------------------------------------------------------

struct MetaTrainConfig {
  std::uint64_t seed = 0;
  std::string out_dir;
  std::string solver = "optimus";  // "optimus" | "adafactor_mlp"
  nnet::ArchConfig arch;
  nnet::StepConfig hyper;
  TaskConfig tasks;
  MetaConfig meta;
  int val_interval = 50;
  int val_task_count = 8;
  int val_budget = 50;
  int checkpoint_interval = 0;  // 0: only final + best
  bool save_state = false;      // resumable training state next to ckpts
  int jobs = 1;
  std::string resume_path;      // training-state file to resume from
};

struct CurveRow {
  int meta_step;
  double wall_seconds;
  double train_loss;
  double val_loss;
};

struct MetaTrainResult {
  nnet::OptimizerParams params;
  std::vector<CurveRow> curve;
  double val_first = 0.0;
  double val_best = 0.0;
  std::string final_checkpoint;
  std::string best_checkpoint;
  std::vector<std::string> files_written;
};

MetaTrainResult meta_train(const MetaTrainConfig& cfg);

}  // namespace optlab::metatrain
