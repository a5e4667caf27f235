#include "commands.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <map>
#include <set>

#include "bench.hpp"
#include "metatrain.hpp"
#include "resultio.hpp"
#include "runner.hpp"
#include "status.hpp"
#include "version.hpp"
#include "workpool.hpp"

namespace optlab::commands {

namespace fs = std::filesystem;
using nlohmann::json;

namespace {

// ---------------------------------------------------------------- plumbing

json default_function_names() {
  json arr = json::array();
  for (auto id : testfuncs::all_functions())
    arr.push_back(std::string(testfuncs::function_name(id)));
  return arr;
}

json arch_schema() {
  return json{{"num_encoders", 3}, {"d_model", 128},      {"heads", 4},
              {"ffn_width", 512},  {"feature_count", 38}};
}

json hyper_schema() { return json{{"lambda_a", 0.1}, {"lambda_b", 0.1}}; }

json stop_schema() {
  return json{
      {"window", 5}, {"beta", 1.0}, {"epsilon", 1e-8}, {"max_iters", 200}};
}

json solver_proto() {
  return json{{"name", ""},          {"label", ""},
              {"lr", 0.01},          {"checkpoint", ""},
              {"hops", 4},           {"perturb_scale", 0.0},
              {"inner", "bfgs"}};
}

void apply_override(json& cfg, const std::string& spec) {
  const auto eq = spec.find('=');
  require(eq != std::string::npos && eq > 0, Status::ConfigError,
          "override must be key=value: " + spec);
  const std::string key = spec.substr(0, eq);
  const std::string raw = spec.substr(eq + 1);
  json value;
  try {
    value = json::parse(raw);
  } catch (const json::exception&) {
    value = raw;  // unquoted strings
  }
  json* node = &cfg;
  std::size_t start = 0;
  while (true) {
    const auto dot = key.find('.', start);
    const std::string part = key.substr(
        start, dot == std::string::npos ? std::string::npos : dot - start);
    require(!part.empty(), Status::ConfigError, "bad override key: " + key);
    if (dot == std::string::npos) {
      (*node)[part] = value;
      break;
    }
    if (!node->contains(part) || !(*node)[part].is_object())
      (*node)[part] = json::object();
    node = &(*node)[part];
    start = dot + 1;
  }
}

double json_number(const json& j, const std::string& where) {
  require(j.is_number(), Status::ConfigError, where + " must be a number");
  return j.get<double>();
}

std::string join_path(const std::string& dir, const std::string& name) {
  return dir + "/" + name;
}

// Deterministic decimal text for CSV cells: shortest round-trip via the JSON
// serializer, with explicit non-finite spellings.
std::string num(double x) {
  if (std::isnan(x)) return "nan";
  if (std::isinf(x)) return x > 0 ? "inf" : "-inf";
  return json(x).dump();
}

std::ofstream open_out(const std::string& path) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  require(out.good(), Status::IoError, "cannot open for write: " + path);
  return out;
}

void ensure_dir(const std::string& dir) {
  require(!dir.empty(), Status::ConfigError, "out_dir is required");
  std::error_code ec;
  fs::create_directories(dir, ec);
  require(!ec, Status::IoError, "cannot create directory: " + dir);
}

// Identifies the computation-relevant configuration. Placement and execution
// keys (directories, worker count) cannot change any result, so they are
// excluded: reruns into another directory or with another job count produce
// records with the same hash.
std::string config_hash(const json& effective) {
  json scientific = effective;
  for (const char* key : {"out_dir", "results_dir", "jobs"}) {
    scientific.erase(key);
  }
  return resultio::hash_hex(resultio::fnv1a64(scientific.dump()));
}

void write_manifest(const std::string& out_dir, const std::string& command,
                    const json& effective, std::vector<std::string> files,
                    double wall_seconds) {
  for (auto& f : files) {
    std::error_code ec;
    const fs::path rel = fs::relative(f, out_dir, ec);
    if (!ec && !rel.empty() && rel.string().rfind("..", 0) != 0)
      f = rel.generic_string();
  }
  std::sort(files.begin(), files.end());
  files.erase(std::unique(files.begin(), files.end()), files.end());
  json m;
  m["format"] = "optlab-manifest";
  m["artifact"] = kArtifactName;
  m["version"] = kVersion;
  m["command"] = command;
  m["config"] = effective;
  m["config_hash"] = config_hash(effective);
  m["files"] = files;
  m["wall_seconds_total"] = wall_seconds;  // informational; not byte-stable
  auto out = open_out(join_path(out_dir, "manifest.json"));
  out << m.dump(2) << "\n";
  require(out.good(), Status::IoError, "manifest write failed");
}

class WallTimer {
 public:
  double seconds() const {
    return std::chrono::duration<double>(std::chrono::steady_clock::now() - t0_)
        .count();
  }

 private:
  std::chrono::steady_clock::time_point t0_ = std::chrono::steady_clock::now();
};

// ------------------------------------------------------------- config parse

std::vector<testfuncs::FunctionId> parse_functions(const json& arr) {
  require(arr.is_array() && !arr.empty(), Status::ConfigError,
          "functions must be a non-empty array of names");
  std::vector<testfuncs::FunctionId> out;
  out.reserve(arr.size());
  for (const auto& v : arr) {
    require(v.is_string(), Status::ConfigError,
            "functions entries must be strings");
    try {
      out.push_back(testfuncs::function_from_name(v.get<std::string>()));
    } catch (const Error&) {
      fail(Status::ConfigError, "unknown function: " + v.get<std::string>());
    }
  }
  return out;
}

std::vector<int> parse_dims(const json& arr) {
  require(arr.is_array() && !arr.empty(), Status::ConfigError,
          "dims must be a non-empty array of integers");
  std::vector<int> out;
  for (const auto& v : arr) {
    require(v.is_number_integer(), Status::ConfigError,
            "dims entries must be integers");
    out.push_back(v.get<int>());
    require(out.back() >= 2, Status::ConfigError, "dims entries must be >= 2");
  }
  return out;
}

nnet::ArchConfig parse_arch(const json& j) {
  nnet::ArchConfig a;
  a.num_encoders = j.at("num_encoders").get<int>();
  a.d_model = j.at("d_model").get<int>();
  a.heads = j.at("heads").get<int>();
  a.ffn_width = j.at("ffn_width").get<int>();
  a.feature_count = j.at("feature_count").get<int>();
  return a;
}

nnet::StepConfig parse_hyper(const json& j) {
  nnet::StepConfig h;
  h.lambda_a = json_number(j.at("lambda_a"), "hyper.lambda_a");
  h.lambda_b = json_number(j.at("lambda_b"), "hyper.lambda_b");
  return h;
}

optimus::StopConfig parse_stop(const json& j) {
  optimus::StopConfig s;
  s.window = j.at("window").get<int>();
  s.beta = json_number(j.at("beta"), "stop.beta");
  s.epsilon = json_number(j.at("epsilon"), "stop.epsilon");
  s.max_iters = j.at("max_iters").get<int>();
  require(s.window >= 1, Status::ConfigError, "stop.window must be >= 1");
  require(s.max_iters >= 0, Status::ConfigError,
          "stop.max_iters must be >= 0");
  return s;
}

bool valid_label(const std::string& s) {
  if (s.empty()) return false;
  for (char c : s) {
    const bool ok = (c >= 'a' && c <= 'z') || (c >= 'A' && c <= 'Z') ||
                    (c >= '0' && c <= '9') || c == '_' || c == '-';
    if (!ok) return false;
  }
  return true;
}

runner::SolverSpec parse_solver(const json& j) {
  runner::SolverSpec s;
  s.name = j.at("name").get<std::string>();
  s.label = j.at("label").get<std::string>();
  s.lr = json_number(j.at("lr"), "solver.lr");
  s.checkpoint = j.at("checkpoint").get<std::string>();
  s.hops = j.at("hops").get<int>();
  s.perturb_scale = json_number(j.at("perturb_scale"), "solver.perturb_scale");
  s.inner = j.at("inner").get<std::string>();
  require(runner::is_known_solver(s.name), Status::ConfigError,
          "unknown solver: " + s.name);
  require(valid_label(s.out_label()), Status::ConfigError,
          "solver label must be [A-Za-z0-9_-]+: '" + s.out_label() + "'");
  return s;
}

metatrain::TaskConfig parse_tasks(const json& j) {
  metatrain::TaskConfig t;
  t.functions = parse_functions(j.at("functions"));
  t.dim_lo = j.at("dim_lo").get<int>();
  t.dim_hi = j.at("dim_hi").get<int>();
  t.offsets = j.at("offsets").get<bool>();
  return t;
}

}  // namespace

json load_config(const std::string& path,
                 const std::vector<std::string>& overrides) {
  json cfg = json::object();
  if (!path.empty()) {
    std::ifstream in(path, std::ios::binary);
    require(in.good(), Status::ConfigError, "cannot open config: " + path);
    try {
      in >> cfg;
    } catch (const json::exception& e) {
      fail(Status::ConfigError,
           "config parse error in " + path + ": " + e.what());
    }
    require(cfg.is_object(), Status::ConfigError,
            "config root must be a JSON object: " + path);
  }
  for (const auto& o : overrides) apply_override(cfg, o);
  return cfg;
}

json effective_config(const json& user, const json& schema,
                      const std::string& prefix) {
  require(user.is_object(), Status::ConfigError,
          "config section must be an object: " +
              (prefix.empty() ? std::string("<root>") : prefix));
  json out = schema;
  for (auto it = user.begin(); it != user.end(); ++it) {
    const std::string where = prefix.empty() ? it.key() : prefix + "." + it.key();
    require(schema.contains(it.key()), Status::ConfigError,
            "unknown config key: " + where);
    const json& sv = schema.at(it.key());
    const json& uv = it.value();
    if (sv.is_object()) {
      out[it.key()] = effective_config(uv, sv, where);
    } else if (sv.is_array() && !sv.empty() && sv.front().is_object()) {
      // Element-validated array; schema holds the element prototype.
      require(uv.is_array(), Status::ConfigError, where + " must be an array");
      json arr = json::array();
      for (std::size_t i = 0; i < uv.size(); ++i) {
        arr.push_back(effective_config(
            uv[i], sv.front(), where + "[" + std::to_string(i) + "]"));
      }
      out[it.key()] = std::move(arr);
    } else {
      out[it.key()] = uv;
    }
  }
  // Prototype-only arrays default to empty when the user gave nothing.
  for (auto it = out.begin(); it != out.end(); ++it) {
    const json& sv = schema.at(it.key());
    if (sv.is_array() && !sv.empty() && sv.front().is_object() &&
        !user.contains(it.key())) {
      *it = json::array();
    }
  }
  return out;
}

// ----------------------------------------------------------------- commands

void cmd_meta_train(const json& user_cfg) {
  const json schema = {
      {"seed", 0},
      {"out_dir", ""},
      {"solver", "optimus"},
      {"arch", arch_schema()},
      {"hyper", hyper_schema()},
      {"tasks",
       {{"functions", default_function_names()},
        {"dim_lo", 2},
        {"dim_hi", 100},
        {"offsets", true}}},
      {"meta",
       {{"unroll_length", 50},
        {"truncation", 5},
        {"antithetic_pairs", 1},
        {"sigma", 0.01},
        {"batch_size", 32},
        {"meta_lr", 5e-4},
        {"clip_norm", 3.0},
        {"total_meta_steps", 100},
        {"penalty", 1e6},
        {"estimator", "pes"}}},
      {"val_interval", 50},
      {"val_task_count", 8},
      {"val_budget", 50},
      {"checkpoint_interval", 0},
      {"save_state", false},
      {"resume", ""},
      {"jobs", 0},
  };
  const json cfg = effective_config(user_cfg, schema);
  WallTimer timer;

  metatrain::MetaTrainConfig mc;
  mc.seed = cfg.at("seed").get<std::uint64_t>();
  mc.out_dir = cfg.at("out_dir").get<std::string>();
  mc.solver = cfg.at("solver").get<std::string>();
  mc.arch = parse_arch(cfg.at("arch"));
  mc.hyper = parse_hyper(cfg.at("hyper"));
  mc.tasks = parse_tasks(cfg.at("tasks"));
  const json& mj = cfg.at("meta");
  mc.meta.unroll_length = mj.at("unroll_length").get<int>();
  mc.meta.truncation = mj.at("truncation").get<int>();
  mc.meta.antithetic_pairs = mj.at("antithetic_pairs").get<int>();
  mc.meta.sigma = json_number(mj.at("sigma"), "meta.sigma");
  mc.meta.batch_size = mj.at("batch_size").get<int>();
  mc.meta.meta_lr = json_number(mj.at("meta_lr"), "meta.meta_lr");
  mc.meta.clip_norm = json_number(mj.at("clip_norm"), "meta.clip_norm");
  mc.meta.total_meta_steps = mj.at("total_meta_steps").get<int>();
  mc.meta.penalty = json_number(mj.at("penalty"), "meta.penalty");
  mc.meta.estimator = mj.at("estimator").get<std::string>();
  mc.val_interval = cfg.at("val_interval").get<int>();
  mc.val_task_count = cfg.at("val_task_count").get<int>();
  mc.val_budget = cfg.at("val_budget").get<int>();
  mc.checkpoint_interval = cfg.at("checkpoint_interval").get<int>();
  mc.save_state = cfg.at("save_state").get<bool>();
  mc.resume_path = cfg.at("resume").get<std::string>();
  mc.jobs = cfg.at("jobs").get<int>();

  ensure_dir(mc.out_dir);
  metatrain::MetaTrainResult res = metatrain::meta_train(mc);
  write_manifest(mc.out_dir, "meta-train", cfg, res.files_written,
                 timer.seconds());
}

void cmd_tune(const json& user_cfg) {
  const json schema = {
      {"seed", 0},
      {"out_dir", ""},
      {"optimizer", "adam"},
      {"functions", default_function_names()},
      {"dims", json::array({10})},
      {"inits", 64},
      {"budget_iters", 100},
      {"offsets", true},
      {"grid", {{"lo", 1e-6}, {"hi", 1.0}, {"size", 100}}},
      {"jobs", 0},
  };
  const json cfg = effective_config(user_cfg, schema);
  WallTimer timer;

  const std::string optimizer = cfg.at("optimizer").get<std::string>();
  require(optimizer == "adam" || optimizer == "gdm", Status::ConfigError,
          "optimizer must be adam or gdm");
  const std::uint64_t seed = cfg.at("seed").get<std::uint64_t>();
  const std::string out_dir = cfg.at("out_dir").get<std::string>();
  const auto functions = parse_functions(cfg.at("functions"));
  const auto dims = parse_dims(cfg.at("dims"));
  const int inits = cfg.at("inits").get<int>();
  const int budget = cfg.at("budget_iters").get<int>();
  const bool offsets = cfg.at("offsets").get<bool>();
  const double lo = json_number(cfg.at("grid").at("lo"), "grid.lo");
  const double hi = json_number(cfg.at("grid").at("hi"), "grid.hi");
  const int grid_size = cfg.at("grid").at("size").get<int>();
  require(inits >= 1, Status::ConfigError, "inits must be >= 1");
  require(budget >= 1, Status::ConfigError, "budget_iters must be >= 1");
  require(grid_size >= 2, Status::ConfigError, "grid.size must be >= 2");
  require(lo > 0 && hi > lo, Status::ConfigError,
          "grid bounds must satisfy 0 < lo < hi");
  const int jobs = resolve_jobs(cfg.at("jobs").get<int>());

  ensure_dir(out_dir);
  const std::string hash = config_hash(cfg);
  std::vector<std::string> files;

  for (auto fn : functions) {
    for (int dim : dims) {
      auto run_for_rate = [&](double lr, int rep) -> double {
        runner::SeededTask st = runner::seeded_task(seed, fn, dim, rep, offsets);
        optimus::RunOptions opts;
        opts.use_value_rule = false;  // fixed tuning budget
        opts.stop.max_iters = budget;
        Trajectory traj = optimizer == "adam"
                              ? baselines::run_adam(st.inst, st.x0, lr, opts)
                              : baselines::run_gdm(st.inst, st.x0, lr, opts);
        return traj.losses.back();
      };
      baselines::TuneResult res = baselines::tune_learning_rate(
          run_for_rate, inits, lo, hi, grid_size, jobs);

      const int eff = testfuncs::effective_dim(fn, dim);
      json j;
      j["format"] = "optlab-tune";
      j["optimizer"] = optimizer;
      j["function"] = std::string(testfuncs::function_name(fn));
      j["dim"] = eff;
      j["requested_dim"] = dim;
      j["seed"] = seed;
      j["inits"] = inits;
      j["budget_iters"] = budget;
      j["grid"] = res.grid;
      j["mean_final_loss"] = res.mean_final_loss;
      j["best_lr"] = res.best_lr;
      j["best_index"] = res.best_index;
      j["any_finite"] = res.any_finite;
      j["config_hash"] = hash;
      const std::string path = join_path(
          out_dir, "tune_" + optimizer + "_" +
                       std::string(testfuncs::function_name(fn)) + "_d" +
                       std::to_string(eff) + ".json");
      auto out = open_out(path);
      out << j.dump(2) << "\n";
      files.push_back(path);
    }
  }
  write_manifest(out_dir, "tune", cfg, files, timer.seconds());
}

void cmd_evaluate(const json& user_cfg) {
  const json schema = {
      {"seed", 0},
      {"out_dir", ""},
      {"functions", default_function_names()},
      {"dims", json::array({10})},
      {"seeds", 64},
      {"offsets", true},
      {"stop", stop_schema()},
      {"solvers", json::array({solver_proto()})},
      {"jobs", 0},
  };
  const json cfg = effective_config(user_cfg, schema);
  WallTimer timer;

  const std::uint64_t seed = cfg.at("seed").get<std::uint64_t>();
  const std::string out_dir = cfg.at("out_dir").get<std::string>();
  const auto functions = parse_functions(cfg.at("functions"));
  const auto dims = parse_dims(cfg.at("dims"));
  const int seeds = cfg.at("seeds").get<int>();
  const bool offsets = cfg.at("offsets").get<bool>();
  const optimus::StopConfig stop = parse_stop(cfg.at("stop"));
  require(seeds >= 1, Status::ConfigError, "seeds must be >= 1");
  const json& sj = cfg.at("solvers");
  require(sj.is_array() && !sj.empty(), Status::ConfigError,
          "solvers must be a non-empty array");
  const int jobs = resolve_jobs(cfg.at("jobs").get<int>());

  std::vector<runner::LoadedSolver> solvers;
  std::set<std::string> labels;
  for (const auto& v : sj) {
    runner::SolverSpec spec = parse_solver(v);
    require(labels.insert(spec.out_label()).second, Status::ConfigError,
            "duplicate solver label: " + spec.out_label());
    solvers.push_back(runner::load_solver(spec));
  }

  ensure_dir(out_dir);
  const std::string hash = config_hash(cfg);

  struct Item {
    std::size_t solver;
    testfuncs::FunctionId fn;
    int dim;
    int seed_index;
  };
  std::vector<Item> items;
  for (std::size_t s = 0; s < solvers.size(); ++s)
    for (auto fn : functions)
      for (int dim : dims)
        for (int rep = 0; rep < seeds; ++rep)
          items.push_back(Item{s, fn, dim, rep});

  std::vector<std::string> files(items.size());
  parallel_for(items.size(), jobs, [&](std::size_t idx) {
    const Item& it = items[idx];
    const runner::LoadedSolver& solver = solvers[it.solver];
    runner::SeededTask st =
        runner::seeded_task(seed, it.fn, it.dim, it.seed_index, offsets);
    const std::string label = solver.spec.out_label();
    const std::uint64_t run_seed = mix_seed(
        mix_seed(mix_seed(mix_seed(seed, std::uint64_t(it.fn)),
                          std::uint64_t(it.dim)),
                 std::uint64_t(it.seed_index)),
        resultio::fnv1a64(label));
    Trajectory traj = runner::run_one(solver, st.inst, st.x0, stop, run_seed);

    resultio::TrajectoryRecord rec;
    rec.function = std::string(testfuncs::function_name(it.fn));
    rec.dim = st.inst.dim();
    rec.seed = it.seed_index;
    rec.solver = label;
    rec.config_hash = hash;
    rec.traj = std::move(traj);
    const std::string path = join_path(
        out_dir, label + "_" + rec.function + "_d" + std::to_string(rec.dim) +
                     "_s" + std::to_string(it.seed_index) + ".json");
    resultio::write_trajectory(path, rec);
    files[idx] = path;
  });

  write_manifest(out_dir, "evaluate", cfg, files, timer.seconds());
}

void cmd_report(const json& user_cfg) {
  const json schema = {
      {"results_dir", ""},
      {"out_dir", ""},
      {"base_budget", 100},
  };
  const json cfg = effective_config(user_cfg, schema);
  WallTimer timer;

  const std::string results_dir = cfg.at("results_dir").get<std::string>();
  const std::string out_dir = cfg.at("out_dir").get<std::string>();
  const int base_budget = cfg.at("base_budget").get<int>();
  require(!results_dir.empty(), Status::ConfigError, "results_dir is required");
  require(base_budget >= 1, Status::ConfigError, "base_budget must be >= 1");

  auto records = resultio::read_result_dir(results_dir);
  require(!records.empty(), Status::DataError,
          "no trajectory records in " + results_dir);

  struct ProblemKey {
    std::string function;
    int dim;
    bool operator<(const ProblemKey& o) const {
      return function != o.function ? function < o.function : dim < o.dim;
    }
    std::string label() const { return function + "_d" + std::to_string(dim); }
  };
  std::set<ProblemKey> problem_set;
  std::set<std::string> solver_set;
  for (const auto& r : records) {
    problem_set.insert(ProblemKey{r.function, r.dim});
    solver_set.insert(r.solver);
  }
  const std::vector<ProblemKey> problems(problem_set.begin(), problem_set.end());
  const std::vector<std::string> solvers(solver_set.begin(), solver_set.end());

  // Group per (problem, solver).
  std::map<std::pair<std::string, std::string>,
           std::vector<const resultio::TrajectoryRecord*>>
      cells;
  for (const auto& r : records)
    cells[{ProblemKey{r.function, r.dim}.label(), r.solver}].push_back(&r);

  std::vector<std::string> missing;
  for (const auto& p : problems)
    for (const auto& s : solvers)
      if (!cells.count({p.label(), s})) missing.push_back(p.label() + ":" + s);
  if (!missing.empty()) {
    std::string list;
    for (std::size_t i = 0; i < missing.size() && i < 20; ++i)
      list += (i ? ", " : "") + missing[i];
    if (missing.size() > 20) list += ", ...";
    fail(Status::DataError,
         "incomplete problem x solver grid; missing: " + list);
  }

  // Mean-of-best per cell, plus mean best-so-far and eval curves.
  const std::size_t P = problems.size(), S = solvers.size();
  Mat fhat(P, S);
  std::map<std::pair<std::string, std::string>, std::vector<double>> mean_curve;
  std::map<std::pair<std::string, std::string>, std::vector<double>> mean_evals;
  for (std::size_t p = 0; p < P; ++p) {
    for (std::size_t s = 0; s < S; ++s) {
      const auto key = std::make_pair(problems[p].label(), solvers[s]);
      const auto& recs = cells.at(key);
      double sum = 0.0;
      std::vector<std::vector<double>> curves;
      std::vector<std::vector<double>> evals;
      for (const auto* r : recs) {
        sum += r->traj.best_value();
        curves.push_back(r->traj.losses);
        evals.emplace_back(r->traj.evals_cum.begin(), r->traj.evals_cum.end());
      }
      fhat(Eigen::Index(p), Eigen::Index(s)) = sum / double(recs.size());
      mean_curve[key] = bench::mean_best_so_far(curves);
      // Mean cumulative evals, extended by holding the final count.
      std::size_t len = 0;
      for (const auto& e : evals) len = std::max(len, e.size());
      std::vector<double> me(len, 0.0);
      for (const auto& e : evals)
        for (std::size_t i = 0; i < len; ++i)
          me[i] += i < e.size() ? e[i] : (e.empty() ? 0.0 : e.back());
      for (double& v : me) v /= double(evals.size());
      mean_evals[key] = std::move(me);
    }
  }

  // Performance measures against per-problem true optima.
  Mat measures(P, S);
  for (std::size_t p = 0; p < P; ++p) {
    const auto fn = testfuncs::function_from_name(problems[p].function);
    const double f_star =
        testfuncs::ObjectiveInstance(fn, problems[p].dim).global_minimum().second;
    double f_worst = -std::numeric_limits<double>::infinity();
    bool any_finite = false;
    for (std::size_t s = 0; s < S; ++s) {
      const double v = fhat(Eigen::Index(p), Eigen::Index(s));
      if (std::isfinite(v)) {
        f_worst = std::max(f_worst, v);
        any_finite = true;
      }
    }
    if (!any_finite) f_worst = f_star;  // everyone diverged; all score 1
    for (std::size_t s = 0; s < S; ++s) {
      measures(Eigen::Index(p), Eigen::Index(s)) = bench::performance_measure(
          fhat(Eigen::Index(p), Eigen::Index(s)), f_star, f_worst);
    }
  }

  ensure_dir(out_dir);
  std::vector<std::string> files;

  {
    const Mat ratios = bench::performance_ratios(measures);
    const std::vector<double> t_grid = bench::default_t_grid(ratios);
    bench::ProfileResult prof =
        bench::performance_profile(measures, solvers, t_grid);
    const std::string path = join_path(out_dir, "profile.csv");
    auto out = open_out(path);
    out << "t,solver,rho\n";
    for (std::size_t ti = 0; ti < prof.t_grid.size(); ++ti)
      for (std::size_t s = 0; s < S; ++s)
        out << num(prof.t_grid[ti]) << "," << solvers[s] << ","
            << num(prof.rho(Eigen::Index(ti), Eigen::Index(s))) << "\n";
    files.push_back(path);
  }

  {
    const std::string path = join_path(out_dir, "rel_iters.csv");
    const std::string path_evals = join_path(out_dir, "rel_iters_evals.csv");
    auto out = open_out(path);
    auto out_e = open_out(path_evals);
    out << "percentile,solver_pair,ratio,problem_label\n";
    out_e << "percentile,solver_pair,ratio,problem_label\n";
    for (std::size_t cand = 0; cand < S; ++cand) {
      for (std::size_t base = 0; base < S; ++base) {
        if (cand == base) continue;
        const std::string pair = solvers[cand] + "_vs_" + solvers[base];
        struct Row {
          double ratio;
          double ratio_evals;
          std::string label;
        };
        std::vector<Row> rows;
        for (std::size_t p = 0; p < P; ++p) {
          const auto ck = std::make_pair(problems[p].label(), solvers[cand]);
          const auto bk = std::make_pair(problems[p].label(), solvers[base]);
          const auto& cc = mean_curve.at(ck);
          const auto& bc = mean_curve.at(bk);
          bench::RelIterResult r =
              bench::relative_iterations(cc, bc, base_budget);
          double re = 0.0;
          if (r.reached) {
            const auto& ce = mean_evals.at(ck);
            const auto& be = mean_evals.at(bk);
            const double eo =
                ce[std::min(std::size_t(r.i_opt), ce.size() - 1)];
            const double eb =
                be[std::min(std::size_t(r.i_base), be.size() - 1)];
            re = eo > 0 ? eb / eo : 0.0;
          }
          rows.push_back(Row{r.ratio, re, problems[p].label()});
        }
        std::sort(rows.begin(), rows.end(), [](const Row& a, const Row& b) {
          return a.ratio != b.ratio ? a.ratio < b.ratio : a.label < b.label;
        });
        for (std::size_t i = 0; i < rows.size(); ++i) {
          const double pct = 100.0 * double(i + 1) / double(rows.size());
          out << num(pct) << "," << pair << "," << num(rows[i].ratio) << ","
              << rows[i].label << "\n";
        }
        std::sort(rows.begin(), rows.end(), [](const Row& a, const Row& b) {
          return a.ratio_evals != b.ratio_evals
                     ? a.ratio_evals < b.ratio_evals
                     : a.label < b.label;
        });
        for (std::size_t i = 0; i < rows.size(); ++i) {
          const double pct = 100.0 * double(i + 1) / double(rows.size());
          out_e << num(pct) << "," << pair << "," << num(rows[i].ratio_evals)
                << "," << rows[i].label << "\n";
        }
      }
    }
    files.push_back(path);
    files.push_back(path_evals);
  }

  {
    const std::string path = join_path(out_dir, "final_loss.csv");
    auto out = open_out(path);
    out << "function,dim,solver,mean_best\n";
    for (std::size_t p = 0; p < P; ++p)
      for (std::size_t s = 0; s < S; ++s)
        out << problems[p].function << "," << problems[p].dim << ","
            << solvers[s] << "," << num(fhat(Eigen::Index(p), Eigen::Index(s)))
            << "\n";
    files.push_back(path);
  }

  write_manifest(out_dir, "report", cfg, files, timer.seconds());
}

void cmd_analyze_direction(const json& user_cfg) {
  const json schema = {
      {"seed", 0},
      {"out_dir", ""},
      {"function", "rosenbrock"},
      {"dim", 2},
      {"trajectories", 64},
      {"offsets", true},
      {"stop", stop_schema()},
      {"solvers", json::array({solver_proto()})},
      {"jobs", 0},
  };
  const json cfg = effective_config(user_cfg, schema);
  WallTimer timer;

  const std::uint64_t seed = cfg.at("seed").get<std::uint64_t>();
  const std::string out_dir = cfg.at("out_dir").get<std::string>();
  testfuncs::FunctionId fn;
  try {
    fn = testfuncs::function_from_name(cfg.at("function").get<std::string>());
  } catch (const Error&) {
    fail(Status::ConfigError,
         "unknown function: " + cfg.at("function").get<std::string>());
  }
  const int dim = cfg.at("dim").get<int>();
  const int count = cfg.at("trajectories").get<int>();
  const bool offsets = cfg.at("offsets").get<bool>();
  const optimus::StopConfig stop = parse_stop(cfg.at("stop"));
  require(dim >= 2, Status::ConfigError, "dim must be >= 2");
  require(count >= 1, Status::ConfigError, "trajectories must be >= 1");
  const json& sj = cfg.at("solvers");
  require(sj.is_array() && !sj.empty(), Status::ConfigError,
          "solvers must be a non-empty array");
  const int jobs = resolve_jobs(cfg.at("jobs").get<int>());

  std::vector<runner::LoadedSolver> solvers;
  std::set<std::string> labels;
  for (const auto& v : sj) {
    runner::SolverSpec spec = parse_solver(v);
    require(spec.name != "basin_hopping", Status::ConfigError,
            "direction analysis does not support basin_hopping");
    require(labels.insert(spec.out_label()).second, Status::ConfigError,
            "duplicate solver label: " + spec.out_label());
    solvers.push_back(runner::load_solver(spec));
  }

  ensure_dir(out_dir);
  const std::string path = join_path(out_dir, "direction.csv");
  auto out = open_out(path);
  out << "iteration,cos_grad,cos_newton,solver\n";

  for (const auto& solver : solvers) {
    std::vector<Trajectory> trajs(static_cast<std::size_t>(count));
    std::vector<testfuncs::ObjectiveInstance> insts;
    insts.reserve(std::size_t(count));
    for (int rep = 0; rep < count; ++rep)
      insts.push_back(runner::seeded_task(seed, fn, dim, rep, offsets).inst);
    parallel_for(std::size_t(count), jobs, [&](std::size_t rep) {
      runner::SeededTask st =
          runner::seeded_task(seed, fn, dim, int(rep), offsets);
      trajs[rep] = runner::run_one(solver, st.inst, st.x0, stop, 0, true);
    });
    bench::DirectionStats stats = bench::direction_analysis(trajs, insts);
    for (std::size_t k = 0; k < stats.samples.size(); ++k) {
      if (stats.samples[k] == 0) continue;
      out << k << "," << num(stats.mean_cos_grad[k]) << ","
          << num(stats.mean_cos_newton[k]) << "," << solver.spec.out_label()
          << "\n";
    }
  }
  write_manifest(out_dir, "analyze-direction", cfg,
                 {path}, timer.seconds());
}

void cmd_bench_runtime(const json& user_cfg) {
  const json schema = {
      {"seed", 0},
      {"out_dir", ""},
      {"dims", json::array({100, 1000})},
      {"reps", 25},
      {"warmup", 3},
      {"solvers", json::array({"optimus", "adam"})},
      {"arch", arch_schema()},
      {"hyper", hyper_schema()},
  };
  const json cfg = effective_config(user_cfg, schema);
  WallTimer timer;

  const std::uint64_t seed = cfg.at("seed").get<std::uint64_t>();
  const std::string out_dir = cfg.at("out_dir").get<std::string>();
  const auto dims = parse_dims(cfg.at("dims"));
  const int reps = cfg.at("reps").get<int>();
  const int warmup = cfg.at("warmup").get<int>();
  require(reps >= 1, Status::ConfigError, "reps must be >= 1");
  require(warmup >= 0, Status::ConfigError, "warmup must be >= 0");
  const nnet::ArchConfig arch = parse_arch(cfg.at("arch"));
  const nnet::StepConfig hyper = parse_hyper(cfg.at("hyper"));
  const json& sj = cfg.at("solvers");
  require(sj.is_array() && !sj.empty(), Status::ConfigError,
          "solvers must be a non-empty array of names");

  std::vector<std::string> names;
  for (const auto& v : sj) {
    require(v.is_string(), Status::ConfigError,
            "bench-runtime solvers are plain names");
    const std::string n = v.get<std::string>();
    require(n == "optimus" || n == "adafactor_mlp" || n == "adam" || n == "gdm",
            Status::ConfigError, "bench-runtime cannot time solver: " + n);
    names.push_back(n);
  }

  ensure_dir(out_dir);

  // Learned parameters shared across dims (the architecture is
  // dimension-independent); random weights exercise the same arithmetic.
  nnet::OptimizerParams params = nnet::init_params(seed, arch, hyper);

  const std::string path = join_path(out_dir, "runtime.csv");
  auto out = open_out(path);
  out << "dim,solver,median_step_seconds\n";
  for (const auto& name : names) {
    auto make_stepper = [&](int d) -> std::function<void()> {
      Rng rng(mix_seed(seed, std::uint64_t(d)));
      auto x0 = std::make_shared<Vec>(d);
      auto grad = std::make_shared<Vec>(d);
      for (int i = 0; i < d; ++i) (*x0)[i] = rng.uniform(-1.0, 1.0);
      for (int i = 0; i < d; ++i) (*grad)[i] = rng.normal();
      if (name == "adam") {
        auto st = std::make_shared<baselines::AdamState>(
            baselines::AdamState::init(d, 1e-3));
        return [st, grad] { (void)baselines::adam_step(*st, *grad); };
      }
      if (name == "gdm") {
        auto st = std::make_shared<baselines::GdmState>(
            baselines::GdmState::init(d, 1e-3));
        return [st, grad] { (void)baselines::gdm_step(*st, *grad); };
      }
      auto st = std::make_shared<optimus::InnerState>(
          optimus::InnerState::init(*x0));
      if (name == "adafactor_mlp") {
        return [st, grad, &params] {
          (void)optimus::adafactor_mlp_step(params, *st, *grad);
        };
      }
      return [st, grad, &params] {
        (void)optimus::optimus_step(params, *st, *grad);
      };
    };
    auto table = bench::runtime_scaling(make_stepper, dims, reps, warmup);
    for (const auto& row : table)
      out << row.dim << "," << name << "," << num(row.median_seconds) << "\n";
  }
  write_manifest(out_dir, "bench-runtime", cfg, {path}, timer.seconds());
}

void run_command(const std::string& command, const json& user_cfg) {
  try {
    if (command == "meta-train") return cmd_meta_train(user_cfg);
    if (command == "tune") return cmd_tune(user_cfg);
    if (command == "evaluate") return cmd_evaluate(user_cfg);
    if (command == "report") return cmd_report(user_cfg);
    if (command == "analyze-direction") return cmd_analyze_direction(user_cfg);
    if (command == "bench-runtime") return cmd_bench_runtime(user_cfg);
    fail(Status::ArgumentError, "unknown command: " + command);
  } catch (const json::exception& e) {
    fail(Status::ConfigError, std::string("config error: ") + e.what());
  }
}

}  // namespace optlab::commands
