// optlab command-line front end. Thin shell over the public C API: every
// subcommand forwards to optlab_run_command and maps status codes to exits.

#include <cstdio>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "optlab/optlab.h"

namespace {

int exit_code_for(int status) {
  switch (status) {
    case OPTLAB_OK: return 0;
    case OPTLAB_ERR_CONFIG:
    case OPTLAB_ERR_ARGUMENT:
    case OPTLAB_ERR_DOMAIN: return 2;
    case OPTLAB_ERR_CHECKPOINT: return 3;
    case OPTLAB_ERR_DATA: return 4;
    default: return 1;
  }
}

struct SubArgs {
  std::string config;
  std::vector<std::string> sets;
  int jobs = -1;
};

void add_common(CLI::App* sub, SubArgs& args) {
  sub->add_option("-c,--config", args.config,
                  "JSON config file (defaults apply when omitted)");
  sub->add_option("--set", args.sets,
                  "Override a config key, key=value (repeatable; values are "
                  "parsed as JSON, bare words as strings)")
      ->take_all();
  sub->add_option("-j,--jobs", args.jobs,
                  "Worker threads (0 = auto, overrides config and "
                  "OPTLAB_JOBS)");
}

int dispatch(const std::string& command, const SubArgs& args) {
  std::vector<std::string> overrides = args.sets;
  if (args.jobs >= 0) overrides.push_back("jobs=" + std::to_string(args.jobs));
  std::vector<const char*> ptrs;
  ptrs.reserve(overrides.size());
  for (const auto& s : overrides) ptrs.push_back(s.c_str());
  const int status = optlab_run_command(
      command.c_str(), args.config.empty() ? nullptr : args.config.c_str(),
      ptrs.empty() ? nullptr : ptrs.data(), ptrs.size());
  if (status != OPTLAB_OK)
    std::fprintf(stderr, "optlab %s: error: %s\n", command.c_str(),
                 optlab_last_error());
  return exit_code_for(status);
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"optlab: learned-optimizer laboratory"};
  app.require_subcommand(1);
  app.set_version_flag("--version", std::string(optlab_version()));

  const std::vector<std::pair<std::string, std::string>> commands = {
      {"meta-train", "Train a learned optimizer with evolution strategies"},
      {"tune", "Grid-search baseline learning rates"},
      {"evaluate", "Run solvers over the benchmark grid, one file per run"},
      {"report", "Summarize evaluation results into CSV tables"},
      {"analyze-direction", "Compare solver steps with gradient/Newton "
                            "directions"},
      {"bench-runtime", "Measure per-step wall time across dimensions"},
  };

  std::vector<SubArgs> args(commands.size());
  std::string chosen;
  for (std::size_t i = 0; i < commands.size(); ++i) {
    CLI::App* sub = app.add_subcommand(commands[i].first, commands[i].second);
    add_common(sub, args[i]);
    sub->callback([&chosen, name = commands[i].first] { chosen = name; });
  }

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int rc = app.exit(e);
    // CLI11 returns 0 for --help/--version; anything else is a usage error.
    return rc == 0 ? 0 : 2;
  }

  for (std::size_t i = 0; i < commands.size(); ++i)
    if (commands[i].first == chosen) return dispatch(chosen, args[i]);
  return 2;  // unreachable: require_subcommand guarantees a match
}
