#pragma once

#include <string>
#include <vector>

#include <json.hpp>

namespace optlab::commands {

// Parse a JSON config file (empty path = all defaults) and apply
// `key.path=value` overrides. Values parse as JSON when possible, else as
// strings. Does not validate against a command schema; each command does.
nlohmann::json load_config(const std::string& path,
                           const std::vector<std::string>& overrides);

// Deep-merge a user config over a schema of defaults, rejecting unknown keys.
// Arrays whose schema prototype is an object are element-validated (their
// default is empty); other arrays are replaced wholesale.
nlohmann::json effective_config(const nlohmann::json& user,
                                const nlohmann::json& schema,
                                const std::string& prefix = "");

// Each command validates its config, runs, and writes its artifacts plus a
// manifest.json into the configured output directory. Errors are reported by
// throwing optlab::Error (the CLI maps status to exit codes).
void cmd_meta_train(const nlohmann::json& user_cfg);
void cmd_tune(const nlohmann::json& user_cfg);
void cmd_evaluate(const nlohmann::json& user_cfg);
void cmd_report(const nlohmann::json& user_cfg);
void cmd_analyze_direction(const nlohmann::json& user_cfg);
void cmd_bench_runtime(const nlohmann::json& user_cfg);

// Dispatch by command name (meta-train, tune, evaluate, report,
// analyze-direction, bench-runtime).
void run_command(const std::string& command, const nlohmann::json& user_cfg);

}  // namespace optlab::commands
