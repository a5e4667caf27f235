#include "resultio.hpp"

#include <algorithm>
#include <filesystem>
#include <fstream>

#include <json.hpp>

#include "status.hpp"

namespace optlab::resultio {

namespace fs = std::filesystem;
using nlohmann::json;

void write_trajectory(const std::string& path, const TrajectoryRecord& rec) {
  json j;
  j["format"] = "optlab-trajectory";
  j["function"] = rec.function;
  j["dim"] = rec.dim;
  j["seed"] = rec.seed;
  j["solver"] = rec.solver;
  j["config_hash"] = rec.config_hash;
  j["losses"] = rec.traj.losses;
  j["evals_cum"] = rec.traj.evals_cum;
  j["func_evals"] = rec.traj.func_evals;
  j["terminated_by"] = std::string(termination_name(rec.traj.terminated_by));
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  require(out.good(), Status::IoError, "cannot open for write: " + path);
  out << j.dump(2) << "\n";
  require(out.good(), Status::IoError, "write failed: " + path);
}

TrajectoryRecord read_trajectory(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  require(in.good(), Status::DataError, "cannot open: " + path);
  json j;
  try {
    in >> j;
  } catch (const json::exception& e) {
    fail(Status::DataError, "malformed trajectory JSON " + path + ": " + e.what());
  }
  try {
    require(j.value("format", "") == "optlab-trajectory", Status::DataError,
            "not a trajectory record: " + path);
    TrajectoryRecord rec;
    rec.function = j.at("function").get<std::string>();
    rec.dim = j.at("dim").get<int>();
    rec.seed = j.at("seed").get<int>();
    rec.solver = j.at("solver").get<std::string>();
    rec.config_hash = j.value("config_hash", "");
    rec.traj.losses = j.at("losses").get<std::vector<double>>();
    rec.traj.evals_cum = j.at("evals_cum").get<std::vector<std::int64_t>>();
    rec.traj.func_evals = j.at("func_evals").get<std::int64_t>();
    rec.traj.terminated_by =
        termination_from_name(j.at("terminated_by").get<std::string>());
    require(!rec.traj.losses.empty(), Status::DataError,
            "trajectory has no losses: " + path);
    require(rec.traj.evals_cum.size() == rec.traj.losses.size(),
            Status::DataError, "evals_cum/losses length mismatch: " + path);
    return rec;
  } catch (const json::exception& e) {
    fail(Status::DataError,
         "trajectory record missing fields " + path + ": " + e.what());
  }
}

std::vector<TrajectoryRecord> read_result_dir(const std::string& dir) {
  require(fs::is_directory(dir), Status::DataError,
          "not a directory: " + dir);
  std::vector<std::string> paths;
  for (const auto& entry : fs::directory_iterator(dir)) {
    if (entry.is_regular_file() && entry.path().extension() == ".json") {
      paths.push_back(entry.path().string());
    }
  }
  std::sort(paths.begin(), paths.end());
  std::vector<TrajectoryRecord> out;
  out.reserve(paths.size());
  for (const auto& p : paths) {
    // Skip non-trajectory JSON (e.g. manifests) silently.
    std::ifstream in(p, std::ios::binary);
    json j;
    try {
      in >> j;
    } catch (const json::exception&) {
      continue;
    }
    if (!j.is_object() || j.value("format", "") != "optlab-trajectory")
      continue;
    out.push_back(read_trajectory(p));
  }
  return out;
}

std::uint64_t fnv1a64(std::string_view s) {
  std::uint64_t h = 14695981039346656037ull;
  for (unsigned char c : s) {
    h ^= c;
    h *= 1099511628211ull;
  }
  return h;
}

std::string hash_hex(std::uint64_t h) {
  static const char* digits = "0123456789abcdef";
  std::string out(16, '0');
  for (int i = 15; i >= 0; --i) {
    out[std::size_t(i)] = digits[h & 0xf];
    h >>= 4;
  }
  return out;
}

}  // namespace optlab::resultio
