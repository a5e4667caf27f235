#pragma once

#include <cstdint>
#include <string>
#include <string_view>
#include <vector>

#include "trajectory.hpp"

namespace optlab::resultio {

// One serialized optimization run: the trajectory plus the identifiers that
// bind it to its problem cell and configuration.
struct TrajectoryRecord {
  std::string function;
  int dim = 0;
  int seed = 0;  // seed index within the battery
  std::string solver;
  std::string config_hash;
  Trajectory traj;  // losses, evals_cum, func_evals, terminated_by
};

// JSON with sorted keys and round-trip doubles; writes are byte-deterministic
// for identical records.
void write_trajectory(const std::string& path, const TrajectoryRecord& rec);
TrajectoryRecord read_trajectory(const std::string& path);

// All *.json trajectory records directly inside a directory, sorted by path.
std::vector<TrajectoryRecord> read_result_dir(const std::string& dir);

// FNV-1a 64-bit; used for config hashes carried in artifact headers.
std::uint64_t fnv1a64(std::string_view s);
std::string hash_hex(std::uint64_t h);

}  // namespace optlab::resultio
