#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <filesystem>
#include <fstream>
#include <functional>
#include <sstream>
#include <string>

#include "resultio.hpp"
#include "status.hpp"

using namespace optlab;
namespace rio = optlab::resultio;
namespace fs = std::filesystem;

namespace {

Status error_status(const std::function<void()>& fn) {
  try {
    fn();
  } catch (const Error& e) {
    return e.status();
  }
  return Status::Ok;
}

std::string read_bytes(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  REQUIRE(in.good());
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

void write_text(const std::string& path, const std::string& text) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  out << text;
}

fs::path fresh_dir(const std::string& name) {
  fs::path dir = fs::temp_directory_path() / name;
  fs::remove_all(dir);
  fs::create_directories(dir);
  return dir;
}

rio::TrajectoryRecord sample_record() {
  rio::TrajectoryRecord rec;
  rec.function = "rosenbrock";
  rec.dim = 10;
  rec.seed = 3;
  rec.solver = "adam";
  rec.config_hash = "00deadbeef001234";
  rec.traj.losses = {24.2, 1.0 / 3.0, 1e-300, 0.1};
  rec.traj.evals_cum = {1, 2, 3, 4};
  rec.traj.func_evals = 4;
  rec.traj.terminated_by = Termination::MaxIters;
  return rec;
}

}  // namespace

TEST_CASE("trajectory records round-trip exactly") {
  auto dir = fresh_dir("optlab_rio_rt");
  const std::string path = (dir / "a.json").string();
  auto rec = sample_record();
  rio::write_trajectory(path, rec);
  auto back = rio::read_trajectory(path);
  CHECK(back.function == rec.function);
  CHECK(back.dim == rec.dim);
  CHECK(back.seed == rec.seed);
  CHECK(back.solver == rec.solver);
  CHECK(back.config_hash == rec.config_hash);
  REQUIRE(back.traj.losses.size() == rec.traj.losses.size());
  for (std::size_t i = 0; i < rec.traj.losses.size(); ++i) {
    // Shortest round-trip serialization restores the exact double.
    CHECK(back.traj.losses[i] == rec.traj.losses[i]);
  }
  CHECK(back.traj.evals_cum == rec.traj.evals_cum);
  CHECK(back.traj.func_evals == rec.traj.func_evals);
  CHECK(back.traj.terminated_by == Termination::MaxIters);
  fs::remove_all(dir);
}

TEST_CASE("every termination label survives the round trip") {
  auto dir = fresh_dir("optlab_rio_term");
  for (Termination t :
       {Termination::Stopped, Termination::MaxIters, Termination::Error}) {
    auto rec = sample_record();
    rec.traj.terminated_by = t;
    const std::string path = (dir / "t.json").string();
    rio::write_trajectory(path, rec);
    CHECK(rio::read_trajectory(path).traj.terminated_by == t);
  }
  fs::remove_all(dir);
}

TEST_CASE("identical records serialize to identical bytes") {
  auto dir = fresh_dir("optlab_rio_bytes");
  auto rec = sample_record();
  const std::string p1 = (dir / "one.json").string();
  const std::string p2 = (dir / "two.json").string();
  rio::write_trajectory(p1, rec);
  rio::write_trajectory(p2, rec);
  const std::string b1 = read_bytes(p1);
  CHECK(b1 == read_bytes(p2));
  // Rewriting in place is also stable.
  rio::write_trajectory(p1, rec);
  CHECK(read_bytes(p1) == b1);
  fs::remove_all(dir);
}

TEST_CASE("malformed or inconsistent records are data errors") {
  auto dir = fresh_dir("optlab_rio_bad");
  const std::string path = (dir / "bad.json").string();

  CHECK(error_status([&] {
          rio::read_trajectory((dir / "missing.json").string());
        }) == Status::DataError);

  write_text(path, "this is not json");
  CHECK(error_status([&] { rio::read_trajectory(path); }) ==
        Status::DataError);

  write_text(path, R"({"format":"something-else"})");
  CHECK(error_status([&] { rio::read_trajectory(path); }) ==
        Status::DataError);

  // Missing required field (solver).
  write_text(path, R"({"format":"optlab-trajectory","function":"sphere",
    "dim":2,"seed":0,"losses":[1.0],"evals_cum":[1],"func_evals":1,
    "terminated_by":"max_iters"})");
  CHECK(error_status([&] { rio::read_trajectory(path); }) ==
        Status::DataError);

  // Empty losses.
  write_text(path, R"({"format":"optlab-trajectory","function":"sphere",
    "dim":2,"seed":0,"solver":"adam","losses":[],"evals_cum":[],
    "func_evals":0,"terminated_by":"max_iters"})");
  CHECK(error_status([&] { rio::read_trajectory(path); }) ==
        Status::DataError);

  // Length mismatch between losses and cumulative evals.
  write_text(path, R"({"format":"optlab-trajectory","function":"sphere",
    "dim":2,"seed":0,"solver":"adam","losses":[1.0,0.5],"evals_cum":[1],
    "func_evals":2,"terminated_by":"max_iters"})");
  CHECK(error_status([&] { rio::read_trajectory(path); }) ==
        Status::DataError);

  // Unknown termination label.
  write_text(path, R"({"format":"optlab-trajectory","function":"sphere",
    "dim":2,"seed":0,"solver":"adam","losses":[1.0],"evals_cum":[1],
    "func_evals":1,"terminated_by":"gave_up"})");
  CHECK(error_status([&] { rio::read_trajectory(path); }) != Status::Ok);

  fs::remove_all(dir);
}

TEST_CASE("directory scan returns trajectories sorted by path") {
  auto dir = fresh_dir("optlab_rio_dir");
  auto rec = sample_record();
  rec.solver = "c_solver";
  rio::write_trajectory((dir / "c.json").string(), rec);
  rec.solver = "a_solver";
  rio::write_trajectory((dir / "a.json").string(), rec);
  rec.solver = "b_solver";
  rio::write_trajectory((dir / "b.json").string(), rec);
  // Distractors: a manifest, an invalid JSON file, and a non-JSON file.
  write_text((dir / "manifest.json").string(),
             R"({"format":"optlab-manifest","artifact":"optlab"})");
  write_text((dir / "junk.json").string(), "{not json");
  write_text((dir / "note.txt").string(), "ignore me");

  auto recs = rio::read_result_dir(dir.string());
  REQUIRE(recs.size() == 3);
  CHECK(recs[0].solver == "a_solver");
  CHECK(recs[1].solver == "b_solver");
  CHECK(recs[2].solver == "c_solver");

  CHECK(error_status([&] {
          rio::read_result_dir((dir / "nope").string());
        }) == Status::DataError);
  fs::remove_all(dir);
}

TEST_CASE("hash matches published 64-bit FNV-1a vectors") {
  CHECK(rio::fnv1a64("") == 0xcbf29ce484222325ull);
  CHECK(rio::fnv1a64("a") == 0xaf63dc4c8601ec8cull);
  CHECK(rio::fnv1a64("foobar") == 0x85944171f73967e8ull);
  CHECK(rio::fnv1a64("x") != rio::fnv1a64("y"));

  CHECK(rio::hash_hex(0xcbf29ce484222325ull) == "cbf29ce484222325");
  CHECK(rio::hash_hex(0) == "0000000000000000");
  CHECK(rio::hash_hex(0xdeadbeefull) == "00000000deadbeef");
  CHECK(rio::hash_hex(0xffffffffffffffffull) == "ffffffffffffffff");
}
