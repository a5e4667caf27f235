#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cstdio>
#include <filesystem>
#include <fstream>
#include <string>
#include <vector>

#include "status.hpp"
#include "tensor_archive.hpp"

using optlab::NamedTensor;
using optlab::TensorArchive;

namespace {

std::string temp_path(const std::string& name) {
  return (std::filesystem::temp_directory_path() / name).string();
}

TensorArchive sample_archive() {
  TensorArchive a;
  a.meta["purpose"] = "test";
  a.meta["answer"] = 42;
  NamedTensor t1;
  t1.name = "w";
  t1.shape = {2, 3};
  t1.data = {1.0, -2.5, 3.25, 0.0, 1e-300, -7.75};
  NamedTensor t2;
  t2.name = "b";
  t2.shape = {3};
  t2.data = {0.1, 0.2, 0.3};
  a.tensors = {t1, t2};
  return a;
}

}  // namespace

TEST_CASE("numel multiplies shape entries; scalars have one element") {
  NamedTensor t;
  t.shape = {};
  CHECK(t.numel() == 1);
  t.shape = {4, 5};
  CHECK(t.numel() == 20);
  t.shape = {7};
  CHECK(t.numel() == 7);
}

TEST_CASE("round-trip preserves meta, names, shapes, and exact payload bits") {
  const std::string path = temp_path("ta_roundtrip.bin");
  const TensorArchive a = sample_archive();
  a.write(path);
  const TensorArchive b = TensorArchive::read(path);

  CHECK(b.meta.at("purpose") == "test");
  CHECK(b.meta.at("answer") == 42);
  REQUIRE(b.tensors.size() == 2);
  CHECK(b.tensors[0].name == "w");
  CHECK(b.tensors[0].shape == std::vector<std::int64_t>{2, 3});
  CHECK(b.tensors[1].name == "b");
  for (std::size_t i = 0; i < a.tensors.size(); ++i)
    for (std::size_t j = 0; j < a.tensors[i].data.size(); ++j)
      CHECK(b.tensors[i].data[j] == a.tensors[i].data[j]);
  std::remove(path.c_str());
}

TEST_CASE("writes are byte-identical across repeats") {
  const std::string p1 = temp_path("ta_bytes1.bin");
  const std::string p2 = temp_path("ta_bytes2.bin");
  sample_archive().write(p1);
  sample_archive().write(p2);
  std::ifstream f1(p1, std::ios::binary), f2(p2, std::ios::binary);
  const std::string s1((std::istreambuf_iterator<char>(f1)),
                       std::istreambuf_iterator<char>());
  const std::string s2((std::istreambuf_iterator<char>(f2)),
                       std::istreambuf_iterator<char>());
  CHECK(s1 == s2);
  CHECK(s1.substr(0, 8) == std::string("OPTLAB\x01\n", 8));
  std::remove(p1.c_str());
  std::remove(p2.c_str());
}

TEST_CASE("find locates tensors and rejects unknown names") {
  const TensorArchive a = sample_archive();
  CHECK(a.contains("w"));
  CHECK_FALSE(a.contains("nope"));
  CHECK(a.find("b").data.size() == 3);
  CHECK_THROWS_AS((void)a.find("nope"), optlab::Error);
}

TEST_CASE("missing file raises a checkpoint error") {
  CHECK_THROWS_AS((void)TensorArchive::read(temp_path("ta_missing.bin")),
                  optlab::Error);
  try {
    (void)TensorArchive::read(temp_path("ta_missing.bin"));
  } catch (const optlab::Error& e) {
    CHECK(e.status() == optlab::Status::CheckpointError);
  }
}

TEST_CASE("corrupt magic or truncated payload raises a checkpoint error") {
  const std::string path = temp_path("ta_corrupt.bin");
  sample_archive().write(path);

  // Flip a magic byte.
  {
    std::fstream f(path, std::ios::in | std::ios::out | std::ios::binary);
    f.seekp(0);
    f.put('X');
  }
  CHECK_THROWS_AS((void)TensorArchive::read(path), optlab::Error);

  // Rewrite, then truncate the payload.
  sample_archive().write(path);
  const auto full = std::filesystem::file_size(path);
  std::filesystem::resize_file(path, full - 8);
  CHECK_THROWS_AS((void)TensorArchive::read(path), optlab::Error);
  std::remove(path.c_str());
}

TEST_CASE("shape/data mismatch is rejected at write time") {
  TensorArchive a;
  NamedTensor t;
  t.name = "bad";
  t.shape = {2, 2};
  t.data = {1.0, 2.0, 3.0};  // 3 values for a 4-element shape
  a.tensors = {t};
  CHECK_THROWS_AS(a.write(temp_path("ta_bad.bin")), optlab::Error);
}
