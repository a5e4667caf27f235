#include "tensor_archive.hpp"

#include <bit>
#include <cstring>
#include <fstream>

#include "status.hpp"

static_assert(std::endian::native == std::endian::little,
              "archive format is little-endian; big-endian hosts need swaps");

namespace optlab {

namespace {
constexpr char kMagic[8] = {'O', 'P', 'T', 'L', 'A', 'B', '\x01', '\n'};
}

std::int64_t NamedTensor::numel() const {
  std::int64_t n = 1;
  for (auto d : shape) n *= d;
  return n;
}

const NamedTensor& TensorArchive::find(const std::string& name) const {
  for (const auto& t : tensors)
    if (t.name == name) return t;
  fail(Status::CheckpointError, "archive: missing tensor '" + name + "'");
}

bool TensorArchive::contains(const std::string& name) const {
  for (const auto& t : tensors)
    if (t.name == name) return true;
  return false;
}

void TensorArchive::write(const std::string& path) const {
  nlohmann::json header;
  header["meta"] = meta;
  auto& list = header["tensors"] = nlohmann::json::array();
  for (const auto& t : tensors) {
    require(t.numel() == static_cast<std::int64_t>(t.data.size()),
            Status::ArgumentError, "archive: shape/data mismatch for " + t.name);
    list.push_back({{"name", t.name}, {"shape", t.shape}});
  }
  const std::string hs = header.dump();

  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  require(out.good(), Status::IoError, "archive: cannot open for write: " + path);
  out.write(kMagic, sizeof(kMagic));
  const std::uint64_t hlen = hs.size();
  out.write(reinterpret_cast<const char*>(&hlen), sizeof(hlen));
  out.write(hs.data(), static_cast<std::streamsize>(hs.size()));
  for (const auto& t : tensors)
    out.write(reinterpret_cast<const char*>(t.data.data()),
              static_cast<std::streamsize>(t.data.size() * sizeof(double)));
  out.flush();
  require(out.good(), Status::IoError, "archive: write failed: " + path);
}

TensorArchive TensorArchive::read(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  require(in.good(), Status::CheckpointError, "archive: cannot open: " + path);
  char magic[8];
  in.read(magic, sizeof(magic));
  require(in.good() && std::memcmp(magic, kMagic, sizeof(kMagic)) == 0,
          Status::CheckpointError, "archive: bad magic in " + path);
  std::uint64_t hlen = 0;
  in.read(reinterpret_cast<char*>(&hlen), sizeof(hlen));
  require(in.good() && hlen < (1ULL << 30), Status::CheckpointError,
          "archive: bad header length in " + path);
  std::string hs(hlen, '\0');
  in.read(hs.data(), static_cast<std::streamsize>(hlen));
  require(in.good(), Status::CheckpointError, "archive: truncated header in " + path);

  nlohmann::json header;
  try {
    header = nlohmann::json::parse(hs);
  } catch (const nlohmann::json::exception& e) {
    fail(Status::CheckpointError, std::string("archive: header parse: ") + e.what());
  }
  TensorArchive ar;
  ar.meta = header.value("meta", nlohmann::json::object());
  for (const auto& item : header.at("tensors")) {
    NamedTensor t;
    t.name = item.at("name").get<std::string>();
    t.shape = item.at("shape").get<std::vector<std::int64_t>>();
    t.data.resize(static_cast<std::size_t>(t.numel()));
    in.read(reinterpret_cast<char*>(t.data.data()),
            static_cast<std::streamsize>(t.data.size() * sizeof(double)));
    require(in.good(), Status::CheckpointError,
            "archive: truncated payload for " + t.name + " in " + path);
    ar.tensors.push_back(std::move(t));
  }
  return ar;
}

}  // namespace optlab
