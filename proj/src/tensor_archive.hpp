#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include <json.hpp>

namespace optlab {

// Flat archive of named float64 tensors plus a JSON meta header.
//
// File layout (little-endian):
//   bytes 0..7   magic "OPTLAB\x01\n"
//   u64          header length in bytes
//   header       JSON: {"meta": {...}, "tensors": [{"name","shape"}...]}
//   payload      tensors in listed order, row-major doubles
struct NamedTensor {
  std::string name;
  std::vector<std::int64_t> shape;
  std::vector<double> data;  // row-major

  std::int64_t numel() const;
};

struct TensorArchive {
  nlohmann::json meta;
  std::vector<NamedTensor> tensors;

  const NamedTensor& find(const std::string& name) const;
  bool contains(const std::string& name) const;

  void write(const std::string& path) const;
  static TensorArchive read(const std::string& path);
};

}  // namespace optlab
