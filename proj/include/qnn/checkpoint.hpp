#pragma once

#include <cstddef>
#include <string>
#include <vector>

#include "qnn/qlayers.hpp"

namespace qnn {

// Flat binary container for model parameters.
//
// Layout, all integers little-endian:
//   magic   "QNN1" (4 bytes)
//   u32     tensor count
//   per tensor: u32 name length, name bytes (UTF-8),
//               u32 rank, u64 extent per dimension
//   payload: for each tensor in manifest order, its elements as IEEE-754
//            binary64 little-endian, row-major.

struct ManifestEntry {
  std::string name;
  std::vector<std::size_t> shape;
  std::size_t count() const {
    std::size_t n = 1;
    for (std::size_t e : shape) n *= e;
    return n;
  }
};

void save_checkpoint(const std::string& path, const ParamStore& store);

// Loads values into an existing store with a matching manifest. Every tensor
// in the file must exist in the store with the same shape and vice versa.
void load_checkpoint(const std::string& path, ParamStore& store);

std::vector<ManifestEntry> read_manifest(const std::string& path);

}  // namespace qnn
