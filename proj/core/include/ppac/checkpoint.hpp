#pragma once

#include <cstdint>
#include <filesystem>
#include <iosfwd>

#include "ppac/network.hpp"

namespace ppac {

// On-disk layout: one JSON manifest line
//   {"format":"ppac-checkpoint","version":1,"architecture":{...},"epoch":E,"seed":S,
//    "tensors":[{"name":...,"shape":[...]},...]}
// terminated by '\n', followed by each tensor's values as little-endian
// float32 in manifest order.

struct Checkpoint {
  Network<float> network;
  int epoch = 0;
  std::uint64_t seed = 0;
};

void write_checkpoint(std::ostream& out, const Network<float>& net, int epoch, std::uint64_t seed);
Checkpoint read_checkpoint(std::istream& in);

void save_checkpoint(const std::filesystem::path& path, const Network<float>& net, int epoch, std::uint64_t seed);
Checkpoint load_checkpoint(const std::filesystem::path& path);

} // namespace ppac
