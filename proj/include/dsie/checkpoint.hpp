#pragma once

#include <cstdint>
#include <filesystem>

#include "dsie/model.hpp"

namespace dsie {

// Binary layout, little-endian:
//   "DSIECKPT" | u32 version | u32 len + config text | u64 catalog hash |
//   u32 tensor count | per tensor: u32 len + name, u32 rows, u32 cols,
//   rows*cols float32 row-major.
inline constexpr std::uint32_t kCheckpointVersion = 1;

struct Checkpoint {
  TrainConfig config;
  std::uint64_t catalog_hash = 0;
  ModelParams params;
};

void save_checkpoint(const std::filesystem::path& path, const Checkpoint& checkpoint);
Checkpoint load_checkpoint(const std::filesystem::path& path);

}  // namespace dsie
