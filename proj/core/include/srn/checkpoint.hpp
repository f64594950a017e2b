#pragma once

#include <filesystem>
#include <string>
#include <vector>

namespace srn {

struct NamedTensor {
  std::string name;
  std::vector<int> shape;
  std::vector<float> data;
};

/// Checkpoint format: magic "SPKR" | u32 version=1 | u32 tensor count |
/// per tensor: u16 name length, UTF-8 name, u8 dtype (0 = f32), u8 rank,
/// rank x u32 dims, little-endian f32 payload.
void save_checkpoint(const std::vector<NamedTensor>& tensors, const std::filesystem::path& path);
std::vector<NamedTensor> load_checkpoint(const std::filesystem::path& path);

}  // namespace srn
