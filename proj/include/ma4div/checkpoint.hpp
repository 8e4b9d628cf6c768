#pragma once

// Binary parameter files:
//   magic "MA4DCKPT", u32 version, u32 tensor count, then per tensor
//   u32 name length, name bytes, u32 rank, u64 dims[rank], f64 data[]
// All integers and doubles are little-endian; data is row-major.

#include "ma4div/diff.hpp"

#include <filesystem>
#include <span>
#include <string>
#include <vector>

namespace ma4div::checkpoint {

inline constexpr std::uint32_t kVersion = 1;

struct NamedTensor {
  std::string name;
  Tensor value;
};

void save(const std::filesystem::path& path, std::span<const NamedTensor> tensors);
std::vector<NamedTensor> load(const std::filesystem::path& path);

std::vector<NamedTensor> snapshot(std::span<diff::Parameter* const> params);
/// Copies tensors into params by name. Every parameter must be present with
/// a matching shape; extra tensors in the file are an error too.
void restore(std::span<const NamedTensor> tensors, std::span<diff::Parameter* const> params);

}  // namespace ma4div::checkpoint
