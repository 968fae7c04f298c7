#pragma once

#include <filesystem>
#include <iosfwd>
#include <string>
#include <vector>

#include "evorl/nn/autodiff.hpp"

namespace evorl::nn {

/// Flat binary parameter snapshot:
///   "EVRLSNAP" | u32 version | u32 count |
///   count x (u32 name_len, name bytes, u64 rows, u64 cols) |
///   all values as little-endian IEEE-754 doubles, tensors in table order.
inline constexpr char kSnapshotMagic[8] = {'E', 'V', 'R', 'L', 'S', 'N', 'A', 'P'};
inline constexpr std::uint32_t kSnapshotVersion = 1;

struct NamedTensor {
  std::string name;
  Tensor value;
};

void write_snapshot(std::ostream& out, std::span<const Parameter* const> params);
std::vector<NamedTensor> read_snapshot(std::istream& in);

void save_snapshot(const std::filesystem::path& path, std::span<const Parameter* const> params);
/// Loads values into params by position; names and shapes must match.
void load_snapshot(const std::filesystem::path& path, std::span<Parameter* const> params);

}  // namespace evorl::nn
