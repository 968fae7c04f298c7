#include "evorl/nn/snapshot.hpp"

#include <algorithm>
#include <bit>
#include <cstring>
#include <fstream>
#include <istream>
#include <ostream>

namespace evorl::nn {

namespace {

template <class T>
void put_le(std::ostream& out, T v) {
  unsigned char bytes[sizeof(T)];
  std::memcpy(bytes, &v, sizeof(T));
  if constexpr (std::endian::native == std::endian::big) std::reverse(bytes, bytes + sizeof(T));
  out.write(reinterpret_cast<const char*>(bytes), sizeof(T));
}

template <class T>
T get_le(std::istream& in) {
  unsigned char bytes[sizeof(T)];
  if (!in.read(reinterpret_cast<char*>(bytes), sizeof(T))) throw std::runtime_error("snapshot truncated");
  if constexpr (std::endian::native == std::endian::big) std::reverse(bytes, bytes + sizeof(T));
  T v;
  std::memcpy(&v, bytes, sizeof(T));
  return v;
}

}  // namespace

void write_snapshot(std::ostream& out, std::span<const Parameter* const> params) {
  out.write(kSnapshotMagic, sizeof(kSnapshotMagic));
  put_le<std::uint32_t>(out, kSnapshotVersion);
  put_le<std::uint32_t>(out, static_cast<std::uint32_t>(params.size()));
  for (const Parameter* p : params) {
    put_le<std::uint32_t>(out, static_cast<std::uint32_t>(p->name.size()));
    out.write(p->name.data(), static_cast<std::streamsize>(p->name.size()));
    put_le<std::uint64_t>(out, p->value.rows());
    put_le<std::uint64_t>(out, p->value.cols());
  }
  for (const Parameter* p : params) {
    for (double v : p->value.values()) put_le<double>(out, v);
  }
  if (!out) throw std::runtime_error("snapshot write failed");
}

std::vector<NamedTensor> read_snapshot(std::istream& in) {
  char magic[sizeof(kSnapshotMagic)];
  if (!in.read(magic, sizeof(magic)) || std::memcmp(magic, kSnapshotMagic, sizeof(magic)) != 0) {
    throw std::runtime_error("not a parameter snapshot (bad magic)");
  }
  const auto version = get_le<std::uint32_t>(in);
  if (version != kSnapshotVersion) throw std::runtime_error("unsupported snapshot version " + std::to_string(version));
  const auto count = get_le<std::uint32_t>(in);
  std::vector<NamedTensor> out(count);
  for (auto& nt : out) {
    const auto len = get_le<std::uint32_t>(in);
    nt.name.resize(len);
    if (!in.read(nt.name.data(), len)) throw std::runtime_error("snapshot truncated");
    const auto rows = get_le<std::uint64_t>(in);
    const auto cols = get_le<std::uint64_t>(in);
    nt.value = Tensor(rows, cols);
  }
  for (auto& nt : out) {
    for (double& v : nt.value.values()) v = get_le<double>(in);
  }
  return out;
}

void save_snapshot(const std::filesystem::path& path, std::span<const Parameter* const> params) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw std::runtime_error("cannot open " + path.string());
  write_snapshot(out, params);
}

void load_snapshot(const std::filesystem::path& path, std::span<Parameter* const> params) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw std::runtime_error("cannot open " + path.string());
  auto tensors = read_snapshot(in);
  if (tensors.size() != params.size()) throw ShapeError("snapshot tensor count mismatch");
  for (std::size_t i = 0; i < params.size(); ++i) {
    if (tensors[i].name != params[i]->name || !tensors[i].value.same_shape(params[i]->value)) {
      throw ShapeError("snapshot entry " + tensors[i].name + " does not match " + params[i]->name);
    }
    params[i]->value = std::move(tensors[i].value);
  }
}

}  // namespace evorl::nn
