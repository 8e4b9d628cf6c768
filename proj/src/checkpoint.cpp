#include "ma4div/checkpoint.hpp"

#include <algorithm>
#include <array>
#include <bit>
#include <cstring>
#include <fstream>
#include <unordered_map>

namespace ma4div::checkpoint {

namespace {

constexpr std::array<char, 8> kMagic = {'M', 'A', '4', 'D', 'C', 'K', 'P', 'T'};

template <typename T>
T to_little(T v) {
  if constexpr (std::endian::native == std::endian::little) {
    return v;
  } else {
    std::array<unsigned char, sizeof(T)> bytes;
    std::memcpy(bytes.data(), &v, sizeof(T));
    std::reverse(bytes.begin(), bytes.end());
    std::memcpy(&v, bytes.data(), sizeof(T));
    return v;
  }
}

template <typename T>
void put(std::ostream& out, T v) {
  v = to_little(v);
  out.write(reinterpret_cast<const char*>(&v), sizeof(T));
}

template <typename T>
T get(std::istream& in, const std::filesystem::path& path, const char* what) {
  T v;
  if (!in.read(reinterpret_cast<char*>(&v), sizeof(T))) {
    throw std::runtime_error(path.string() + ": truncated checkpoint while reading " + what);
  }
  return to_little(v);
}

}  // namespace

void save(const std::filesystem::path& path, std::span<const NamedTensor> tensors) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw std::runtime_error("cannot open " + path.string() + " for writing");
  out.write(kMagic.data(), kMagic.size());
  put<std::uint32_t>(out, kVersion);
  put<std::uint32_t>(out, static_cast<std::uint32_t>(tensors.size()));
  for (const NamedTensor& t : tensors) {
    put<std::uint32_t>(out, static_cast<std::uint32_t>(t.name.size()));
    out.write(t.name.data(), static_cast<std::streamsize>(t.name.size()));
    put<std::uint32_t>(out, 2);
    put<std::uint64_t>(out, static_cast<std::uint64_t>(t.value.rows()));
    put<std::uint64_t>(out, static_cast<std::uint64_t>(t.value.cols()));
    for (Eigen::Index i = 0; i < t.value.size(); ++i) {
      put<std::uint64_t>(out, std::bit_cast<std::uint64_t>(t.value.data()[i]));
    }
  }
  if (!out) throw std::runtime_error("write failed for " + path.string());
}

std::vector<NamedTensor> load(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw std::runtime_error("cannot open checkpoint " + path.string());
  std::array<char, 8> magic{};
  if (!in.read(magic.data(), magic.size()) || magic != kMagic) {
    throw std::runtime_error(path.string() + ": not a parameter checkpoint (bad magic)");
  }
  const auto version = get<std::uint32_t>(in, path, "version");
  if (version != kVersion) {
    throw std::runtime_error(path.string() + ": unsupported checkpoint version " +
                             std::to_string(version));
  }
  const auto count = get<std::uint32_t>(in, path, "tensor count");
  std::vector<NamedTensor> tensors;
  for (std::uint32_t k = 0; k < count; ++k) {
    const auto name_len = get<std::uint32_t>(in, path, "name length");
    if (name_len > 4096) throw std::runtime_error(path.string() + ": implausible name length");
    std::string name(name_len, '\0');
    if (!in.read(name.data(), name_len)) {
      throw std::runtime_error(path.string() + ": truncated tensor name");
    }
    const auto rank = get<std::uint32_t>(in, path, "rank");
    if (rank < 1 || rank > 2) {
      throw std::runtime_error(path.string() + ": tensor '" + name + "' has unsupported rank " +
                               std::to_string(rank));
    }
    std::array<std::uint64_t, 2> dims = {1, 1};
    for (std::uint32_t d = 0; d < rank; ++d) dims[d] = get<std::uint64_t>(in, path, "dimension");
    if (rank == 1) dims = {1, dims[0]};
    if (dims[0] == 0 || dims[1] == 0 || dims[0] * dims[1] > (1u << 28)) {
      throw std::runtime_error(path.string() + ": tensor '" + name + "' has invalid shape");
    }
    Tensor value(static_cast<Eigen::Index>(dims[0]), static_cast<Eigen::Index>(dims[1]));
    for (Eigen::Index i = 0; i < value.size(); ++i) {
      value.data()[i] = std::bit_cast<double>(get<std::uint64_t>(in, path, "tensor data"));
    }
    if (!all_finite(value)) {
      throw std::runtime_error(path.string() + ": tensor '" + name + "' contains non-finite values");
    }
    tensors.push_back({std::move(name), std::move(value)});
  }
  if (in.peek() != std::char_traits<char>::eof()) {
    throw std::runtime_error(path.string() + ": trailing bytes after last tensor");
  }
  return tensors;
}

std::vector<NamedTensor> snapshot(std::span<diff::Parameter* const> params) {
  std::vector<NamedTensor> out;
  out.reserve(params.size());
  for (const diff::Parameter* p : params) out.push_back({p->name, p->value});
  return out;
}

void restore(std::span<const NamedTensor> tensors, std::span<diff::Parameter* const> params) {
  std::unordered_map<std::string, const NamedTensor*> by_name;
  for (const NamedTensor& t : tensors) {
    if (!by_name.emplace(t.name, &t).second) {
      throw std::runtime_error("checkpoint: duplicate tensor '" + t.name + "'");
    }
  }
  if (by_name.size() != params.size()) {
    throw std::runtime_error("checkpoint: holds " + std::to_string(by_name.size()) +
                             " tensors, model expects " + std::to_string(params.size()));
  }
  for (diff::Parameter* p : params) {
    auto it = by_name.find(p->name);
    if (it == by_name.end()) throw std::runtime_error("checkpoint: missing tensor '" + p->name + "'");
    const Tensor& v = it->second->value;
    if (v.rows() != p->value.rows() || v.cols() != p->value.cols()) {
      throw ShapeError("checkpoint: tensor '" + p->name + "' has shape " + shape_string(v) +
                       ", model expects " + shape_string(p->value));
    }
    p->value = v;
  }
}

}  // namespace ma4div::checkpoint
