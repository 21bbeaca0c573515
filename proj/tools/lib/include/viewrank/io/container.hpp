#pragma once

#include <cstddef>
#include <cstdint>
#include <span>
#include <string>
#include <string_view>
#include <vector>

namespace viewrank::io {

// Layout (all integers little-endian):
//   "CRTN"  u16 version  u32 entry_count
//   per entry: u32 name_len, name bytes (UTF-8), u8 dtype, u32 rank,
//              rank x u64 dims, payload
// The only dtype is f64 (tag 1); payload is product(dims) IEEE-754 doubles.
inline constexpr std::uint16_t kContainerVersion = 1;
inline constexpr std::uint8_t kDtypeF64 = 1;

struct TensorEntry {
  std::string name;
  std::vector<std::uint64_t> dims;
  std::vector<double> values;

  bool operator==(const TensorEntry&) const = default;
};

std::string encode_container(std::span<const TensorEntry> entries);
/// Throws FormatError naming the byte offset of the first problem.
std::vector<TensorEntry> decode_container(std::string_view bytes);

void save_container(const std::string& path, std::span<const TensorEntry> entries);
std::vector<TensorEntry> load_container(const std::string& path);

}  // namespace viewrank::io
