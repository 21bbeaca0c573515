#include "viewrank/io/container.hpp"

#include <bit>
#include <limits>

#include "viewrank/io/errors.hpp"

namespace viewrank::io {

namespace {

template <typename T>
void put(std::string& out, T v) {
  for (std::size_t i = 0; i < sizeof(T); ++i) out.push_back(static_cast<char>((v >> (8 * i)) & 0xFF));
}

class Reader {
 public:
  explicit Reader(std::string_view bytes) : bytes_(bytes) {}

  template <typename T>
  T get(const char* what) {
    need(sizeof(T), what);
    T v = 0;
    for (std::size_t i = 0; i < sizeof(T); ++i) {
      v |= static_cast<T>(static_cast<unsigned char>(bytes_[pos_ + i])) << (8 * i);
    }
    pos_ += sizeof(T);
    return v;
  }

  std::string_view take(std::size_t n, const char* what) {
    need(n, what);
    auto s = bytes_.substr(pos_, n);
    pos_ += n;
    return s;
  }

  void need(std::size_t n, const char* what) const {
    if (bytes_.size() - pos_ < n) {
      throw FormatError(std::string("truncated container: expected ") + what, pos_);
    }
  }

  std::size_t pos() const { return pos_; }
  bool done() const { return pos_ == bytes_.size(); }

 private:
  std::string_view bytes_;
  std::size_t pos_ = 0;
};

}  // namespace

std::string encode_container(std::span<const TensorEntry> entries) {
  std::string out = "CRTN";
  put<std::uint16_t>(out, kContainerVersion);
  put<std::uint32_t>(out, static_cast<std::uint32_t>(entries.size()));
  for (const auto& e : entries) {
    std::uint64_t count = 1;
    for (auto d : e.dims) count *= d;
    if (count != e.values.size()) {
      throw std::invalid_argument("container entry '" + e.name + "': dims describe " +
                                  std::to_string(count) + " values, got " +
                                  std::to_string(e.values.size()));
    }
    put<std::uint32_t>(out, static_cast<std::uint32_t>(e.name.size()));
    out += e.name;
    put<std::uint8_t>(out, kDtypeF64);
    put<std::uint32_t>(out, static_cast<std::uint32_t>(e.dims.size()));
    for (auto d : e.dims) put<std::uint64_t>(out, d);
    for (double v : e.values) put<std::uint64_t>(out, std::bit_cast<std::uint64_t>(v));
  }
  return out;
}

std::vector<TensorEntry> decode_container(std::string_view bytes) {
  Reader r(bytes);
  if (r.take(4, "magic") != "CRTN") throw FormatError("bad magic, expected \"CRTN\"", 0);
  const std::size_t version_at = r.pos();
  const auto version = r.get<std::uint16_t>("version");
  if (version != kContainerVersion) {
    throw FormatError("unsupported container version " + std::to_string(version), version_at);
  }
  const auto count = r.get<std::uint32_t>("entry count");
  std::vector<TensorEntry> entries;
  for (std::uint32_t i = 0; i < count; ++i) {
    TensorEntry e;
    const auto name_len = r.get<std::uint32_t>("name length");
    e.name = std::string(r.take(name_len, "name"));
    const std::size_t dtype_at = r.pos();
    const auto dtype = r.get<std::uint8_t>("dtype");
    if (dtype != kDtypeF64) throw FormatError("unknown dtype tag " + std::to_string(dtype), dtype_at);
    const auto rank = r.get<std::uint32_t>("rank");
    std::uint64_t n = 1;
    for (std::uint32_t k = 0; k < rank; ++k) {
      const std::size_t dim_at = r.pos();
      const auto d = r.get<std::uint64_t>("dimension");
      if (d != 0 && n > std::numeric_limits<std::uint64_t>::max() / 8 / d) {
        throw FormatError("entry '" + e.name + "' is too large", dim_at);
      }
      n *= d;
      e.dims.push_back(d);
    }
    r.need(n * 8, "payload");
    e.values.resize(n);
    for (auto& v : e.values) v = std::bit_cast<double>(r.get<std::uint64_t>("payload"));
    entries.push_back(std::move(e));
  }
  if (!r.done()) throw FormatError("trailing bytes after last entry", r.pos());
  return entries;
}

void save_container(const std::string& path, std::span<const TensorEntry> entries) {
  write_file_bytes(path, encode_container(entries));
}

std::vector<TensorEntry> load_container(const std::string& path) {
  return decode_container(read_file_bytes(path));
}

}  // namespace viewrank::io
