#pragma once

#include <cstddef>
#include <stdexcept>
#include <string>

namespace viewrank::io {

/// Malformed binary input. `offset` is the byte position where parsing failed.
class FormatError : public std::runtime_error {
 public:
  FormatError(const std::string& what, std::size_t offset)
      : std::runtime_error(what + " (at byte offset " + std::to_string(offset) + ")"), offset_(offset) {}
  std::size_t offset() const { return offset_; }

 private:
  std::size_t offset_;
};

/// Invalid configuration value; the message starts with the offending field
/// path, e.g. "train.learning_rate: must be > 0".
class ConfigError : public std::runtime_error {
 public:
  ConfigError(const std::string& path, const std::string& what)
      : std::runtime_error(path + ": " + what), path_(path) {}
  const std::string& path() const { return path_; }

 private:
  std::string path_;
};

/// Well-formed input whose contents do not fit together (mismatched ids,
/// missing entries, ...).
class DataError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

std::string read_file_bytes(const std::string& path);
void write_file_bytes(const std::string& path, const std::string& bytes);

}  // namespace viewrank::io
