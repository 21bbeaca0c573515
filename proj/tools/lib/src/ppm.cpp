#include "viewrank/io/ppm.hpp"

#include <algorithm>
#include <cctype>
#include <cmath>

#include "viewrank/io/errors.hpp"

namespace viewrank::io {

namespace {

bool is_space(char c) { return c == ' ' || c == '\t' || c == '\n' || c == '\r' || c == '\v' || c == '\f'; }

void skip_space_and_comments(std::string_view b, std::size_t& pos) {
  while (pos < b.size()) {
    if (is_space(b[pos])) {
      ++pos;
    } else if (b[pos] == '#') {
      while (pos < b.size() && b[pos] != '\n') ++pos;
    } else {
      break;
    }
  }
}

struct HeaderInt {
  std::size_t value;
  std::size_t at;  // offset of the first digit
};

HeaderInt read_header_int(std::string_view b, std::size_t& pos, const char* what) {
  skip_space_and_comments(b, pos);
  const std::size_t start = pos;
  std::size_t v = 0;
  while (pos < b.size() && std::isdigit(static_cast<unsigned char>(b[pos]))) {
    v = v * 10 + static_cast<std::size_t>(b[pos] - '0');
    if (v > 1'000'000) throw FormatError(std::string("PPM ") + what + " is too large", start);
    ++pos;
  }
  if (pos == start) throw FormatError(std::string("PPM header: expected ") + what, start);
  return {v, start};
}

}  // namespace

FeatureMap decode_ppm(std::string_view b) {
  if (b.size() < 2 || b[0] != 'P' || b[1] != '6') throw FormatError("not a binary PPM: expected magic \"P6\"", 0);
  std::size_t pos = 2;
  const HeaderInt w = read_header_int(b, pos, "width");
  const HeaderInt h = read_header_int(b, pos, "height");
  if (w.value == 0) throw FormatError("PPM image has zero width", w.at);
  if (h.value == 0) throw FormatError("PPM image has zero height", h.at);
  const std::size_t width = w.value;
  const std::size_t height = h.value;
  const HeaderInt maxval = read_header_int(b, pos, "maxval");
  if (maxval.value != 255) {
    throw FormatError("unsupported PPM maxval " + std::to_string(maxval.value) + " (only 255)", maxval.at);
  }
  if (pos >= b.size() || !is_space(b[pos])) {
    throw FormatError("PPM header must end with a single whitespace byte", pos);
  }
  ++pos;
  const std::size_t need = width * height * 3;
  if (b.size() - pos < need) {
    throw FormatError("truncated PPM pixel data: need " + std::to_string(need) + " bytes, have " +
                          std::to_string(b.size() - pos),
                      b.size());
  }
  FeatureMap img({3, height, width});
  for (std::size_t y = 0; y < height; ++y) {
    for (std::size_t x = 0; x < width; ++x) {
      for (std::size_t c = 0; c < 3; ++c) {
        img(c, y, x) = static_cast<unsigned char>(b[pos++]) / 255.0;
      }
    }
  }
  return img;
}

FeatureMap read_ppm(const std::string& path) { return decode_ppm(read_file_bytes(path)); }

std::string encode_ppm(const FeatureMap& image) {
  if (image.channels() != 3) {
    throw std::invalid_argument("encode_ppm: need 3 channels, got " + std::to_string(image.channels()));
  }
  std::string out = "P6\n" + std::to_string(image.width()) + " " + std::to_string(image.height()) + "\n255\n";
  out.reserve(out.size() + image.size());
  for (std::size_t y = 0; y < image.height(); ++y) {
    for (std::size_t x = 0; x < image.width(); ++x) {
      for (std::size_t c = 0; c < 3; ++c) {
        const double v = std::clamp(image(c, y, x), 0.0, 1.0);
        out.push_back(static_cast<char>(static_cast<unsigned char>(std::lround(v * 255.0))));
      }
    }
  }
  return out;
}

void write_ppm(const std::string& path, const FeatureMap& image) { write_file_bytes(path, encode_ppm(image)); }

}  // namespace viewrank::io
