#pragma once

#include <string>
#include <string_view>

#include "viewrank/tensor.hpp"

namespace viewrank::io {

/// Binary PPM (P6) with maxval 255. Samples are scaled by 1/255 into a
/// 3-channel FeatureMap. Header comments ('#' to end of line) are allowed.
/// Throws FormatError naming the byte offset of the first problem.
FeatureMap decode_ppm(std::string_view bytes);
FeatureMap read_ppm(const std::string& path);

/// Values are clamped to [0, 1] and rounded to the nearest 8-bit level.
/// The map must have 3 channels.
std::string encode_ppm(const FeatureMap& image);
void write_ppm(const std::string& path, const FeatureMap& image);

}  // namespace viewrank::io
