#include "viewrank/tensor.hpp"

#include <algorithm>
#include <cmath>

namespace viewrank {

namespace {

void validate(const Shape& shape) {
  if (shape.channels == 0 || shape.height == 0 || shape.width == 0) {
    throw std::invalid_argument("FeatureMap extents must be >= 1, got " + to_string(shape));
  }
}

}  // namespace

std::string to_string(const Shape& shape) {
  return std::to_string(shape.channels) + "x" + std::to_string(shape.height) + "x" +
         std::to_string(shape.width);
}

FeatureMap::FeatureMap(Shape shape, double fill) : shape_(shape) {
  validate(shape);
  data_.assign(shape.size(), fill);
}

FeatureMap::FeatureMap(Shape shape, std::vector<double> data) : shape_(shape), data_(std::move(data)) {
  validate(shape);
  if (data_.size() != shape.size()) {
    throw std::invalid_argument("FeatureMap data length " + std::to_string(data_.size()) +
                                " does not match shape " + to_string(shape));
  }
}

bool FeatureMap::all_finite() const {
  return std::all_of(data_.begin(), data_.end(), [](double v) { return std::isfinite(v); });
}

GradMap& GradMap::operator+=(const GradMap& other) {
  if (other.shape() != shape()) {
    throw std::invalid_argument("GradMap shape mismatch: " + to_string(shape()) + " vs " +
                                to_string(other.shape()));
  }
  auto dst = values();
  auto src = other.values();
  for (std::size_t i = 0; i < dst.size(); ++i) dst[i] += src[i];
  return *this;
}

}  // namespace viewrank
