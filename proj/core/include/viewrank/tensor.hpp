#pragma once

#include <cstddef>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

namespace viewrank {

/// Channel-major (C, H, W) extents of a dense rank-3 array.
struct Shape {
  std::size_t channels = 1;
  std::size_t height = 1;
  std::size_t width = 1;

  std::size_t size() const { return channels * height * width; }
  std::size_t plane() const { return height * width; }
  bool operator==(const Shape&) const = default;
};

std::string to_string(const Shape& shape);

/// Dense real-valued feature map stored channel-major, row-major within a
/// channel. All extents are at least one.
class FeatureMap {
 public:
  FeatureMap() = default;
  explicit FeatureMap(Shape shape, double fill = 0.0);
  FeatureMap(Shape shape, std::vector<double> data);

  const Shape& shape() const { return shape_; }
  std::size_t channels() const { return shape_.channels; }
  std::size_t height() const { return shape_.height; }
  std::size_t width() const { return shape_.width; }
  std::size_t size() const { return data_.size(); }

  double operator()(std::size_t c, std::size_t y, std::size_t x) const {
    return data_[(c * shape_.height + y) * shape_.width + x];
  }
  double& operator()(std::size_t c, std::size_t y, std::size_t x) {
    return data_[(c * shape_.height + y) * shape_.width + x];
  }

  std::span<const double> channel(std::size_t c) const {
    return {data_.data() + c * shape_.plane(), shape_.plane()};
  }
  std::span<double> channel(std::size_t c) {
    return {data_.data() + c * shape_.plane(), shape_.plane()};
  }

  std::span<const double> values() const { return data_; }
  std::span<double> values() { return data_; }
  const std::vector<double>& data() const { return data_; }

  bool all_finite() const;
  bool operator==(const FeatureMap&) const = default;

 private:
  Shape shape_{};
  std::vector<double> data_ = std::vector<double>(1, 0.0);
};

/// Gradient accumulator for a FeatureMap of the same shape. Starts at zero;
/// backward passes only ever add into it.
class GradMap {
 public:
  GradMap() = default;
  explicit GradMap(Shape shape) : values_(shape, 0.0) {}

  const Shape& shape() const { return values_.shape(); }
  std::size_t size() const { return values_.size(); }

  double operator()(std::size_t c, std::size_t y, std::size_t x) const { return values_(c, y, x); }
  void add(std::size_t c, std::size_t y, std::size_t x, double v) { values_(c, y, x) += v; }

  std::span<const double> channel(std::size_t c) const { return values_.channel(c); }
  std::span<double> channel(std::size_t c) { return values_.channel(c); }
  std::span<const double> values() const { return values_.values(); }
  std::span<double> values() { return values_.values(); }

  /// Element-wise sum of another accumulator of identical shape.
  GradMap& operator+=(const GradMap& other);

  const FeatureMap& as_map() const { return values_; }

 private:
  FeatureMap values_;
};

}  // namespace viewrank
