#pragma once

#include <string>

namespace viewrank {

/// Axis-aligned rectangle in normalized image coordinates; (x0, y0) is the
/// top-left corner. A valid box satisfies 0 <= x0 < x1 <= 1 and likewise in y.
struct Box {
  double x0 = 0.0;
  double y0 = 0.0;
  double x1 = 1.0;
  double y1 = 1.0;

  double width() const { return x1 - x0; }
  double height() const { return y1 - y0; }
  double area() const { return width() * height(); }
  double center_x() const { return 0.5 * (x0 + x1); }
  double center_y() const { return 0.5 * (y0 + y1); }

  bool valid() const;
  bool operator==(const Box&) const = default;
};

std::string to_string(const Box& box);

/// Throws std::invalid_argument when the box is not valid.
void require_valid(const Box& box);

}  // namespace viewrank
