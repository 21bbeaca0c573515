#include "viewrank/box.hpp"

#include <cmath>
#include <sstream>
#include <stdexcept>

namespace viewrank {

bool Box::valid() const {
  const bool finite = std::isfinite(x0) && std::isfinite(y0) && std::isfinite(x1) && std::isfinite(y1);
  return finite && 0.0 <= x0 && x0 < x1 && x1 <= 1.0 && 0.0 <= y0 && y0 < y1 && y1 <= 1.0;
}

std::string to_string(const Box& box) {
  std::ostringstream os;
  os.precision(17);
  os << "[" << box.x0 << ", " << box.y0 << ", " << box.x1 << ", " << box.y1 << "]";
  return os.str();
}

void require_valid(const Box& box) {
  if (!box.valid()) throw std::invalid_argument("invalid box " + to_string(box));
}

}  // namespace viewrank
