#include "viewrank/gradcheck.hpp"

#include <algorithm>
#include <cmath>
#include <sstream>
#include <stdexcept>

namespace viewrank {

void GradCheckReport::merge(const GradCheckReport& other) {
  passed = passed && other.passed;
  max_abs_error = std::max(max_abs_error, other.max_abs_error);
  if (other.max_rel_error > max_rel_error) {
    max_rel_error = other.max_rel_error;
    worst_index = other.worst_index;
  }
  checked += other.checked;
  if (!other.diagnostic.empty()) {
    diagnostic += diagnostic.empty() ? other.diagnostic : "; " + other.diagnostic;
  }
}

GradCheckReport finite_diff_check(const std::function<double()>& f, std::span<double> params,
                                  std::span<const double> analytic, double step, double tol,
                                  const GradCheckOptions& options) {
  if (!(step > 0.0) || !(tol > 0.0)) {
    throw std::invalid_argument("finite_diff_check: step and tol must be positive");
  }
  if (analytic.size() != params.size()) {
    throw std::invalid_argument("finite_diff_check: analytic gradient has " +
                                std::to_string(analytic.size()) + " entries, parameters have " +
                                std::to_string(params.size()));
  }

  GradCheckReport report;
  auto check_one = [&](std::size_t i) {
    const double saved = params[i];
    params[i] = saved + step;
    const double up = f();
    params[i] = saved - step;
    const double down = f();
    params[i] = saved;
    ++report.checked;

    if (!std::isfinite(up) || !std::isfinite(down)) {
      report.passed = false;
      std::ostringstream os;
      os << "non-finite function value at index " << i << " (f+ = " << up << ", f- = " << down
         << ")";
      if (report.diagnostic.empty()) report.diagnostic = os.str();
      return;
    }
    const double numeric = (up - down) / (2.0 * step);
    const double abs_err = std::abs(analytic[i] - numeric);
    const double denom =
        std::max({std::abs(analytic[i]), std::abs(numeric), options.abs_floor});
    const double rel_err = abs_err / denom;
    report.max_abs_error = std::max(report.max_abs_error, abs_err);
    if (rel_err > report.max_rel_error) {
      report.max_rel_error = rel_err;
      report.worst_index = i;
    }
    if (rel_err > tol) {
      if (report.passed) {
        std::ostringstream os;
        os << "index " << i << ": analytic " << analytic[i] << " vs numeric " << numeric;
        report.diagnostic = os.str();
      }
      report.passed = false;
    }
  };

  if (options.indices.empty()) {
    for (std::size_t i = 0; i < params.size(); ++i) check_one(i);
  } else {
    for (std::size_t i : options.indices) {
      if (i >= params.size()) throw std::out_of_range("finite_diff_check: index out of range");
      check_one(i);
    }
  }
  return report;
}

GradCheckReport finite_diff_check(const std::function<double(const FeatureMap&)>& f,
                                  const FeatureMap& map, const GradMap& analytic, double step,
                                  double tol, const GradCheckOptions& options) {
  if (analytic.shape() != map.shape()) {
    throw std::invalid_argument("finite_diff_check: gradient shape " +
                                to_string(analytic.shape()) + " does not match map " +
                                to_string(map.shape()));
  }
  FeatureMap probe = map;
  auto values = probe.values();
  return finite_diff_check([&] { return f(probe); }, values, analytic.values(), step, tol,
                           options);
}

}  // namespace viewrank
