#pragma once

#include <cstddef>
#include <functional>
#include <span>
#include <string>
#include <vector>

#include "viewrank/tensor.hpp"

namespace viewrank {

struct GradCheckReport {
  bool passed = true;
  double max_abs_error = 0.0;
  double max_rel_error = 0.0;
  std::size_t worst_index = 0;
  std::size_t checked = 0;
  std::string diagnostic;

  /// Folds another report into this one (worst case wins).
  void merge(const GradCheckReport& other);
};

/// Relative error is |analytic - numeric| / max(|analytic|, |numeric|, abs_floor).
/// The floor keeps entries whose true derivative is zero from turning
/// round-off into a spurious relative failure.
struct GradCheckOptions {
  double abs_floor = 1e-8;
  /// Restrict the check to these flat indices; empty means every element.
  std::vector<std::size_t> indices;
};

/// Central-difference check of a scalar function of a flat parameter vector.
/// `params` is perturbed in place and restored before returning.
GradCheckReport finite_diff_check(const std::function<double()>& f, std::span<double> params,
                                  std::span<const double> analytic, double step, double tol,
                                  const GradCheckOptions& options = {});

/// Central-difference check of a scalar function of a FeatureMap.
GradCheckReport finite_diff_check(const std::function<double(const FeatureMap&)>& f,
                                  const FeatureMap& map, const GradMap& analytic, double step,
                                  double tol, const GradCheckOptions& options = {});

}  // namespace viewrank
