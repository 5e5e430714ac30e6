#pragma once

#include <algorithm>
#include <cmath>
#include <concepts>
#include <span>
#include <vector>

#include "greenmat/grid.hpp"

namespace greenmat {

struct GradCheckResult {
  double max_rel_error = 0.0;
  std::size_t worst_index = 0;
  std::vector<double> numeric;
};

/// Central-difference check of an analytic gradient.
///
/// `loss` is called with a perturbed copy of `x`. The step actually taken is
/// recomputed after rounding to T, so float fields are checked against the
/// perturbation they really saw. Relative error per element uses the
/// denominator max(|analytic|, |numeric|, 1e-8).
template <std::floating_point T, class Loss>
GradCheckResult grad_check(Loss&& loss, std::span<const T> x, std::span<const double> analytic, double h) {
  if (!(h > 0.0)) throw Error("grad_check: step must be positive");
  if (analytic.size() != x.size()) throw Error("grad_check: gradient length does not match input");
  std::vector<T> probe(x.begin(), x.end());
  GradCheckResult r;
  r.numeric.resize(x.size());
  for (std::size_t i = 0; i < x.size(); ++i) {
    const T up = static_cast<T>(static_cast<double>(x[i]) + h);
    const T down = static_cast<T>(static_cast<double>(x[i]) - h);
    probe[i] = up;
    const double f_up = loss(std::span<const T>(probe));
    probe[i] = down;
    const double f_down = loss(std::span<const T>(probe));
    probe[i] = x[i];
    if (!std::isfinite(f_up) || !std::isfinite(f_down)) throw Error("grad_check: non-finite loss");
    const double numeric = (f_up - f_down) / (static_cast<double>(up) - static_cast<double>(down));
    r.numeric[i] = numeric;
    const double denom = std::max({std::abs(analytic[i]), std::abs(numeric), 1e-8});
    const double rel = std::abs(analytic[i] - numeric) / denom;
    if (rel > r.max_rel_error) {
      r.max_rel_error = rel;
      r.worst_index = i;
    }
  }
  return r;
}

template <std::floating_point T, class Loss>
GradCheckResult grad_check(Loss&& loss, const std::vector<T>& x, const std::vector<double>& analytic, double h) {
  return grad_check<T>(std::forward<Loss>(loss), std::span<const T>(x), std::span<const double>(analytic), h);
}

}  // namespace greenmat
