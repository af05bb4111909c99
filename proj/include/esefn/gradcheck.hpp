#pragma once

#include <functional>
#include <span>

#include "esefn/tensor.hpp"

namespace esefn {

/// Central-difference gradient of a scalar function at `x`.
///
/// Each element of `x` is perturbed in place by +/-eps, `f(x)` evaluated, and
/// the original value restored bit-exactly, so `f` may ignore its argument and
/// read the perturbed tensor through a shared handle (e.g. a model parameter).
Tensor finite_diff_grad(const std::function<double(const Tensor&)>& f, Tensor x,
                        double eps = 1e-6);

/// max_i |a_i - b_i| / max(max_i |a_i|, max_i |b_i|), or 0 when both are
/// identically zero. Scale-aware so vanishing components do not dominate.
double max_relative_error(std::span<const double> a, std::span<const double> b);

}  // namespace esefn
