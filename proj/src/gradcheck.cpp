#include "esefn/gradcheck.hpp"

#include <algorithm>
#include <cmath>
#include <vector>

#include "esefn/error.hpp"

namespace esefn {

Tensor finite_diff_grad(const std::function<double(const Tensor&)>& f, Tensor x, double eps) {
  if (!(eps > 0)) throw ConfigError("finite_diff_grad: eps must be positive");
  auto values = x.mutable_values();
  std::vector<double> grad(values.size());
  for (std::size_t i = 0; i < values.size(); ++i) {
    const double original = values[i];
    values[i] = original + eps;
    const double up = f(x);
    values[i] = original - eps;
    const double down = f(x);
    values[i] = original;
    grad[i] = (up - down) / (2.0 * eps);
  }
  return Tensor(x.shape(), std::move(grad));
}

double max_relative_error(std::span<const double> a, std::span<const double> b) {
  if (a.size() != b.size()) {
    throw DimensionError("max_relative_error: sizes " + std::to_string(a.size()) + " and " +
                         std::to_string(b.size()) + " differ");
  }
  double diff = 0.0, scale = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) {
    diff = std::max(diff, std::abs(a[i] - b[i]));
    scale = std::max({scale, std::abs(a[i]), std::abs(b[i])});
  }
  if (scale == 0.0) return 0.0;
  return diff / scale;
}

}  // namespace esefn
