#include "esefn/ops.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <string>

#include "esefn/error.hpp"

namespace esefn {

namespace testing {
namespace {
std::atomic<bool> g_conv_sign_flip{false};
}
void set_conv1d_weight_grad_sign_flip(bool enabled) { g_conv_sign_flip.store(enabled); }
bool conv1d_weight_grad_sign_flip() { return g_conv_sign_flip.load(); }
}  // namespace testing

namespace {

// Gradient buffer of input i, or nullptr when that input is not tracked.
double* grad_of(const detail::Node& node, std::size_t i) {
  detail::Node& in = *node.inputs[i];
  return in.requires_grad ? in.grad.data() : nullptr;
}

const double* value_of(const detail::Node& node, std::size_t i) {
  return node.inputs[i]->value.data();
}

void require_rank(const Tensor& t, std::size_t rank, const char* op, const char* what) {
  if (t.shape().rank() != rank) {
    throw DimensionError(std::string(op) + ": " + what + " must be rank " +
                         std::to_string(rank) + ", got shape " + t.shape().str());
  }
}

[[noreturn]] void mismatch(const char* op, const char* a_name, const Tensor& a,
                           const char* b_name, const Tensor& b) {
  throw DimensionError(std::string(op) + ": " + a_name + " " + a.shape().str() +
                       " is incompatible with " + b_name + " " + b.shape().str());
}

}  // namespace

Tensor conv1d(const Tensor& input, const Tensor& weight, const Tensor& bias, std::size_t stride,
              std::size_t padding) {
  require_rank(input, 2, "conv1d", "input");
  require_rank(weight, 3, "conv1d", "weight");
  require_rank(bias, 1, "conv1d", "bias");
  const std::size_t c_in = input.shape()[0], len = input.shape()[1];
  const std::size_t c_out = weight.shape()[0], k = weight.shape()[2];
  if (weight.shape()[1] != c_in) mismatch("conv1d", "input", input, "weight", weight);
  if (bias.shape()[0] != c_out) mismatch("conv1d", "weight", weight, "bias", bias);
  if (stride < 1) throw ConfigError("conv1d: stride must be >= 1");
  if (len + 2 * padding < k) {
    throw DimensionError("conv1d: padded length " + std::to_string(len + 2 * padding) +
                         " of input " + input.shape().str() + " is shorter than kernel of weight " +
                         weight.shape().str());
  }
  const std::size_t out_len = (len + 2 * padding - k) / stride + 1;

  const auto x = input.values();
  const auto w = weight.values();
  const auto b = bias.values();
  std::vector<double> y(c_out * out_len);
  for (std::size_t o = 0; o < c_out; ++o) {
    for (std::size_t j = 0; j < out_len; ++j) {
      double acc = b[o];
      for (std::size_t c = 0; c < c_in; ++c) {
        for (std::size_t t = 0; t < k; ++t) {
          const std::ptrdiff_t pos = static_cast<std::ptrdiff_t>(j * stride + t) -
                                     static_cast<std::ptrdiff_t>(padding);
          if (pos < 0 || pos >= static_cast<std::ptrdiff_t>(len)) continue;
          acc += w[(o * c_in + c) * k + t] * x[c * len + static_cast<std::size_t>(pos)];
        }
      }
      y[o * out_len + j] = acc;
    }
  }

  auto backprop = [=](const detail::Node& node) {
    const double* gy = node.grad.data();
    const double* xv = value_of(node, 0);
    const double* wv = value_of(node, 1);
    double* gx = grad_of(node, 0);
    double* gw = grad_of(node, 1);
    double* gb = grad_of(node, 2);
    const double sign = testing::conv1d_weight_grad_sign_flip() ? -1.0 : 1.0;
    for (std::size_t o = 0; o < c_out; ++o) {
      for (std::size_t j = 0; j < out_len; ++j) {
        const double g = gy[o * out_len + j];
        if (gb) gb[o] += g;
        for (std::size_t c = 0; c < c_in; ++c) {
          for (std::size_t t = 0; t < k; ++t) {
            const std::ptrdiff_t pos = static_cast<std::ptrdiff_t>(j * stride + t) -
                                       static_cast<std::ptrdiff_t>(padding);
            if (pos < 0 || pos >= static_cast<std::ptrdiff_t>(len)) continue;
            const std::size_t xi = c * len + static_cast<std::size_t>(pos);
            const std::size_t wi = (o * c_in + c) * k + t;
            if (gw) gw[wi] += sign * g * xv[xi];
            if (gx) gx[xi] += g * wv[wi];
          }
        }
      }
    }
  };
  return Tensor::from_op("conv1d", Shape{c_out, out_len}, std::move(y), {input, weight, bias},
                         backprop);
}

std::size_t conv1d_transposed_length(std::size_t length, std::size_t kernel, std::size_t stride,
                                     std::size_t padding) {
  if (stride < 1) throw ConfigError("conv1d_transposed: stride must be >= 1");
  if (length < 1 || kernel < 1) throw ConfigError("conv1d_transposed: empty length or kernel");
  const std::size_t full = (length - 1) * stride + kernel;
  if (full <= 2 * padding || full - 2 * padding <= length) {
    throw ConfigError("conv1d_transposed: length " + std::to_string(length) + " with kernel " +
                      std::to_string(kernel) + ", stride " + std::to_string(stride) +
                      ", padding " + std::to_string(padding) + " does not expand the input");
  }
  return full - 2 * padding;
}

Tensor conv1d_transposed(const Tensor& input, const Tensor& weight, const Tensor& bias,
                         std::size_t stride, std::size_t padding) {
  require_rank(input, 2, "conv1d_transposed", "input");
  require_rank(weight, 3, "conv1d_transposed", "weight");
  require_rank(bias, 1, "conv1d_transposed", "bias");
  const std::size_t c_in = input.shape()[0], len = input.shape()[1];
  const std::size_t c_out = weight.shape()[1], k = weight.shape()[2];
  if (weight.shape()[0] != c_in) mismatch("conv1d_transposed", "input", input, "weight", weight);
  if (bias.shape()[0] != c_out) mismatch("conv1d_transposed", "weight", weight, "bias", bias);
  const std::size_t out_len = conv1d_transposed_length(len, k, stride, padding);

  // Scatter form: input position i touches output i*stride - padding + t.
  const auto x = input.values();
  const auto w = weight.values();
  const auto b = bias.values();
  std::vector<double> y(c_out * out_len);
  for (std::size_t o = 0; o < c_out; ++o) {
    std::fill_n(y.begin() + static_cast<std::ptrdiff_t>(o * out_len), out_len, b[o]);
  }
  for (std::size_t c = 0; c < c_in; ++c) {
    for (std::size_t i = 0; i < len; ++i) {
      const double xv = x[c * len + i];
      for (std::size_t o = 0; o < c_out; ++o) {
        for (std::size_t t = 0; t < k; ++t) {
          const std::ptrdiff_t pos = static_cast<std::ptrdiff_t>(i * stride + t) -
                                     static_cast<std::ptrdiff_t>(padding);
          if (pos < 0 || pos >= static_cast<std::ptrdiff_t>(out_len)) continue;
          y[o * out_len + static_cast<std::size_t>(pos)] += xv * w[(c * c_out + o) * k + t];
        }
      }
    }
  }

  auto backprop = [=](const detail::Node& node) {
    const double* gy = node.grad.data();
    const double* xv = value_of(node, 0);
    const double* wv = value_of(node, 1);
    double* gx = grad_of(node, 0);
    double* gw = grad_of(node, 1);
    double* gb = grad_of(node, 2);
    if (gb) {
      for (std::size_t o = 0; o < c_out; ++o) {
        for (std::size_t j = 0; j < out_len; ++j) gb[o] += gy[o * out_len + j];
      }
    }
    for (std::size_t c = 0; c < c_in; ++c) {
      for (std::size_t i = 0; i < len; ++i) {
        const std::size_t xi = c * len + i;
        for (std::size_t o = 0; o < c_out; ++o) {
          for (std::size_t t = 0; t < k; ++t) {
            const std::ptrdiff_t pos = static_cast<std::ptrdiff_t>(i * stride + t) -
                                       static_cast<std::ptrdiff_t>(padding);
            if (pos < 0 || pos >= static_cast<std::ptrdiff_t>(out_len)) continue;
            const double g = gy[o * out_len + static_cast<std::size_t>(pos)];
            const std::size_t wi = (c * c_out + o) * k + t;
            if (gx) gx[xi] += g * wv[wi];
            if (gw) gw[wi] += g * xv[xi];
          }
        }
      }
    }
  };
  return Tensor::from_op("conv1d_transposed", Shape{c_out, out_len}, std::move(y),
                         {input, weight, bias}, backprop);
}

Tensor global_avg_pool(const Tensor& input) {
  require_rank(input, 2, "global_avg_pool", "input");
  const std::size_t channels = input.shape()[0], len = input.shape()[1];
  const auto x = input.values();
  std::vector<double> y(channels);
  for (std::size_t c = 0; c < channels; ++c) {
    double acc = 0.0;
    for (std::size_t j = 0; j < len; ++j) acc += x[c * len + j];
    y[c] = acc / static_cast<double>(len);
  }
  auto backprop = [=](const detail::Node& node) {
    double* gx = grad_of(node, 0);
    const double scale = 1.0 / static_cast<double>(len);
    for (std::size_t c = 0; c < channels; ++c) {
      const double g = node.grad[c] * scale;
      for (std::size_t j = 0; j < len; ++j) gx[c * len + j] += g;
    }
  };
  return Tensor::from_op("global_avg_pool", Shape{channels}, std::move(y), {input}, backprop);
}

Tensor fully_connected(const Tensor& input, const Tensor& weight, const Tensor& bias) {
  require_rank(input, 1, "fully_connected", "input");
  require_rank(weight, 2, "fully_connected", "weight");
  require_rank(bias, 1, "fully_connected", "bias");
  const std::size_t q = weight.shape()[0], p = weight.shape()[1];
  if (input.shape()[0] != p) mismatch("fully_connected", "input", input, "weight", weight);
  if (bias.shape()[0] != q) mismatch("fully_connected", "weight", weight, "bias", bias);
  const auto x = input.values();
  const auto w = weight.values();
  const auto b = bias.values();
  std::vector<double> y(q);
  for (std::size_t i = 0; i < q; ++i) {
    double acc = b[i];
    for (std::size_t j = 0; j < p; ++j) acc += w[i * p + j] * x[j];
    y[i] = acc;
  }
  auto backprop = [=](const detail::Node& node) {
    const double* gy = node.grad.data();
    const double* xv = value_of(node, 0);
    const double* wv = value_of(node, 1);
    double* gx = grad_of(node, 0);
    double* gw = grad_of(node, 1);
    double* gb = grad_of(node, 2);
    for (std::size_t i = 0; i < q; ++i) {
      const double g = gy[i];
      if (gb) gb[i] += g;
      for (std::size_t j = 0; j < p; ++j) {
        if (gw) gw[i * p + j] += g * xv[j];
        if (gx) gx[j] += g * wv[i * p + j];
      }
    }
  };
  return Tensor::from_op("fully_connected", Shape{q}, std::move(y), {input, weight, bias},
                         backprop);
}

Tensor sigmoid(const Tensor& input) {
  const auto x = input.values();
  std::vector<double> y(x.size());
  for (std::size_t i = 0; i < x.size(); ++i) {
    // Branch on sign so exp never overflows.
    if (x[i] >= 0) {
      y[i] = 1.0 / (1.0 + std::exp(-x[i]));
    } else {
      const double e = std::exp(x[i]);
      y[i] = e / (1.0 + e);
    }
  }
  auto backprop = [](const detail::Node& node) {
    double* gx = grad_of(node, 0);
    for (std::size_t i = 0; i < node.value.size(); ++i) {
      const double s = node.value[i];
      gx[i] += node.grad[i] * s * (1.0 - s);
    }
  };
  return Tensor::from_op("sigmoid", input.shape(), std::move(y), {input}, backprop);
}

Tensor relu(const Tensor& input) {
  const auto x = input.values();
  std::vector<double> y(x.size());
  for (std::size_t i = 0; i < x.size(); ++i) y[i] = x[i] > 0 ? x[i] : 0.0;
  auto backprop = [](const detail::Node& node) {
    double* gx = grad_of(node, 0);
    const double* xv = value_of(node, 0);
    for (std::size_t i = 0; i < node.value.size(); ++i) {
      if (xv[i] > 0) gx[i] += node.grad[i];
    }
  };
  return Tensor::from_op("relu", input.shape(), std::move(y), {input}, backprop);
}

Tensor softmax_cross_entropy(const Tensor& logits, std::size_t label) {
  require_rank(logits, 1, "softmax_cross_entropy", "logits");
  const std::size_t classes = logits.shape()[0];
  if (label >= classes) {
    throw InputError("softmax_cross_entropy: label " + std::to_string(label) +
                     " out of range for " + std::to_string(classes) + " classes");
  }
  const auto z = logits.values();
  const double zmax = *std::max_element(z.begin(), z.end());
  std::vector<double> prob(classes);
  double denom = 0.0;
  for (std::size_t i = 0; i < classes; ++i) {
    prob[i] = std::exp(z[i] - zmax);
    denom += prob[i];
  }
  const double loss = std::log(denom) - (z[label] - zmax);
  for (double& p : prob) p /= denom;

  auto backprop = [prob = std::move(prob), label](const detail::Node& node) {
    double* gz = grad_of(node, 0);
    const double g = node.grad[0];
    for (std::size_t i = 0; i < prob.size(); ++i) {
      gz[i] += g * (prob[i] - (i == label ? 1.0 : 0.0));
    }
  };
  return Tensor::from_op("softmax_cross_entropy", Shape{}, {loss}, {logits}, backprop);
}

Tensor transpose(const Tensor& input) {
  require_rank(input, 2, "transpose", "input");
  const std::size_t rows = input.shape()[0], cols = input.shape()[1];
  const auto x = input.values();
  std::vector<double> y(x.size());
  for (std::size_t r = 0; r < rows; ++r) {
    for (std::size_t c = 0; c < cols; ++c) y[c * rows + r] = x[r * cols + c];
  }
  auto backprop = [=](const detail::Node& node) {
    double* gx = grad_of(node, 0);
    for (std::size_t r = 0; r < rows; ++r) {
      for (std::size_t c = 0; c < cols; ++c) gx[r * cols + c] += node.grad[c * rows + r];
    }
  };
  return Tensor::from_op("transpose", Shape{cols, rows}, std::move(y), {input}, backprop);
}

Tensor stack_columns(std::span<const Tensor> columns) {
  if (columns.empty()) throw DimensionError("stack_columns: no inputs");
  const std::size_t n = columns.size();
  require_rank(columns[0], 1, "stack_columns", "column");
  const std::size_t d = columns[0].shape()[0];
  for (const auto& c : columns) {
    require_rank(c, 1, "stack_columns", "column");
    if (c.shape()[0] != d) mismatch("stack_columns", "column", columns[0], "column", c);
  }
  std::vector<double> y(d * n);
  for (std::size_t i = 0; i < n; ++i) {
    const auto v = columns[i].values();
    for (std::size_t r = 0; r < d; ++r) y[r * n + i] = v[r];
  }
  auto backprop = [=](const detail::Node& node) {
    for (std::size_t i = 0; i < n; ++i) {
      double* g = grad_of(node, i);
      if (!g) continue;
      for (std::size_t r = 0; r < d; ++r) g[r] += node.grad[r * n + i];
    }
  };
  return Tensor::from_op("stack_columns", Shape{d, n}, std::move(y),
                         std::vector<Tensor>(columns.begin(), columns.end()), backprop);
}

Tensor concat(std::span<const Tensor> parts) {
  if (parts.empty()) throw DimensionError("concat: no inputs");
  std::vector<double> y;
  std::vector<std::size_t> offsets;
  for (const auto& p : parts) {
    require_rank(p, 1, "concat", "part");
    offsets.push_back(y.size());
    y.insert(y.end(), p.values().begin(), p.values().end());
  }
  const std::size_t total = y.size();
  auto backprop = [offsets](const detail::Node& node) {
    for (std::size_t i = 0; i < offsets.size(); ++i) {
      double* g = grad_of(node, i);
      if (!g) continue;
      const std::size_t len = node.inputs[i]->value.size();
      for (std::size_t j = 0; j < len; ++j) g[j] += node.grad[offsets[i] + j];
    }
  };
  return Tensor::from_op("concat", Shape{total}, std::move(y),
                         std::vector<Tensor>(parts.begin(), parts.end()), backprop);
}

Tensor scale_rows(const Tensor& input, const Tensor& gates) {
  require_rank(input, 2, "scale_rows", "input");
  require_rank(gates, 1, "scale_rows", "gates");
  const std::size_t rows = input.shape()[0], cols = input.shape()[1];
  if (gates.shape()[0] != rows) mismatch("scale_rows", "input", input, "gates", gates);
  const auto x = input.values();
  const auto g = gates.values();
  std::vector<double> y(x.size());
  for (std::size_t r = 0; r < rows; ++r) {
    for (std::size_t c = 0; c < cols; ++c) y[r * cols + c] = x[r * cols + c] * g[r];
  }
  auto backprop = [=](const detail::Node& node) {
    const double* xv = value_of(node, 0);
    const double* gv = value_of(node, 1);
    double* gx = grad_of(node, 0);
    double* gg = grad_of(node, 1);
    for (std::size_t r = 0; r < rows; ++r) {
      for (std::size_t c = 0; c < cols; ++c) {
        const double gy = node.grad[r * cols + c];
        if (gx) gx[r * cols + c] += gy * gv[r];
        if (gg) gg[r] += gy * xv[r * cols + c];
      }
    }
  };
  return Tensor::from_op("scale_rows", input.shape(), std::move(y), {input, gates}, backprop);
}

Tensor sum_rows(const Tensor& input) {
  require_rank(input, 2, "sum_rows", "input");
  const std::size_t rows = input.shape()[0], cols = input.shape()[1];
  const auto x = input.values();
  std::vector<double> y(rows, 0.0);
  for (std::size_t r = 0; r < rows; ++r) {
    for (std::size_t c = 0; c < cols; ++c) y[r] += x[r * cols + c];
  }
  auto backprop = [=](const detail::Node& node) {
    double* gx = grad_of(node, 0);
    for (std::size_t r = 0; r < rows; ++r) {
      for (std::size_t c = 0; c < cols; ++c) gx[r * cols + c] += node.grad[r];
    }
  };
  return Tensor::from_op("sum_rows", Shape{rows}, std::move(y), {input}, backprop);
}

Tensor sum(const Tensor& input) {
  double acc = 0.0;
  for (double v : input.values()) acc += v;
  auto backprop = [](const detail::Node& node) {
    double* gx = grad_of(node, 0);
    const std::size_t n = node.inputs[0]->value.size();
    for (std::size_t i = 0; i < n; ++i) gx[i] += node.grad[0];
  };
  return Tensor::from_op("sum", Shape{}, {acc}, {input}, backprop);
}

Tensor weighted_sum(std::span<const Tensor> terms, std::span<const double> coeffs) {
  if (terms.empty() || terms.size() != coeffs.size()) {
    throw DimensionError("weighted_sum: " + std::to_string(terms.size()) + " terms but " +
                         std::to_string(coeffs.size()) + " coefficients");
  }
  double acc = 0.0;
  for (std::size_t i = 0; i < terms.size(); ++i) {
    if (terms[i].numel() != 1) {
      throw DimensionError("weighted_sum: term " + std::to_string(i) + " has shape " +
                           terms[i].shape().str() + ", expected a scalar");
    }
    acc += coeffs[i] * terms[i].item();
  }
  std::vector<double> c(coeffs.begin(), coeffs.end());
  auto backprop = [c = std::move(c)](const detail::Node& node) {
    for (std::size_t i = 0; i < c.size(); ++i) {
      if (double* g = grad_of(node, i)) g[0] += c[i] * node.grad[0];
    }
  };
  return Tensor::from_op("weighted_sum", Shape{}, {acc},
                         std::vector<Tensor>(terms.begin(), terms.end()), backprop);
}

Tensor mean(std::span<const Tensor> scalars) {
  if (scalars.empty()) throw InputError("mean: no terms");
  std::vector<double> coeffs(scalars.size(), 1.0 / static_cast<double>(scalars.size()));
  return weighted_sum(scalars, coeffs);
}

}  // namespace esefn
