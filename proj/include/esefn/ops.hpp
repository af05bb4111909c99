#pragma once

#include <cstddef>
#include <span>
#include <vector>

#include "esefn/tensor.hpp"

namespace esefn {

/// Cross-correlation over the trailing axis.
/// input [C_in x L], weight [C_out x C_in x k], bias [C_out] -> [C_out x L_out]
/// with L_out = (L + 2*padding - k) / stride + 1 and zero padding.
Tensor conv1d(const Tensor& input, const Tensor& weight, const Tensor& bias, std::size_t stride,
              std::size_t padding);

/// Adjoint of conv1d with respect to its input, plus bias.
/// input [C_in x L], weight [C_in x C_out x k], bias [C_out] -> [C_out x L_out]
/// with L_out = (L - 1)*stride - 2*padding + k, which must exceed L.
Tensor conv1d_transposed(const Tensor& input, const Tensor& weight, const Tensor& bias,
                         std::size_t stride, std::size_t padding);

/// Output length of conv1d_transposed; ConfigError unless it exceeds `length`.
std::size_t conv1d_transposed_length(std::size_t length, std::size_t kernel, std::size_t stride,
                                     std::size_t padding);

/// [C x L] -> [C], mean over the trailing axis.
Tensor global_avg_pool(const Tensor& input);

/// weight [q x p] * input [p] + bias [q]
Tensor fully_connected(const Tensor& input, const Tensor& weight, const Tensor& bias);

Tensor sigmoid(const Tensor& input);
Tensor relu(const Tensor& input);

/// -log softmax(logits)[label], max-subtracted. Scalar result.
Tensor softmax_cross_entropy(const Tensor& logits, std::size_t label);

/// [R x C] -> [C x R]
Tensor transpose(const Tensor& input);

/// n rank-1 tensors of length d -> [d x n], column i is input i.
Tensor stack_columns(std::span<const Tensor> columns);

/// Rank-1 concatenation.
Tensor concat(std::span<const Tensor> parts);

/// out[r, :] = input[r, :] * gates[r]
Tensor scale_rows(const Tensor& input, const Tensor& gates);

/// [R x C] -> [R], sum over the trailing axis.
Tensor sum_rows(const Tensor& input);

/// Sum of all elements, scalar result.
Tensor sum(const Tensor& input);

/// Mean of scalar tensors.
Tensor mean(std::span<const Tensor> scalars);

/// sum_i coeffs[i] * terms[i] over scalar tensors.
Tensor weighted_sum(std::span<const Tensor> terms, std::span<const double> coeffs);

namespace testing {

/// Fault injection for gradient-check self tests: negates the weight
/// gradient produced by conv1d's backward pass while enabled.
void set_conv1d_weight_grad_sign_flip(bool enabled);
bool conv1d_weight_grad_sign_flip();

}  // namespace testing

}  // namespace esefn
