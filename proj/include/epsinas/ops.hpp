#pragma once

#include <optional>

#include "epsinas/tensor.hpp"

// Forward-only layer primitives over NCHW float tensors. All functions are
// pure and deterministic: loop order is fixed, so identical inputs give
// bit-identical outputs.
namespace epsinas::ops {

inline constexpr float kBatchNormEps = 1e-5f;

struct Conv2dParams {
  std::size_t stride = 1;
  std::size_t padding = 0;
};

/// Cross-correlation of input [N,C_in,H,W] with weight [C_out,C_in,kH,kW].
/// Dispatches to a channel-sum kernel when every weight entry is the same
/// value, otherwise runs conv2d_direct.
Tensor conv2d(const Tensor& input, const Tensor& weight, const Tensor* bias, Conv2dParams params);

/// Straight multiply-accumulate kernel; the reference for conv2d.
Tensor conv2d_direct(const Tensor& input, const Tensor& weight, const Tensor* bias, Conv2dParams params);

/// Batch-statistics normalisation per channel with biased variance.
/// Statistics are reduced in double precision; the output stays float32.
Tensor batchnorm(const Tensor& input, const Tensor& gain, const Tensor& bias, float eps = kBatchNormEps);

Tensor relu(const Tensor& input);
void relu_inplace(Tensor& t) noexcept;

struct PoolParams {
  std::size_t kernel = 3;
  std::size_t stride = 1;
  std::size_t padding = 0;
  bool count_includes_pad = false;
};

Tensor avg_pool(const Tensor& input, PoolParams params);

/// Mean over H and W: [N,C,H,W] -> [N,C].
Tensor global_avg_pool(const Tensor& input);

/// input [N,F], weight [O,F], optional bias [O] -> [N,O].
Tensor linear(const Tensor& input, const Tensor& weight, const Tensor* bias);

/// acc += other, elementwise; shapes must match.
void add_inplace(Tensor& acc, const Tensor& other);

/// Output spatial extent for a sliding window; throws ShapeError when it is
/// not a positive integer.
std::size_t window_output_size(std::size_t in, std::size_t kernel, std::size_t stride, std::size_t padding,
                               const char* what);

}  // namespace epsinas::ops
