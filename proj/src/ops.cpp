#include "epsinas/ops.hpp"

#include <algorithm>
#include <cmath>
#include <string>

#include "epsinas/error.hpp"

namespace epsinas::ops {

namespace {

void require_rank(const Tensor& t, std::size_t rank, const char* what) {
  if (t.rank() != rank) {
    throw ShapeError(std::string(what) + " expects a rank-" + std::to_string(rank) + " tensor, got " +
                     shape_to_string(t.shape()));
  }
}

struct ConvGeometry {
  std::size_t n, c_in, h, w, c_out, kh, kw, oh, ow;
};

ConvGeometry conv_geometry(const Tensor& input, const Tensor& weight, const Tensor* bias, Conv2dParams p) {
  require_rank(input, 4, "conv2d input");
  require_rank(weight, 4, "conv2d weight");
  if (p.stride == 0) throw ShapeError("conv2d stride must be positive");
  ConvGeometry g{input.dim(0), input.dim(1), input.dim(2), input.dim(3),
                 weight.dim(0), weight.dim(2), weight.dim(3), 0, 0};
  if (weight.dim(1) != g.c_in) {
    throw ShapeError("conv2d channel mismatch: input has C_in=" + std::to_string(g.c_in) +
                     " but weight has C_in=" + std::to_string(weight.dim(1)));
  }
  if (bias != nullptr && (bias->rank() != 1 || bias->dim(0) != g.c_out)) {
    throw ShapeError("conv2d bias shape " + shape_to_string(bias->shape()) + " does not match C_out=" +
                     std::to_string(g.c_out));
  }
  g.oh = window_output_size(g.h, g.kh, p.stride, p.padding, "conv2d height");
  g.ow = window_output_size(g.w, g.kw, p.stride, p.padding, "conv2d width");
  return g;
}

// Column range [lo, hi) of output positions whose input column
// ox * stride + k - padding lies inside [0, extent).
std::pair<std::size_t, std::size_t> valid_range(std::size_t out_extent, std::size_t extent, std::size_t k,
                                                std::size_t stride, std::size_t padding) {
  const auto kk = static_cast<std::ptrdiff_t>(k);
  const auto pad = static_cast<std::ptrdiff_t>(padding);
  const auto s = static_cast<std::ptrdiff_t>(stride);
  const auto ext = static_cast<std::ptrdiff_t>(extent);
  std::ptrdiff_t lo = 0;
  if (pad > kk) lo = (pad - kk + s - 1) / s;
  std::ptrdiff_t hi = ext - 1 + pad - kk;
  hi = hi < 0 ? 0 : hi / s + 1;
  hi = std::min<std::ptrdiff_t>(hi, static_cast<std::ptrdiff_t>(out_extent));
  if (lo > hi) lo = hi;
  return {static_cast<std::size_t>(lo), static_cast<std::size_t>(hi)};
}

// Accumulates scale * src into the output plane as a kh x kw window sum.
void accumulate_window(float* out, const float* src, float scale, const ConvGeometry& g, std::size_t ky,
                       std::size_t kx, Conv2dParams p) {
  const auto [y_lo, y_hi] = valid_range(g.oh, g.h, ky, p.stride, p.padding);
  const auto [x_lo, x_hi] = valid_range(g.ow, g.w, kx, p.stride, p.padding);
  for (std::size_t oy = y_lo; oy < y_hi; ++oy) {
    const float* in_row = src + (oy * p.stride + ky - p.padding) * g.w;
    float* out_row = out + oy * g.ow;
    if (p.stride == 1) {
      const float* base = in_row + (static_cast<std::ptrdiff_t>(kx) - static_cast<std::ptrdiff_t>(p.padding));
      for (std::size_t ox = x_lo; ox < x_hi; ++ox) out_row[ox] += scale * base[ox];
    } else {
      for (std::size_t ox = x_lo; ox < x_hi; ++ox) {
        out_row[ox] += scale * in_row[ox * p.stride + kx - p.padding];
      }
    }
  }
}

void init_planes(Tensor& out, const Tensor* bias, std::size_t n, std::size_t c_out, std::size_t plane) {
  if (bias == nullptr) return;
  float* dst = out.raw();
  for (std::size_t b = 0; b < n; ++b) {
    for (std::size_t o = 0; o < c_out; ++o) {
      std::fill_n(dst + (b * c_out + o) * plane, plane, (*bias)[o]);
    }
  }
}

// Double-precision sum with a fixed number of independent lanes; element i
// always lands in lane i % kLanes, so the result does not depend on how the
// compiler schedules the loop.
class LaneSum {
 public:
  static constexpr std::size_t kLanes = 8;

  void add(const float* p, std::size_t n) noexcept {
    std::size_t i = 0;
    for (; i + kLanes <= n; i += kLanes) {
      for (std::size_t j = 0; j < kLanes; ++j) lanes_[j] += static_cast<double>(p[i + j]);
    }
    for (std::size_t j = 0; i < n; ++i, ++j) lanes_[j] += static_cast<double>(p[i]);
  }

  void add_squared_deviation(const float* p, std::size_t n, double mean) noexcept {
    std::size_t i = 0;
    for (; i + kLanes <= n; i += kLanes) {
      for (std::size_t j = 0; j < kLanes; ++j) {
        const double d = static_cast<double>(p[i + j]) - mean;
        lanes_[j] += d * d;
      }
    }
    for (std::size_t j = 0; i < n; ++i, ++j) {
      const double d = static_cast<double>(p[i]) - mean;
      lanes_[j] += d * d;
    }
  }

  double total() const noexcept {
    double t = 0.0;
    for (double v : lanes_) t += v;
    return t;
  }

 private:
  double lanes_[kLanes] = {};
};

// Stride-1 window sum of one plane, separable: each pass adds shifted
// contiguous rows, kx then ky in ascending order.
void box_sum_stride1(const float* src, std::size_t h, std::size_t w, float* dst, std::size_t oh, std::size_t ow,
                     std::size_t k, std::size_t pad, std::vector<float>& rows) {
  rows.assign(h * ow, 0.0f);
  for (std::size_t kx = 0; kx < k; ++kx) {
    const auto [x_lo, x_hi] = valid_range(ow, w, kx, 1, pad);
    const std::ptrdiff_t shift = static_cast<std::ptrdiff_t>(kx) - static_cast<std::ptrdiff_t>(pad);
    for (std::size_t y = 0; y < h; ++y) {
      const float* in = src + y * w + shift;
      float* acc = rows.data() + y * ow;
      for (std::size_t x = x_lo; x < x_hi; ++x) acc[x] += in[x];
    }
  }
  std::fill_n(dst, oh * ow, 0.0f);
  for (std::size_t oy = 0; oy < oh; ++oy) {
    float* out = dst + oy * ow;
    for (std::size_t ky = 0; ky < k; ++ky) {
      const std::ptrdiff_t y = static_cast<std::ptrdiff_t>(oy + ky) - static_cast<std::ptrdiff_t>(pad);
      if (y < 0 || y >= static_cast<std::ptrdiff_t>(h)) continue;
      const float* in = rows.data() + static_cast<std::size_t>(y) * ow;
      for (std::size_t x = 0; x < ow; ++x) out[x] += in[x];
    }
  }
}

std::vector<float> window_counts(std::size_t n, std::size_t out_n, std::size_t k, std::size_t stride,
                                 std::size_t pad) {
  std::vector<float> counts(out_n);
  for (std::size_t o = 0; o < out_n; ++o) {
    const std::ptrdiff_t start = static_cast<std::ptrdiff_t>(o * stride) - static_cast<std::ptrdiff_t>(pad);
    const std::ptrdiff_t lo = std::max<std::ptrdiff_t>(start, 0);
    const std::ptrdiff_t hi = std::min<std::ptrdiff_t>(start + static_cast<std::ptrdiff_t>(k), static_cast<std::ptrdiff_t>(n));
    counts[o] = static_cast<float>(hi - lo);
  }
  return counts;
}

bool is_uniform(const Tensor& t) noexcept {
  const auto d = t.data();
  const float first = d[0];
  return std::all_of(d.begin(), d.end(), [first](float v) { return v == first; }) && !std::isnan(first);
}

Tensor conv2d_uniform(const Tensor& input, const Tensor& weight, const Tensor* bias, Conv2dParams p) {
  const ConvGeometry g = conv_geometry(input, weight, bias, p);
  const float w = weight[0];
  const std::size_t in_plane = g.h * g.w;
  const std::size_t out_plane = g.oh * g.ow;
  Tensor out = Tensor::uninitialized({g.n, g.c_out, g.oh, g.ow});
  std::vector<float> scaled_sum(in_plane);
  std::vector<float> window(out_plane);
  // With a shared weight every output channel equals w * (window sum of the
  // channel-summed input): reduce channels once, then broadcast.
  for (std::size_t b = 0; b < g.n; ++b) {
    std::fill(scaled_sum.begin(), scaled_sum.end(), 0.0f);
    for (std::size_t c = 0; c < g.c_in; ++c) {
      const float* src = input.raw() + (b * g.c_in + c) * in_plane;
      for (std::size_t i = 0; i < in_plane; ++i) scaled_sum[i] += w * src[i];
    }
    std::fill(window.begin(), window.end(), 0.0f);
    for (std::size_t ky = 0; ky < g.kh; ++ky) {
      for (std::size_t kx = 0; kx < g.kw; ++kx) {
        accumulate_window(window.data(), scaled_sum.data(), 1.0f, g, ky, kx, p);
      }
    }
    for (std::size_t o = 0; o < g.c_out; ++o) {
      float* dst = out.raw() + (b * g.c_out + o) * out_plane;
      const float offset = bias != nullptr ? (*bias)[o] : 0.0f;
      for (std::size_t i = 0; i < out_plane; ++i) dst[i] = window[i] + offset;
    }
  }
  return out;
}

}  // namespace

std::size_t window_output_size(std::size_t in, std::size_t kernel, std::size_t stride, std::size_t padding,
                               const char* what) {
  if (stride == 0) throw ShapeError(std::string(what) + ": stride must be positive");
  if (kernel == 0) throw ShapeError(std::string(what) + ": kernel must be positive");
  const std::size_t padded = in + 2 * padding;
  if (padded < kernel) {
    throw ShapeError(std::string(what) + ": kernel " + std::to_string(kernel) + " exceeds padded extent " +
                     std::to_string(padded));
  }
  return (padded - kernel) / stride + 1;
}

Tensor conv2d_direct(const Tensor& input, const Tensor& weight, const Tensor* bias, Conv2dParams p) {
  const ConvGeometry g = conv_geometry(input, weight, bias, p);
  const std::size_t in_plane = g.h * g.w;
  const std::size_t out_plane = g.oh * g.ow;
  Tensor out({g.n, g.c_out, g.oh, g.ow});
  init_planes(out, bias, g.n, g.c_out, out_plane);
  for (std::size_t b = 0; b < g.n; ++b) {
    for (std::size_t o = 0; o < g.c_out; ++o) {
      float* dst = out.raw() + (b * g.c_out + o) * out_plane;
      for (std::size_t c = 0; c < g.c_in; ++c) {
        const float* src = input.raw() + (b * g.c_in + c) * in_plane;
        const float* wk = weight.raw() + ((o * g.c_in + c) * g.kh) * g.kw;
        for (std::size_t ky = 0; ky < g.kh; ++ky) {
          for (std::size_t kx = 0; kx < g.kw; ++kx) {
            accumulate_window(dst, src, wk[ky * g.kw + kx], g, ky, kx, p);
          }
        }
      }
    }
  }
  return out;
}

Tensor conv2d(const Tensor& input, const Tensor& weight, const Tensor* bias, Conv2dParams params) {
  if (weight.rank() == 4 && is_uniform(weight)) return conv2d_uniform(input, weight, bias, params);
  return conv2d_direct(input, weight, bias, params);
}

Tensor batchnorm(const Tensor& input, const Tensor& gain, const Tensor& bias, float eps) {
  require_rank(input, 4, "batchnorm input");
  const std::size_t n = input.dim(0), c = input.dim(1), plane = input.dim(2) * input.dim(3);
  if (gain.numel() != c || bias.numel() != c) {
    throw ShapeError("batchnorm parameters " + shape_to_string(gain.shape()) + "/" +
                     shape_to_string(bias.shape()) + " do not match C=" + std::to_string(c));
  }
  Tensor out = Tensor::uninitialized(input.shape());
  const auto count = static_cast<double>(n * plane);
  for (std::size_t ch = 0; ch < c; ++ch) {
    LaneSum sum;
    for (std::size_t b = 0; b < n; ++b) sum.add(input.raw() + (b * c + ch) * plane, plane);
    const double mean = sum.total() / count;
    LaneSum sq;
    for (std::size_t b = 0; b < n; ++b) sq.add_squared_deviation(input.raw() + (b * c + ch) * plane, plane, mean);
    const double var = sq.total() / count;
    const auto mean_f = static_cast<float>(mean);
    const auto scale = static_cast<float>(gain[ch] / std::sqrt(var + eps));
    const float shift = bias[ch];
    for (std::size_t b = 0; b < n; ++b) {
      const float* src = input.raw() + (b * c + ch) * plane;
      float* dst = out.raw() + (b * c + ch) * plane;
      for (std::size_t i = 0; i < plane; ++i) dst[i] = (src[i] - mean_f) * scale + shift;
    }
  }
  return out;
}

void relu_inplace(Tensor& t) noexcept {
  // NaN < 0 is false, so NaN passes through unchanged.
  for (float& v : t.data()) v = v < 0.0f ? 0.0f : v;
}

Tensor relu(const Tensor& input) {
  Tensor out = input;
  relu_inplace(out);
  return out;
}

Tensor avg_pool(const Tensor& input, PoolParams p) {
  require_rank(input, 4, "avg_pool input");
  const std::size_t n = input.dim(0), c = input.dim(1), h = input.dim(2), w = input.dim(3);
  const std::size_t oh = window_output_size(h, p.kernel, p.stride, p.padding, "avg_pool height");
  const std::size_t ow = window_output_size(w, p.kernel, p.stride, p.padding, "avg_pool width");
  Tensor out = Tensor::uninitialized({n, c, oh, ow});
  const std::vector<float> rows = window_counts(h, oh, p.kernel, p.stride, p.padding);
  const std::vector<float> cols = window_counts(w, ow, p.kernel, p.stride, p.padding);
  const auto full = static_cast<float>(p.kernel * p.kernel);
  const auto pad = static_cast<std::ptrdiff_t>(p.padding);
  std::vector<float> horizontal;
  for (std::size_t plane_idx = 0; plane_idx < n * c; ++plane_idx) {
    const float* src = input.raw() + plane_idx * h * w;
    float* dst = out.raw() + plane_idx * oh * ow;
    if (p.stride == 1) {
      box_sum_stride1(src, h, w, dst, oh, ow, p.kernel, p.padding, horizontal);
    } else {
      for (std::size_t oy = 0; oy < oh; ++oy) {
        const std::ptrdiff_t y0 = static_cast<std::ptrdiff_t>(oy * p.stride) - pad;
        const std::ptrdiff_t y_begin = std::max<std::ptrdiff_t>(y0, 0);
        const std::ptrdiff_t y_end =
            std::min<std::ptrdiff_t>(y0 + static_cast<std::ptrdiff_t>(p.kernel), static_cast<std::ptrdiff_t>(h));
        for (std::size_t ox = 0; ox < ow; ++ox) {
          const std::ptrdiff_t x0 = static_cast<std::ptrdiff_t>(ox * p.stride) - pad;
          const std::ptrdiff_t x_begin = std::max<std::ptrdiff_t>(x0, 0);
          const std::ptrdiff_t x_end =
              std::min<std::ptrdiff_t>(x0 + static_cast<std::ptrdiff_t>(p.kernel), static_cast<std::ptrdiff_t>(w));
          float sum = 0.0f;
          for (std::ptrdiff_t y = y_begin; y < y_end; ++y) {
            for (std::ptrdiff_t x = x_begin; x < x_end; ++x) sum += src[y * static_cast<std::ptrdiff_t>(w) + x];
          }
          dst[oy * ow + ox] = sum;
        }
      }
    }
    for (std::size_t oy = 0; oy < oh; ++oy) {
      float* out = dst + oy * ow;
      if (p.count_includes_pad) {
        for (std::size_t ox = 0; ox < ow; ++ox) out[ox] /= full;
      } else {
        for (std::size_t ox = 0; ox < ow; ++ox) out[ox] /= rows[oy] * cols[ox];
      }
    }
  }
  return out;
}

Tensor global_avg_pool(const Tensor& input) {
  require_rank(input, 4, "global_avg_pool input");
  const std::size_t n = input.dim(0), c = input.dim(1), plane = input.dim(2) * input.dim(3);
  Tensor out = Tensor::uninitialized({n, c});
  for (std::size_t i = 0; i < n * c; ++i) {
    const float* src = input.raw() + i * plane;
    float sum = 0.0f;
    for (std::size_t k = 0; k < plane; ++k) sum += src[k];
    out[i] = sum / static_cast<float>(plane);
  }
  return out;
}

Tensor linear(const Tensor& input, const Tensor& weight, const Tensor* bias) {
  require_rank(input, 2, "linear input");
  require_rank(weight, 2, "linear weight");
  const std::size_t n = input.dim(0), f = input.dim(1), o = weight.dim(0);
  if (weight.dim(1) != f) {
    throw ShapeError("linear feature mismatch: input has F=" + std::to_string(f) + " but weight has F=" +
                     std::to_string(weight.dim(1)));
  }
  if (bias != nullptr && bias->numel() != o) {
    throw ShapeError("linear bias shape " + shape_to_string(bias->shape()) + " does not match O=" +
                     std::to_string(o));
  }
  Tensor out = Tensor::uninitialized({n, o});
  for (std::size_t b = 0; b < n; ++b) {
    const float* x = input.raw() + b * f;
    for (std::size_t j = 0; j < o; ++j) {
      const float* wr = weight.raw() + j * f;
      float acc = 0.0f;
      for (std::size_t k = 0; k < f; ++k) acc += x[k] * wr[k];
      out[b * o + j] = bias != nullptr ? acc + (*bias)[j] : acc;
    }
  }
  return out;
}

void add_inplace(Tensor& acc, const Tensor& other) {
  if (acc.shape() != other.shape()) {
    throw ShapeError("add shape mismatch: " + shape_to_string(acc.shape()) + " vs " +
                     shape_to_string(other.shape()));
  }
  float* dst = acc.raw();
  const float* src = other.raw();
  for (std::size_t i = 0; i < acc.numel(); ++i) dst[i] += src[i];
}

}  // namespace epsinas::ops
