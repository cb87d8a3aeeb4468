#include "epsinas/tensor.hpp"

#include <algorithm>
#include <cstring>
#include <functional>
#include <numeric>

#include "epsinas/error.hpp"

namespace epsinas {

namespace {

void validate_shape(const Shape& shape) {
  if (shape.empty()) throw ShapeError("tensor shape must have at least one dimension");
  for (std::size_t i = 0; i < shape.size(); ++i) {
    if (shape[i] == 0) {
      throw ShapeError("tensor dimension " + std::to_string(i) + " is zero in shape " +
                       shape_to_string(shape));
    }
  }
}

}  // namespace

std::size_t shape_numel(const Shape& shape) noexcept {
  return std::accumulate(shape.begin(), shape.end(), std::size_t{1}, std::multiplies<>());
}

std::string shape_to_string(const Shape& shape) {
  std::string out = "[";
  for (std::size_t i = 0; i < shape.size(); ++i) {
    if (i) out += ",";
    out += std::to_string(shape[i]);
  }
  return out + "]";
}

Tensor::Tensor(Shape shape, float fill) : shape_(std::move(shape)) {
  validate_shape(shape_);
  data_.assign(shape_numel(shape_), fill);
}

Tensor::Tensor(Shape shape, std::vector<float> data) : shape_(std::move(shape)), data_(data.begin(), data.end()) {
  validate_shape(shape_);
  if (data_.size() != shape_numel(shape_)) {
    throw ShapeError("tensor data length " + std::to_string(data_.size()) + " does not match shape " +
                     shape_to_string(shape_));
  }
}

Tensor Tensor::uninitialized(Shape shape) {
  validate_shape(shape);
  Storage data(shape_numel(shape));
  return Tensor(std::move(shape), std::move(data));
}

void Tensor::fill(float value) noexcept { std::fill(data_.begin(), data_.end(), value); }

Tensor Tensor::reshaped(Shape shape) const& {
  Tensor copy = *this;
  return std::move(copy).reshaped(std::move(shape));
}

Tensor Tensor::reshaped(Shape shape) && {
  validate_shape(shape);
  if (shape_numel(shape) != data_.size()) {
    throw ShapeError("cannot reshape " + shape_to_string(shape_) + " to " + shape_to_string(shape));
  }
  return Tensor(std::move(shape), std::move(data_));
}

bool bit_identical(const Tensor& a, const Tensor& b) noexcept {
  return a.shape() == b.shape() &&
         std::memcmp(a.raw(), b.raw(), a.numel() * sizeof(float)) == 0;
}

}  // namespace epsinas
