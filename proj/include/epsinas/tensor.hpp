#pragma once

#include <cstddef>
#include <memory>
#include <span>
#include <string>
#include <vector>

namespace epsinas {

using Shape = std::vector<std::size_t>;

namespace detail {
// Leaves elements default-initialised (uninitialised for float) on resize,
// so kernels that overwrite every output element skip a zero-fill pass.
template <typename T>
struct DefaultInitAllocator : std::allocator<T> {
  template <typename U>
  struct rebind {
    using other = DefaultInitAllocator<U>;
  };
  using std::allocator<T>::allocator;
  template <typename U, typename... Args>
  void construct(U* p, Args&&... args) {
    if constexpr (sizeof...(Args) == 0) {
      ::new (static_cast<void*>(p)) U;
    } else {
      ::new (static_cast<void*>(p)) U(std::forward<Args>(args)...);
    }
  }
};
}  // namespace detail

std::size_t shape_numel(const Shape& shape) noexcept;
std::string shape_to_string(const Shape& shape);

/// Dense row-major float32 array. The element count always equals the
/// product of the shape; NaN and Inf are stored as-is.
class Tensor {
 public:
  Tensor() = default;
  /// Zero-filled tensor. Throws ShapeError on an empty shape or a zero dim.
  explicit Tensor(Shape shape, float fill = 0.0f);
  Tensor(Shape shape, std::vector<float> data);
  /// Storage with unspecified contents; the caller must write every element.
  static Tensor uninitialized(Shape shape);

  const Shape& shape() const noexcept { return shape_; }
  std::size_t rank() const noexcept { return shape_.size(); }
  std::size_t dim(std::size_t axis) const { return shape_.at(axis); }
  std::size_t numel() const noexcept { return data_.size(); }
  bool empty() const noexcept { return data_.empty(); }

  std::span<float> data() noexcept { return data_; }
  std::span<const float> data() const noexcept { return data_; }
  float* raw() noexcept { return data_.data(); }
  const float* raw() const noexcept { return data_.data(); }

  float& operator[](std::size_t i) noexcept { return data_[i]; }
  float operator[](std::size_t i) const noexcept { return data_[i]; }

  void fill(float value) noexcept;
  /// Same data viewed under a new shape with equal element count.
  Tensor reshaped(Shape shape) const&;
  Tensor reshaped(Shape shape) &&;

  bool operator==(const Tensor& other) const noexcept = default;

 private:
  using Storage = std::vector<float, detail::DefaultInitAllocator<float>>;

  Tensor(Shape shape, Storage data) : shape_(std::move(shape)), data_(std::move(data)) {}

  Shape shape_;
  Storage data_;
};

/// Bitwise equality, so NaN payloads compare equal to themselves.
bool bit_identical(const Tensor& a, const Tensor& b) noexcept;

}  // namespace epsinas
