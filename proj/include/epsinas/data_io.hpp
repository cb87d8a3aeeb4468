#pragma once

#include <array>
#include <cstdint>
#include <optional>
#include <string>
#include <string_view>

#include "epsinas/tensor.hpp"

namespace epsinas {

enum class BatchKind { kReal, kGreyscale, kRandomNormal, kRandomUniform, kRandomUniformPos };

std::string_view batch_kind_name(BatchKind kind) noexcept;
BatchKind batch_kind_from_name(std::string_view name);

struct BatchSpec {
  BatchKind kind = BatchKind::kGreyscale;
  std::size_t batch_size = 256;
  std::array<std::size_t, 3> shape{3, 32, 32};
  std::uint64_t seed = 0;
  std::optional<std::string> source_path;  // CIFAR-10 binary, required for kReal
  std::size_t offset = 0;                  // first record read for kReal

  void validate() const;
};

/// Per-channel CIFAR-10 statistics (RGB, on the [0,1] scale) applied to
/// real batches.
inline constexpr std::array<float, 3> kCifarMean = {125.3f / 255.0f, 123.0f / 255.0f, 113.9f / 255.0f};
inline constexpr std::array<float, 3> kCifarStd = {63.0f / 255.0f, 62.1f / 255.0f, 66.7f / 255.0f};

/// greyscale: image k is filled with k/(N-1) (0 when N = 1).
/// random_normal: N(0,1). random_uniform: U[-1,1). random_uniform_pos: U[0,1).
/// real: records [offset, offset+N) of the source, scaled to [0,1] then
/// standardised with kCifarMean / kCifarStd.
Tensor make_batch(const BatchSpec& spec);

inline constexpr std::size_t kCifarRecordBytes = 3073;

/// Reads `count` records starting at `offset` from a CIFAR-10 binary file
/// into [count,3,32,32] with pixel bytes scaled to [0,1]. Labels are skipped.
Tensor load_cifar10_binary(const std::string& path, std::size_t count, std::size_t offset = 0);
/// Number of records in a CIFAR-10 binary file.
std::size_t cifar10_record_count(const std::string& path);

void standardize_cifar(Tensor& images);

/// Batch file: "EPSB", u32 rank, rank x u32 dims, then f32 values, all
/// little-endian.
void save_batch(const std::string& path, const Tensor& t);
Tensor load_batch(const std::string& path);

}  // namespace epsinas
