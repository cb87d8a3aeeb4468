#pragma once

#include <array>
#include <cstddef>

#include "epsinas/genotype.hpp"
#include "epsinas/network.hpp"

namespace epsinas {

/// Macro skeleton: stem conv, then three stacks of cells joined by two
/// stride-2 residual blocks that double the channel count, then BN, ReLU,
/// global pooling and a linear classifier.
struct SkeletonConfig {
  static constexpr std::size_t kNumStacks = 3;

  std::size_t stem_channels = 16;
  std::size_t cells_per_stack = 1;
  std::size_t num_classes = 10;
  std::array<std::size_t, 3> input_shape{3, 32, 32};  // C, H, W

  /// Small default used in tests and CI.
  static SkeletonConfig desk_scale() { return {}; }
  /// Five cells per stack, 16 stem channels, CIFAR-sized input.
  static SkeletonConfig benchmark() { return {16, 5, 10, {3, 32, 32}}; }

  /// Throws ValueError if any count is zero or the spatial dims collapse.
  void validate() const;

  bool operator==(const SkeletonConfig&) const = default;
};

/// Instantiates the skeleton with cells realising g. Conv edges are
/// ReLU -> conv -> BN; `none` edges are dropped from the node sum (a node
/// with no surviving input is an all-zero tensor).
Network build_network(const Genotype& g, const SkeletonConfig& cfg);

/// Scalar count over the parameter registry of build_network(g, cfg).
std::size_t param_count(const Genotype& g, const SkeletonConfig& cfg);

}  // namespace epsinas
