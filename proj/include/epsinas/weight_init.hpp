#pragma once

#include <cstdint>
#include <string>
#include <string_view>

#include "epsinas/network.hpp"

namespace epsinas {

struct InitScheme {
  enum class Kind { kConstant, kUniform, kNormal, kKaimingUniform, kKaimingNormal, kOrthogonal };

  Kind kind = Kind::kConstant;
  // constant: a = value. uniform: [a, b]. normal: mean a, std b.
  double a = 0.0;
  double b = 1.0;
  std::uint64_t seed = 0;

  static InitScheme constant(double value) { return {Kind::kConstant, value, 0.0, 0}; }
  /// Parses a CLI scheme name with default parameters (uniform [0,1], normal(0,1)).
  static InitScheme from_name(std::string_view name, std::uint64_t seed = 0);

  void validate() const;
  std::string name() const;
};

/// Which tensors receive the shared constant.
enum class ConstantScope {
  kWeights,  // conv and linear weights; BN gain 1, BN bias 0, linear bias 0
  kAll,      // every conv/linear weight, BN gain/bias and linear bias
};

std::string_view scope_name(ConstantScope scope) noexcept;
ConstantScope scope_from_name(std::string_view name);

/// Sets the tensors selected by `scope` to `value`. Embedding tensors are
/// exempt: a constant embedding maps every token to the same vector, so they
/// get normal(0, 0.1) from a fixed seed instead.
void init_constant(Network& net, float value, ConstantScope scope = ConstantScope::kWeights);

/// Draws conv/linear weights and embeddings per scheme, seeded per tensor
/// from scheme.seed. BN gains are reset to 1 and all biases to 0.
void init_random(Network& net, const InitScheme& scheme);

/// Fills one tensor per scheme from stream `stream` of scheme.seed.
/// Orthogonal needs rank >= 2 (ValueError otherwise).
void init_tensor(Tensor& t, const InitScheme& scheme, std::uint64_t stream);

/// Fan-in of a weight tensor: product of all dims after the first.
std::size_t fan_in(const Tensor& weight);

inline constexpr std::uint64_t kEmbeddingSeed = 0x5EEDE11BEDULL;
inline constexpr double kEmbeddingStd = 0.1;

}  // namespace epsinas
