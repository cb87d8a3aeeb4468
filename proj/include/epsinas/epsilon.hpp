#pragma once

#include <cstddef>
#include <functional>
#include <span>
#include <string_view>
#include <vector>

#include "epsinas/arch_space.hpp"
#include "epsinas/network.hpp"
#include "epsinas/tensor.hpp"
#include "epsinas/weight_init.hpp"

namespace epsinas {

enum class EpsilonStatus { kValid, kDegenerateConstantOutput, kNonfiniteOutput };

std::string_view status_name(EpsilonStatus s) noexcept;
EpsilonStatus status_from_name(std::string_view name);

/// Score of one architecture. epsilon, delta and mu are NaN unless status
/// is kValid.
struct EpsilonResult {
  double epsilon;
  double delta;
  double mu;
  EpsilonStatus status;

  bool valid() const noexcept { return status == EpsilonStatus::kValid; }
  static EpsilonResult invalid(EpsilonStatus status) noexcept;
};

/// The two shared constants. Order is kept as given; canonical() sorts it.
struct WeightPair {
  float first;
  float second;

  WeightPair canonical() const noexcept { return first <= second ? *this : WeightPair{second, first}; }
  void validate() const;
};

struct NormalizedOutput {
  std::vector<double> values;  // empty unless status is kValid
  EpsilonStatus status;
};

/// (v - min) / (max - min). A non-finite entry gives kNonfiniteOutput and a
/// zero range gives kDegenerateConstantOutput.
NormalizedOutput minmax_normalize(std::span<const float> v);
NormalizedOutput minmax_normalize(std::span<const double> v);

/// delta = mean |a - b|, mu = mean over both rows, epsilon = delta / mu.
/// Rows must be min-max normalised and of equal positive length.
EpsilonResult epsilon_from_outputs(std::span<const double> row1, std::span<const double> row2);

/// Normalises both raw output rows and combines them; a non-finite status in
/// either row takes precedence over a degenerate one.
EpsilonResult epsilon_from_raw(std::span<const float> raw1, std::span<const float> raw2);

/// Builds a fresh network for each forward pass.
using NetworkFactory = std::function<Network()>;

/// Flattened (sample-major) output of a freshly built network initialised
/// with the shared constant `weight`.
Tensor constant_forward(const NetworkFactory& factory, const Tensor& batch, float weight,
                        ConstantScope scope = ConstantScope::kWeights);

EpsilonResult score_network(const NetworkFactory& factory, const Tensor& batch, WeightPair weights,
                            ConstantScope scope = ConstantScope::kWeights);

/// Throws ShapeError when the batch does not match cfg.input_shape.
EpsilonResult score_architecture(const Genotype& g, const SkeletonConfig& cfg, const Tensor& batch,
                                 WeightPair weights, ConstantScope scope = ConstantScope::kWeights);

/// Ablation variant: the two initialisations are two seeds of one random
/// scheme instead of two constants.
EpsilonResult score_architecture_random(const Genotype& g, const SkeletonConfig& cfg, const Tensor& batch,
                                        InitScheme scheme, std::uint64_t seed_a, std::uint64_t seed_b);

void check_batch(const Tensor& batch, const SkeletonConfig& cfg);

/// Runs fn(i) for i in [0, count) on up to `parallelism` threads.
void parallel_for(std::size_t count, std::size_t parallelism, const std::function<void(std::size_t)>& fn);

}  // namespace epsinas
