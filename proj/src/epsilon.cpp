#include "epsinas/epsilon.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <exception>
#include <limits>
#include <mutex>
#include <thread>

#include "epsinas/error.hpp"

namespace epsinas {

namespace {

constexpr double kNaN = std::numeric_limits<double>::quiet_NaN();

template <typename T>
NormalizedOutput normalize_impl(std::span<const T> v) {
  if (v.empty()) throw ShapeError("cannot normalise an empty output vector");
  double lo = std::numeric_limits<double>::infinity();
  double hi = -lo;
  for (T x : v) {
    if (!std::isfinite(x)) return {{}, EpsilonStatus::kNonfiniteOutput};
    lo = std::min<double>(lo, x);
    hi = std::max<double>(hi, x);
  }
  const double range = hi - lo;
  if (!(range > 0.0)) return {{}, EpsilonStatus::kDegenerateConstantOutput};
  NormalizedOutput out{std::vector<double>(v.size()), EpsilonStatus::kValid};
  for (std::size_t j = 0; j < v.size(); ++j) out.values[j] = (static_cast<double>(v[j]) - lo) / range;
  return out;
}

}  // namespace

std::string_view status_name(EpsilonStatus s) noexcept {
  switch (s) {
    case EpsilonStatus::kValid: return "valid";
    case EpsilonStatus::kDegenerateConstantOutput: return "degenerate_constant_output";
    case EpsilonStatus::kNonfiniteOutput: return "nonfinite_output";
  }
  return "unknown";
}

EpsilonStatus status_from_name(std::string_view name) {
  for (auto s : {EpsilonStatus::kValid, EpsilonStatus::kDegenerateConstantOutput, EpsilonStatus::kNonfiniteOutput}) {
    if (status_name(s) == name) return s;
  }
  throw ValueError("unknown epsilon status '" + std::string(name) + "'");
}

EpsilonResult EpsilonResult::invalid(EpsilonStatus status) noexcept { return {kNaN, kNaN, kNaN, status}; }

void WeightPair::validate() const {
  if (!std::isfinite(first) || !std::isfinite(second)) throw ValueError("weights must be finite");
}

NormalizedOutput minmax_normalize(std::span<const float> v) { return normalize_impl(v); }
NormalizedOutput minmax_normalize(std::span<const double> v) { return normalize_impl(v); }

EpsilonResult epsilon_from_outputs(std::span<const double> row1, std::span<const double> row2) {
  if (row1.empty() || row1.size() != row2.size()) {
    throw ShapeError("output rows must have equal positive length, got " + std::to_string(row1.size()) + " and " +
                     std::to_string(row2.size()));
  }
  double abs_diff = 0.0;
  double total = 0.0;
  for (std::size_t j = 0; j < row1.size(); ++j) {
    abs_diff += std::abs(row1[j] - row2[j]);
    total += row1[j] + row2[j];
  }
  const auto len = static_cast<double>(row1.size());
  const double delta = abs_diff / len;
  const double mu = total / (2.0 * len);
  if (!(mu > 0.0)) return EpsilonResult::invalid(EpsilonStatus::kDegenerateConstantOutput);
  return {delta / mu, delta, mu, EpsilonStatus::kValid};
}

EpsilonResult epsilon_from_raw(std::span<const float> raw1, std::span<const float> raw2) {
  const NormalizedOutput a = minmax_normalize(raw1);
  const NormalizedOutput b = minmax_normalize(raw2);
  for (auto s : {EpsilonStatus::kNonfiniteOutput, EpsilonStatus::kDegenerateConstantOutput}) {
    if (a.status == s || b.status == s) return EpsilonResult::invalid(s);
  }
  return epsilon_from_outputs(a.values, b.values);
}

Tensor constant_forward(const NetworkFactory& factory, const Tensor& batch, float weight, ConstantScope scope) {
  Network net = factory();
  init_constant(net, weight, scope);
  Tensor out = net.forward(batch);
  const std::size_t n = out.numel();
  return std::move(out).reshaped({n});
}

EpsilonResult score_network(const NetworkFactory& factory, const Tensor& batch, WeightPair weights,
                            ConstantScope scope) {
  weights.validate();
  const Tensor v1 = constant_forward(factory, batch, weights.first, scope);
  const Tensor v2 = constant_forward(factory, batch, weights.second, scope);
  return epsilon_from_raw(v1.data(), v2.data());
}

void check_batch(const Tensor& batch, const SkeletonConfig& cfg) {
  const Shape& s = batch.shape();
  if (s.size() != 4 || s[1] != cfg.input_shape[0] || s[2] != cfg.input_shape[1] || s[3] != cfg.input_shape[2]) {
    throw ShapeError("batch shape " + shape_to_string(s) + " does not match [N," +
                     std::to_string(cfg.input_shape[0]) + "," + std::to_string(cfg.input_shape[1]) + "," +
                     std::to_string(cfg.input_shape[2]) + "]");
  }
}

EpsilonResult score_architecture(const Genotype& g, const SkeletonConfig& cfg, const Tensor& batch,
                                 WeightPair weights, ConstantScope scope) {
  check_batch(batch, cfg);
  cfg.validate();
  return score_network([&] { return build_network(g, cfg); }, batch, weights, scope);
}

EpsilonResult score_architecture_random(const Genotype& g, const SkeletonConfig& cfg, const Tensor& batch,
                                        InitScheme scheme, std::uint64_t seed_a, std::uint64_t seed_b) {
  check_batch(batch, cfg);
  auto run = [&](std::uint64_t seed) {
    Network net = build_network(g, cfg);
    scheme.seed = seed;
    init_random(net, scheme);
    return net.forward(batch);
  };
  const Tensor v1 = run(seed_a);
  const Tensor v2 = run(seed_b);
  return epsilon_from_raw(v1.data(), v2.data());
}

void parallel_for(std::size_t count, std::size_t parallelism, const std::function<void(std::size_t)>& fn) {
  const std::size_t workers = std::max<std::size_t>(1, std::min(parallelism, count));
  if (workers == 1) {
    for (std::size_t i = 0; i < count; ++i) fn(i);
    return;
  }
  std::atomic<std::size_t> next{0};
  std::exception_ptr failure;
  std::mutex failure_mutex;
  std::vector<std::thread> pool;
  pool.reserve(workers);
  for (std::size_t w = 0; w < workers; ++w) {
    pool.emplace_back([&] {
      for (std::size_t i = next.fetch_add(1); i < count; i = next.fetch_add(1)) {
        try {
          fn(i);
        } catch (...) {
          std::lock_guard lock(failure_mutex);
          if (!failure) failure = std::current_exception();
          next.store(count);
        }
      }
    });
  }
  for (auto& t : pool) t.join();
  if (failure) std::rethrow_exception(failure);
}

}  // namespace epsinas
