#pragma once

#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "epsinas/ops.hpp"
#include "epsinas/tensor.hpp"

namespace epsinas {

enum class ParamRole { kConvWeight, kBnGain, kBnBias, kLinearWeight, kLinearBias, kEmbedding };

std::string_view role_name(ParamRole role) noexcept;

struct Parameter {
  std::string name;
  ParamRole role;
  Tensor value;
};

/// A forward-only computation graph over tensors. Nodes are appended in
/// topological order by the builder methods; each returns the id of the value
/// it produces. Value 0 is the network input.
class Network {
 public:
  using ValueId = std::size_t;

  Network();

  static constexpr ValueId input() noexcept { return 0; }

  ValueId conv2d(ValueId x, std::size_t c_in, std::size_t c_out, std::size_t kernel, std::size_t stride,
                 std::size_t padding, std::string name);
  ValueId batchnorm(ValueId x, std::size_t channels, std::string name);
  ValueId relu(ValueId x);
  ValueId avg_pool(ValueId x, ops::PoolParams params);
  ValueId global_avg_pool(ValueId x);
  ValueId linear(ValueId x, std::size_t in_features, std::size_t out_features, bool with_bias, std::string name,
                 ParamRole weight_role = ParamRole::kLinearWeight);
  /// Elementwise sum of one or more values of equal shape.
  ValueId sum(std::vector<ValueId> xs);
  ValueId zeros_like(ValueId x);
  void set_output(ValueId y);

  /// Runs the graph; only nodes the output depends on are evaluated.
  Tensor forward(const Tensor& x) const;
  /// Output shape for a given input shape; throws ShapeError when any node
  /// would be ill-formed.
  Shape infer_shape(const Shape& input_shape) const;

  std::span<Parameter> parameters() noexcept { return params_; }
  std::span<const Parameter> parameters() const noexcept { return params_; }
  /// Total scalar count across the parameter registry.
  std::size_t parameter_count() const noexcept;
  std::size_t node_count() const noexcept { return nodes_.size(); }

 private:
  enum class Kind { kInput, kConv, kBatchNorm, kRelu, kAvgPool, kGlobalAvgPool, kLinear, kSum, kZerosLike };

  struct Node {
    Kind kind;
    std::vector<ValueId> inputs;
    std::vector<std::size_t> params;
    ops::Conv2dParams conv{};
    ops::PoolParams pool{};
  };

  ValueId push(Node node);
  std::size_t add_param(std::string name, ParamRole role, Shape shape);
  void check_value(ValueId x) const;
  std::vector<bool> live_nodes() const;
  std::vector<Shape> infer_all(const Shape& input_shape) const;

  std::vector<Node> nodes_;
  std::vector<Parameter> params_;
  ValueId output_ = 0;
};

}  // namespace epsinas
