#include "epsinas/network.hpp"

#include <algorithm>
#include <optional>

#include "epsinas/error.hpp"

namespace epsinas {

std::string_view role_name(ParamRole role) noexcept {
  switch (role) {
    case ParamRole::kConvWeight: return "conv-weight";
    case ParamRole::kBnGain: return "bn-gain";
    case ParamRole::kBnBias: return "bn-bias";
    case ParamRole::kLinearWeight: return "linear-weight";
    case ParamRole::kLinearBias: return "linear-bias";
    case ParamRole::kEmbedding: return "embedding";
  }
  return "unknown";
}

Network::Network() { nodes_.push_back(Node{Kind::kInput, {}, {}}); }

Network::ValueId Network::push(Node node) {
  for (ValueId in : node.inputs) check_value(in);
  nodes_.push_back(std::move(node));
  return nodes_.size() - 1;
}

void Network::check_value(ValueId x) const {
  if (x >= nodes_.size()) throw ValueError("network value id " + std::to_string(x) + " does not exist");
}

std::size_t Network::add_param(std::string name, ParamRole role, Shape shape) {
  params_.push_back(Parameter{std::move(name), role, Tensor(std::move(shape))});
  return params_.size() - 1;
}

Network::ValueId Network::conv2d(ValueId x, std::size_t c_in, std::size_t c_out, std::size_t kernel,
                                 std::size_t stride, std::size_t padding, std::string name) {
  Node n{Kind::kConv, {x}, {add_param(std::move(name), ParamRole::kConvWeight, {c_out, c_in, kernel, kernel})}};
  n.conv = {stride, padding};
  return push(std::move(n));
}

Network::ValueId Network::batchnorm(ValueId x, std::size_t channels, std::string name) {
  const std::size_t gain = add_param(name + ".gain", ParamRole::kBnGain, {channels});
  const std::size_t bias = add_param(name + ".bias", ParamRole::kBnBias, {channels});
  params_[gain].value.fill(1.0f);
  return push(Node{Kind::kBatchNorm, {x}, {gain, bias}});
}

Network::ValueId Network::relu(ValueId x) { return push(Node{Kind::kRelu, {x}, {}}); }

Network::ValueId Network::avg_pool(ValueId x, ops::PoolParams params) {
  Node n{Kind::kAvgPool, {x}, {}};
  n.pool = params;
  return push(std::move(n));
}

Network::ValueId Network::global_avg_pool(ValueId x) { return push(Node{Kind::kGlobalAvgPool, {x}, {}}); }

Network::ValueId Network::linear(ValueId x, std::size_t in_features, std::size_t out_features, bool with_bias,
                                 std::string name, ParamRole weight_role) {
  Node n{Kind::kLinear, {x}, {add_param(name + ".weight", weight_role, {out_features, in_features})}};
  if (with_bias) n.params.push_back(add_param(name + ".bias", ParamRole::kLinearBias, {out_features}));
  return push(std::move(n));
}

Network::ValueId Network::sum(std::vector<ValueId> xs) {
  if (xs.empty()) throw ValueError("sum node needs at least one input");
  return push(Node{Kind::kSum, std::move(xs), {}});
}

Network::ValueId Network::zeros_like(ValueId x) { return push(Node{Kind::kZerosLike, {x}, {}}); }

void Network::set_output(ValueId y) {
  check_value(y);
  output_ = y;
}

std::size_t Network::parameter_count() const noexcept {
  std::size_t total = 0;
  for (const auto& p : params_) total += p.value.numel();
  return total;
}

std::vector<bool> Network::live_nodes() const {
  std::vector<bool> live(nodes_.size(), false);
  live[output_] = true;
  for (std::size_t i = nodes_.size(); i-- > 0;) {
    if (!live[i]) continue;
    // zeros_like takes its shape from inference, not from the value.
    if (nodes_[i].kind == Kind::kZerosLike) continue;
    for (ValueId in : nodes_[i].inputs) live[in] = true;
  }
  return live;
}

Shape Network::infer_shape(const Shape& input_shape) const { return infer_all(input_shape)[output_]; }

std::vector<Shape> Network::infer_all(const Shape& input_shape) const {
  std::vector<Shape> shapes(nodes_.size());
  shapes[0] = input_shape;
  for (std::size_t i = 1; i < nodes_.size(); ++i) {
    const Node& n = nodes_[i];
    const Shape& in = shapes[n.inputs.front()];
    auto need_rank = [&](std::size_t r) {
      if (in.size() != r) {
        throw ShapeError("node " + std::to_string(i) + " expects rank " + std::to_string(r) + ", got " +
                         shape_to_string(in));
      }
    };
    switch (n.kind) {
      case Kind::kInput: break;
      case Kind::kConv: {
        need_rank(4);
        const Shape& w = params_[n.params[0]].value.shape();
        if (in[1] != w[1]) {
          throw ShapeError("conv node " + std::to_string(i) + " channel mismatch: input C=" + std::to_string(in[1]) +
                           ", weight C_in=" + std::to_string(w[1]));
        }
        shapes[i] = {in[0], w[0], ops::window_output_size(in[2], w[2], n.conv.stride, n.conv.padding, "conv height"),
                     ops::window_output_size(in[3], w[3], n.conv.stride, n.conv.padding, "conv width")};
        break;
      }
      case Kind::kBatchNorm:
        need_rank(4);
        if (in[1] != params_[n.params[0]].value.numel()) {
          throw ShapeError("batchnorm node " + std::to_string(i) + " channel mismatch");
        }
        shapes[i] = in;
        break;
      case Kind::kRelu:
      case Kind::kZerosLike: shapes[i] = in; break;
      case Kind::kAvgPool:
        need_rank(4);
        shapes[i] = {in[0], in[1],
                     ops::window_output_size(in[2], n.pool.kernel, n.pool.stride, n.pool.padding, "pool height"),
                     ops::window_output_size(in[3], n.pool.kernel, n.pool.stride, n.pool.padding, "pool width")};
        break;
      case Kind::kGlobalAvgPool:
        need_rank(4);
        shapes[i] = {in[0], in[1]};
        break;
      case Kind::kLinear: {
        need_rank(2);
        const Shape& w = params_[n.params[0]].value.shape();
        if (in[1] != w[1]) throw ShapeError("linear node " + std::to_string(i) + " feature mismatch");
        shapes[i] = {in[0], w[0]};
        break;
      }
      case Kind::kSum:
        for (ValueId x : n.inputs) {
          if (shapes[x] != in) {
            throw ShapeError("sum node " + std::to_string(i) + " shape mismatch: " + shape_to_string(in) + " vs " +
                             shape_to_string(shapes[x]));
          }
        }
        shapes[i] = in;
        break;
    }
  }
  return shapes;
}

Tensor Network::forward(const Tensor& x) const {
  const std::vector<bool> live = live_nodes();
  std::vector<std::size_t> last_use(nodes_.size(), 0);
  for (std::size_t i = 0; i < nodes_.size(); ++i) {
    if (!live[i]) continue;
    for (ValueId in : nodes_[i].inputs) last_use[in] = i;
  }
  last_use[output_] = nodes_.size();

  const std::vector<Shape> shapes = infer_all(x.shape());
  std::vector<std::optional<Tensor>> values(nodes_.size());
  auto param = [&](std::size_t idx) -> const Tensor& { return params_[idx].value; };
  auto take = [&](ValueId in, std::size_t consumer) -> Tensor {
    // Moves the value out when this is its final consumer.
    const auto& ins = nodes_[consumer].inputs;
    const bool repeated = std::count(ins.begin(), ins.end(), in) > 1;
    if (last_use[in] == consumer && in != 0 && !repeated) return std::move(*values[in]);
    return in == 0 ? x : *values[in];
  };
  auto get = [&](ValueId in) -> const Tensor& { return in == 0 ? x : *values[in]; };

  for (std::size_t i = 1; i < nodes_.size(); ++i) {
    if (!live[i]) continue;
    const Node& n = nodes_[i];
    Tensor out;
    switch (n.kind) {
      case Kind::kInput: break;
      case Kind::kConv: out = ops::conv2d(get(n.inputs[0]), param(n.params[0]), nullptr, n.conv); break;
      case Kind::kBatchNorm:
        out = ops::batchnorm(get(n.inputs[0]), param(n.params[0]), param(n.params[1]));
        break;
      case Kind::kRelu:
        out = take(n.inputs[0], i);
        ops::relu_inplace(out);
        break;
      case Kind::kAvgPool: out = ops::avg_pool(get(n.inputs[0]), n.pool); break;
      case Kind::kGlobalAvgPool: out = ops::global_avg_pool(get(n.inputs[0])); break;
      case Kind::kLinear:
        out = ops::linear(get(n.inputs[0]), param(n.params[0]), n.params.size() > 1 ? &param(n.params[1]) : nullptr);
        break;
      case Kind::kSum:
        out = take(n.inputs[0], i);
        for (std::size_t k = 1; k < n.inputs.size(); ++k) ops::add_inplace(out, get(n.inputs[k]));
        break;
      case Kind::kZerosLike: out = Tensor(shapes[n.inputs[0]]); break;
    }
    for (ValueId in : n.inputs) {
      if (in != 0 && last_use[in] == i) values[in].reset();
    }
    values[i] = std::move(out);
  }
  if (output_ == 0) return x;
  return std::move(*values[output_]);
}

}  // namespace epsinas
