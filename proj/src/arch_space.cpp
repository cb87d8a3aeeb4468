#include "epsinas/arch_space.hpp"

#include <string>

#include "epsinas/error.hpp"

namespace epsinas {

namespace {

using ValueId = Network::ValueId;

ValueId relu_conv_bn(Network& net, ValueId x, std::size_t c_in, std::size_t c_out, std::size_t kernel,
                     std::size_t stride, std::size_t padding, const std::string& name) {
  const ValueId a = net.relu(x);
  const ValueId c = net.conv2d(a, c_in, c_out, kernel, stride, padding, name + ".conv");
  return net.batchnorm(c, c_out, name + ".bn");
}

ValueId cell(Network& net, ValueId x, const Genotype& g, std::size_t channels, const std::string& name) {
  std::array<ValueId, kCellNodes> nodes{};
  nodes[0] = x;
  for (std::size_t to = 1; to < kCellNodes; ++to) {
    std::vector<ValueId> terms;
    for (std::size_t e = 0; e < kNumEdges; ++e) {
      if (kEdges[e].to != to) continue;
      const ValueId src = nodes[kEdges[e].from];
      const std::string edge_name = name + ".edge" + std::to_string(to) + "_" + std::to_string(kEdges[e].from);
      switch (g.op(e)) {
        case CellOp::kNone: break;
        case CellOp::kSkipConnect: terms.push_back(src); break;
        case CellOp::kConv1x1: terms.push_back(relu_conv_bn(net, src, channels, channels, 1, 1, 0, edge_name)); break;
        case CellOp::kConv3x3: terms.push_back(relu_conv_bn(net, src, channels, channels, 3, 1, 1, edge_name)); break;
        case CellOp::kAvgPool3x3:
          terms.push_back(net.avg_pool(src, ops::PoolParams{3, 1, 1, false}));
          break;
      }
    }
    nodes[to] = terms.empty() ? net.zeros_like(x) : terms.size() == 1 ? terms[0] : net.sum(std::move(terms));
  }
  return nodes[kCellNodes - 1];
}

ValueId residual_block(Network& net, ValueId x, std::size_t c_in, std::size_t c_out, const std::string& name) {
  const ValueId a = relu_conv_bn(net, x, c_in, c_out, 3, 2, 1, name + ".conv_a");
  const ValueId b = relu_conv_bn(net, a, c_out, c_out, 3, 1, 1, name + ".conv_b");
  const ValueId pooled = net.avg_pool(x, ops::PoolParams{2, 2, 0, true});
  const ValueId shortcut = net.conv2d(pooled, c_in, c_out, 1, 1, 0, name + ".downsample");
  return net.sum({shortcut, b});
}

}  // namespace

void SkeletonConfig::validate() const {
  if (stem_channels == 0 || cells_per_stack == 0 || num_classes == 0) {
    throw ValueError("skeleton counts must be positive");
  }
  if (input_shape[0] == 0) throw ValueError("input channel count must be positive");
  std::size_t h = input_shape[1], w = input_shape[2];
  for (std::size_t stage = 1; stage < kNumStacks; ++stage) {
    // The pooled shortcut and the strided conv branch agree only on even
    // extents of at least 2.
    if (h < 2 || w < 2 || h % 2 != 0 || w % 2 != 0) {
      throw ValueError("input spatial dims " + std::to_string(input_shape[1]) + "x" +
                       std::to_string(input_shape[2]) + " collapse before stack " + std::to_string(stage + 1));
    }
    h /= 2;
    w /= 2;
  }
}

Network build_network(const Genotype& g, const SkeletonConfig& cfg) {
  cfg.validate();
  Network net;
  std::size_t channels = cfg.stem_channels;
  ValueId x = net.conv2d(Network::input(), cfg.input_shape[0], channels, 3, 1, 1, "stem.conv");
  x = net.batchnorm(x, channels, "stem.bn");
  for (std::size_t stack = 0; stack < SkeletonConfig::kNumStacks; ++stack) {
    if (stack > 0) {
      x = residual_block(net, x, channels, channels * 2, "stack" + std::to_string(stack) + ".reduce");
      channels *= 2;
    }
    for (std::size_t c = 0; c < cfg.cells_per_stack; ++c) {
      x = cell(net, x, g, channels, "stack" + std::to_string(stack) + ".cell" + std::to_string(c));
    }
  }
  x = net.batchnorm(x, channels, "head.bn");
  x = net.relu(x);
  x = net.global_avg_pool(x);
  x = net.linear(x, channels, cfg.num_classes, true, "classifier");
  net.set_output(x);
  return net;
}

std::size_t param_count(const Genotype& g, const SkeletonConfig& cfg) {
  return build_network(g, cfg).parameter_count();
}

}  // namespace epsinas
