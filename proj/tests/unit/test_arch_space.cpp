#include <cmath>
#include <set>

#include "doctest.h"
#include "epsinas/arch_space.hpp"
#include "epsinas/error.hpp"
#include "epsinas/weight_init.hpp"

using namespace epsinas;

namespace {

// Scalar count worked out from the skeleton description.
std::size_t count_oracle(const Genotype& g, const SkeletonConfig& cfg) {
  std::size_t c = cfg.stem_channels;
  std::size_t total = cfg.input_shape[0] * c * 9 + 2 * c;
  auto cell = [&](std::size_t ch) {
    std::size_t n = 0;
    for (CellOp op : g.ops()) {
      if (op == CellOp::kConv1x1) n += ch * ch + 2 * ch;
      if (op == CellOp::kConv3x3) n += 9 * ch * ch + 2 * ch;
    }
    return n;
  };
  for (std::size_t stack = 0; stack < 3; ++stack) {
    if (stack > 0) {
      const std::size_t o = 2 * c;
      total += 9 * c * o + 2 * o;  // conv_a + BN
      total += 9 * o * o + 2 * o;  // conv_b + BN
      total += c * o;              // 1x1 shortcut
      c = o;
    }
    total += cfg.cells_per_stack * cell(c);
  }
  total += 2 * c + c * cfg.num_classes + cfg.num_classes;
  return total;
}

Tensor grey(std::size_t n, const SkeletonConfig& cfg) {
  Tensor t({n, cfg.input_shape[0], cfg.input_shape[1], cfg.input_shape[2]});
  const std::size_t per = t.numel() / n;
  for (std::size_t i = 0; i < n; ++i)
    for (std::size_t j = 0; j < per; ++j) t[i * per + j] = n == 1 ? 0.0f : float(i) / float(n - 1);
  return t;
}

}  // namespace

TEST_SUITE("arch_space") {
  TEST_CASE("parameter count matches the skeleton formula") {
    CounterRng rng(3);
    for (const auto& g : sample_space(50, rng)) {
      CHECK(param_count(g, SkeletonConfig::desk_scale()) == count_oracle(g, SkeletonConfig::desk_scale()));
      CHECK(param_count(g, SkeletonConfig::benchmark()) == count_oracle(g, SkeletonConfig::benchmark()));
    }
  }

  TEST_CASE("parameter count grows with convolutions and width") {
    const Genotype none;
    const Genotype conv3(std::array<CellOp, kNumEdges>{CellOp::kConv3x3, CellOp::kConv3x3, CellOp::kConv3x3,
                                                       CellOp::kConv3x3, CellOp::kConv3x3, CellOp::kConv3x3});
    SkeletonConfig cfg;
    CHECK(param_count(none, cfg) < param_count(conv3, cfg));
    SkeletonConfig wide = cfg;
    wide.stem_channels = 32;
    CHECK(param_count(conv3, wide) > param_count(conv3, cfg));
  }

  TEST_CASE("registry names are unique") {
    const Genotype g = Genotype::from_index(9999);
    const Network net = build_network(g, SkeletonConfig::benchmark());
    std::set<std::string> names;
    for (const auto& p : net.parameters()) names.insert(p.name);
    CHECK(names.size() == net.parameters().size());
  }

  TEST_CASE("forward output is [N, classes] for sampled genotypes") {
    SkeletonConfig cfg;
    cfg.input_shape = {3, 8, 8};
    cfg.stem_channels = 4;
    cfg.num_classes = 7;
    CounterRng rng(4);
    const Tensor x = grey(3, cfg);
    for (const auto& g : sample_space(30, rng)) {
      Network net = build_network(g, cfg);
      init_constant(net, 0.5f);
      const Tensor y = net.forward(x);
      REQUIRE(y.shape() == Shape{3, 7});
      CHECK(net.infer_shape(x.shape()) == y.shape());
    }
  }

  TEST_CASE("all-skip network is finite under unit constant weights") {
    const Genotype skip(std::array<CellOp, kNumEdges>{CellOp::kSkipConnect, CellOp::kSkipConnect,
                                                      CellOp::kSkipConnect, CellOp::kSkipConnect,
                                                      CellOp::kSkipConnect, CellOp::kSkipConnect});
    for (ConstantScope scope : {ConstantScope::kWeights, ConstantScope::kAll}) {
      SkeletonConfig cfg;
      Network net = build_network(skip, cfg);
      init_constant(net, 1.0f, scope);
      const Tensor y = net.forward(grey(4, cfg));
      for (float v : y.data()) CHECK(std::isfinite(v));
    }
  }

  TEST_CASE("all-none cells zero the stack output") {
    // With every cell annihilated, only the residual path carries signal,
    // and it is identical for any genotype that has all-none cells.
    SkeletonConfig cfg;
    cfg.input_shape = {3, 8, 8};
    Network a = build_network(Genotype(), cfg);
    init_constant(a, 0.3f);
    const Tensor y = a.forward(grey(4, cfg));
    // Node 3 is zero, so after the last cell the head sees BN(0) = bias = 0:
    // logits equal the classifier bias.
    for (float v : y.data()) CHECK(v == 0.0f);
  }

  TEST_CASE("the benchmark skeleton has five cells per stack") {
    const SkeletonConfig b = SkeletonConfig::benchmark();
    CHECK(b.cells_per_stack == 5);
    CHECK(b.stem_channels == 16);
    CHECK(b.num_classes == 10);
    CHECK(b.input_shape == std::array<std::size_t, 3>{3, 32, 32});
  }

  TEST_CASE("configs that collapse spatially are rejected") {
    SkeletonConfig cfg;
    cfg.input_shape = {3, 2, 2};
    CHECK_THROWS_AS(build_network(Genotype(), cfg), ValueError);
    cfg.input_shape = {3, 6, 5};
    CHECK_THROWS_AS(cfg.validate(), ValueError);
    cfg = SkeletonConfig{};
    cfg.cells_per_stack = 0;
    CHECK_THROWS_AS(cfg.validate(), ValueError);
  }

  TEST_CASE("batch shape mismatch is a shape error") {
    Network net = build_network(Genotype(), SkeletonConfig{});
    CHECK_THROWS_AS(net.forward(Tensor({1, 1, 32, 32})), ShapeError);
  }
}
