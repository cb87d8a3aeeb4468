#include <set>

#include "doctest.h"
#include "epsinas/error.hpp"
#include "epsinas/genotype.hpp"

using namespace epsinas;

TEST_SUITE("genotype") {
  TEST_CASE("parse the all-none genotype") {
    const Genotype g = Genotype::parse("|none~0|+|none~0|none~1|+|none~0|none~1|none~2|");
    for (CellOp op : g.ops()) CHECK(op == CellOp::kNone);
    CHECK(g.index() == 0);
  }

  TEST_CASE("mixed genotype round-trips") {
    const std::string text = "|nor_conv_3x3~0|+|none~0|nor_conv_3x3~1|+|skip_connect~0|none~1|avg_pool_3x3~2|";
    const Genotype g = Genotype::parse(text);
    CHECK(g.op(0) == CellOp::kConv3x3);
    CHECK(g.op(1) == CellOp::kNone);
    CHECK(g.op(2) == CellOp::kConv3x3);
    CHECK(g.op(3) == CellOp::kSkipConnect);
    CHECK(g.op(4) == CellOp::kNone);
    CHECK(g.op(5) == CellOp::kAvgPool3x3);
    CHECK(g.to_string() == text);
  }

  TEST_CASE("unknown op names are reported") {
    try {
      Genotype::parse("|bad_op~0|+|none~0|none~0|+|none~0|none~0|none~0|");
      FAIL("expected a parse error");
    } catch (const ParseError& e) {
      CHECK(std::string(e.what()).find("unknown op") != std::string::npos);
      CHECK(std::string(e.what()).find("bad_op") != std::string::npos);
    }
  }

  TEST_CASE("malformed strings carry a position") {
    const char* bad[] = {
        "",
        "|none~0|",
        "|none~0|+|none~0|none~0|+|none~0|none~0|",
        "|none~1|+|none~0|none~0|+|none~0|none~0|none~0|",
        "|none~0|+|none~0|none~0|+|none~0|none~0|none~0|extra",
        "|none~0|+|none~0|+|none~0|none~0|+|none~0|none~0|none~0|",
        "none~0|+|none~0|none~0|+|none~0|none~0|none~0|",
        "|none0|+|none~0|none~0|+|none~0|none~0|none~0|",
    };
    for (const char* s : bad) {
      CAPTURE(s);
      CHECK_THROWS_AS(Genotype::parse(s), ParseError);
    }
    try {
      Genotype::parse("|none~0|+|none~0|none~7|+|none~0|none~0|none~0|");
      FAIL("expected a parse error");
    } catch (const ParseError& e) {
      CHECK(e.position() > 0);
    }
  }

  TEST_CASE("enumeration covers the space in index order") {
    const auto all = enumerate_space();
    REQUIRE(all.size() == 15625);
    CHECK(all.front() == Genotype());
    std::set<std::string> seen;
    for (std::size_t i = 0; i < all.size(); ++i) {
      REQUIRE(all[i].index() == i);
      REQUIRE(Genotype::from_index(i) == all[i]);
      const std::string s = all[i].to_string();
      REQUIRE(Genotype::parse(s) == all[i]);
      seen.insert(s);
      if (i > 0) REQUIRE(all[i - 1] < all[i]);
    }
    CHECK(seen.size() == 15625);
    CHECK(enumerate_space() == all);
    CHECK_THROWS(Genotype::from_index(15625));
  }

  TEST_CASE("index uses edge 0 as the most significant digit") {
    std::array<CellOp, kNumEdges> ops{};
    ops[0] = CellOp::kSkipConnect;
    CHECK(Genotype(ops).index() == 3125);
    ops = {};
    ops[5] = CellOp::kAvgPool3x3;
    CHECK(Genotype(ops).index() == 4);
  }

  TEST_CASE("mutate changes exactly one edge") {
    CounterRng rng(11);
    Genotype g = Genotype::from_index(777);
    for (int i = 0; i < 1000; ++i) {
      const Genotype m = mutate(g, rng);
      REQUIRE(edit_distance(g, m) == 1);
      REQUIRE(m != g);
    }
    CounterRng a(5), b(5);
    CHECK(mutate(g, a) == mutate(g, b));
  }

  TEST_CASE("mutation picks each alternative op with equal frequency") {
    CounterRng rng(12);
    const Genotype g;
    std::array<int, kNumOps> counts{};
    for (int i = 0; i < 30000; ++i) {
      const Genotype m = mutate(g, rng);
      for (std::size_t e = 0; e < kNumEdges; ++e) {
        if (m.op(e) != g.op(e)) ++counts[static_cast<std::size_t>(m.op(e))];
      }
    }
    CHECK(counts[0] == 0);
    for (std::size_t k = 1; k < kNumOps; ++k) CHECK(std::abs(counts[k] - 7500) < 400);
  }

  TEST_CASE("neighbourhood has 24 distinct genotypes at distance 1") {
    for (std::size_t idx : {0u, 1234u, 15624u}) {
      const Genotype g = Genotype::from_index(idx);
      const auto nb = neighbourhood(g);
      CHECK(nb.size() == 24);
      std::set<Genotype> uniq(nb.begin(), nb.end());
      CHECK(uniq.size() == 24);
      for (const auto& n : nb) CHECK(edit_distance(g, n) == 1);
    }
  }

  TEST_CASE("a mutation random walk spreads over the space") {
    CounterRng rng(13);
    Genotype g;
    std::set<Genotype> visited{g};
    for (int i = 0; i < 100; ++i) {
      g = mutate(g, rng);
      visited.insert(g);
    }
    CHECK(visited.size() > 50);
  }

  TEST_CASE("sample_space draws distinct genotypes deterministically") {
    CounterRng a(21), b(21);
    const auto s = sample_space(500, a);
    CHECK(s.size() == 500);
    CHECK(std::set<Genotype>(s.begin(), s.end()).size() == 500);
    CHECK(sample_space(500, b) == s);
    CounterRng c(22);
    CHECK(sample_space(15625, c).size() == 15625);
  }

  TEST_CASE("op names") {
    for (CellOp op : kAllOps) CHECK(op_from_name(op_name(op)) == op);
    CHECK_FALSE(op_from_name("conv"));
  }
}
