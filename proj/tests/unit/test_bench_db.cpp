#include <algorithm>
#include <cmath>
#include <sstream>

#include "doctest.h"
#include "epsinas/bench_db.hpp"
#include "epsinas/error.hpp"
#include "epsinas/genotype.hpp"
#include "epsinas/score_table.hpp"
#include "test_helpers.hpp"

using namespace epsinas;

namespace {

std::string g(std::size_t i) { return Genotype::from_index(i).to_string(); }

std::string csv(const std::vector<std::string>& lines) {
  std::string out = "arch_id,genotype,val_acc,test_acc,params\n";
  for (const auto& l : lines) out += l + "\n";
  return out;
}

BenchTable parse(const std::string& text) {
  std::istringstream in(text);
  return BenchTable::read_csv(in, "fixture");
}

BenchTable toy_table(std::size_t n) {
  std::vector<BenchRow> rows;
  for (std::size_t i = 0; i < n; ++i) rows.push_back({i, g(i), 60.0 + 3.0 * i, 55.0 + double((i * 7) % 11), 100 + i});
  return BenchTable(rows);
}

}  // namespace

TEST_SUITE("bench_db") {
  TEST_CASE("three-row fixture") {
    const BenchTable t = BenchTable::load(std::string(EPSINAS_FIXTURES) + "/bench_small.csv");
    CHECK(t.size() == 3);
    CHECK(t.metadata().size() == 1);
    const BenchRow& r = t.at(g(1));
    CHECK(r.val_acc == 85.5);
    CHECK(r.test_acc == 84.25);
    CHECK(r.params == 120000);
  }

  TEST_CASE("duplicate genotypes name the key") {
    try {
      parse(csv({"1," + g(1) + ",80,79,10", "1," + g(1) + ",81,80,10"}));
      FAIL("expected an error");
    } catch (const ValueError& e) {
      CHECK(std::string(e.what()).find(g(1)) != std::string::npos);
    }
  }

  TEST_CASE("duplicate genotypes in a file report both lines") {
    try {
      parse(csv({"1," + g(1) + ",80,79,10", "2," + g(2) + ",80,79,10", "1," + g(1) + ",81,80,10"}));
      FAIL("expected an error");
    } catch (const ValueError& e) {
      const std::string msg = e.what();
      CHECK(msg.find("line 4") != std::string::npos);
      CHECK(msg.find("line 2") != std::string::npos);
    }
  }

  TEST_CASE("exporter CSV contract") {
    // A table shaped like a full NB-201 export: metadata line, header, one
    // row per architecture ordered by arch_id.
    std::string text = "#dataset=cifar10 split=x-valid source=export\n"
                       "arch_id,genotype,val_acc,test_acc,params\n";
    for (std::size_t i = 0; i < kSpaceSize; ++i) {
      const double v = static_cast<double>(i % 9000) / 100.0;
      text += std::to_string(i) + "," + Genotype::from_index(i).to_string() + "," + format_double(v) + "," +
              format_double(v / 2) + "," + std::to_string(1000 + i) + "\n";
    }
    std::istringstream in(text);
    const BenchTable t = BenchTable::read_csv(in, "export.csv");
    REQUIRE(t.size() == kSpaceSize);
    CHECK(t.metadata() == std::vector<std::string>{"dataset=cifar10 split=x-valid source=export"});
    for (const auto& r : t.rows()) REQUIRE(Genotype::parse(r.genotype).index() == r.arch_id);
    std::ostringstream out;
    t.write_csv(out);
    CHECK(out.str() == text);

    std::string typo = text;
    typo.replace(typo.find("test_acc"), 8, "tset_acc");
    std::istringstream bad(typo);
    try {
      BenchTable::read_csv(bad, "export.csv");
      FAIL("expected an error");
    } catch (const IoError& e) {
      const std::string msg = e.what();
      CHECK(msg.find("column 4") != std::string::npos);
      CHECK(msg.find("'tset_acc'") != std::string::npos);
    }
  }

  TEST_CASE("out-of-range accuracies are rejected with the line") {
    try {
      parse(csv({"1," + g(1) + ",80,79,10", "2," + g(2) + ",101,80,10"}));
      FAIL("expected an error");
    } catch (const ValueError& e) {
      CHECK(std::string(e.what()).find("line 3") != std::string::npos);
      CHECK(std::string(e.what()).find("val_acc") != std::string::npos);
    }
    CHECK_THROWS_AS(parse(csv({"1," + g(1) + ",80,-1,10"})), ValueError);
    CHECK_THROWS_AS(parse(csv({"1," + g(1) + ",nan,50,10"})), ValueError);
  }

  TEST_CASE("malformed rows report their line number") {
    const char* bad[] = {"1,x,80", "a," , "1,g,80,79,ten", "1,,80,79,10"};
    for (const char* row : bad) {
      CAPTURE(row);
      try {
        parse(csv({"0," + g(0) + ",50,50,1", row}));
        FAIL("expected an error");
      } catch (const IoError& e) {
        CHECK(std::string(e.what()).find("line 3") != std::string::npos);
      }
    }
    CHECK_THROWS_AS(parse("arch,genotype\n"), IoError);
    CHECK_THROWS_AS(parse(""), IoError);
  }

  TEST_CASE("loading is independent of row order") {
    std::vector<std::string> lines;
    for (std::size_t i = 0; i < 40; ++i) lines.push_back(std::to_string(i * 3) + "," + g(i * 3) + ",70,69,5");
    const BenchTable a = parse(csv(lines));
    std::reverse(lines.begin(), lines.end());
    std::swap(lines[3], lines[17]);
    CHECK(parse(csv(lines)) == a);
  }

  TEST_CASE("lookups fail loudly on misses") {
    const BenchTable t = toy_table(5);
    CHECK(t.contains(g(2)));
    CHECK(t.find(g(99)) == nullptr);
    CHECK_THROWS_AS(t.at(g(99)), ValueError);
  }

  TEST_CASE("CSV round-trip") {
    TempDir dir;
    const BenchTable t = toy_table(12);
    t.save(dir.file("b.csv"));
    CHECK(BenchTable::load(dir.file("b.csv")) == t);
  }

  TEST_CASE("constant test accuracy gives (c, 0) baselines") {
    std::vector<BenchRow> rows;
    for (std::size_t i = 0; i < 20; ++i) rows.push_back({i, g(i), double(50 + i), 77.0, 1});
    const Baselines b = baselines(BenchTable(rows), 5, 100, 1);
    CHECK(b.optimal.mean == 77.0);
    CHECK(b.optimal.std == 0.0);
    CHECK(b.random.mean == 77.0);
    CHECK(b.random.std == 0.0);
  }

  TEST_CASE("sampling the whole table gives the global optimum") {
    const BenchTable t = toy_table(10);
    const Baselines b = baselines(t, 10, 50, 2);
    const auto best = std::max_element(t.rows().begin(), t.rows().end(),
                                       [](const BenchRow& a, const BenchRow& c) { return a.val_acc < c.val_acc; });
    CHECK(b.optimal.mean == best->test_acc);
    CHECK(b.optimal.std == 0.0);
  }

  TEST_CASE("random baseline converges to the table mean") {
    const BenchTable t = toy_table(10);
    double mean = 0;
    for (const auto& r : t.rows()) mean += r.test_acc / 10.0;
    const Baselines b = baselines(t, 3, 10000, 3);
    CHECK(std::abs(b.random.mean - mean) < 0.01 * mean);
  }

  TEST_CASE("baseline argument errors") {
    CHECK_THROWS_AS(baselines(BenchTable(), 1, 1, 0), ValueError);
    CHECK_THROWS_AS(baselines(toy_table(3), 4, 1, 0), ValueError);
    CHECK_THROWS_AS(baselines(toy_table(3), 2, 0, 0), ValueError);
  }

  TEST_CASE("mean_std uses the population deviation") {
    const MeanStd m = mean_std({1, 2, 3, 4});
    CHECK(m.mean == 2.5);
    CHECK(m.std == doctest::Approx(std::sqrt(1.25)));
  }
}
