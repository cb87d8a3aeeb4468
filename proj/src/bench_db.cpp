#include "epsinas/bench_db.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <numeric>
#include <ostream>
#include <unordered_map>

#include "epsinas/csv.hpp"
#include "epsinas/error.hpp"
#include "epsinas/score_table.hpp"

namespace epsinas {

namespace {

constexpr std::string_view kHeader = "arch_id,genotype,val_acc,test_acc,params";

void check_accuracy(double v, const char* column, const std::string& genotype) {
  if (!(v >= 0.0 && v <= 100.0)) {
    throw ValueError(std::string(column) + " " + format_double(v) + " out of range [0,100] for " + genotype);
  }
}

}  // namespace

BenchTable::BenchTable(std::vector<BenchRow> rows, std::vector<std::string> metadata)
    : rows_(std::move(rows)), metadata_(std::move(metadata)) {
  std::sort(rows_.begin(), rows_.end(), [](const BenchRow& a, const BenchRow& b) {
    return a.arch_id != b.arch_id ? a.arch_id < b.arch_id : a.genotype < b.genotype;
  });
  for (const auto& r : rows_) {
    check_accuracy(r.val_acc, "val_acc", r.genotype);
    check_accuracy(r.test_acc, "test_acc", r.genotype);
  }
  std::vector<std::string> duplicates;
  for (std::size_t i = 0; i < rows_.size(); ++i) {
    if (!index_.emplace(rows_[i].genotype, i).second) duplicates.push_back(rows_[i].genotype);
  }
  if (!duplicates.empty()) {
    std::string msg = "duplicate genotype keys in bench table:";
    for (const auto& d : duplicates) msg += " " + d;
    throw ValueError(msg);
  }
}

BenchTable BenchTable::read_csv(std::istream& in, const std::string& source) {
  CsvReader reader(in, source);
  reader.expect_header(kHeader);
  std::vector<BenchRow> rows;
  std::unordered_map<std::string, std::size_t> first_line;
  while (auto rec = reader.next()) {
    rec->require_fields(5);
    BenchRow row{rec->as_size(0, "arch_id"), rec->field(1), rec->as_double(2, "val_acc"),
                 rec->as_double(3, "test_acc"), rec->as_size(4, "params")};
    if (row.genotype.empty()) throw IoError(rec->where() + ": empty genotype");
    try {
      check_accuracy(row.val_acc, "val_acc", row.genotype);
      check_accuracy(row.test_acc, "test_acc", row.genotype);
    } catch (const ValueError& e) {
      throw ValueError(rec->where() + ": " + e.what());
    }
    if (const auto [it, fresh] = first_line.emplace(row.genotype, rec->line()); !fresh) {
      throw ValueError(rec->where() + ": duplicate genotype " + row.genotype + " (first seen on line " +
                       std::to_string(it->second) + ")");
    }
    rows.push_back(std::move(row));
  }
  return BenchTable(std::move(rows), reader.metadata());
}

BenchTable BenchTable::load(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("cannot open bench table '" + path + "'");
  return read_csv(in, path);
}

void BenchTable::write_csv(std::ostream& out) const {
  for (const auto& m : metadata_) out << '#' << m << '\n';
  out << kHeader << '\n';
  for (const auto& r : rows_) {
    out << r.arch_id << ',' << r.genotype << ',' << format_double(r.val_acc) << ',' << format_double(r.test_acc)
        << ',' << r.params << '\n';
  }
}

void BenchTable::save(const std::string& path) const {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw IoError("cannot open '" + path + "' for writing");
  write_csv(out);
}

bool BenchTable::contains(const std::string& genotype) const noexcept { return index_.count(genotype) != 0; }

const BenchRow* BenchTable::find(const std::string& genotype) const noexcept {
  const auto it = index_.find(genotype);
  return it == index_.end() ? nullptr : &rows_[it->second];
}

const BenchRow& BenchTable::at(const std::string& genotype) const { return rows_[position(genotype)]; }

std::size_t BenchTable::position(const std::string& genotype) const {
  const auto it = index_.find(genotype);
  if (it == index_.end()) throw ValueError("genotype not in bench table: " + genotype);
  return it->second;
}

MeanStd mean_std(const std::vector<double>& values) {
  if (values.empty()) throw ValueError("mean of an empty sample");
  const double mean = std::accumulate(values.begin(), values.end(), 0.0) / static_cast<double>(values.size());
  double sq = 0.0;
  for (double v : values) sq += (v - mean) * (v - mean);
  return {mean, std::sqrt(sq / static_cast<double>(values.size()))};
}

std::vector<std::size_t> sample_indices(std::size_t m, std::size_t k, CounterRng& rng) {
  if (k > m) throw ValueError("cannot sample " + std::to_string(k) + " of " + std::to_string(m) + " rows");
  std::vector<std::size_t> idx(m);
  std::iota(idx.begin(), idx.end(), std::size_t{0});
  for (std::size_t i = 0; i < k; ++i) std::swap(idx[i], idx[i + rng.below(m - i)]);
  idx.resize(k);
  return idx;
}

std::size_t argmax_random_ties(const std::vector<std::size_t>& candidates, const std::vector<double>& keys,
                               CounterRng& rng) {
  if (candidates.empty()) throw ValueError("argmax over an empty candidate set");
  std::size_t best = 0;
  std::size_t ties = 1;
  for (std::size_t i = 1; i < candidates.size(); ++i) {
    const double k = keys[candidates[i]];
    const double b = keys[candidates[best]];
    if (k > b) {
      best = i;
      ties = 1;
    } else if (k == b) {
      // Reservoir choice keeps each tied candidate with probability 1/ties.
      ++ties;
      if (rng.below(ties) == 0) best = i;
    }
  }
  return best;
}

Baselines baselines(const BenchTable& table, std::size_t n, std::size_t runs, std::uint64_t seed) {
  if (table.empty()) throw ValueError("baselines need a non-empty bench table");
  if (n == 0 || n > table.size()) {
    throw ValueError("sample size " + std::to_string(n) + " must be in [1, " + std::to_string(table.size()) + "]");
  }
  if (runs == 0) throw ValueError("baselines need at least one run");
  std::vector<double> val(table.size());
  for (std::size_t i = 0; i < table.size(); ++i) val[i] = table.rows()[i].val_acc;
  std::vector<double> optimal, random;
  optimal.reserve(runs);
  random.reserve(runs);
  for (std::size_t r = 0; r < runs; ++r) {
    CounterRng rng(seed + r);
    const std::vector<std::size_t> sample = sample_indices(table.size(), n, rng);
    optimal.push_back(table.rows()[sample[argmax_random_ties(sample, val, rng)]].test_acc);
    random.push_back(table.rows()[sample[rng.below(n)]].test_acc);
  }
  return {mean_std(optimal), mean_std(random)};
}

}  // namespace epsinas
