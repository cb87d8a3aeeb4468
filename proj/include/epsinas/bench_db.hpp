#pragma once

#include <cstdint>
#include <iosfwd>
#include <string>
#include <unordered_map>
#include <vector>

#include "epsinas/rng.hpp"

namespace epsinas {

struct BenchRow {
  std::size_t arch_id;
  std::string genotype;
  double val_acc;   // percent
  double test_acc;  // percent
  std::uint64_t params;

  bool operator==(const BenchRow&) const = default;
};

/// Trained-accuracy lookup keyed by genotype string. Rows are kept sorted by
/// (arch_id, genotype), so the table does not depend on file order.
class BenchTable {
 public:
  BenchTable() = default;
  /// Validates keys (unique) and accuracy ranges; throws ValueError.
  explicit BenchTable(std::vector<BenchRow> rows, std::vector<std::string> metadata = {});

  /// CSV with header `arch_id,genotype,val_acc,test_acc,params`; leading `#`
  /// lines (dataset name, source tag) are kept as metadata. Throws IoError / ValueError.
  static BenchTable read_csv(std::istream& in, const std::string& source = "bench table");
  static BenchTable load(const std::string& path);
  void write_csv(std::ostream& out) const;
  void save(const std::string& path) const;

  const std::vector<BenchRow>& rows() const noexcept { return rows_; }
  std::size_t size() const noexcept { return rows_.size(); }
  bool empty() const noexcept { return rows_.empty(); }
  const std::vector<std::string>& metadata() const noexcept { return metadata_; }

  bool contains(const std::string& genotype) const noexcept;
  /// Throws ValueError naming the genotype when it is not in the table.
  const BenchRow& at(const std::string& genotype) const;
  const BenchRow* find(const std::string& genotype) const noexcept;
  std::size_t position(const std::string& genotype) const;

  bool operator==(const BenchTable& o) const { return rows_ == o.rows_; }

 private:
  std::vector<BenchRow> rows_;
  std::unordered_map<std::string, std::size_t> index_;
  std::vector<std::string> metadata_;
};

struct MeanStd {
  double mean;
  double std;  // population standard deviation
};

MeanStd mean_std(const std::vector<double>& values);

struct Baselines {
  MeanStd optimal;
  MeanStd random;
};

/// Per run r (generator CounterRng(seed + r)): sample n distinct rows; the
/// optimal baseline takes the test accuracy of the highest-val row (ties
/// broken uniformly), the random baseline that of one uniformly chosen row
/// of the same sample.
Baselines baselines(const BenchTable& table, std::size_t n, std::size_t runs, std::uint64_t seed);

/// First k entries of a uniformly random permutation of [0, m).
std::vector<std::size_t> sample_indices(std::size_t m, std::size_t k, CounterRng& rng);

/// Index (into candidates) of the maximum key, ties broken uniformly with rng.
std::size_t argmax_random_ties(const std::vector<std::size_t>& candidates, const std::vector<double>& keys,
                               CounterRng& rng);

}  // namespace epsinas
