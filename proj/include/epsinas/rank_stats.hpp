#pragma once

#include <cstdint>
#include <optional>
#include <span>
#include <string>
#include <utility>
#include <vector>

namespace epsinas {

struct ScoreTable;
class BenchTable;

enum class AccuracyColumn { kVal, kTest };

std::string_view accuracy_column_name(AccuracyColumn c) noexcept;
AccuracyColumn accuracy_column_from_name(std::string_view name);

/// Finite (score, accuracy) pairs sorted by ascending arch_id.
struct JoinedSeries {
  std::vector<double> scores;
  std::vector<double> accuracies;
  std::vector<std::size_t> arch_ids;
  std::size_t n_dropped = 0;  // matched rows removed for a non-finite value

  std::size_t size() const noexcept { return scores.size(); }
  std::size_t n_total() const noexcept { return size() + n_dropped; }
};

/// Builds a series directly; entries must be finite (ValueError otherwise).
/// ids default to 0..n-1 and decide ties in the top-k selections.
JoinedSeries make_series(std::vector<double> scores, std::vector<double> accuracies,
                         std::vector<std::size_t> arch_ids = {});

/// Inner join on genotype. Rows whose score or accuracy is not finite are
/// dropped and counted. Duplicate genotypes in the score table throw a
/// ValueError listing them.
JoinedSeries join_tables(const ScoreTable& scores, const BenchTable& bench,
                         AccuracyColumn column = AccuracyColumn::kVal);

/// Pearson correlation of average ranks; nullopt when either side has no
/// rank variance. Lengths must match and be at least 2.
std::optional<double> spearman(std::span<const double> x, std::span<const double> y);

/// Kendall tau-b in O(n log n); nullopt when either side is entirely tied.
std::optional<double> kendall(std::span<const double> x, std::span<const double> y);

/// Size of the top-frac slice: ceil(frac * n), or 0 when frac * n < 1.
std::size_t top_count(std::size_t n, double frac);

/// Indices of the k largest values, ties going to the smaller id.
std::vector<std::size_t> top_indices(std::span<const double> values, std::span<const std::size_t> ids,
                                     std::size_t k);

/// Percentage of the top-frac architectures by accuracy that are also in the
/// top-frac by score.
std::optional<double> top_fraction_overlap(const JoinedSeries& s, double frac);

/// How many of the top-k by score fall in the top-frac by accuracy.
std::optional<std::size_t> top_k_in_top_fraction(const JoinedSeries& s, std::size_t k, double frac);

struct SliceCorrelations {
  std::optional<double> spearman;
  std::optional<double> kendall;
};

/// Correlations restricted to the top-frac rows by accuracy.
SliceCorrelations top_slice_correlations(const JoinedSeries& s, double frac);

struct RankOptions {
  double top_frac = 0.1;
  std::size_t top_k = 64;
  double top_k_frac = 0.05;

  void validate() const;
};

struct RankReport {
  std::optional<double> spearman_global;
  std::optional<double> spearman_top;
  std::optional<double> kendall_global;
  std::optional<double> kendall_top;
  std::optional<double> top10_in_top10_pct;
  std::optional<std::size_t> top64_in_top5;
  std::size_t n_total = 0;
  std::size_t n_valid = 0;
  std::size_t n_dropped = 0;

  bool operator==(const RankReport&) const = default;

  static RankReport compute(const JoinedSeries& s, const RankOptions& opts = {});
  /// Flat JSON object; missing values are null.
  std::string to_json() const;
  static RankReport from_json(const std::string& text);
};

}  // namespace epsinas
