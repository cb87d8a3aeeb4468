#pragma once

#include <cstdint>
#include <functional>
#include <iosfwd>
#include <string>
#include <vector>

#include "epsinas/bench_db.hpp"
#include "epsinas/genotype.hpp"

namespace epsinas {

struct ScoreTable;

enum class SearchAlgo { kRandomSearch, kAgingEvolution };
enum class SearchMode { kPlain, kWarmup, kMove };

std::string_view algo_name(SearchAlgo a) noexcept;
SearchAlgo algo_from_name(std::string_view name);  // "rs" | "random_search" | "ae" | "aging_evolution"
std::string_view mode_name(SearchMode m) noexcept;
SearchMode mode_from_name(std::string_view name);

struct SearchConfig {
  SearchAlgo algo = SearchAlgo::kRandomSearch;
  SearchMode mode = SearchMode::kPlain;
  std::size_t warmup_pool_size = 3000;
  std::size_t warmup_steps = 64;
  std::size_t train_budget = 300;
  std::size_t rounds = 100;
  std::size_t population_size = 64;
  std::size_t sample_size = 10;
  std::uint64_t seed = 0;

  /// Throws ValueError on inconsistent settings.
  void validate() const;
};

struct TrajectoryStep {
  std::size_t step;  // 1-based
  std::string genotype;
  double val_acc;
  double best_test_acc;  // test accuracy of the best-by-val architecture so far

  bool operator==(const TrajectoryStep&) const = default;
};

struct Trajectory {
  std::size_t round = 0;
  std::vector<TrajectoryStep> steps;

  double final_best_test() const;
  bool operator==(const Trajectory&) const = default;
};

/// Trainless score of a genotype; NaN marks an invalid score.
using Scorer = std::function<double(const std::string& genotype)>;
/// Child proposal for aging evolution.
using Mutator = std::function<Genotype(const Genotype& parent, CounterRng& rng)>;

/// Scorer backed by a score table; genotypes missing from it score NaN.
Scorer table_scorer(const ScoreTable& scores);

struct SearchContext {
  const BenchTable& bench;
  Scorer scorer;     // required unless mode is plain
  Mutator mutator;   // defaults to a single-edge mutation
  std::size_t parallelism = 1;
};

/// Runs cfg.rounds independent rounds with generator seed + round.
std::vector<Trajectory> run_search(const SearchConfig& cfg, const SearchContext& ctx);
Trajectory random_search_round(const SearchConfig& cfg, const SearchContext& ctx, std::size_t round);
Trajectory aging_evolution_round(const SearchConfig& cfg, const SearchContext& ctx, std::size_t round);

/// Pool of up to warmup_pool_size distinct bench rows (indices), ordered by
/// descending score; NaN scores last, ties by ascending arch_id.
std::vector<std::size_t> warmup_pool(const SearchConfig& cfg, const SearchContext& ctx, CounterRng& rng);

/// CSV `round,step,genotype,val_acc,best_test_acc`.
void write_trajectories(std::ostream& out, const std::vector<Trajectory>& runs);
std::vector<Trajectory> read_trajectories(std::istream& in, const std::string& source = "trajectories");

struct SearchSummary {
  std::size_t rounds;
  MeanStd final_best_test;
};

SearchSummary summarize(const std::vector<Trajectory>& runs);

struct SelectionResult {
  std::size_t n;
  std::size_t runs;
  std::size_t n_valid;
  MeanStd val;
  MeanStd test;
};

/// Per run r (generator CounterRng(seed + r)): sample n architectures with a
/// valid score, take the highest score (ties uniformly) and record its
/// accuracies.
SelectionResult n_sample_selection(std::size_t n, std::size_t runs, const BenchTable& bench,
                                   const ScoreTable& scores, std::uint64_t seed);

}  // namespace epsinas
