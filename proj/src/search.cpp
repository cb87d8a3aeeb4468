#include "epsinas/search.hpp"

#include <algorithm>
#include <cmath>
#include <deque>
#include <istream>
#include <ostream>
#include <unordered_map>
#include <unordered_set>

#include "epsinas/csv.hpp"
#include "epsinas/epsilon.hpp"
#include "epsinas/error.hpp"
#include "epsinas/score_table.hpp"

namespace epsinas {

namespace {

constexpr std::size_t kMutationAttempts = 64;
constexpr std::string_view kTrajectoryHeader = "round,step,genotype,val_acc,best_test_acc";

// Greater-is-better with NaN below every number.
bool score_greater(double a, double b) {
  if (std::isnan(a)) return false;
  if (std::isnan(b)) return true;
  return a > b;
}

class RoundState {
 public:
  RoundState(const BenchTable& bench, std::size_t round) : bench_(bench) { traj_.round = round; }

  void train(std::size_t row) {
    const BenchRow& r = bench_.rows()[row];
    if (traj_.steps.empty() || r.val_acc > best_val_) {
      best_val_ = r.val_acc;
      best_test_ = r.test_acc;
    }
    traj_.steps.push_back({traj_.steps.size() + 1, r.genotype, r.val_acc, best_test_});
    trained_.insert(row);
  }

  bool trained(std::size_t row) const { return trained_.count(row) != 0; }
  std::size_t count() const { return traj_.steps.size(); }
  Trajectory take() { return std::move(traj_); }

 private:
  const BenchTable& bench_;
  Trajectory traj_;
  std::unordered_set<std::size_t> trained_;
  double best_val_ = 0.0;
  double best_test_ = 0.0;
};

}  // namespace

std::string_view algo_name(SearchAlgo a) noexcept {
  return a == SearchAlgo::kRandomSearch ? "random_search" : "aging_evolution";
}

SearchAlgo algo_from_name(std::string_view name) {
  if (name == "rs" || name == "random_search") return SearchAlgo::kRandomSearch;
  if (name == "ae" || name == "aging_evolution") return SearchAlgo::kAgingEvolution;
  throw ValueError("unknown search algorithm '" + std::string(name) + "' (expected rs or ae)");
}

std::string_view mode_name(SearchMode m) noexcept {
  switch (m) {
    case SearchMode::kPlain: return "plain";
    case SearchMode::kWarmup: return "warmup";
    case SearchMode::kMove: return "move";
  }
  return "?";
}

SearchMode mode_from_name(std::string_view name) {
  if (name == "plain") return SearchMode::kPlain;
  if (name == "warmup") return SearchMode::kWarmup;
  if (name == "move") return SearchMode::kMove;
  throw ValueError("unknown search mode '" + std::string(name) + "' (expected plain, warmup or move)");
}

void SearchConfig::validate() const {
  if (train_budget == 0) throw ValueError("train budget must be positive");
  if (rounds == 0) throw ValueError("rounds must be positive");
  if (mode == SearchMode::kMove && algo != SearchAlgo::kAgingEvolution) {
    throw ValueError("move mode is only defined for aging evolution");
  }
  if (algo == SearchAlgo::kAgingEvolution) {
    if (population_size == 0) throw ValueError("population size must be positive");
    if (sample_size == 0 || sample_size > population_size) {
      throw ValueError("sample size must be in [1, population size]");
    }
    if (population_size > train_budget) throw ValueError("population size exceeds the train budget");
    if (mode != SearchMode::kPlain && population_size > warmup_pool_size) {
      throw ValueError("population size exceeds the warm-up pool size");
    }
  }
  if (mode != SearchMode::kPlain) {
    if (warmup_pool_size == 0) throw ValueError("warm-up pool size must be positive");
    if (algo == SearchAlgo::kRandomSearch && warmup_pool_size < warmup_steps) {
      throw ValueError("warm-up pool smaller than the number of warm-up steps");
    }
  }
}

double Trajectory::final_best_test() const {
  if (steps.empty()) throw ValueError("empty trajectory");
  return steps.back().best_test_acc;
}

Scorer table_scorer(const ScoreTable& scores) {
  auto map = std::make_shared<std::unordered_map<std::string, double>>();
  for (const auto& r : scores.rows) (*map)[r.genotype] = r.epsilon;
  return [map](const std::string& g) {
    const auto it = map->find(g);
    return it == map->end() ? std::nan("") : it->second;
  };
}

std::vector<std::size_t> warmup_pool(const SearchConfig& cfg, const SearchContext& ctx, CounterRng& rng) {
  if (!ctx.scorer) throw ValueError("warm-up needs a scorer");
  const std::size_t size = std::min(cfg.warmup_pool_size, ctx.bench.size());
  std::vector<std::size_t> pool = sample_indices(ctx.bench.size(), size, rng);
  std::vector<double> score(ctx.bench.size(), std::nan(""));
  for (std::size_t i : pool) score[i] = ctx.scorer(ctx.bench.rows()[i].genotype);
  // Rows are in arch_id order, so the index breaks ties.
  std::sort(pool.begin(), pool.end(), [&](std::size_t a, std::size_t b) {
    if (score_greater(score[a], score[b])) return true;
    if (score_greater(score[b], score[a])) return false;
    return a < b;
  });
  return pool;
}

Trajectory random_search_round(const SearchConfig& cfg, const SearchContext& ctx, std::size_t round) {
  const std::size_t m = ctx.bench.size();
  if (cfg.train_budget > m) {
    throw ValueError("train budget " + std::to_string(cfg.train_budget) + " exceeds the " + std::to_string(m) +
                     " architectures in the bench table");
  }
  CounterRng rng(cfg.seed + round);
  RoundState state(ctx.bench, round);
  if (cfg.mode == SearchMode::kWarmup) {
    const std::vector<std::size_t> pool = warmup_pool(cfg, ctx, rng);
    if (pool.size() < cfg.warmup_steps) {
      throw ValueError("warm-up pool of " + std::to_string(pool.size()) + " is smaller than " +
                       std::to_string(cfg.warmup_steps) + " warm-up steps");
    }
    for (std::size_t i = 0; i < cfg.warmup_steps && state.count() < cfg.train_budget; ++i) state.train(pool[i]);
  }
  // Uniform draws without replacement among architectures not yet trained.
  std::vector<std::size_t> remaining;
  remaining.reserve(m);
  for (std::size_t i = 0; i < m; ++i) {
    if (!state.trained(i)) remaining.push_back(i);
  }
  std::size_t left = remaining.size();
  while (state.count() < cfg.train_budget) {
    const std::size_t j = rng.below(left);
    state.train(remaining[j]);
    remaining[j] = remaining[--left];
  }
  return state.take();
}

Trajectory aging_evolution_round(const SearchConfig& cfg, const SearchContext& ctx, std::size_t round) {
  const std::size_t m = ctx.bench.size();
  if (cfg.population_size > m) throw ValueError("population size exceeds the bench table");
  CounterRng rng(cfg.seed + round);
  RoundState state(ctx.bench, round);
  const Mutator mutator = ctx.mutator ? ctx.mutator : Mutator([](const Genotype& g, CounterRng& r) {
    return mutate(g, r);
  });
  const bool by_score = cfg.mode == SearchMode::kMove;
  if (by_score && !ctx.scorer) throw ValueError("move mode needs a scorer");

  std::vector<std::size_t> initial;
  if (cfg.mode == SearchMode::kPlain) {
    initial = sample_indices(m, cfg.population_size, rng);
  } else {
    initial = warmup_pool(cfg, ctx, rng);
    if (initial.size() < cfg.population_size) throw ValueError("warm-up pool smaller than the population");
    initial.resize(cfg.population_size);
  }

  struct Member {
    std::size_t row;
    double key;
  };
  const auto key_of = [&](std::size_t row) {
    return by_score ? ctx.scorer(ctx.bench.rows()[row].genotype) : ctx.bench.rows()[row].val_acc;
  };
  std::deque<Member> population;
  for (std::size_t row : initial) {
    if (state.count() == cfg.train_budget) break;
    state.train(row);
    population.push_back({row, key_of(row)});
  }

  while (state.count() < cfg.train_budget) {
    const std::vector<std::size_t> picks = sample_indices(population.size(), cfg.sample_size, rng);
    std::size_t parent = picks[0];
    for (std::size_t p : picks) {
      if (score_greater(population[p].key, population[parent].key)) parent = p;
    }
    const Genotype parent_g = Genotype::parse(ctx.bench.rows()[population[parent].row].genotype);
    std::size_t child = m;
    for (std::size_t attempt = 0; attempt < kMutationAttempts && child == m; ++attempt) {
      const Genotype g = mutator(parent_g, rng);
      if (const BenchRow* hit = ctx.bench.find(g.to_string())) child = ctx.bench.position(hit->genotype);
    }
    if (child == m) {
      throw ValueError("no mutation of " + parent_g.to_string() + " found in the bench table after " +
                       std::to_string(kMutationAttempts) + " attempts");
    }
    state.train(child);
    population.push_back({child, key_of(child)});
    population.pop_front();
  }
  return state.take();
}

std::vector<Trajectory> run_search(const SearchConfig& cfg, const SearchContext& ctx) {
  cfg.validate();
  if (ctx.bench.empty()) throw ValueError("search needs a non-empty bench table");
  if (cfg.mode != SearchMode::kPlain && !ctx.scorer) throw ValueError("warm-up and move modes need scores");
  std::vector<Trajectory> out(cfg.rounds);
  parallel_for(cfg.rounds, ctx.parallelism, [&](std::size_t r) {
    out[r] = cfg.algo == SearchAlgo::kRandomSearch ? random_search_round(cfg, ctx, r)
                                                   : aging_evolution_round(cfg, ctx, r);
  });
  return out;
}

void write_trajectories(std::ostream& out, const std::vector<Trajectory>& runs) {
  out << kTrajectoryHeader << '\n';
  for (const auto& t : runs) {
    for (const auto& s : t.steps) {
      out << t.round << ',' << s.step << ',' << s.genotype << ',' << format_double(s.val_acc) << ','
          << format_double(s.best_test_acc) << '\n';
    }
  }
}

std::vector<Trajectory> read_trajectories(std::istream& in, const std::string& source) {
  CsvReader reader(in, source);
  reader.expect_header(kTrajectoryHeader);
  std::vector<Trajectory> runs;
  while (auto rec = reader.next()) {
    rec->require_fields(5);
    const std::size_t round = rec->as_size(0, "round");
    if (runs.empty() || runs.back().round != round) {
      runs.emplace_back();
      runs.back().round = round;
    }
    runs.back().steps.push_back(
        {rec->as_size(1, "step"), rec->field(2), rec->as_double(3, "val_acc"), rec->as_double(4, "best_test_acc")});
  }
  return runs;
}

SearchSummary summarize(const std::vector<Trajectory>& runs) {
  std::vector<double> finals;
  finals.reserve(runs.size());
  for (const auto& t : runs) finals.push_back(t.final_best_test());
  return {runs.size(), mean_std(finals)};
}

SelectionResult n_sample_selection(std::size_t n, std::size_t runs, const BenchTable& bench,
                                   const ScoreTable& scores, std::uint64_t seed) {
  struct Candidate {
    std::size_t id;
    double score;
    const BenchRow* row;
  };
  std::vector<Candidate> valid;
  for (const auto& s : scores.rows) {
    if (!std::isfinite(s.epsilon)) continue;
    if (const BenchRow* b = bench.find(s.genotype)) valid.push_back({s.arch_id, s.epsilon, b});
  }
  std::stable_sort(valid.begin(), valid.end(), [](const Candidate& a, const Candidate& b) { return a.id < b.id; });
  if (n == 0) throw ValueError("selection sample size must be positive");
  if (runs == 0) throw ValueError("selection needs at least one run");
  if (valid.size() < n) {
    throw ValueError("only " + std::to_string(valid.size()) + " architectures have a valid score; cannot sample " +
                     std::to_string(n));
  }
  std::vector<double> keys(valid.size());
  for (std::size_t i = 0; i < valid.size(); ++i) keys[i] = valid[i].score;
  std::vector<double> val, test;
  for (std::size_t r = 0; r < runs; ++r) {
    CounterRng rng(seed + r);
    const std::vector<std::size_t> sample = sample_indices(valid.size(), n, rng);
    const Candidate& pick = valid[sample[argmax_random_ties(sample, keys, rng)]];
    val.push_back(pick.row->val_acc);
    test.push_back(pick.row->test_acc);
  }
  return {n, runs, valid.size(), mean_std(val), mean_std(test)};
}

}  // namespace epsinas
