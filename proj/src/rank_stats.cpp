#include "epsinas/rank_stats.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <unordered_map>

#include "json.hpp"

#include "epsinas/bench_db.hpp"
#include "epsinas/error.hpp"
#include "epsinas/score_table.hpp"

namespace epsinas {

namespace {

void check_pair(std::span<const double> x, std::span<const double> y) {
  if (x.size() != y.size()) {
    throw ValueError("correlation inputs differ in length: " + std::to_string(x.size()) + " vs " +
                     std::to_string(y.size()));
  }
  if (x.size() < 2) throw ValueError("correlation needs at least 2 pairs");
}

std::vector<double> average_ranks(std::span<const double> v) {
  std::vector<std::size_t> order(v.size());
  std::iota(order.begin(), order.end(), std::size_t{0});
  std::stable_sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) { return v[a] < v[b]; });
  std::vector<double> ranks(v.size());
  for (std::size_t i = 0; i < order.size();) {
    std::size_t j = i;
    while (j + 1 < order.size() && v[order[j + 1]] == v[order[i]]) ++j;
    const double r = 0.5 * static_cast<double>(i + j) + 1.0;
    for (std::size_t t = i; t <= j; ++t) ranks[order[t]] = r;
    i = j + 1;
  }
  return ranks;
}

std::optional<double> pearson(const std::vector<double>& x, const std::vector<double>& y) {
  const double n = static_cast<double>(x.size());
  const double mx = std::accumulate(x.begin(), x.end(), 0.0) / n;
  const double my = std::accumulate(y.begin(), y.end(), 0.0) / n;
  double sxy = 0.0, sxx = 0.0, syy = 0.0;
  for (std::size_t i = 0; i < x.size(); ++i) {
    const double dx = x[i] - mx;
    const double dy = y[i] - my;
    sxy += dx * dy;
    sxx += dx * dx;
    syy += dy * dy;
  }
  if (sxx <= 0.0 || syy <= 0.0) return std::nullopt;
  return std::clamp(sxy / std::sqrt(sxx * syy), -1.0, 1.0);
}

// Number of pairs inside runs of equal adjacent values.
template <class Eq>
std::int64_t tied_pairs(std::size_t n, Eq eq) {
  std::int64_t total = 0;
  std::int64_t run = 1;
  for (std::size_t i = 1; i <= n; ++i) {
    if (i < n && eq(i - 1, i)) {
      ++run;
    } else {
      total += run * (run - 1) / 2;
      run = 1;
    }
  }
  return total;
}

// Stable merge sort of v counting inversions (strictly greater before lesser).
std::int64_t merge_count(std::vector<double>& v, std::vector<double>& buf, std::size_t lo, std::size_t hi) {
  if (hi - lo < 2) return 0;
  const std::size_t mid = lo + (hi - lo) / 2;
  std::int64_t swaps = merge_count(v, buf, lo, mid) + merge_count(v, buf, mid, hi);
  std::size_t i = lo, j = mid, k = lo;
  while (i < mid && j < hi) {
    if (v[j] < v[i]) {
      swaps += static_cast<std::int64_t>(mid - i);
      buf[k++] = v[j++];
    } else {
      buf[k++] = v[i++];
    }
  }
  while (i < mid) buf[k++] = v[i++];
  while (j < hi) buf[k++] = v[j++];
  std::copy(buf.begin() + static_cast<std::ptrdiff_t>(lo), buf.begin() + static_cast<std::ptrdiff_t>(hi),
            v.begin() + static_cast<std::ptrdiff_t>(lo));
  return swaps;
}

std::vector<std::size_t> default_ids(std::size_t n) {
  std::vector<std::size_t> ids(n);
  std::iota(ids.begin(), ids.end(), std::size_t{0});
  return ids;
}

void check_frac(double frac, const char* what) {
  if (!(frac > 0.0 && frac <= 1.0)) throw ValueError(std::string(what) + " must be in (0, 1]");
}

}  // namespace

std::string_view accuracy_column_name(AccuracyColumn c) noexcept { return c == AccuracyColumn::kVal ? "val" : "test"; }

AccuracyColumn accuracy_column_from_name(std::string_view name) {
  if (name == "val") return AccuracyColumn::kVal;
  if (name == "test") return AccuracyColumn::kTest;
  throw ValueError("unknown accuracy column '" + std::string(name) + "' (expected val or test)");
}

JoinedSeries make_series(std::vector<double> scores, std::vector<double> accuracies,
                         std::vector<std::size_t> arch_ids) {
  if (scores.size() != accuracies.size()) throw ValueError("series columns differ in length");
  if (arch_ids.empty()) arch_ids = default_ids(scores.size());
  if (arch_ids.size() != scores.size()) throw ValueError("series ids differ in length");
  for (std::size_t i = 0; i < scores.size(); ++i) {
    if (!std::isfinite(scores[i]) || !std::isfinite(accuracies[i])) throw ValueError("series entries must be finite");
  }
  JoinedSeries s;
  s.scores = std::move(scores);
  s.accuracies = std::move(accuracies);
  s.arch_ids = std::move(arch_ids);
  return s;
}

JoinedSeries join_tables(const ScoreTable& scores, const BenchTable& bench, AccuracyColumn column) {
  std::unordered_map<std::string, std::size_t> seen;
  std::vector<std::string> duplicates;
  for (const auto& row : scores.rows) {
    if (++seen[row.genotype] == 2) duplicates.push_back(row.genotype);
  }
  if (!duplicates.empty()) {
    std::string msg = "duplicate genotype keys in score table:";
    for (const auto& d : duplicates) msg += " " + d;
    throw ValueError(msg);
  }

  struct Entry {
    std::size_t id;
    double score;
    double acc;
  };
  std::vector<Entry> kept;
  JoinedSeries out;
  for (const auto& row : scores.rows) {
    const BenchRow* b = bench.find(row.genotype);
    if (b == nullptr) continue;
    const double acc = column == AccuracyColumn::kVal ? b->val_acc : b->test_acc;
    if (!std::isfinite(row.epsilon) || !std::isfinite(acc)) {
      ++out.n_dropped;
      continue;
    }
    kept.push_back({row.arch_id, row.epsilon, acc});
  }
  std::stable_sort(kept.begin(), kept.end(), [](const Entry& a, const Entry& b) { return a.id < b.id; });
  for (const auto& e : kept) {
    out.arch_ids.push_back(e.id);
    out.scores.push_back(e.score);
    out.accuracies.push_back(e.acc);
  }
  return out;
}

std::optional<double> spearman(std::span<const double> x, std::span<const double> y) {
  check_pair(x, y);
  return pearson(average_ranks(x), average_ranks(y));
}

std::optional<double> kendall(std::span<const double> x, std::span<const double> y) {
  check_pair(x, y);
  const std::size_t n = x.size();
  std::vector<std::size_t> order(n);
  std::iota(order.begin(), order.end(), std::size_t{0});
  std::sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) {
    return x[a] != x[b] ? x[a] < x[b] : y[a] < y[b];
  });
  std::vector<double> ys(n);
  for (std::size_t i = 0; i < n; ++i) ys[i] = y[order[i]];

  const auto ni = static_cast<std::int64_t>(n);
  const std::int64_t n0 = ni * (ni - 1) / 2;
  const std::int64_t tx = tied_pairs(n, [&](std::size_t a, std::size_t b) { return x[order[a]] == x[order[b]]; });
  const std::int64_t txy = tied_pairs(n, [&](std::size_t a, std::size_t b) {
    return x[order[a]] == x[order[b]] && ys[a] == ys[b];
  });
  std::vector<double> buf(n);
  const std::int64_t swaps = merge_count(ys, buf, 0, n);
  const std::int64_t ty = tied_pairs(n, [&](std::size_t a, std::size_t b) { return ys[a] == ys[b]; });

  const std::int64_t concordant_minus_discordant = n0 - tx - ty + txy - 2 * swaps;
  const std::int64_t fx = n0 - tx;
  const std::int64_t fy = n0 - ty;
  if (fx == 0 || fy == 0) return std::nullopt;
  return static_cast<double>(concordant_minus_discordant) /
         std::sqrt(static_cast<double>(fx) * static_cast<double>(fy));
}

std::size_t top_count(std::size_t n, double frac) {
  check_frac(frac, "top fraction");
  const double target = frac * static_cast<double>(n);
  // Guard against products like 0.1 * 100 landing a hair above an integer.
  const double tol = 1e-9 * std::max(1.0, target);
  if (target < 1.0 - tol) return 0;
  const double m = std::ceil(target - tol);
  return std::min(n, static_cast<std::size_t>(m));
}

std::vector<std::size_t> top_indices(std::span<const double> values, std::span<const std::size_t> ids,
                                     std::size_t k) {
  if (values.size() != ids.size()) throw ValueError("top selection ids differ in length");
  k = std::min(k, values.size());
  std::vector<std::size_t> idx(values.size());
  std::iota(idx.begin(), idx.end(), std::size_t{0});
  const auto better = [&](std::size_t a, std::size_t b) {
    return values[a] != values[b] ? values[a] > values[b] : ids[a] < ids[b];
  };
  std::partial_sort(idx.begin(), idx.begin() + static_cast<std::ptrdiff_t>(k), idx.end(), better);
  idx.resize(k);
  return idx;
}

std::optional<double> top_fraction_overlap(const JoinedSeries& s, double frac) {
  const std::size_t m = top_count(s.size(), frac);
  if (m == 0) return std::nullopt;
  std::vector<std::size_t> a = top_indices(s.scores, s.arch_ids, m);
  std::vector<std::size_t> b = top_indices(s.accuracies, s.arch_ids, m);
  std::sort(a.begin(), a.end());
  std::sort(b.begin(), b.end());
  std::vector<std::size_t> both;
  std::set_intersection(a.begin(), a.end(), b.begin(), b.end(), std::back_inserter(both));
  return 100.0 * static_cast<double>(both.size()) / static_cast<double>(m);
}

std::optional<std::size_t> top_k_in_top_fraction(const JoinedSeries& s, std::size_t k, double frac) {
  if (k == 0) throw ValueError("top-k needs k >= 1");
  if (s.size() < k) return std::nullopt;
  const std::size_t m = top_count(s.size(), frac);
  if (m == 0) return std::nullopt;
  std::vector<std::size_t> a = top_indices(s.scores, s.arch_ids, k);
  std::vector<std::size_t> b = top_indices(s.accuracies, s.arch_ids, m);
  std::sort(a.begin(), a.end());
  std::sort(b.begin(), b.end());
  std::vector<std::size_t> both;
  std::set_intersection(a.begin(), a.end(), b.begin(), b.end(), std::back_inserter(both));
  return both.size();
}

SliceCorrelations top_slice_correlations(const JoinedSeries& s, double frac) {
  const std::size_t m = top_count(s.size(), frac);
  if (m < 2) return {};
  std::vector<std::size_t> idx = top_indices(s.accuracies, s.arch_ids, m);
  std::sort(idx.begin(), idx.end());
  std::vector<double> x, y;
  for (std::size_t i : idx) {
    x.push_back(s.scores[i]);
    y.push_back(s.accuracies[i]);
  }
  return {spearman(x, y), kendall(x, y)};
}

void RankOptions::validate() const {
  check_frac(top_frac, "--top-frac");
  check_frac(top_k_frac, "--top-k-frac");
  if (top_k == 0) throw ValueError("--top-k must be at least 1");
}

RankReport RankReport::compute(const JoinedSeries& s, const RankOptions& opts) {
  opts.validate();
  RankReport r;
  r.n_valid = s.size();
  r.n_dropped = s.n_dropped;
  r.n_total = s.n_total();
  if (s.size() >= 2) {
    r.spearman_global = spearman(s.scores, s.accuracies);
    r.kendall_global = kendall(s.scores, s.accuracies);
  }
  const SliceCorrelations top = top_slice_correlations(s, opts.top_frac);
  r.spearman_top = top.spearman;
  r.kendall_top = top.kendall;
  r.top10_in_top10_pct = top_fraction_overlap(s, opts.top_frac);
  r.top64_in_top5 = top_k_in_top_fraction(s, opts.top_k, opts.top_k_frac);
  return r;
}

namespace {

template <class T>
nlohmann::ordered_json opt_json(const std::optional<T>& v) {
  return v ? nlohmann::ordered_json(*v) : nlohmann::ordered_json(nullptr);
}

template <class T>
std::optional<T> opt_from(const nlohmann::json& j, const char* key) {
  const auto& v = j.at(key);
  if (v.is_null()) return std::nullopt;
  return v.get<T>();
}

}  // namespace

std::string RankReport::to_json() const {
  nlohmann::ordered_json j;
  j["spearman_global"] = opt_json(spearman_global);
  j["spearman_top"] = opt_json(spearman_top);
  j["kendall_global"] = opt_json(kendall_global);
  j["kendall_top"] = opt_json(kendall_top);
  j["top10_in_top10_pct"] = opt_json(top10_in_top10_pct);
  j["top64_in_top5"] = opt_json(top64_in_top5);
  j["n_total"] = n_total;
  j["n_valid"] = n_valid;
  j["n_dropped"] = n_dropped;
  return j.dump(2) + "\n";
}

RankReport RankReport::from_json(const std::string& text) {
  try {
    const auto j = nlohmann::json::parse(text);
    RankReport r;
    r.spearman_global = opt_from<double>(j, "spearman_global");
    r.spearman_top = opt_from<double>(j, "spearman_top");
    r.kendall_global = opt_from<double>(j, "kendall_global");
    r.kendall_top = opt_from<double>(j, "kendall_top");
    r.top10_in_top10_pct = opt_from<double>(j, "top10_in_top10_pct");
    r.top64_in_top5 = opt_from<std::size_t>(j, "top64_in_top5");
    r.n_total = j.at("n_total").get<std::size_t>();
    r.n_valid = j.at("n_valid").get<std::size_t>();
    r.n_dropped = j.at("n_dropped").get<std::size_t>();
    return r;
  } catch (const nlohmann::json::exception& e) {
    throw IoError(std::string("malformed rank report: ") + e.what());
  }
}

}  // namespace epsinas
