#include "epsinas/cli.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <map>
#include <optional>
#include <ostream>
#include <set>
#include <sstream>
#include <thread>

#include "CLI11.hpp"
#include "epsinas/arch_space.hpp"
#include "epsinas/bench_db.hpp"
#include "epsinas/csv.hpp"
#include "epsinas/data_io.hpp"
#include "epsinas/epsilon.hpp"
#include "epsinas/error.hpp"
#include "epsinas/genotype.hpp"
#include "epsinas/rank_stats.hpp"
#include "epsinas/score_table.hpp"
#include "epsinas/search.hpp"
#include "json.hpp"
#include "manifest.hpp"

namespace epsinas::cli {

namespace {

// Independent stream so architecture sampling does not shift with the
// batch generator.
constexpr std::uint64_t kArchStream = 0xA5C4;

class UsageError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

template <class F>
auto as_usage(F&& f) -> decltype(f()) {
  try {
    return f();
  } catch (const ValueError& e) {
    throw UsageError(e.what());
  }
}

std::string fmt(double v) { return std::isfinite(v) ? format_double(v) : std::string(); }

template <class T>
std::string fmt(const std::optional<T>& v) {
  if (!v) return {};
  if constexpr (std::is_floating_point_v<T>) {
    return fmt(*v);
  } else {
    return std::to_string(*v);
  }
}

std::ofstream open_out(const std::string& path) {
  const auto parent = std::filesystem::path(path).parent_path();
  if (!parent.empty()) std::filesystem::create_directories(parent);
  std::ofstream out(path, std::ios::binary);
  if (!out) throw IoError("cannot open '" + path + "' for writing");
  return out;
}

void write_text(const std::string& path, const std::string& text) {
  auto out = open_out(path);
  out << text;
  if (!out) throw IoError("failed writing '" + path + "'");
}

std::size_t resolve_parallelism(const std::optional<std::size_t>& flag) {
  if (flag) {
    if (*flag == 0) throw UsageError("--parallelism must be at least 1");
    return *flag;
  }
  if (const char* env = std::getenv("EPSINAS_THREADS"); env != nullptr && *env != '\0') {
    char* end = nullptr;
    const long v = std::strtol(env, &end, 10);
    if (*end != '\0' || v < 1) throw UsageError("EPSINAS_THREADS must be a positive integer, got '" + std::string(env) + "'");
    return static_cast<std::size_t>(v);
  }
  return std::max(1u, std::thread::hardware_concurrency());
}

std::vector<double> parse_list(const std::string& text, const char* flag) {
  std::vector<double> out;
  for (const auto& item : split_csv_line(text)) {
    char* end = nullptr;
    const double v = std::strtod(item.c_str(), &end);
    if (item.empty() || *end != '\0') throw UsageError(std::string(flag) + ": not a number: '" + item + "'");
    out.push_back(v);
  }
  return out;
}

// ---------------------------------------------------------------------------
// Shared flag groups

struct SkeletonFlags {
  std::size_t cells_per_stack = 1;
  std::size_t stem_channels = 16;
  std::size_t num_classes = 10;

  void add(CLI::App* app) {
    app->add_option("--cells-per-stack", cells_per_stack, "Cells in each of the three stacks");
    app->add_option("--stem-channels", stem_channels, "Channels after the stem convolution");
    app->add_option("--num-classes", num_classes, "Width of the classifier output");
  }

  SkeletonConfig config(const Tensor& batch) const {
    SkeletonConfig cfg{stem_channels, cells_per_stack, num_classes, {batch.dim(1), batch.dim(2), batch.dim(3)}};
    as_usage([&] { cfg.validate(); });
    return cfg;
  }
};

struct DataFlags {
  std::string data = "synthetic:greyscale";
  std::size_t batch_size = 256;
  std::size_t offset = 0;

  void add(CLI::App* app) {
    app->add_option("--data", data,
                    "synthetic:{greyscale,random_normal,random_uniform,random_uniform_pos}, cifar10:PATH or file:PATH");
    app->add_option("--batch-size", batch_size, "Images per batch");
    app->add_option("--data-offset", offset, "First record read from a CIFAR-10 file");
  }
};

BatchKind synthetic_kind(const std::string& name) {
  static const std::map<std::string, BatchKind> aliases = {
      {"normal", BatchKind::kRandomNormal}, {"uniform", BatchKind::kRandomUniform},
      {"uniform_pos", BatchKind::kRandomUniformPos}};
  if (const auto it = aliases.find(name); it != aliases.end()) return it->second;
  const BatchKind k = as_usage([&] { return batch_kind_from_name(name); });
  if (k == BatchKind::kReal) throw UsageError("use cifar10:PATH for real images");
  return k;
}

struct DataSource {
  BatchSpec spec;
  std::optional<std::string> batch_file;
};

DataSource parse_data(const DataFlags& f, std::uint64_t seed) {
  const auto colon = f.data.find(':');
  if (colon == std::string::npos) throw UsageError("--data must look like synthetic:KIND, cifar10:PATH or file:PATH");
  const std::string scheme = f.data.substr(0, colon);
  const std::string arg = f.data.substr(colon + 1);
  DataSource src;
  src.spec.batch_size = f.batch_size;
  src.spec.seed = seed;
  src.spec.offset = f.offset;
  if (scheme == "synthetic") {
    src.spec.kind = synthetic_kind(arg);
  } else if (scheme == "cifar10") {
    src.spec.kind = BatchKind::kReal;
    src.spec.source_path = arg;
  } else if (scheme == "file") {
    src.batch_file = arg;
  } else {
    throw UsageError("unknown data source '" + scheme + "'");
  }
  if (!src.batch_file) as_usage([&] { src.spec.validate(); });
  return src;
}

Tensor load_data(const DataSource& src, std::vector<std::string>& inputs) {
  if (src.batch_file) {
    inputs.push_back(*src.batch_file);
    Tensor t = load_batch(*src.batch_file);
    if (t.rank() != 4) throw ValueError("batch file must hold a rank-4 tensor, got " + shape_to_string(t.shape()));
    return t;
  }
  if (src.spec.source_path) inputs.push_back(*src.spec.source_path);
  return make_batch(src.spec);
}

std::vector<Genotype> read_genotype_file(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("cannot open architecture list '" + path + "'");
  std::vector<Genotype> out;
  std::string line;
  std::size_t lineno = 0;
  std::optional<std::size_t> column;
  bool first = true;
  while (std::getline(in, line)) {
    ++lineno;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.empty() || line.front() == '#') continue;
    const auto fields = split_csv_line(line);
    if (first) {
      first = false;
      const auto it = std::find(fields.begin(), fields.end(), "genotype");
      if (it != fields.end()) {
        column = static_cast<std::size_t>(it - fields.begin());
        continue;
      }
    }
    if (column && *column >= fields.size()) throw IoError(path + " line " + std::to_string(lineno) + ": missing genotype");
    const std::string& text = column ? fields[*column] : line;
    try {
      out.push_back(Genotype::parse(text));
    } catch (const ParseError& e) {
      throw IoError(path + " line " + std::to_string(lineno) + ": " + e.what());
    }
  }
  return out;
}

struct ArchFlags {
  std::string archs = "all";

  void add(CLI::App* app) { app->add_option("--archs", archs, "all, sample:N or file:PATH (one genotype per line or CSV)"); }

  std::vector<Genotype> select(std::uint64_t seed, std::vector<std::string>& inputs) const {
    if (archs == "all") return enumerate_space();
    if (archs.rfind("sample:", 0) == 0) {
      const std::string n = archs.substr(7);
      std::size_t k = 0;
      const auto [ptr, ec] = std::from_chars(n.data(), n.data() + n.size(), k);
      if (n.empty() || ec != std::errc() || ptr != n.data() + n.size() || k == 0 || k > kSpaceSize) {
        throw UsageError("--archs sample:N needs 1 <= N <= " + std::to_string(kSpaceSize));
      }
      CounterRng rng(seed, kArchStream);
      return sample_space(k, rng);
    }
    if (archs.rfind("file:", 0) == 0) {
      inputs.push_back(archs.substr(5));
      return read_genotype_file(archs.substr(5));
    }
    throw UsageError("--archs must be all, sample:N or file:PATH");
  }
};

struct InitFlags {
  std::string init = "constant";
  std::string scope = "weights";

  void add(CLI::App* app) {
    app->add_option("--init", init,
                    "constant (the two weights below) or a random scheme: uniform, normal, kaiming_uniform, "
                    "kaiming_normal, orthogonal (seeds SEED and SEED+1)");
    app->add_option("--const-scope", scope, "weights: conv/linear weights only; all: also BN gain/bias and biases");
  }
};

// Scores every genotype with either the constant pair or two random seeds.
ScoreTable score_all(const std::vector<Genotype>& genotypes, const SkeletonConfig& cfg, const Tensor& batch,
                     const InitFlags& init, WeightPair weights, std::uint64_t seed, std::size_t parallelism) {
  const ConstantScope scope = as_usage([&] { return scope_from_name(init.scope); });
  if (init.init == "constant") return score_space(genotypes, cfg, batch, weights, parallelism, scope);
  const InitScheme scheme = as_usage([&] { return InitScheme::from_name(init.init); });
  check_batch(batch, cfg);
  ScoreTable table;
  table.rows.resize(genotypes.size());
  parallel_for(genotypes.size(), parallelism, [&](std::size_t i) {
    const EpsilonResult r = score_architecture_random(genotypes[i], cfg, batch, scheme, seed, seed + 1);
    table.rows[i] = {genotypes[i].index(), genotypes[i].to_string(), r.epsilon, r.status};
  });
  return table;
}

// ---------------------------------------------------------------------------
// Invocation context

struct Invocation {
  CLI::App* sub = nullptr;
  std::vector<std::string> argv;
  std::uint64_t seed = 0;
  std::optional<std::size_t> parallelism;
  std::vector<std::string> inputs;
  std::vector<std::string> outputs;

  void write_manifest(const std::string& primary_output) const {
    RunManifest m;
    m.subcommand = sub->get_name();
    m.argv = argv;
    for (const CLI::Option* opt : sub->get_options()) {
      if (opt->get_name() == "--help") continue;
      std::string value;
      if (opt->count() > 0) {
        for (const auto& r : opt->results()) value += (value.empty() ? "" : ",") + r;
      } else {
        value = opt->get_default_str();
      }
      m.flags.emplace_back(opt->get_name(), value);
    }
    m.seed = std::to_string(seed);
    m.inputs = inputs;
    m.outputs = outputs;
    m.write(manifest_path_for(primary_output));
  }
};

void add_common(CLI::App* app, Invocation& inv) {
  app->add_option("--seed", inv.seed, "Seed for every random choice");
  app->add_option("--parallelism", inv.parallelism,
                  "Worker threads (default: EPSINAS_THREADS, else hardware concurrency)");
}

WeightPair weight_pair(float w1, float w2) {
  const WeightPair w{w1, w2};
  as_usage([&] { w.validate(); });
  return w;
}

// ---------------------------------------------------------------------------
// Subcommands

struct ScoreCmd {
  ArchFlags archs;
  DataFlags data;
  SkeletonFlags skeleton;
  InitFlags init;
  float w1 = 1e-7f;
  float w2 = 1.0f;
  std::string out;

  void add(CLI::App* app) {
    archs.add(app);
    data.add(app);
    skeleton.add(app);
    init.add(app);
    app->add_option("--w1", w1, "First shared weight");
    app->add_option("--w2", w2, "Second shared weight");
    app->add_option("--out", out, "Score CSV")->required();
  }

  int run(Invocation& inv, std::ostream& os) {
    const std::size_t par = resolve_parallelism(inv.parallelism);
    const WeightPair w = weight_pair(w1, w2);
    const DataSource src = parse_data(data, inv.seed);
    const auto genotypes = archs.select(inv.seed, inv.inputs);
    const Tensor batch = load_data(src, inv.inputs);
    const SkeletonConfig cfg = skeleton.config(batch);
    const ScoreTable table = score_all(genotypes, cfg, batch, init, w, inv.seed, par);
    {
      auto f = open_out(out);
      table.write_csv(f);
    }
    inv.outputs.push_back(out);
    inv.write_manifest(out);
    os << "scored " << table.rows.size() << " architectures (" << table.nan_count() << " invalid) -> " << out << '\n';
    return kExitOk;
  }
};

struct CorrelateCmd {
  std::string scores;
  std::string bench;
  std::string acc = "val";
  RankOptions opts;
  std::string out;

  void add(CLI::App* app) {
    app->add_option("--scores", scores, "Score CSV")->required();
    app->add_option("--bench", bench, "Bench CSV")->required();
    app->add_option("--acc", acc, "Accuracy column: val or test");
    app->add_option("--top-frac", opts.top_frac, "Top fraction for slice correlations and overlap");
    app->add_option("--top-k", opts.top_k, "k for the top-k count");
    app->add_option("--top-k-frac", opts.top_k_frac, "Accuracy fraction for the top-k count");
    app->add_option("--out", out, "Report JSON (also printed)");
  }

  int run(Invocation& inv, std::ostream& os) {
    const AccuracyColumn column = as_usage([&] { return accuracy_column_from_name(acc); });
    as_usage([&] { opts.validate(); });
    inv.inputs = {scores, bench};
    const JoinedSeries s = join_tables(ScoreTable::load(scores), BenchTable::load(bench), column);
    const std::string text = RankReport::compute(s, opts).to_json();
    os << text;
    if (!out.empty()) {
      write_text(out, text);
      inv.outputs.push_back(out);
      inv.write_manifest(out);
    }
    return kExitOk;
  }
};

struct CorrelationRow {
  std::size_t n_valid;
  RankReport report;
};

CorrelationRow correlate_table(const ScoreTable& table, const BenchTable& bench, AccuracyColumn column,
                               const RankOptions& opts) {
  const JoinedSeries s = join_tables(table, bench, column);
  return {s.size(), RankReport::compute(s, opts)};
}

struct SweepWeightsCmd {
  ArchFlags archs;
  DataFlags data;
  SkeletonFlags skeleton;
  std::string scope = "weights";
  std::string grid = "1e-7,1e-6,1e-5,1e-4,1e-3,1e-2,1e-1,1";
  std::string bench;
  std::string acc = "val";
  RankOptions opts;
  std::string out;

  void add(CLI::App* app) {
    archs.add(app);
    data.add(app);
    skeleton.add(app);
    app->add_option("--const-scope", scope, "weights or all");
    app->add_option("--grid", grid, "Comma-separated weight values; every pair w1 < w2 is scored");
    app->add_option("--bench", bench, "Bench CSV")->required();
    app->add_option("--acc", acc, "Accuracy column: val or test");
    app->add_option("--top-frac", opts.top_frac, "Top fraction");
    app->add_option("--top-k", opts.top_k, "k for the top-k count");
    app->add_option("--top-k-frac", opts.top_k_frac, "Accuracy fraction for the top-k count");
    app->add_option("--out", out, "Long-format CSV")->required();
  }

  int run(Invocation& inv, std::ostream& os) {
    const std::size_t par = resolve_parallelism(inv.parallelism);
    const ConstantScope cs = as_usage([&] { return scope_from_name(scope); });
    const AccuracyColumn column = as_usage([&] { return accuracy_column_from_name(acc); });
    as_usage([&] { opts.validate(); });
    std::vector<double> values = parse_list(grid, "--grid");
    std::vector<float> weights;
    for (double v : values) {
      const auto f = static_cast<float>(v);
      if (!std::isfinite(f)) throw UsageError("--grid values must be finite");
      weights.push_back(f);
    }
    std::sort(weights.begin(), weights.end());
    if (std::adjacent_find(weights.begin(), weights.end()) != weights.end()) {
      throw UsageError("--grid contains duplicate values");
    }
    if (weights.size() < 2) throw UsageError("--grid needs at least two values");

    const DataSource src = parse_data(data, inv.seed);
    const auto genotypes = archs.select(inv.seed, inv.inputs);
    inv.inputs.push_back(bench);
    const BenchTable table = BenchTable::load(bench);
    const Tensor batch = load_data(src, inv.inputs);
    const SkeletonConfig cfg = skeleton.config(batch);
    check_batch(batch, cfg);

    std::vector<std::pair<std::size_t, std::size_t>> pairs;
    for (std::size_t i = 0; i < weights.size(); ++i) {
      for (std::size_t j = i + 1; j < weights.size(); ++j) pairs.emplace_back(i, j);
    }
    // One forward per (architecture, weight); every pair reuses them.
    std::vector<ScoreTable> tables(pairs.size());
    for (auto& t : tables) t.rows.resize(genotypes.size());
    parallel_for(genotypes.size(), par, [&](std::size_t a) {
      const Genotype& g = genotypes[a];
      const NetworkFactory factory = [&] { return build_network(g, cfg); };
      std::vector<Tensor> outputs;
      outputs.reserve(weights.size());
      for (float w : weights) outputs.push_back(constant_forward(factory, batch, w, cs));
      for (std::size_t p = 0; p < pairs.size(); ++p) {
        const EpsilonResult r = epsilon_from_raw(outputs[pairs[p].first].data(), outputs[pairs[p].second].data());
        tables[p].rows[a] = {g.index(), g.to_string(), r.epsilon, r.status};
      }
    });

    {
      auto f = open_out(out);
      f << "w1,w2,n_valid,rho_global,rho_top,tau_global,tau_top,top10pct,top64\n";
      for (std::size_t p = 0; p < pairs.size(); ++p) {
        const auto [n_valid, r] = correlate_table(tables[p], table, column, opts);
        f << format_double(weights[pairs[p].first]) << ',' << format_double(weights[pairs[p].second]) << ','
          << n_valid << ',' << fmt(r.spearman_global) << ',' << fmt(r.spearman_top) << ',' << fmt(r.kendall_global)
          << ',' << fmt(r.kendall_top) << ',' << fmt(r.top10_in_top10_pct) << ',' << fmt(r.top64_in_top5) << '\n';
      }
    }
    inv.outputs.push_back(out);
    inv.write_manifest(out);
    os << "swept " << pairs.size() << " weight pairs over " << genotypes.size() << " architectures -> " << out << '\n';
    return kExitOk;
  }
};

double quantile(std::vector<double> v, double q) {
  if (v.empty()) return std::nan("");
  std::sort(v.begin(), v.end());
  const double pos = q * static_cast<double>(v.size() - 1);
  const auto lo = static_cast<std::size_t>(std::floor(pos));
  const std::size_t hi = std::min(lo + 1, v.size() - 1);
  return v[lo] + (pos - static_cast<double>(lo)) * (v[hi] - v[lo]);
}

struct SweepBatchCmd {
  ArchFlags archs;
  DataFlags data;
  SkeletonFlags skeleton;
  InitFlags init;
  float w1 = 1e-7f;
  float w2 = 1.0f;
  std::string sizes = "8,16,32,64,128,256,512,1024";
  std::size_t batch_seeds = 10;
  std::string bench;
  std::string acc = "val";
  std::string out;

  void add(CLI::App* app) {
    archs.add(app);
    data.add(app);
    skeleton.add(app);
    init.add(app);
    app->add_option("--w1", w1, "First shared weight");
    app->add_option("--w2", w2, "Second shared weight");
    app->add_option("--sizes", sizes, "Comma-separated batch sizes");
    app->add_option("--batch-seeds", batch_seeds, "Random batches per size (seeds SEED..SEED+n-1)");
    app->add_option("--bench", bench, "Bench CSV")->required();
    app->add_option("--acc", acc, "Accuracy column: val or test");
    app->add_option("--out", out, "Long-format CSV")->required();
  }

  int run(Invocation& inv, std::ostream& os) {
    const std::size_t par = resolve_parallelism(inv.parallelism);
    const WeightPair w = weight_pair(w1, w2);
    const AccuracyColumn column = as_usage([&] { return accuracy_column_from_name(acc); });
    if (batch_seeds == 0) throw UsageError("--batch-seeds must be at least 1");
    std::vector<std::size_t> size_list;
    for (double v : parse_list(sizes, "--sizes")) {
      if (!(v >= 1.0) || v != std::floor(v)) throw UsageError("--sizes entries must be positive integers");
      size_list.push_back(static_cast<std::size_t>(v));
    }
    DataSource src = parse_data(data, inv.seed);
    if (src.batch_file) throw UsageError("sweep-batch draws its own batches; use synthetic:KIND or cifar10:PATH");
    const auto genotypes = archs.select(inv.seed, inv.inputs);
    inv.inputs.push_back(bench);
    if (src.spec.source_path) inv.inputs.push_back(*src.spec.source_path);
    const BenchTable table = BenchTable::load(bench);
    const std::size_t records = src.spec.source_path ? cifar10_record_count(*src.spec.source_path) : 0;

    auto f = open_out(out);
    f << "batch_size,batch_seed,n_valid,rho_global,tau_global,rho_q25,rho_median,rho_q75,tau_q25,tau_median,tau_q75\n";
    for (std::size_t size : size_list) {
      struct Run {
        std::uint64_t seed;
        std::size_t n_valid;
        std::optional<double> rho, tau;
      };
      std::vector<Run> runs;
      for (std::size_t s = 0; s < batch_seeds; ++s) {
        BatchSpec spec = src.spec;
        spec.batch_size = size;
        spec.seed = inv.seed + s;
        if (spec.kind == BatchKind::kReal) {
          if (size > records) throw UsageError("batch size " + std::to_string(size) + " exceeds the CIFAR-10 file");
          CounterRng rng(spec.seed);
          spec.offset = static_cast<std::size_t>(rng.below(records - size + 1));
        }
        const Tensor batch = make_batch(spec);
        const SkeletonConfig cfg = skeleton.config(batch);
        const ScoreTable scores = score_all(genotypes, cfg, batch, init, w, spec.seed, par);
        const auto [n_valid, r] = correlate_table(scores, table, column, RankOptions{});
        runs.push_back({spec.seed, n_valid, r.spearman_global, r.kendall_global});
      }
      std::vector<double> rho, tau;
      for (const auto& r : runs) {
        if (r.rho) rho.push_back(*r.rho);
        if (r.tau) tau.push_back(*r.tau);
      }
      const std::string stats = fmt(quantile(rho, 0.25)) + ',' + fmt(quantile(rho, 0.5)) + ',' +
                                fmt(quantile(rho, 0.75)) + ',' + fmt(quantile(tau, 0.25)) + ',' +
                                fmt(quantile(tau, 0.5)) + ',' + fmt(quantile(tau, 0.75));
      for (const auto& r : runs) {
        f << size << ',' << r.seed << ',' << r.n_valid << ',' << fmt(r.rho) << ',' << fmt(r.tau) << ',' << stats
          << '\n';
      }
    }
    f.close();
    inv.outputs.push_back(out);
    inv.write_manifest(out);
    os << "swept " << size_list.size() << " batch sizes x " << batch_seeds << " batches -> " << out << '\n';
    return kExitOk;
  }
};

struct SearchCmd {
  std::string algo = "rs";
  std::string mode = "plain";
  SearchConfig cfg;
  std::string bench;
  std::string scores;
  std::string out;
  std::string summary;

  void add(CLI::App* app) {
    app->add_option("--algo", algo, "rs (random search) or ae (aging evolution)");
    app->add_option("--mode", mode, "plain, warmup or move (ae only)");
    app->add_option("--budget", cfg.train_budget, "Architectures trained per round");
    app->add_option("--rounds", cfg.rounds, "Independent rounds");
    app->add_option("--pool-size", cfg.warmup_pool_size, "Warm-up pool size");
    app->add_option("--warmup-steps", cfg.warmup_steps, "Random-search steps taken from the pool");
    app->add_option("--population", cfg.population_size, "Aging-evolution population");
    app->add_option("--sample-size", cfg.sample_size, "Aging-evolution tournament size");
    app->add_option("--bench", bench, "Bench CSV")->required();
    app->add_option("--scores", scores, "Score CSV (required for warmup and move)");
    app->add_option("--out", out, "Trajectory CSV")->required();
    app->add_option("--summary", summary, "Summary JSON (default: next to --out)");
  }

  int run(Invocation& inv, std::ostream& os) {
    const std::size_t par = resolve_parallelism(inv.parallelism);
    cfg.algo = as_usage([&] { return algo_from_name(algo); });
    cfg.mode = as_usage([&] { return mode_from_name(mode); });
    cfg.seed = inv.seed;
    as_usage([&] { cfg.validate(); });
    if (cfg.mode != SearchMode::kPlain && scores.empty()) {
      throw UsageError("--mode " + mode + " needs --scores");
    }
    inv.inputs.push_back(bench);
    const BenchTable table = BenchTable::load(bench);
    SearchContext ctx{table, nullptr, nullptr, par};
    if (!scores.empty()) {
      inv.inputs.push_back(scores);
      ctx.scorer = table_scorer(ScoreTable::load(scores));
    }
    if (cfg.algo == SearchAlgo::kRandomSearch && cfg.train_budget > table.size()) {
      throw UsageError("--budget exceeds the " + std::to_string(table.size()) + " architectures in the bench table");
    }
    if (cfg.algo == SearchAlgo::kAgingEvolution && cfg.population_size > table.size()) {
      throw UsageError("--population exceeds the bench table");
    }
    if (cfg.algo == SearchAlgo::kRandomSearch && cfg.mode == SearchMode::kWarmup &&
        std::min(cfg.warmup_pool_size, table.size()) < cfg.warmup_steps) {
      throw UsageError("warm-up pool smaller than --warmup-steps");
    }
    const auto runs = run_search(cfg, ctx);
    {
      auto f = open_out(out);
      write_trajectories(f, runs);
    }
    const SearchSummary s = summarize(runs);
    nlohmann::ordered_json j;
    j["algo"] = algo_name(cfg.algo);
    j["mode"] = mode_name(cfg.mode);
    j["rounds"] = s.rounds;
    j["train_budget"] = cfg.train_budget;
    j["final_best_test_mean"] = s.final_best_test.mean;
    j["final_best_test_std"] = s.final_best_test.std;
    const std::string summary_path = summary.empty()
                                         ? std::filesystem::path(out).replace_extension(".summary.json").string()
                                         : summary;
    write_text(summary_path, j.dump(2) + "\n");
    inv.outputs = {out, summary_path};
    inv.write_manifest(out);
    os << algo_name(cfg.algo) << " (" << mode_name(cfg.mode) << "): final best test " << fmt(s.final_best_test.mean)
       << " +- " << fmt(s.final_best_test.std) << " over " << s.rounds << " rounds -> " << out << '\n';
    return kExitOk;
  }
};

struct SelectCmd {
  std::size_t n = 1000;
  std::size_t runs = 500;
  std::string bench;
  std::string scores;
  std::string out;

  void add(CLI::App* app) {
    app->add_option("--n", n, "Architectures sampled per run");
    app->add_option("--runs", runs, "Independent runs");
    app->add_option("--bench", bench, "Bench CSV")->required();
    app->add_option("--scores", scores, "Score CSV")->required();
    app->add_option("--out", out, "Summary JSON")->required();
  }

  int run(Invocation& inv, std::ostream& os) {
    if (n == 0) throw UsageError("--n must be at least 1");
    if (runs == 0) throw UsageError("--runs must be at least 1");
    inv.inputs = {bench, scores};
    const BenchTable table = BenchTable::load(bench);
    const ScoreTable st = ScoreTable::load(scores);
    const JoinedSeries joined = join_tables(st, table);
    if (joined.size() < n) {
      throw UsageError("--n " + std::to_string(n) + " exceeds the " + std::to_string(joined.size()) +
                       " architectures with a valid score");
    }
    const SelectionResult r = n_sample_selection(n, runs, table, st, inv.seed);
    const Baselines b = baselines(table, n, runs, inv.seed);
    nlohmann::ordered_json j;
    j["n"] = r.n;
    j["runs"] = r.runs;
    j["n_valid"] = r.n_valid;
    j["val_mean"] = r.val.mean;
    j["val_std"] = r.val.std;
    j["test_mean"] = r.test.mean;
    j["test_std"] = r.test.std;
    j["optimal_test_mean"] = b.optimal.mean;
    j["optimal_test_std"] = b.optimal.std;
    j["random_test_mean"] = b.random.mean;
    j["random_test_std"] = b.random.std;
    write_text(out, j.dump(2) + "\n");
    inv.outputs.push_back(out);
    inv.write_manifest(out);
    os << "N=" << n << ": val " << fmt(r.val.mean) << " +- " << fmt(r.val.std) << ", test " << fmt(r.test.mean)
       << " +- " << fmt(r.test.std) << " -> " << out << '\n';
    return kExitOk;
  }
};

struct GenDataCmd {
  std::string kind = "greyscale";
  std::size_t batch_size = 256;
  std::vector<std::size_t> shape{3, 32, 32};
  std::string source;
  std::size_t offset = 0;
  std::string out;

  void add(CLI::App* app) {
    app->add_option("--kind", kind, "greyscale, random_normal, random_uniform, random_uniform_pos or real");
    app->add_option("--batch-size", batch_size, "Images in the batch");
    app->add_option("--shape", shape, "Image shape C H W")->expected(3);
    app->add_option("--source", source, "CIFAR-10 binary file for --kind real");
    app->add_option("--offset", offset, "First CIFAR-10 record");
    app->add_option("--out", out, "Batch file")->required();
  }

  int run(Invocation& inv, std::ostream& os) {
    BatchSpec spec;
    spec.kind = kind == "real" ? BatchKind::kReal : synthetic_kind(kind);
    spec.batch_size = batch_size;
    spec.shape = {shape[0], shape[1], shape[2]};
    spec.seed = inv.seed;
    spec.offset = offset;
    if (!source.empty()) {
      spec.source_path = source;
      inv.inputs.push_back(source);
    }
    as_usage([&] { spec.validate(); });
    const Tensor batch = make_batch(spec);
    const auto parent = std::filesystem::path(out).parent_path();
    if (!parent.empty()) std::filesystem::create_directories(parent);
    save_batch(out, batch);
    inv.outputs.push_back(out);
    inv.write_manifest(out);
    os << "wrote " << shape_to_string(batch.shape()) << " batch -> " << out << '\n';
    return kExitOk;
  }
};

}  // namespace

int run(const std::vector<std::string>& args, std::ostream& out, std::ostream& err) {
  CLI::App app{"epsinas: trainless architecture scoring with the epsilon metric"};
  app.name("epsinas");
  app.option_defaults()->always_capture_default();
  app.require_subcommand(1, 1);

  Invocation inv;
  inv.argv = args;
  ScoreCmd score;
  CorrelateCmd correlate;
  SweepWeightsCmd sweep_weights;
  SweepBatchCmd sweep_batch;
  SearchCmd search;
  SelectCmd select;
  GenDataCmd gen_data;

  struct Entry {
    CLI::App* app;
    std::function<int(Invocation&, std::ostream&)> run;
  };
  std::vector<Entry> entries;
  auto reg = [&](const char* name, const char* help, auto& cmd) {
    CLI::App* sub = app.add_subcommand(name, help);
    add_common(sub, inv);
    cmd.add(sub);
    entries.push_back({sub, [&cmd](Invocation& i, std::ostream& o) { return cmd.run(i, o); }});
  };
  reg("score", "Score architectures and write a score CSV", score);
  reg("correlate", "Rank statistics of a score CSV against a bench CSV", correlate);
  reg("sweep-weights", "Correlations for every pair of a weight grid", sweep_weights);
  reg("sweep-batch", "Correlations across batch sizes and random batches", sweep_batch);
  reg("search", "Random search or aging evolution against a bench table", search);
  reg("select", "Best-of-N selection by score", select);
  reg("gen-data", "Generate an input batch file", gen_data);

  CLI::App* active = nullptr;
  try {
    std::vector<std::string> reversed(args.rbegin(), args.rend());
    app.parse(reversed);
  } catch (const CLI::ParseError& e) {
    const int code = e.get_exit_code();
    for (const auto& en : entries) {
      if (en.app->parsed()) active = en.app;
    }
    if (code == 0) {
      out << (active ? active->help() : app.help());
      return kExitOk;
    }
    err << "error: " << e.what() << "\n\n" << (active ? active->help() : app.help());
    return kExitUsage;
  }

  for (const auto& en : entries) {
    if (!en.app->parsed()) continue;
    inv.sub = en.app;
    try {
      return en.run(inv, out);
    } catch (const UsageError& e) {
      err << "error: " << e.what() << "\n\n" << en.app->help();
      return kExitUsage;
    } catch (const std::exception& e) {
      err << "error: " << e.what() << '\n';
      return kExitRuntime;
    } catch (...) {
      err << "error: unknown failure\n";
      return kExitRuntime;
    }
  }
  err << app.help();
  return kExitUsage;
}

}  // namespace epsinas::cli
