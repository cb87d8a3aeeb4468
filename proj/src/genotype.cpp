#include "epsinas/genotype.hpp"

#include <numeric>

#include "epsinas/error.hpp"

namespace epsinas {

namespace {

constexpr std::array<std::string_view, kNumOps> kOpNames = {"none", "skip_connect", "nor_conv_1x1", "nor_conv_3x3",
                                                           "avg_pool_3x3"};

class GenotypeParser {
 public:
  explicit GenotypeParser(std::string_view text) : text_(text) {}

  Genotype run() {
    std::array<CellOp, kNumEdges> ops{};
    std::size_t edge = 0;
    for (std::size_t node = 1; node < kCellNodes; ++node) {
      if (node > 1) expect('+');
      expect('|');
      for (std::size_t src = 0; src < node; ++src) {
        ops[edge++] = read_op();
        expect('~');
        read_source(src);
        expect('|');
      }
    }
    if (pos_ != text_.size()) throw ParseError("trailing characters after genotype", pos_);
    return Genotype(ops);
  }

 private:
  void expect(char c) {
    if (pos_ >= text_.size()) throw ParseError(std::string("expected '") + c + "' but input ended", pos_);
    if (text_[pos_] != c) {
      throw ParseError(std::string("expected '") + c + "' but found '" + text_[pos_] + "'", pos_);
    }
    ++pos_;
  }

  CellOp read_op() {
    const std::size_t start = pos_;
    while (pos_ < text_.size() && text_[pos_] != '~' && text_[pos_] != '|') ++pos_;
    const std::string_view name = text_.substr(start, pos_ - start);
    if (auto op = op_from_name(name)) return *op;
    throw ParseError("unknown op '" + std::string(name) + "'", start);
  }

  void read_source(std::size_t expected) {
    const std::size_t start = pos_;
    std::size_t value = 0;
    while (pos_ < text_.size() && text_[pos_] >= '0' && text_[pos_] <= '9') {
      value = value * 10 + static_cast<std::size_t>(text_[pos_] - '0');
      ++pos_;
    }
    if (pos_ == start) throw ParseError("expected source node index", start);
    if (value != expected) {
      throw ParseError("source node index " + std::to_string(value) + " should be " + std::to_string(expected),
                       start);
    }
  }

  std::string_view text_;
  std::size_t pos_ = 0;
};

}  // namespace

std::string_view op_name(CellOp op) noexcept { return kOpNames[static_cast<std::size_t>(op)]; }

std::optional<CellOp> op_from_name(std::string_view name) noexcept {
  for (std::size_t i = 0; i < kNumOps; ++i) {
    if (kOpNames[i] == name) return kAllOps[i];
  }
  return std::nullopt;
}

Genotype Genotype::parse(std::string_view text) { return GenotypeParser(text).run(); }

Genotype Genotype::from_index(std::size_t index) {
  if (index >= kSpaceSize) throw ValueError("genotype index " + std::to_string(index) + " out of range");
  std::array<CellOp, kNumEdges> ops{};
  for (std::size_t e = kNumEdges; e-- > 0;) {
    ops[e] = kAllOps[index % kNumOps];
    index /= kNumOps;
  }
  return Genotype(ops);
}

std::string Genotype::to_string() const {
  std::string out;
  std::size_t edge = 0;
  for (std::size_t node = 1; node < kCellNodes; ++node) {
    if (node > 1) out += '+';
    out += '|';
    for (std::size_t src = 0; src < node; ++src) {
      out += op_name(ops_[edge++]);
      out += '~';
      out += std::to_string(src);
      out += '|';
    }
  }
  return out;
}

std::size_t Genotype::index() const noexcept {
  std::size_t idx = 0;
  for (CellOp op : ops_) idx = idx * kNumOps + static_cast<std::size_t>(op);
  return idx;
}

std::vector<Genotype> enumerate_space() {
  std::vector<Genotype> out;
  out.reserve(kSpaceSize);
  for (std::size_t i = 0; i < kSpaceSize; ++i) out.push_back(Genotype::from_index(i));
  return out;
}

std::size_t edit_distance(const Genotype& a, const Genotype& b) noexcept {
  std::size_t d = 0;
  for (std::size_t e = 0; e < kNumEdges; ++e) d += a.ops()[e] != b.ops()[e] ? 1 : 0;
  return d;
}

Genotype mutate(const Genotype& g, CounterRng& rng) {
  auto ops = g.ops();
  const std::size_t edge = rng.below(kNumEdges);
  // Offset 1..4 from the current op index always lands on a different op.
  const std::size_t shift = 1 + rng.below(kNumOps - 1);
  ops[edge] = kAllOps[(static_cast<std::size_t>(ops[edge]) + shift) % kNumOps];
  return Genotype(ops);
}

std::vector<Genotype> neighbourhood(const Genotype& g) {
  std::vector<Genotype> out;
  out.reserve(kNumEdges * (kNumOps - 1));
  for (std::size_t e = 0; e < kNumEdges; ++e) {
    for (CellOp op : kAllOps) {
      if (op == g.ops()[e]) continue;
      auto ops = g.ops();
      ops[e] = op;
      out.emplace_back(ops);
    }
  }
  return out;
}

std::vector<Genotype> sample_space(std::size_t k, CounterRng& rng) {
  if (k > kSpaceSize) throw ValueError("cannot sample " + std::to_string(k) + " distinct genotypes");
  std::vector<std::size_t> idx(kSpaceSize);
  std::iota(idx.begin(), idx.end(), std::size_t{0});
  std::vector<Genotype> out;
  out.reserve(k);
  for (std::size_t i = 0; i < k; ++i) {
    const std::size_t j = i + rng.below(kSpaceSize - i);
    std::swap(idx[i], idx[j]);
    out.push_back(Genotype::from_index(idx[i]));
  }
  return out;
}

}  // namespace epsinas
