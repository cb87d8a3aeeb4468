#pragma once

#include <array>
#include <compare>
#include <cstdint>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "epsinas/rng.hpp"

namespace epsinas {

/// Candidate operations on a cell edge, in canonical order.
enum class CellOp : std::uint8_t { kNone = 0, kSkipConnect, kConv1x1, kConv3x3, kAvgPool3x3 };

inline constexpr std::size_t kNumOps = 5;
inline constexpr std::size_t kNumEdges = 6;
inline constexpr std::size_t kCellNodes = 4;
inline constexpr std::size_t kSpaceSize = 15625;  // 5^6

inline constexpr std::array<CellOp, kNumOps> kAllOps = {CellOp::kNone, CellOp::kSkipConnect, CellOp::kConv1x1,
                                                       CellOp::kConv3x3, CellOp::kAvgPool3x3};

std::string_view op_name(CellOp op) noexcept;
std::optional<CellOp> op_from_name(std::string_view name) noexcept;

struct Edge {
  std::size_t to;
  std::size_t from;
};

// Edge order: 1<-0; 2<-0, 2<-1; 3<-0, 3<-1, 3<-2. Node 0 is the cell input
// and node 3 the cell output.
inline constexpr std::array<Edge, kNumEdges> kEdges = {
    Edge{1, 0}, Edge{2, 0}, Edge{2, 1}, Edge{3, 0}, Edge{3, 1}, Edge{3, 2}};

/// One cell architecture: an operation per DAG edge.
class Genotype {
 public:
  Genotype() = default;
  explicit Genotype(const std::array<CellOp, kNumEdges>& ops) noexcept : ops_(ops) {}

  /// Parses "|op~0|+|op~0|op~1|+|op~0|op~1|op~2|". Throws ParseError.
  static Genotype parse(std::string_view text);
  /// Inverse of index(); index must be below kSpaceSize.
  static Genotype from_index(std::size_t index);

  std::string to_string() const;
  /// Position in enumerate_space() order (edge 0 is the most significant digit).
  std::size_t index() const noexcept;

  CellOp op(std::size_t edge) const { return ops_.at(edge); }
  const std::array<CellOp, kNumEdges>& ops() const noexcept { return ops_; }

  auto operator<=>(const Genotype&) const = default;

 private:
  std::array<CellOp, kNumEdges> ops_{};
};

/// All 15,625 genotypes in lexicographic order of canonical op indices.
std::vector<Genotype> enumerate_space();

std::size_t edit_distance(const Genotype& a, const Genotype& b) noexcept;

/// Changes exactly one uniformly chosen edge to one of its four other ops.
Genotype mutate(const Genotype& g, CounterRng& rng);

/// The 24 genotypes at edit distance 1.
std::vector<Genotype> neighbourhood(const Genotype& g);

/// k distinct genotypes drawn uniformly from the space, in draw order.
std::vector<Genotype> sample_space(std::size_t k, CounterRng& rng);

}  // namespace epsinas
