#pragma once

#include <iosfwd>
#include <span>
#include <string>
#include <vector>

#include "epsinas/epsilon.hpp"

namespace epsinas {

struct ScoreRow {
  std::size_t arch_id;
  std::string genotype;
  double epsilon;  // NaN for invalid rows
  EpsilonStatus status;

  bool operator==(const ScoreRow& o) const noexcept;
};

/// CSV: header `arch_id,genotype,epsilon,status`; NaN as an empty field.
struct ScoreTable {
  std::vector<ScoreRow> rows;

  std::size_t nan_count() const noexcept;
  bool operator==(const ScoreTable&) const = default;

  void write_csv(std::ostream& out) const;
  void save(const std::string& path) const;
  static ScoreTable read_csv(std::istream& in);
  static ScoreTable load(const std::string& path);
};

/// Scores every genotype; row order follows the input regardless of
/// parallelism. arch_id is the genotype's enumeration index.
ScoreTable score_space(std::span<const Genotype> genotypes, const SkeletonConfig& cfg, const Tensor& batch,
                       WeightPair weights, std::size_t parallelism = 1,
                       ConstantScope scope = ConstantScope::kWeights);

/// Round-trip text form of a double ("%.17g"); NaN renders as "".
std::string format_double(double v);

}  // namespace epsinas
