#include "epsinas/score_table.hpp"

#include <cmath>
#include <cstdio>
#include <fstream>
#include <istream>
#include <limits>
#include <ostream>

#include "epsinas/csv.hpp"
#include "epsinas/error.hpp"

namespace epsinas {

namespace {
constexpr std::string_view kHeader = "arch_id,genotype,epsilon,status";
}

bool ScoreRow::operator==(const ScoreRow& o) const noexcept {
  const bool same_eps = (std::isnan(epsilon) && std::isnan(o.epsilon)) || epsilon == o.epsilon;
  return arch_id == o.arch_id && genotype == o.genotype && same_eps && status == o.status;
}

std::string format_double(double v) {
  if (std::isnan(v)) return "";
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

std::size_t ScoreTable::nan_count() const noexcept {
  std::size_t n = 0;
  for (const auto& r : rows) n += std::isnan(r.epsilon) ? 1 : 0;
  return n;
}

void ScoreTable::write_csv(std::ostream& out) const {
  out << kHeader << '\n';
  for (const auto& r : rows) {
    out << r.arch_id << ',' << r.genotype << ',' << format_double(r.epsilon) << ',' << status_name(r.status) << '\n';
  }
}

void ScoreTable::save(const std::string& path) const {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw IoError("cannot open '" + path + "' for writing");
  write_csv(out);
  if (!out) throw IoError("failed writing '" + path + "'");
}

ScoreTable ScoreTable::read_csv(std::istream& in) {
  CsvReader reader(in, "score table");
  reader.expect_header(kHeader);
  ScoreTable table;
  while (auto rec = reader.next()) {
    rec->require_fields(4);
    ScoreRow row;
    row.arch_id = rec->as_size(0, "arch_id");
    row.genotype = rec->field(1);
    row.epsilon = rec->field(2).empty() ? std::numeric_limits<double>::quiet_NaN() : rec->as_double(2, "epsilon");
    try {
      row.status = status_from_name(rec->field(3));
    } catch (const ValueError& e) {
      throw IoError(rec->where() + ": " + e.what());
    }
    table.rows.push_back(std::move(row));
  }
  return table;
}

ScoreTable ScoreTable::load(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("cannot open score table '" + path + "'");
  return read_csv(in);
}

ScoreTable score_space(std::span<const Genotype> genotypes, const SkeletonConfig& cfg, const Tensor& batch,
                       WeightPair weights, std::size_t parallelism, ConstantScope scope) {
  check_batch(batch, cfg);
  ScoreTable table;
  table.rows.resize(genotypes.size());
  parallel_for(genotypes.size(), parallelism, [&](std::size_t i) {
    const EpsilonResult r = score_architecture(genotypes[i], cfg, batch, weights, scope);
    table.rows[i] = ScoreRow{genotypes[i].index(), genotypes[i].to_string(), r.epsilon, r.status};
  });
  return table;
}

}  // namespace epsinas
