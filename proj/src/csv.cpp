#include "epsinas/csv.hpp"

#include <charconv>
#include <cmath>
#include <cstdlib>

#include "epsinas/error.hpp"

namespace epsinas {

std::vector<std::string> split_csv_line(std::string_view line) {
  std::vector<std::string> out;
  std::size_t start = 0;
  while (true) {
    const std::size_t comma = line.find(',', start);
    if (comma == std::string_view::npos) {
      out.emplace_back(line.substr(start));
      return out;
    }
    out.emplace_back(line.substr(start, comma - start));
    start = comma + 1;
  }
}

std::string CsvRecord::where() const { return source_ + " line " + std::to_string(line_); }

void CsvRecord::require_fields(std::size_t n) const {
  if (fields_.size() != n) {
    throw IoError(where() + ": expected " + std::to_string(n) + " fields, found " + std::to_string(fields_.size()));
  }
}

double CsvRecord::as_double(std::size_t i, std::string_view column) const {
  const std::string& s = field(i);
  char* end = nullptr;
  const double v = std::strtod(s.c_str(), &end);
  if (s.empty() || end != s.c_str() + s.size()) {
    throw IoError(where() + ": column " + std::string(column) + " is not a number: '" + s + "'");
  }
  return v;
}

std::size_t CsvRecord::as_size(std::size_t i, std::string_view column) const {
  const std::string& s = field(i);
  std::size_t v = 0;
  const auto [ptr, ec] = std::from_chars(s.data(), s.data() + s.size(), v);
  if (s.empty() || ec != std::errc() || ptr != s.data() + s.size()) {
    throw IoError(where() + ": column " + std::string(column) + " is not a non-negative integer: '" + s + "'");
  }
  return v;
}

std::optional<std::string> CsvReader::read_line() {
  std::string line;
  while (std::getline(in_, line)) {
    ++line_;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.empty()) continue;
    return line;
  }
  return std::nullopt;
}

void CsvReader::expect_header(std::string_view header) {
  while (true) {
    auto line = read_line();
    if (!line) throw IoError(source_ + ": missing header '" + std::string(header) + "'");
    if (line->front() == '#') {
      metadata_.push_back(line->substr(1));
      continue;
    }
    if (*line != header) {
      const auto want = split_csv_line(header);
      const auto got = split_csv_line(*line);
      std::size_t col = 0;
      while (col < want.size() && col < got.size() && want[col] == got[col]) ++col;
      const std::string expected = col < want.size() ? "'" + want[col] + "'" : "end of header";
      const std::string found = col < got.size() ? "'" + got[col] + "'" : "end of header";
      throw IoError(source_ + " line " + std::to_string(line_) + ": header column " + std::to_string(col + 1) +
                    " should be " + expected + ", found " + found + " (expected '" + std::string(header) + "')");
    }
    return;
  }
}

std::optional<CsvRecord> CsvReader::next() {
  auto line = read_line();
  if (!line) return std::nullopt;
  return CsvRecord(split_csv_line(*line), line_, source_);
}

}  // namespace epsinas
