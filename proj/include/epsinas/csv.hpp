#pragma once

#include <cstdint>
#include <istream>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

namespace epsinas {

/// One data line of a comma-separated file (no quoting).
class CsvRecord {
 public:
  CsvRecord(std::vector<std::string> fields, std::size_t line, std::string_view source)
      : fields_(std::move(fields)), line_(line), source_(source) {}

  std::size_t size() const noexcept { return fields_.size(); }
  const std::string& field(std::size_t i) const { return fields_.at(i); }
  std::size_t line() const noexcept { return line_; }
  /// "<source> line N", for error messages.
  std::string where() const;

  void require_fields(std::size_t n) const;
  double as_double(std::size_t i, std::string_view column) const;
  std::size_t as_size(std::size_t i, std::string_view column) const;

 private:
  std::vector<std::string> fields_;
  std::size_t line_;
  std::string source_;
};

/// Line reader for the project's CSV contracts. Leading `#` lines are
/// collected as metadata; blank lines are skipped. All failures throw
/// IoError with the line number.
class CsvReader {
 public:
  CsvReader(std::istream& in, std::string source) : in_(in), source_(std::move(source)) {}

  void expect_header(std::string_view header);
  std::optional<CsvRecord> next();
  const std::vector<std::string>& metadata() const noexcept { return metadata_; }

 private:
  std::optional<std::string> read_line();

  std::istream& in_;
  std::string source_;
  std::size_t line_ = 0;
  std::vector<std::string> metadata_;
};

std::vector<std::string> split_csv_line(std::string_view line);

}  // namespace epsinas
