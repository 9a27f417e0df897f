#pragma once

#include <iosfwd>
#include <map>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

namespace cropcast::data::csv {

/// RFC 4180 style reader: comma separated, optional double-quote quoting with
/// "" escapes, LF or CRLF line ends.
class Reader {
 public:
  Reader(std::istream& in, std::string source);

  /// Reads the next record. Returns false at end of input. Blank lines are
  /// skipped.
  bool next(std::vector<std::string>& fields);
  /// Line number (1-based) where the last returned record started.
  int line() const noexcept { return record_line_; }
  const std::string& source() const noexcept { return source_; }

 private:
  std::istream& in_;
  std::string source_;
  int line_ = 0;
  int record_line_ = 0;
};

/// A header-indexed table reader that validates column names and converts
/// fields, naming source, line and column in every error.
class Table {
 public:
  Table(std::istream& in, std::string source, std::vector<std::string> required,
        std::vector<std::string> optional = {});

  bool next();
  int line() const noexcept { return reader_.line(); }

  bool has_column(std::string_view name) const;
  const std::string& text(std::string_view column) const;
  /// Empty cell or absent optional column -> nullopt.
  std::optional<std::string> optional_text(std::string_view column) const;
  double number(std::string_view column) const;
  std::optional<double> optional_number(std::string_view column) const;
  int integer(std::string_view column) const;

  [[noreturn]] void fail(std::string_view column, const std::string& message) const;
  [[noreturn]] void fail_row(const std::string& message) const;

 private:
  std::size_t index(std::string_view column) const;

  Reader reader_;
  std::map<std::string, std::size_t, std::less<>> columns_;
  std::vector<std::string> fields_;
};

/// Quotes a field only when it contains a comma, quote or line break.
std::string quote(std::string_view field);
/// Shortest decimal text that parses back to exactly `value`.
std::string format_number(double value);

/// Writes one record followed by '\n'.
void write_row(std::ostream& out, const std::vector<std::string>& fields);

}  // namespace cropcast::data::csv
