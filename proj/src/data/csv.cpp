#include "csv.hpp"

#include <charconv>
#include <cmath>
#include <istream>
#include <ostream>
#include <set>

#include "cropcast/error.hpp"

namespace cropcast::data::csv {

Reader::Reader(std::istream& in, std::string source) : in_(in), source_(std::move(source)) {}

bool Reader::next(std::vector<std::string>& fields) {
  std::string line;
  for (;;) {
    if (!std::getline(in_, line)) return false;
    ++line_;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (!line.empty()) break;
  }
  record_line_ = line_;
  fields.clear();
  std::string field;
  bool quoted = false;
  bool after_quote = false;
  for (std::size_t i = 0;; ++i) {
    if (i == line.size()) {
      if (!quoted) break;
      // Quoted field spans a line break.
      std::string more;
      if (!std::getline(in_, more)) {
        throw Error(Errc::invalid_data, source_ + ":" + std::to_string(record_line_) + ": unterminated quoted field");
      }
      ++line_;
      if (!more.empty() && more.back() == '\r') more.pop_back();
      field.push_back('\n');
      line = std::move(more);
      i = static_cast<std::size_t>(-1);
      continue;
    }
    const char c = line[i];
    if (quoted) {
      if (c == '"') {
        if (i + 1 < line.size() && line[i + 1] == '"') {
          field.push_back('"');
          ++i;
        } else {
          quoted = false;
          after_quote = true;
        }
      } else {
        field.push_back(c);
      }
    } else if (c == ',') {
      fields.push_back(std::move(field));
      field.clear();
      after_quote = false;
    } else if (c == '"' && field.empty() && !after_quote) {
      quoted = true;
    } else if (after_quote) {
      throw Error(Errc::invalid_data,
                  source_ + ":" + std::to_string(record_line_) + ": unexpected text after closing quote");
    } else {
      field.push_back(c);
    }
  }
  fields.push_back(std::move(field));
  return true;
}

Table::Table(std::istream& in, std::string source, std::vector<std::string> required,
             std::vector<std::string> optional)
    : reader_(in, std::move(source)) {
  std::vector<std::string> header;
  if (!reader_.next(header)) throw Error(Errc::invalid_data, reader_.source() + ": missing header row");
  if (!header.empty() && header[0].starts_with("\xEF\xBB\xBF")) header[0].erase(0, 3);
  const std::set<std::string> allowed_required(required.begin(), required.end());
  const std::set<std::string> allowed_optional(optional.begin(), optional.end());
  for (std::size_t i = 0; i < header.size(); ++i) {
    const auto& name = header[i];
    if (!allowed_required.contains(name) && !allowed_optional.contains(name)) {
      throw Error(Errc::invalid_data, reader_.source() + ":1: unknown column '" + name + "'");
    }
    if (!columns_.emplace(name, i).second) {
      throw Error(Errc::invalid_data, reader_.source() + ":1: duplicate column '" + name + "'");
    }
  }
  for (const auto& name : required) {
    if (!columns_.contains(name)) {
      throw Error(Errc::invalid_data, reader_.source() + ":1: missing column '" + name + "'");
    }
  }
}

bool Table::next() {
  if (!reader_.next(fields_)) return false;
  if (fields_.size() != columns_.size()) {
    fail_row("expected " + std::to_string(columns_.size()) + " fields, found " + std::to_string(fields_.size()));
  }
  return true;
}

bool Table::has_column(std::string_view name) const { return columns_.find(name) != columns_.end(); }

std::size_t Table::index(std::string_view column) const {
  const auto it = columns_.find(column);
  if (it == columns_.end()) throw Error(Errc::invalid_argument, "no column '" + std::string(column) + "'");
  return it->second;
}

const std::string& Table::text(std::string_view column) const {
  const auto& value = fields_[index(column)];
  if (value.empty()) fail(column, "value is empty");
  return value;
}

std::optional<std::string> Table::optional_text(std::string_view column) const {
  if (!has_column(column)) return std::nullopt;
  const auto& value = fields_[index(column)];
  if (value.empty()) return std::nullopt;
  return value;
}

namespace {

std::optional<double> parse_double(std::string_view s) {
  while (!s.empty() && s.front() == ' ') s.remove_prefix(1);
  while (!s.empty() && s.back() == ' ') s.remove_suffix(1);
  if (!s.empty() && s.front() == '+') s.remove_prefix(1);
  double v = 0.0;
  const auto [ptr, ec] = std::from_chars(s.data(), s.data() + s.size(), v);
  if (ec != std::errc() || ptr != s.data() + s.size() || s.empty() || !std::isfinite(v)) return std::nullopt;
  return v;
}

}  // namespace

double Table::number(std::string_view column) const {
  const auto& raw = text(column);
  const auto v = parse_double(raw);
  if (!v) fail(column, "'" + raw + "' is not a finite number");
  return *v;
}

std::optional<double> Table::optional_number(std::string_view column) const {
  const auto raw = optional_text(column);
  if (!raw) return std::nullopt;
  const auto v = parse_double(*raw);
  if (!v) fail(column, "'" + *raw + "' is not a finite number");
  return v;
}

int Table::integer(std::string_view column) const {
  const auto& raw = text(column);
  int v = 0;
  const auto [ptr, ec] = std::from_chars(raw.data(), raw.data() + raw.size(), v);
  if (ec != std::errc() || ptr != raw.data() + raw.size()) fail(column, "'" + raw + "' is not an integer");
  return v;
}

void Table::fail(std::string_view column, const std::string& message) const {
  throw Error(Errc::invalid_data,
              reader_.source() + ":" + std::to_string(line()) + ": field '" + std::string(column) + "': " + message);
}

void Table::fail_row(const std::string& message) const {
  throw Error(Errc::invalid_data, reader_.source() + ":" + std::to_string(line()) + ": " + message);
}

std::string quote(std::string_view field) {
  if (field.find_first_of(",\"\n\r") == std::string_view::npos) return std::string(field);
  std::string out = "\"";
  for (char c : field) {
    if (c == '"') out.push_back('"');
    out.push_back(c);
  }
  out.push_back('"');
  return out;
}

std::string format_number(double value) {
  char buffer[64];
  const auto [ptr, ec] = std::to_chars(buffer, buffer + sizeof buffer, value);
  if (ec != std::errc()) throw Error(Errc::invalid_argument, "cannot format number");
  return std::string(buffer, ptr);
}

void write_row(std::ostream& out, const std::vector<std::string>& fields) {
  for (std::size_t i = 0; i < fields.size(); ++i) {
    if (i > 0) out << ',';
    out << quote(fields[i]);
  }
  out << '\n';
}

}  // namespace cropcast::data::csv
