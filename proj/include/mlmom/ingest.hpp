#pragma once

// Long-format CSV ingestion. Two-level files have the header
// `group_id,value`, three-level files `group_id,subgroup_id,value`.
// Identifiers are opaque strings mapped to dense indices in order of first
// appearance; rows may come in any order. Fields are not quoted.

#include <charconv>
#include <cstddef>
#include <fstream>
#include <istream>
#include <map>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

#include "mlmom/design.hpp"
#include "mlmom/error.hpp"

namespace mlmom {

struct LabeledTwoLevel {
  std::vector<std::string> group_ids;
  TwoLevelDataset data;
};

struct LabeledThreeLevel {
  std::vector<std::string> group_ids;
  std::vector<std::vector<std::string>> subgroup_ids;  // per group
  ThreeLevelDataset data;
};

namespace detail {

inline std::vector<std::string_view> split_fields(std::string_view line) {
  std::vector<std::string_view> fields;
  std::size_t start = 0;
  while (true) {
    const std::size_t comma = line.find(',', start);
    fields.push_back(line.substr(start, comma == std::string_view::npos ? comma : comma - start));
    if (comma == std::string_view::npos) break;
    start = comma + 1;
  }
  return fields;
}

inline std::string_view trim_field(std::string_view s) {
  while (!s.empty() && (s.front() == ' ' || s.front() == '\t')) s.remove_prefix(1);
  while (!s.empty() && (s.back() == ' ' || s.back() == '\t')) s.remove_suffix(1);
  return s;
}

/// Reads lines, stripping a UTF-8 byte order mark and trailing CR. Blank
/// lines are skipped; `line_number` counts every physical line.
class LineReader {
 public:
  explicit LineReader(std::istream& in) : in_(in) {}

  bool next(std::string& line) {
    while (std::getline(in_, line)) {
      ++line_number_;
      if (line_number_ == 1 && line.starts_with("\xEF\xBB\xBF")) line.erase(0, 3);
      if (!line.empty() && line.back() == '\r') line.pop_back();
      if (trim_field(line).empty()) continue;
      return true;
    }
    return false;
  }

  [[nodiscard]] std::size_t line_number() const noexcept { return line_number_; }

 private:
  std::istream& in_;
  std::size_t line_number_ = 0;
};

inline void expect_header(LineReader& reader, const std::vector<std::string_view>& names) {
  std::string line;
  std::string wanted;
  for (const auto n : names) wanted += (wanted.empty() ? "" : ",") + std::string(n);
  if (!reader.next(line)) {
    throw Error(ErrorCode::missing_header, "input is empty; expected header '" + wanted + "'");
  }
  const auto fields = split_fields(line);
  bool ok = fields.size() == names.size();
  for (std::size_t c = 0; ok && c < names.size(); ++c) ok = trim_field(fields[c]) == names[c];
  if (!ok) {
    throw Error(ErrorCode::missing_header,
                "first line must be '" + wanted + "', found '" + line + "'",
                {{"row", reader.line_number()}});
  }
}

inline std::vector<std::string_view> row_fields(const std::string& line, std::size_t expected,
                                                std::size_t row) {
  auto fields = split_fields(line);
  if (fields.size() != expected) {
    throw Error(ErrorCode::bad_column_count,
                "row " + std::to_string(row) + " has " + std::to_string(fields.size()) +
                    " columns, expected " + std::to_string(expected),
                {{"row", row}});
  }
  for (auto& f : fields) f = trim_field(f);
  return fields;
}

/// Accepts anything std::from_chars reads as a double, consuming the whole
/// field. Non-finite values are rejected later by validation.
inline double parse_value(std::string_view text, std::size_t row, std::size_t column) {
  double value = 0.0;
  const char* first = text.data();
  const char* last = first + text.size();
  if (first != last && *first == '+') ++first;
  const auto [end, ec] = std::from_chars(first, last, value);
  if (text.empty() || ec != std::errc() || end != last) {
    throw Error(ErrorCode::unparseable_value,
                "row " + std::to_string(row) + ", column " + std::to_string(column) +
                    ": cannot parse '" + std::string(text) + "' as a number",
                {{"row", row}, {"column", column}});
  }
  return value;
}

inline void require_id(std::string_view id, std::size_t row, std::size_t column) {
  if (id.empty()) {
    throw Error(ErrorCode::unparseable_value,
                "row " + std::to_string(row) + ", column " + std::to_string(column) +
                    ": identifier is empty",
                {{"row", row}, {"column", column}});
  }
}

}  // namespace detail

/// Parses without validating the design; see validate_two_level.
inline LabeledTwoLevel read_two_level_csv(std::istream& in) {
  detail::LineReader reader(in);
  detail::expect_header(reader, {"group_id", "value"});
  LabeledTwoLevel out;
  std::map<std::string, std::size_t, std::less<>> index;
  std::string line;
  while (reader.next(line)) {
    const std::size_t row = reader.line_number();
    const auto fields = detail::row_fields(line, 2, row);
    detail::require_id(fields[0], row, 1);
    const double value = detail::parse_value(fields[1], row, 2);
    auto it = index.find(fields[0]);
    if (it == index.end()) {
      it = index.emplace(std::string(fields[0]), out.group_ids.size()).first;
      out.group_ids.emplace_back(fields[0]);
      out.data.groups.emplace_back();
    }
    out.data.groups[it->second].push_back(value);
  }
  return out;
}

inline LabeledThreeLevel read_three_level_csv(std::istream& in) {
  detail::LineReader reader(in);
  detail::expect_header(reader, {"group_id", "subgroup_id", "value"});
  LabeledThreeLevel out;
  std::map<std::string, std::size_t, std::less<>> group_index;
  std::vector<std::map<std::string, std::size_t, std::less<>>> subgroup_index;
  std::string line;
  while (reader.next(line)) {
    const std::size_t row = reader.line_number();
    const auto fields = detail::row_fields(line, 3, row);
    detail::require_id(fields[0], row, 1);
    detail::require_id(fields[1], row, 2);
    const double value = detail::parse_value(fields[2], row, 3);
    auto g = group_index.find(fields[0]);
    if (g == group_index.end()) {
      g = group_index.emplace(std::string(fields[0]), out.group_ids.size()).first;
      out.group_ids.emplace_back(fields[0]);
      out.subgroup_ids.emplace_back();
      out.data.groups.emplace_back();
      subgroup_index.emplace_back();
    }
    const std::size_t i = g->second;
    auto s = subgroup_index[i].find(fields[1]);
    if (s == subgroup_index[i].end()) {
      s = subgroup_index[i].emplace(std::string(fields[1]), out.subgroup_ids[i].size()).first;
      out.subgroup_ids[i].emplace_back(fields[1]);
      out.data.groups[i].emplace_back();
    }
    out.data.groups[i][s->second].push_back(value);
  }
  return out;
}

namespace detail {

inline std::ifstream open_input(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error(ErrorCode::io_error, "cannot open '" + path + "'");
  return in;
}

}  // namespace detail

inline LabeledTwoLevel ingest_two_level_csv(const std::string& path) {
  auto in = detail::open_input(path);
  return read_two_level_csv(in);
}

inline LabeledThreeLevel ingest_three_level_csv(const std::string& path) {
  auto in = detail::open_input(path);
  return read_three_level_csv(in);
}

}  // namespace mlmom
