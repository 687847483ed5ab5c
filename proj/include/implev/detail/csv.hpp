#pragma once

#include <charconv>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <string>
#include <string_view>
#include <vector>

#include "implev/error.hpp"

namespace implev::detail {

inline std::string_view trim(std::string_view s) {
  while (!s.empty() && (s.front() == ' ' || s.front() == '\t')) s.remove_prefix(1);
  while (!s.empty() && (s.back() == ' ' || s.back() == '\t' || s.back() == '\r'))
    s.remove_suffix(1);
  return s;
}

inline std::vector<std::string> split_fields(std::string_view line) {
  std::vector<std::string> out;
  std::size_t start = 0;
  while (true) {
    const auto comma = line.find(',', start);
    const auto field = line.substr(start, comma == std::string_view::npos ? line.npos : comma - start);
    out.emplace_back(trim(field));
    if (comma == std::string_view::npos) break;
    start = comma + 1;
  }
  return out;
}

struct CsvRow {
  std::size_t line = 0;  // 1-based line number in the source file
  std::vector<std::string> fields;
};

struct CsvTable {
  std::string source;
  std::vector<std::string> header;
  std::vector<CsvRow> rows;

  /// Index of a named header column, or parse-error if absent.
  std::size_t column(std::string_view name) const {
    for (std::size_t i = 0; i < header.size(); ++i)
      if (header[i] == name) return i;
    throw Error(ErrorCode::parse_error,
                source + ": missing column '" + std::string(name) + "' in header");
  }

  bool has_column(std::string_view name) const {
    for (const auto& h : header)
      if (h == name) return true;
    return false;
  }
};

/// Reads a comma-separated file with a header row. Blank lines and lines
/// starting with '#' are skipped.
inline CsvTable read_csv(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw Error(ErrorCode::io_error, "cannot open " + path.string());
  CsvTable table;
  table.source = path.string();
  std::string line;
  std::size_t line_no = 0;
  bool have_header = false;
  while (std::getline(in, line)) {
    ++line_no;
    const auto t = trim(line);
    if (t.empty() || t.front() == '#') continue;
    auto fields = split_fields(t);
    if (!have_header) {
      if (line_no == 1 && !fields.empty() && fields[0].rfind("\xEF\xBB\xBF", 0) == 0)
        fields[0].erase(0, 3);
      table.header = std::move(fields);
      have_header = true;
      continue;
    }
    if (fields.size() != table.header.size()) {
      throw Error(ErrorCode::parse_error,
                  table.source + ": line " + std::to_string(line_no) + ": expected " +
                      std::to_string(table.header.size()) + " fields, got " +
                      std::to_string(fields.size()));
    }
    table.rows.push_back({line_no, std::move(fields)});
  }
  if (in.bad()) throw Error(ErrorCode::io_error, "read failure on " + path.string());
  if (!have_header) throw Error(ErrorCode::parse_error, table.source + ": empty file, no header");
  return table;
}

inline double parse_real(const CsvTable& table, const CsvRow& row, std::size_t col) {
  const std::string& text = row.fields[col];
  double value = 0.0;
  const auto* first = text.data();
  const auto* last = text.data() + text.size();
  const auto [ptr, ec] = std::from_chars(first, last, value);
  if (text.empty() || ec != std::errc() || ptr != last || !std::isfinite(value)) {
    throw Error(ErrorCode::parse_error, table.source + ": line " + std::to_string(row.line) +
                                            ", column '" + table.header[col] +
                                            "': not a finite number: '" + text + "'");
  }
  return value;
}

inline long long parse_integer(const CsvTable& table, const CsvRow& row, std::size_t col) {
  const std::string& text = row.fields[col];
  long long value = 0;
  const auto* last = text.data() + text.size();
  const auto [ptr, ec] = std::from_chars(text.data(), last, value);
  if (text.empty() || ec != std::errc() || ptr != last) {
    throw Error(ErrorCode::parse_error, table.source + ": line " + std::to_string(row.line) +
                                            ", column '" + table.header[col] +
                                            "': not an integer: '" + text + "'");
  }
  return value;
}

/// Nine significant digits, the precision of every numeric file we write.
inline std::string format_real(double value) {
  char buf[64];
  std::snprintf(buf, sizeof buf, "%.9g", value);
  return buf;
}

/// Writes through a sibling temporary file and renames it into place, so a
/// failed run never leaves a partial output.
inline void write_file_atomic(const std::filesystem::path& path, const std::string& content) {
  auto tmp = path;
  tmp += ".tmp";
  {
    std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
    if (!out) throw Error(ErrorCode::io_error, "cannot write " + tmp.string());
    out << content;
    out.flush();
    if (!out) {
      std::error_code ignored;
      std::filesystem::remove(tmp, ignored);
      throw Error(ErrorCode::io_error, "write failure on " + tmp.string());
    }
  }
  std::error_code ec;
  std::filesystem::rename(tmp, path, ec);
  if (ec) {
    std::filesystem::remove(tmp, ec);
    throw Error(ErrorCode::io_error, "cannot rename into " + path.string());
  }
}

}  // namespace implev::detail
