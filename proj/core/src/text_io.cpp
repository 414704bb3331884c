// Apache License, Version 2.0, refer to LICENSE.txt

#include "vaxbayes/text_io.hpp"

#include <algorithm>
#include <array>
#include <cctype>
#include <charconv>
#include <cmath>
#include <cstdio>
#include <istream>

#include "vaxbayes/error.hpp"

namespace vaxbayes {

namespace {

bool is_space(char c) { return std::isspace(static_cast<unsigned char>(c)) != 0; }

bool parse_metadata_comment(std::string_view body, std::string& key,
                            std::string& value) {
  auto pos = body.find(':');
  auto eq = body.find('=');
  if (eq != std::string_view::npos && (pos == std::string_view::npos || eq < pos)) {
    pos = eq;
  }
  if (pos == std::string_view::npos) return false;
  key = trim(body.substr(0, pos));
  value = trim(body.substr(pos + 1));
  return !key.empty() && key.find(' ') == std::string::npos;
}

}  // namespace

std::string trim(std::string_view text) {
  std::size_t begin = 0;
  std::size_t end = text.size();
  while (begin < end && is_space(text[begin])) ++begin;
  while (end > begin && is_space(text[end - 1])) --end;
  return std::string(text.substr(begin, end - begin));
}

std::string to_lower(std::string_view text) {
  std::string out(text);
  std::transform(out.begin(), out.end(), out.begin(),
                 [](unsigned char c) { return static_cast<char>(std::tolower(c)); });
  return out;
}

std::optional<std::size_t> DelimitedTable::column(std::string_view name) const {
  const std::string wanted = trim(name);
  for (std::size_t i = 0; i < header.size(); ++i) {
    if (header[i] == wanted) return i;
  }
  return std::nullopt;
}

char detect_delimiter(std::string_view header_line) {
  const auto commas = std::count(header_line.begin(), header_line.end(), ',');
  const auto tabs = std::count(header_line.begin(), header_line.end(), '\t');
  return tabs > commas ? '\t' : ',';
}

std::vector<std::string> split_record(std::string_view line, char delimiter) {
  if (!line.empty() && line.back() == '\r') line.remove_suffix(1);
  std::vector<std::string> fields;
  std::string current;
  bool in_quotes = false;
  bool was_quoted = false;
  auto flush = [&] {
    fields.push_back(was_quoted ? current : trim(current));
    current.clear();
    was_quoted = false;
  };
  for (std::size_t i = 0; i < line.size(); ++i) {
    const char c = line[i];
    if (in_quotes) {
      if (c == '"') {
        if (i + 1 < line.size() && line[i + 1] == '"') {
          current.push_back('"');
          ++i;
        } else {
          in_quotes = false;
        }
      } else {
        current.push_back(c);
      }
    } else if (c == '"' && trim(current).empty()) {
      current.clear();
      in_quotes = true;
      was_quoted = true;
    } else if (c == delimiter) {
      flush();
    } else if (!(was_quoted && is_space(c))) {
      current.push_back(c);
    }
  }
  flush();
  return fields;
}

DelimitedTable read_delimited(std::istream& in) {
  if (!in.good()) throw InputError("unreadable input stream");
  DelimitedTable table;
  std::string line;
  std::size_t line_no = 0;
  bool have_header = false;
  while (std::getline(in, line)) {
    ++line_no;
    const std::string stripped = trim(line);
    if (stripped.empty()) continue;
    if (stripped.front() == '#') {
      std::string key;
      std::string value;
      if (!have_header &&
          parse_metadata_comment(std::string_view(stripped).substr(1), key, value)) {
        table.metadata[key] = value;
      }
      continue;
    }
    if (!have_header) {
      table.delimiter = detect_delimiter(line);
      table.header = split_record(line, table.delimiter);
      have_header = true;
      continue;
    }
    table.rows.push_back(split_record(line, table.delimiter));
    table.line_numbers.push_back(line_no);
  }
  if (in.bad()) throw InputError("error while reading input stream");
  if (!have_header) throw InputError("input has no header row");
  return table;
}

std::string format_full(double value) {
  std::array<char, 64> buffer{};
  const auto result = std::to_chars(buffer.data(), buffer.data() + buffer.size(), value);
  return std::string(buffer.data(), result.ptr);
}

std::string format_short(double value) {
  std::array<char, 64> buffer{};
  std::snprintf(buffer.data(), buffer.size(), "%.6g", value);
  return std::string(buffer.data());
}

std::string quote_field(std::string_view field, char delimiter) {
  const bool needs_quotes =
      field.find(delimiter) != std::string_view::npos ||
      field.find('"') != std::string_view::npos ||
      (!field.empty() && (is_space(field.front()) || is_space(field.back())));
  if (!needs_quotes) return std::string(field);
  std::string out = "\"";
  for (char c : field) {
    if (c == '"') out.push_back('"');
    out.push_back(c);
  }
  out.push_back('"');
  return out;
}

std::string Provenance::comment_line() const {
  return "# seed=" + std::to_string(seed) + " config_digest=" +
         (config_digest.empty() ? std::string("none") : config_digest);
}

}  // namespace vaxbayes
