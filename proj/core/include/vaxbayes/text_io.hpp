// Apache License, Version 2.0, refer to LICENSE.txt

#pragma once

#include <cstdint>
#include <iosfwd>
#include <map>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

namespace vaxbayes {

/// A delimited table read from a text stream. Lines starting with '#' are
/// comments; a comment of the form "# key: value" (or "# key=value") that
/// precedes the header is kept as metadata.
struct DelimitedTable {
  char delimiter = ',';
  std::vector<std::string> header;
  std::vector<std::vector<std::string>> rows;
  std::vector<std::size_t> line_numbers;  // 1-based source line per row
  std::map<std::string, std::string> metadata;

  /// Column position of `name` (exact match after trimming), if present.
  std::optional<std::size_t> column(std::string_view name) const;
};

/// Comma or tab, whichever occurs more often in the header line (comma on tie).
char detect_delimiter(std::string_view header_line);

/// Splits one record. Double-quoted fields may contain the delimiter and
/// doubled quotes. Surrounding whitespace and a trailing '\r' are removed.
std::vector<std::string> split_record(std::string_view line, char delimiter);

/// Reads a header plus rows. Throws InputError if the stream is unreadable or
/// has no header. Rows are kept even if their field count differs from the
/// header; callers decide how to treat them.
DelimitedTable read_delimited(std::istream& in);

std::string trim(std::string_view text);
std::string to_lower(std::string_view text);

/// Shortest round-trip decimal representation.
std::string format_full(double value);

/// Six significant digits, for human-readable tables.
std::string format_short(double value);

/// Quotes a field if it contains the delimiter, a quote, or leading/trailing
/// whitespace.
std::string quote_field(std::string_view field, char delimiter);

/// Seed and config digest stamped on every output artifact.
struct Provenance {
  std::uint64_t seed = 0;
  std::string config_digest;

  /// "# seed=<seed> config_digest=<digest>"
  std::string comment_line() const;
};

}  // namespace vaxbayes
