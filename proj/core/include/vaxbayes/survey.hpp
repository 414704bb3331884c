// Apache License, Version 2.0, refer to LICENSE.txt

/// Survey microdata and county vaccination-rate tables: parsing, validation,
/// and dummy coding into model-ready structures.

#pragma once

#include <array>
#include <cstddef>
#include <cstdint>
#include <iosfwd>
#include <map>
#include <span>
#include <string>
#include <string_view>
#include <vector>

namespace vaxbayes {

enum class Gender : std::uint8_t { Male, Female };
enum class Race : std::uint8_t { White, Black, Asian, Other };
enum class Education : std::uint8_t { HighSchoolOrLess, Associate, Bachelor, Graduate };
enum class Income : std::uint8_t { Under35k, From35kTo75k, From75kTo150k, Over150k };

/// Canonical tokens, identical to the enumerator names.
std::string_view to_string(Gender level);
std::string_view to_string(Race level);
std::string_view to_string(Education level);
std::string_view to_string(Income level);

struct SurveyRecord {
  Gender gender = Gender::Male;
  Race race = Race::White;
  Education education = Education::HighSchoolOrLess;
  Income income = Income::Under35k;
  std::string state;
  bool vaccinated = false;

  friend bool operator==(const SurveyRecord&, const SurveyRecord&) = default;
};

/// 48 contiguous states plus DC, sorted by code.
const std::vector<std::string>& default_state_roster();

enum class SurveyField { Gender, Race, Education, Income, State, Vaccinated };

std::string_view field_key(SurveyField field);  // "gender", "race", ...

/// Maps logical fields to header columns and raw spellings to levels. Level
/// lookup is case-insensitive and ignores surrounding whitespace.
struct SurveySchema {
  std::map<SurveyField, std::string> columns;
  std::map<std::string, Gender> gender_levels;
  std::map<std::string, Race> race_levels;
  std::map<std::string, Education> education_levels;
  std::map<std::string, Income> income_levels;
  std::map<std::string, bool> vaccinated_levels;
  std::vector<std::string> roster;

  /// Column names equal the field keys; level spellings cover the canonical
  /// tokens and the survey's published category wording.
  static SurveySchema defaults();

  /// Adds a spelling for a level given by its canonical token. Throws
  /// InputError for unknown fields or tokens.
  void add_spelling(SurveyField field, std::string_view spelling,
                    std::string_view canonical_level);
};

struct SurveyDataset {
  std::vector<SurveyRecord> records;
  std::vector<std::string> states;  // sorted distinct codes; index j = position
  std::size_t dropped_count = 0;

  std::size_t state_count() const { return states.size(); }
};

/// Parses delimited survey microdata (comma or tab). Rows with a missing or
/// unmapped value, or a state outside the schema roster, are dropped and
/// counted. Throws InputError on an unreadable stream, a header missing a
/// mapped column, or zero valid rows.
SurveyDataset parse_survey(std::istream& in, const SurveySchema& schema);

/// Writes records in the canonical format that parse_survey accepts with
/// SurveySchema::defaults(). Each line of `comments` is emitted as "# ...".
void write_survey(std::ostream& out, const SurveyDataset& data,
                  std::span<const std::string> comments = {});

/// Dummy-coded design. Indicator columns, against the base levels
/// HighSchoolOrLess, White, Under35k and Male:
///   0..2 education (Associate, Bachelor, Graduate)
///   3..5 race (Black, Asian, Other)
///   6..8 income (35-75k, 75-150k, 150k+)
///   9    gender (Female)
/// The intercept is implicit. State indices are zero-based positions in the
/// dataset roster.
struct DesignMatrix {
  static constexpr std::size_t kIndicatorCount = 10;
  static constexpr std::size_t kFixedEffectCount = kIndicatorCount + 1;

  using Row = std::array<std::uint8_t, kIndicatorCount>;

  std::vector<Row> indicators;
  std::vector<std::size_t> state_index;
  std::vector<std::uint8_t> response;
  std::size_t state_count = 0;

  std::size_t rows() const { return indicators.size(); }

  friend bool operator==(const DesignMatrix&, const DesignMatrix&) = default;
};

/// Throws InputError for an empty dataset.
DesignMatrix encode_design(const SurveyDataset& data);

DesignMatrix::Row encode_covariates(const SurveyRecord& record);

/// Inverse of encode_design for one row. Throws InputError if the row is not
/// a valid dummy coding or its state index is outside `roster`.
SurveyRecord decode_row(const DesignMatrix& design, std::size_t row,
                        std::span<const std::string> roster);

struct CountyRate {
  std::string state;
  std::string county;
  double rate = 0.0;  // percent, [0, 100]
};

struct CountyRateTable {
  std::vector<CountyRate> entries;
  std::size_t dropped_count = 0;
  std::map<std::string, std::string> metadata;  // e.g. coverage_date

  std::vector<std::string> states() const;  // sorted distinct codes
};

/// Parses a delimited table with columns state, county, rate_percent. Rows
/// with a missing, unparsable, or out-of-range rate are dropped and counted.
/// Throws InputError on an unreadable stream, missing columns, or a
/// duplicated (state, county) pair.
CountyRateTable parse_county_rates(std::istream& in);

void write_county_rates(std::ostream& out, const CountyRateTable& table,
                        std::span<const std::string> comments = {});

}  // namespace vaxbayes
