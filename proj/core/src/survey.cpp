// Apache License, Version 2.0, refer to LICENSE.txt

#include "vaxbayes/survey.hpp"

#include <algorithm>
#include <cctype>
#include <charconv>
#include <cmath>
#include <istream>
#include <optional>
#include <ostream>
#include <set>
#include <utility>

#include "vaxbayes/error.hpp"
#include "vaxbayes/text_io.hpp"

namespace vaxbayes {

namespace {

constexpr std::array<std::string_view, 2> kGenderTokens{"Male", "Female"};
constexpr std::array<std::string_view, 4> kRaceTokens{"White", "Black", "Asian", "Other"};
constexpr std::array<std::string_view, 4> kEducationTokens{"HighSchoolOrLess", "Associate",
                                                           "Bachelor", "Graduate"};
constexpr std::array<std::string_view, 4> kIncomeTokens{"Under35k", "From35kTo75k",
                                                        "From75kTo150k", "Over150k"};

constexpr std::array<SurveyField, 6> kAllFields{SurveyField::Gender,    SurveyField::Race,
                                                SurveyField::Education, SurveyField::Income,
                                                SurveyField::State,     SurveyField::Vaccinated};

template <typename Level, std::size_t N>
std::optional<Level> level_from_token(const std::array<std::string_view, N>& tokens,
                                      std::string_view token) {
  for (std::size_t i = 0; i < N; ++i) {
    if (to_lower(tokens[i]) == to_lower(token)) return static_cast<Level>(i);
  }
  return std::nullopt;
}

template <typename Level>
std::optional<Level> lookup(const std::map<std::string, Level>& levels, std::string_view raw) {
  const auto it = levels.find(to_lower(trim(raw)));
  if (it == levels.end()) return std::nullopt;
  return it->second;
}

template <typename Level, std::size_t N>
void add_canonical(std::map<std::string, Level>& levels,
                   const std::array<std::string_view, N>& tokens) {
  for (std::size_t i = 0; i < N; ++i) levels[to_lower(tokens[i])] = static_cast<Level>(i);
}

std::optional<double> parse_double(std::string_view text) {
  const std::string t = trim(text);
  if (t.empty()) return std::nullopt;
  double value = 0.0;
  const auto* begin = t.data();
  const auto* end = t.data() + t.size();
  if (*begin == '+') ++begin;
  const auto result = std::from_chars(begin, end, value);
  if (result.ec != std::errc{} || result.ptr != end || !std::isfinite(value)) {
    return std::nullopt;
  }
  return value;
}

}  // namespace

std::string_view to_string(Gender level) { return kGenderTokens.at(static_cast<std::size_t>(level)); }
std::string_view to_string(Race level) { return kRaceTokens.at(static_cast<std::size_t>(level)); }
std::string_view to_string(Education level) {
  return kEducationTokens.at(static_cast<std::size_t>(level));
}
std::string_view to_string(Income level) { return kIncomeTokens.at(static_cast<std::size_t>(level)); }

const std::vector<std::string>& default_state_roster() {
  static const std::vector<std::string> roster{
      "AL", "AR", "AZ", "CA", "CO", "CT", "DC", "DE", "FL", "GA", "IA", "ID", "IL",
      "IN", "KS", "KY", "LA", "MA", "MD", "ME", "MI", "MN", "MO", "MS", "MT", "NC",
      "ND", "NE", "NH", "NJ", "NM", "NV", "NY", "OH", "OK", "OR", "PA", "RI", "SC",
      "SD", "TN", "TX", "UT", "VA", "VT", "WA", "WI", "WV", "WY"};
  return roster;
}

std::string_view field_key(SurveyField field) {
  switch (field) {
    case SurveyField::Gender: return "gender";
    case SurveyField::Race: return "race";
    case SurveyField::Education: return "education";
    case SurveyField::Income: return "income";
    case SurveyField::State: return "state";
    case SurveyField::Vaccinated: return "vaccinated";
  }
  return "unknown";
}

SurveySchema SurveySchema::defaults() {
  SurveySchema schema;
  for (SurveyField field : kAllFields) schema.columns[field] = std::string(field_key(field));

  add_canonical(schema.gender_levels, kGenderTokens);
  add_canonical(schema.race_levels, kRaceTokens);
  add_canonical(schema.education_levels, kEducationTokens);
  add_canonical(schema.income_levels, kIncomeTokens);

  schema.race_levels["others"] = Race::Other;
  schema.education_levels["high school graduate or less"] = Education::HighSchoolOrLess;
  schema.education_levels["associate's degree"] = Education::Associate;
  schema.education_levels["bachelor's degree"] = Education::Bachelor;
  schema.education_levels["graduate degree"] = Education::Graduate;
  schema.income_levels["less than $35,000"] = Income::Under35k;
  schema.income_levels["$35,000 to $74,999"] = Income::From35kTo75k;
  schema.income_levels["$75,000 to $149,999"] = Income::From75kTo150k;
  schema.income_levels["$150,000 or above"] = Income::Over150k;

  schema.vaccinated_levels = {{"1", true}, {"0", false}, {"yes", true}, {"no", false}};
  schema.roster = default_state_roster();
  return schema;
}

void SurveySchema::add_spelling(SurveyField field, std::string_view spelling,
                                std::string_view canonical_level) {
  const std::string key = to_lower(trim(spelling));
  auto fail = [&] {
    throw InputError("unknown level '" + std::string(canonical_level) + "' for field " +
                     std::string(field_key(field)));
  };
  switch (field) {
    case SurveyField::Gender:
      if (auto level = level_from_token<Gender>(kGenderTokens, canonical_level)) {
        gender_levels[key] = *level;
        return;
      }
      fail();
      return;
    case SurveyField::Race:
      if (auto level = level_from_token<Race>(kRaceTokens, canonical_level)) {
        race_levels[key] = *level;
        return;
      }
      fail();
      return;
    case SurveyField::Education:
      if (auto level = level_from_token<Education>(kEducationTokens, canonical_level)) {
        education_levels[key] = *level;
        return;
      }
      fail();
      return;
    case SurveyField::Income:
      if (auto level = level_from_token<Income>(kIncomeTokens, canonical_level)) {
        income_levels[key] = *level;
        return;
      }
      fail();
      return;
    case SurveyField::Vaccinated: {
      const std::string token = to_lower(trim(canonical_level));
      if (token == "1" || token == "yes" || token == "true") {
        vaccinated_levels[key] = true;
      } else if (token == "0" || token == "no" || token == "false") {
        vaccinated_levels[key] = false;
      } else {
        fail();
      }
      return;
    }
    case SurveyField::State:
      throw InputError("state codes take no level spellings; edit the roster instead");
  }
}

SurveyDataset parse_survey(std::istream& in, const SurveySchema& schema) {
  const DelimitedTable table = read_delimited(in);

  std::map<SurveyField, std::size_t> position;
  for (SurveyField field : kAllFields) {
    const auto mapped = schema.columns.find(field);
    const std::string name =
        mapped != schema.columns.end() ? mapped->second : std::string(field_key(field));
    const auto column = table.column(name);
    if (!column) {
      throw InputError("survey header is missing column '" + name + "' (field " +
                       std::string(field_key(field)) + ")");
    }
    position[field] = *column;
  }
  const std::set<std::string> roster(schema.roster.begin(), schema.roster.end());

  SurveyDataset data;
  std::set<std::string> present;
  for (const auto& row : table.rows) {
    auto cell = [&](SurveyField field) -> std::string_view {
      const std::size_t col = position[field];
      return col < row.size() ? std::string_view(row[col]) : std::string_view{};
    };
    const auto gender = lookup(schema.gender_levels, cell(SurveyField::Gender));
    const auto race = lookup(schema.race_levels, cell(SurveyField::Race));
    const auto education = lookup(schema.education_levels, cell(SurveyField::Education));
    const auto income = lookup(schema.income_levels, cell(SurveyField::Income));
    const auto vaccinated = lookup(schema.vaccinated_levels, cell(SurveyField::Vaccinated));
    std::string state = trim(cell(SurveyField::State));
    std::transform(state.begin(), state.end(), state.begin(),
                   [](unsigned char c) { return static_cast<char>(std::toupper(c)); });

    if (!gender || !race || !education || !income || !vaccinated || !roster.contains(state)) {
      ++data.dropped_count;
      continue;
    }
    present.insert(state);
    data.records.push_back({*gender, *race, *education, *income, std::move(state), *vaccinated});
  }
  if (data.records.empty()) {
    throw InputError("survey input has zero valid rows (" + std::to_string(data.dropped_count) +
                     " dropped)");
  }
  data.states.assign(present.begin(), present.end());
  return data;
}

void write_survey(std::ostream& out, const SurveyDataset& data,
                  std::span<const std::string> comments) {
  for (const auto& line : comments) out << "# " << line << '\n';
  out << "gender,race,education,income,state,vaccinated\n";
  for (const auto& r : data.records) {
    out << to_string(r.gender) << ',' << to_string(r.race) << ',' << to_string(r.education)
        << ',' << to_string(r.income) << ',' << quote_field(r.state, ',') << ','
        << (r.vaccinated ? 1 : 0) << '\n';
  }
}

DesignMatrix::Row encode_covariates(const SurveyRecord& record) {
  DesignMatrix::Row row{};
  if (record.education != Education::HighSchoolOrLess) {
    row[static_cast<std::size_t>(record.education) - 1] = 1;
  }
  if (record.race != Race::White) row[3 + static_cast<std::size_t>(record.race) - 1] = 1;
  if (record.income != Income::Under35k) row[6 + static_cast<std::size_t>(record.income) - 1] = 1;
  if (record.gender == Gender::Female) row[9] = 1;
  return row;
}

DesignMatrix encode_design(const SurveyDataset& data) {
  if (data.records.empty()) throw InputError("cannot encode an empty survey dataset");
  DesignMatrix design;
  design.state_count = data.states.size();
  design.indicators.reserve(data.records.size());
  design.state_index.reserve(data.records.size());
  design.response.reserve(data.records.size());
  for (const auto& record : data.records) {
    const auto it = std::lower_bound(data.states.begin(), data.states.end(), record.state);
    if (it == data.states.end() || *it != record.state) {
      throw InputError("record state '" + record.state + "' is not in the dataset roster");
    }
    design.indicators.push_back(encode_covariates(record));
    design.state_index.push_back(static_cast<std::size_t>(it - data.states.begin()));
    design.response.push_back(record.vaccinated ? 1 : 0);
  }
  return design;
}

SurveyRecord decode_row(const DesignMatrix& design, std::size_t row,
                        std::span<const std::string> roster) {
  if (row >= design.rows()) throw InputError("design row out of range");
  const auto& x = design.indicators[row];
  auto group_level = [&](std::size_t first, std::size_t width) -> std::size_t {
    std::size_t level = 0;
    std::size_t ones = 0;
    for (std::size_t k = 0; k < width; ++k) {
      if (x[first + k] > 1) throw InputError("indicator value other than 0/1");
      if (x[first + k] == 1) {
        level = k + 1;
        ++ones;
      }
    }
    if (ones > 1) throw InputError("more than one indicator set within a categorical group");
    return level;
  };
  SurveyRecord record;
  record.education = static_cast<Education>(group_level(0, 3));
  record.race = static_cast<Race>(group_level(3, 3));
  record.income = static_cast<Income>(group_level(6, 3));
  record.gender = static_cast<Gender>(group_level(9, 1));
  const std::size_t j = design.state_index[row];
  if (j >= roster.size()) throw InputError("state index outside roster");
  record.state = roster[j];
  record.vaccinated = design.response[row] != 0;
  return record;
}

std::vector<std::string> CountyRateTable::states() const {
  std::set<std::string> distinct;
  for (const auto& entry : entries) distinct.insert(entry.state);
  return {distinct.begin(), distinct.end()};
}

CountyRateTable parse_county_rates(std::istream& in) {
  const DelimitedTable raw = read_delimited(in);
  const auto state_col = raw.column("state");
  const auto county_col = raw.column("county");
  const auto rate_col = raw.column("rate_percent");
  if (!state_col || !county_col || !rate_col) {
    throw InputError("county header must contain columns state, county, rate_percent");
  }
  CountyRateTable table;
  table.metadata = raw.metadata;
  std::set<std::pair<std::string, std::string>> seen;
  for (const auto& row : raw.rows) {
    auto cell = [&](std::size_t col) { return col < row.size() ? trim(row[col]) : std::string{}; };
    std::string state = cell(*state_col);
    std::string county = cell(*county_col);
    const auto rate = parse_double(cell(*rate_col));
    if (state.empty() || county.empty() || !rate || *rate < 0.0 || *rate > 100.0) {
      ++table.dropped_count;
      continue;
    }
    std::transform(state.begin(), state.end(), state.begin(),
                   [](unsigned char c) { return static_cast<char>(std::toupper(c)); });
    if (!seen.emplace(state, county).second) {
      throw InputError("duplicate county entry (" + state + ", " + county + ")");
    }
    table.entries.push_back({std::move(state), std::move(county), *rate});
  }
  return table;
}

void write_county_rates(std::ostream& out, const CountyRateTable& table,
                        std::span<const std::string> comments) {
  for (const auto& [key, value] : table.metadata) out << "# " << key << ": " << value << '\n';
  for (const auto& line : comments) out << "# " << line << '\n';
  out << "state,county,rate_percent\n";
  for (const auto& e : table.entries) {
    out << quote_field(e.state, ',') << ',' << quote_field(e.county, ',') << ','
        << format_full(e.rate) << '\n';
  }
}

}  // namespace vaxbayes
