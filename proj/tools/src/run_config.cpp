// Apache License, Version 2.0, refer to LICENSE.txt

#include "run_config.hpp"

#include <charconv>
#include <cstdio>
#include <fstream>
#include <sstream>

#include "vaxbayes/error.hpp"
#include "vaxbayes/random.hpp"

namespace vaxbayes::cli {
namespace {

template <typename T>
T parse_number(std::string_view key, std::string_view value) {
  T out{};
  const auto text = trim(value);
  const auto [end, ec] = std::from_chars(text.data(), text.data() + text.size(), out);
  if (ec != std::errc{} || end != text.data() + text.size() || text.empty()) {
    throw InputError("invalid value '" + std::string(value) + "' for " + std::string(key));
  }
  return out;
}

std::optional<SurveyField> parse_field(std::string_view name) {
  for (auto field : {SurveyField::Gender, SurveyField::Race, SurveyField::Education, SurveyField::Income,
                     SurveyField::State, SurveyField::Vaccinated}) {
    if (field_key(field) == name) return field;
  }
  return std::nullopt;
}

}  // namespace

void RunConfig::set(std::string_view raw_key, std::string_view raw_value) {
  const std::string key = trim(raw_key);
  const std::string value = trim(raw_value);
  if (key == "seed") {
    seed = parse_number<std::uint64_t>(key, value);
  } else if (key == "out_dir") {
    out_dir = value;
  } else if (key == "survey") {
    survey_path = value;
  } else if (key == "county") {
    county_path = value;
  } else if (key == "truth") {
    truth_path = value;
  } else if (key == "draws") {
    draws_path = value;
  } else if (key == "records") {
    records = parse_number<std::size_t>(key, value);
  } else if (key == "workers") {
    workers = parse_number<std::size_t>(key, value);
  } else if (key == "hmc.chains") {
    hmc.chains = parse_number<std::size_t>(key, value);
  } else if (key == "hmc.iterations") {
    hmc.iterations = parse_number<std::size_t>(key, value);
  } else if (key == "hmc.warmup_fraction") {
    hmc.warmup_fraction = parse_number<double>(key, value);
  } else if (key == "hmc.target_accept") {
    hmc.target_accept = parse_number<double>(key, value);
  } else if (key == "hmc.leapfrog_steps") {
    hmc.leapfrog_steps = parse_number<std::size_t>(key, value);
  } else if (key == "hmc.step_jitter") {
    hmc.step_jitter = parse_number<double>(key, value);
  } else if (key == "prior.beta_scale") {
    prior.beta_scale = parse_number<double>(key, value);
  } else if (key == "prior.sigma_alpha_scale") {
    prior.sigma_alpha_hyper_scale = parse_number<double>(key, value);
  } else if (key == "cluster.linkage") {
    linkage = parse_linkage(value);
  } else if (key == "cluster.kmax") {
    k_max = parse_number<std::size_t>(key, value);
  } else if (key == "cluster.gap_refs") {
    gap_references = parse_number<std::size_t>(key, value);
  } else if (key.starts_with("column.")) {
    if (!parse_field(key.substr(7))) throw InputError("unknown survey field in '" + key + "'");
    schema_entries[key] = value;
  } else if (key.starts_with("level.")) {
    const auto dot = key.find('.', 6);
    if (dot == std::string::npos || !parse_field(key.substr(6, dot - 6)) || dot + 1 == key.size()) {
      throw InputError("expected level.<field>.<spelling>, got '" + key + "'");
    }
    schema_entries[key] = value;
  } else {
    throw InputError("unknown setting '" + key + "'");
  }
}

std::string RunConfig::canonical_dump() const {
  std::map<std::string, std::string> entries = schema_entries;
  entries["seed"] = std::to_string(seed);
  entries["survey"] = survey_path.generic_string();
  entries["county"] = county_path.generic_string();
  entries["truth"] = truth_path.generic_string();
  entries["draws"] = draws_path.generic_string();
  entries["records"] = std::to_string(records);
  entries["hmc.chains"] = std::to_string(hmc.chains);
  entries["hmc.iterations"] = std::to_string(hmc.iterations);
  entries["hmc.warmup_fraction"] = format_full(hmc.warmup_fraction);
  entries["hmc.target_accept"] = format_full(hmc.target_accept);
  entries["hmc.leapfrog_steps"] = std::to_string(hmc.leapfrog_steps);
  entries["hmc.step_jitter"] = format_full(hmc.step_jitter);
  entries["prior.beta_scale"] = format_full(prior.beta_scale);
  entries["prior.sigma_alpha_scale"] = format_full(prior.sigma_alpha_hyper_scale);
  entries["cluster.linkage"] = std::string(to_string(linkage));
  entries["cluster.kmax"] = std::to_string(k_max);
  entries["cluster.gap_refs"] = std::to_string(gap_references);
  std::string out;
  for (const auto& [k, v] : entries) out += k + "=" + v + "\n";
  return out;
}

std::string RunConfig::digest() const {
  char buffer[17];
  std::snprintf(buffer, sizeof buffer, "%016llx",
                static_cast<unsigned long long>(fnv1a64(canonical_dump())));
  return buffer;
}

SurveySchema RunConfig::schema() const {
  SurveySchema schema = SurveySchema::defaults();
  for (const auto& [key, value] : schema_entries) {
    if (key.starts_with("column.")) {
      schema.columns[*parse_field(key.substr(7))] = value;
    } else {
      const auto dot = key.find('.', 6);
      schema.add_spelling(*parse_field(key.substr(6, dot - 6)), key.substr(dot + 1), value);
    }
  }
  return schema;
}

GapOptions RunConfig::gap_options() const {
  GapOptions options;
  options.k_max = k_max;
  options.references = gap_references;
  options.seed = seed;
  options.linkage = linkage;
  options.workers = workers;
  return options;
}

HmcConfig RunConfig::hmc_config() const {
  HmcConfig config = hmc;
  config.seed = seed;
  config.workers = workers;
  return config;
}

void apply_config_file(RunConfig& config, const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw InputError("cannot open config file '" + path.string() + "'");
  std::string line;
  std::size_t number = 0;
  while (std::getline(in, line)) {
    ++number;
    const auto hash = line.find('#');
    const std::string body = trim(line.substr(0, hash));
    if (body.empty()) continue;
    const auto eq = body.find('=');
    if (eq == std::string::npos) {
      throw InputError(path.string() + ":" + std::to_string(number) + ": expected key = value");
    }
    try {
      config.set(body.substr(0, eq), body.substr(eq + 1));
    } catch (const InputError& e) {
      throw InputError(path.string() + ":" + std::to_string(number) + ": " + e.what());
    }
  }
}

}  // namespace vaxbayes::cli
