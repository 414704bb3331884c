// Apache License, Version 2.0, refer to LICENSE.txt

#pragma once

#include <cstdint>
#include <filesystem>
#include <map>
#include <string>
#include <string_view>

#include "vaxbayes/clustering.hpp"
#include "vaxbayes/hmc.hpp"
#include "vaxbayes/model.hpp"
#include "vaxbayes/survey.hpp"
#include "vaxbayes/text_io.hpp"

namespace vaxbayes::cli {

/// Everything a subcommand needs. Settings come from defaults, then a
/// key=value config file, then command-line flags, each layer going through
/// RunConfig::set with the same key names.
struct RunConfig {
  std::uint64_t seed = 20221219;
  std::filesystem::path out_dir = "out";
  std::filesystem::path survey_path;
  std::filesystem::path county_path;
  std::filesystem::path truth_path;
  std::filesystem::path draws_path;
  std::size_t records = 5000;
  std::size_t workers = 0;

  HmcConfig hmc;
  PriorSpec prior;
  Linkage linkage = Linkage::Ward;
  std::size_t k_max = 10;
  std::size_t gap_references = 100;

  // column.<field> and level.<field>.<spelling> entries, kept verbatim.
  std::map<std::string, std::string> schema_entries;

  /// Assigns one setting. Throws InputError for unknown keys or bad values.
  void set(std::string_view key, std::string_view value);

  /// Sorted "key=value" lines of every setting that can change results
  /// (out_dir and workers are excluded).
  std::string canonical_dump() const;

  /// 16 hex digits of FNV-1a over canonical_dump().
  std::string digest() const;

  Provenance provenance() const { return {seed, digest()}; }

  SurveySchema schema() const;
  GapOptions gap_options() const;
  HmcConfig hmc_config() const;  // with seed and workers applied
};

/// Reads "key = value" lines; '#' starts a comment. Throws InputError naming
/// the path and line on malformed input, or if the file cannot be opened.
void apply_config_file(RunConfig& config, const std::filesystem::path& path);

}  // namespace vaxbayes::cli
