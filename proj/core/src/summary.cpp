// Apache License, Version 2.0, refer to LICENSE.txt

#include "vaxbayes/summary.hpp"

#include <algorithm>
#include <array>
#include <charconv>
#include <cmath>
#include <istream>
#include <limits>
#include <ostream>

#include "vaxbayes/diagnostics.hpp"
#include "vaxbayes/error.hpp"
#include "vaxbayes/model.hpp"

namespace vaxbayes {

namespace {

constexpr std::array<const char*, kFixedEffectCount> kContrasts{
    "intercept",
    "Associate's Degree vs. High school graduate or less",
    "Bachelor's degree vs. High school graduate or less",
    "Graduate degree vs. High school graduate or less",
    "Black vs. White",
    "Asian vs. White",
    "Others vs. White",
    "$35,000 to $74,999 vs. Less than $35,000",
    "$75,000 to $149,999 vs. Less than $35,000",
    "$150,000 or above vs. Less than $35,000",
    "Female vs. Male",
};

constexpr const char* kAlphaPrefix = "alpha_";

std::string or_na(double value) {
  return std::isfinite(value) ? format_full(value) : std::string("NA");
}

std::string or_na_short(double value) {
  return std::isfinite(value) ? format_short(value) : std::string("NA");
}

std::vector<double> reporting_draws(const ChainSet& chains, std::size_t index, bool exp_transform,
                                    std::vector<std::vector<double>>* per_chain) {
  auto by_chain = chains.coordinate(index);
  if (exp_transform) {
    for (auto& chain : by_chain) {
      for (double& v : chain) v = std::exp(v);
    }
  }
  std::vector<double> pooled;
  pooled.reserve(chains.chains() * chains.retained);
  for (const auto& chain : by_chain) pooled.insert(pooled.end(), chain.begin(), chain.end());
  if (per_chain != nullptr) *per_chain = std::move(by_chain);
  return pooled;
}

void check_labels(const ChainSet& chains, std::span<const ParameterLabel> labels) {
  if (chains.chains() == 0 || chains.retained == 0) throw InputError("chain set is empty");
  if (labels.size() != chains.dimension) {
    throw InputError("got " + std::to_string(labels.size()) + " labels for " +
                     std::to_string(chains.dimension) + " parameters");
  }
}

double parse_number(const std::string& text) {
  double value = 0.0;
  const auto result = std::from_chars(text.data(), text.data() + text.size(), value);
  if (result.ec != std::errc{} || result.ptr != text.data() + text.size() || !std::isfinite(value)) {
    throw InputError("malformed number '" + text + "' in draws file");
  }
  return value;
}

std::size_t parse_index(const std::string& text) {
  std::size_t value = 0;
  const auto result = std::from_chars(text.data(), text.data() + text.size(), value);
  if (result.ec != std::errc{} || result.ptr != text.data() + text.size()) {
    throw InputError("malformed index '" + text + "' in draws file");
  }
  return value;
}

}  // namespace

std::vector<ParameterLabel> model_parameter_labels(std::span<const std::string> roster) {
  std::vector<ParameterLabel> labels;
  labels.reserve(parameter_dimension(roster.size()));
  for (std::size_t k = 0; k < kFixedEffectCount; ++k) {
    labels.push_back({"beta" + std::to_string(k), kContrasts[k], ParameterKind::FixedEffect, false});
  }
  for (const auto& state : roster) {
    labels.push_back({kAlphaPrefix + state, "random intercept " + state,
                      ParameterKind::RandomIntercept, false});
  }
  labels.push_back({"sigma_alpha", "random-intercept scale", ParameterKind::Scale, true});
  return labels;
}

ParameterLabel label_from_name(const std::string& name) {
  for (std::size_t k = 0; k < kFixedEffectCount; ++k) {
    if (name == "beta" + std::to_string(k)) {
      return {name, kContrasts[k], ParameterKind::FixedEffect, false};
    }
  }
  if (name.rfind(kAlphaPrefix, 0) == 0 && name.size() > std::string(kAlphaPrefix).size()) {
    return {name, "random intercept " + name.substr(std::string(kAlphaPrefix).size()),
            ParameterKind::RandomIntercept, false};
  }
  if (name == "sigma_alpha" || name == "log_sigma_alpha") {
    return {"sigma_alpha", "random-intercept scale", ParameterKind::Scale, true};
  }
  return {name, "", ParameterKind::FixedEffect, false};
}

double odds_ratio(double beta, double units) { return std::exp(units * beta); }

const ParameterSummary* PosteriorSummary::find(const std::string& name) const {
  for (const auto& p : parameters) {
    if (p.label.name == name) return &p;
  }
  return nullptr;
}

PosteriorSummary summarize_posterior(const ChainSet& chains, std::span<const ParameterLabel> labels) {
  check_labels(chains, labels);
  PosteriorSummary summary;
  summary.parameters.reserve(labels.size());
  for (std::size_t d = 0; d < labels.size(); ++d) {
    std::vector<std::vector<double>> per_chain;
    std::vector<double> pooled = reporting_draws(chains, d, labels[d].exp_transform, &per_chain);

    ParameterSummary row;
    row.label = labels[d];
    row.mean = mean(pooled);
    row.sd = sample_sd(pooled);
    std::sort(pooled.begin(), pooled.end());
    row.q025 = sorted_quantile(pooled, 0.025);
    row.q500 = sorted_quantile(pooled, 0.5);
    row.q975 = sorted_quantile(pooled, 0.975);
    if (labels[d].kind == ParameterKind::FixedEffect) row.odds_ratio = odds_ratio(row.mean);

    const bool constant = pooled.front() == pooled.back();
    const bool long_enough = chains.retained >= 8;
    row.rhat = std::numeric_limits<double>::quiet_NaN();
    row.ess = std::numeric_limits<double>::quiet_NaN();
    if (!constant && long_enough) {
      row.rhat = split_rhat(per_chain);
      row.ess = effective_sample_size(per_chain);
    }
    summary.parameters.push_back(std::move(row));
  }
  return summary;
}

std::vector<LadderRow> random_intercept_ladder(const PosteriorSummary& summary,
                                               std::span<const std::string> roster) {
  std::vector<LadderRow> ladder;
  for (const auto& p : summary.parameters) {
    if (p.label.kind != ParameterKind::RandomIntercept) continue;
    if (ladder.size() >= roster.size() || p.label.name != kAlphaPrefix + roster[ladder.size()]) {
      throw InputError("random intercepts do not match the state roster");
    }
    ladder.push_back({roster[ladder.size()], p.mean, p.q025, p.q975});
  }
  if (ladder.size() != roster.size()) {
    throw InputError("summary has " + std::to_string(ladder.size()) + " random intercepts for " +
                     std::to_string(roster.size()) + " states");
  }
  std::stable_sort(ladder.begin(), ladder.end(),
                   [](const LadderRow& a, const LadderRow& b) { return a.mean > b.mean; });
  return ladder;
}

std::vector<DiagnosticSeries> emit_diagnostics(const ChainSet& chains,
                                               std::span<const ParameterLabel> labels) {
  check_labels(chains, labels);
  const std::size_t stride = (chains.retained + kMaxTracePoints - 1) / kMaxTracePoints;
  std::vector<DiagnosticSeries> out;
  out.reserve(labels.size());
  for (std::size_t d = 0; d < labels.size(); ++d) {
    std::vector<std::vector<double>> per_chain;
    const std::vector<double> pooled =
        reporting_draws(chains, d, labels[d].exp_transform, &per_chain);
    DiagnosticSeries series;
    series.label = labels[d];
    for (const auto& chain : per_chain) {
      std::vector<std::size_t> iterations;
      std::vector<double> values;
      for (std::size_t i = 0; i < chain.size(); i += stride) {
        iterations.push_back(chains.warmup + i);
        values.push_back(chain[i]);
      }
      series.trace_iterations.push_back(std::move(iterations));
      series.trace_values.push_back(std::move(values));
    }
    series.density = kernel_density(pooled);
    out.push_back(std::move(series));
  }
  return out;
}

void write_summary_tsv(std::ostream& out, const PosteriorSummary& summary,
                       const Provenance& provenance) {
  out << provenance.comment_line() << '\n';
  out << "name\tcontrast\testimate\tsd\tci_low\tmedian\tci_high\todds_ratio\trhat\tess\n";
  for (const auto& p : summary.parameters) {
    out << p.label.name << '\t' << p.label.contrast << '\t' << format_full(p.mean) << '\t'
        << format_full(p.sd) << '\t' << format_full(p.q025) << '\t' << format_full(p.q500) << '\t'
        << format_full(p.q975) << '\t' << (p.odds_ratio ? format_full(*p.odds_ratio) : "NA")
        << '\t' << or_na(p.rhat) << '\t' << or_na(p.ess) << '\n';
  }
}

void write_summary_table(std::ostream& out, const PosteriorSummary& summary,
                         const Provenance& provenance) {
  const std::vector<std::string> header{"parameter", "contrast", "estimate", "95% CI",
                                        "odds ratio", "R-hat",   "ESS"};
  std::vector<std::vector<std::string>> rows;
  for (const auto& p : summary.parameters) {
    rows.push_back({p.label.name, p.label.contrast, format_short(p.mean),
                    "(" + format_short(p.q025) + ", " + format_short(p.q975) + ")",
                    p.odds_ratio ? format_short(*p.odds_ratio) : "", or_na_short(p.rhat),
                    std::isfinite(p.ess) ? format_short(std::round(p.ess)) : "NA"});
  }
  std::vector<std::size_t> width(header.size());
  for (std::size_t c = 0; c < header.size(); ++c) width[c] = header[c].size();
  for (const auto& row : rows) {
    for (std::size_t c = 0; c < row.size(); ++c) width[c] = std::max(width[c], row[c].size());
  }
  auto emit = [&](const std::vector<std::string>& row) {
    std::string line;
    for (std::size_t c = 0; c < row.size(); ++c) {
      if (c > 0) line += "  ";
      line += row[c];
      if (c + 1 < row.size()) line.append(width[c] - row[c].size(), ' ');
    }
    out << line << '\n';
  };
  out << provenance.comment_line() << '\n';
  emit(header);
  std::size_t total = 0;
  for (std::size_t w : width) total += w;
  out << std::string(total + 2 * (width.size() - 1), '-') << '\n';
  for (const auto& row : rows) emit(row);
}

void write_ladder_tsv(std::ostream& out, std::span<const LadderRow> ladder,
                      const Provenance& provenance) {
  out << provenance.comment_line() << '\n';
  out << "rank\tstate\tmean\tci_low\tci_high\n";
  for (std::size_t i = 0; i < ladder.size(); ++i) {
    out << (i + 1) << '\t' << ladder[i].state << '\t' << format_full(ladder[i].mean) << '\t'
        << format_full(ladder[i].ci_low) << '\t' << format_full(ladder[i].ci_high) << '\n';
  }
}

void write_diagnostic_series(std::ostream& out, const DiagnosticSeries& series,
                             const Provenance& provenance) {
  out << provenance.comment_line() << '\n';
  out << "# parameter: " << series.label.name << '\n';
  out << "[trace]\n";
  out << "chain\titeration\tvalue\n";
  for (std::size_t c = 0; c < series.trace_values.size(); ++c) {
    for (std::size_t i = 0; i < series.trace_values[c].size(); ++i) {
      out << c << '\t' << series.trace_iterations[c][i] << '\t'
          << format_full(series.trace_values[c][i]) << '\n';
    }
  }
  out << "[density]\n";
  if (series.density.point_mass) {
    out << "point_mass\t" << format_full(series.density.point_mass_location) << '\n';
    return;
  }
  out << "# bandwidth: " << format_full(series.density.bandwidth) << '\n';
  out << "x\tdensity\n";
  for (std::size_t g = 0; g < series.density.grid.size(); ++g) {
    out << format_full(series.density.grid[g]) << '\t' << format_full(series.density.density[g])
        << '\n';
  }
}

void write_draws(std::ostream& out, const ChainSet& chains, std::span<const ParameterLabel> labels,
                 const Provenance& provenance) {
  check_labels(chains, labels);
  out << provenance.comment_line() << '\n';
  out << "# warmup: " << chains.warmup << '\n';
  out << "chain\titeration";
  for (const auto& label : labels) {
    out << '\t' << (label.exp_transform ? "log_" + label.name : label.name);
  }
  out << '\n';
  for (std::size_t c = 0; c < chains.chains(); ++c) {
    for (std::size_t i = 0; i < chains.retained; ++i) {
      out << c << '\t' << (chains.warmup + i);
      for (std::size_t d = 0; d < chains.dimension; ++d) out << '\t' << format_full(chains.draw(c, i, d));
      out << '\n';
    }
  }
}

DrawsFile read_draws(std::istream& in) {
  const DelimitedTable table = read_delimited(in);
  if (table.header.size() < 3 || table.header[0] != "chain" || table.header[1] != "iteration") {
    throw InputError("draws file header must start with chain, iteration and name a parameter");
  }
  DrawsFile file;
  file.names.assign(table.header.begin() + 2, table.header.end());
  ChainSet& set = file.chains;
  set.dimension = file.names.size();
  if (const auto it = table.metadata.find("warmup"); it != table.metadata.end()) {
    set.warmup = parse_index(it->second);
  }
  for (std::size_t r = 0; r < table.rows.size(); ++r) {
    const auto& row = table.rows[r];
    if (row.size() != table.header.size()) {
      throw InputError("draws file line " + std::to_string(table.line_numbers[r]) +
                       " has the wrong number of fields");
    }
    const std::size_t chain = parse_index(row[0]);
    if (chain > set.draws.size()) throw InputError("draws file chains must be contiguous from 0");
    if (chain == set.draws.size()) set.draws.emplace_back();
    if (chain + 1 != set.draws.size()) throw InputError("draws file rows must be grouped by chain");
    for (std::size_t d = 0; d < set.dimension; ++d) set.draws[chain].push_back(parse_number(row[d + 2]));
  }
  if (set.draws.empty()) throw InputError("draws file contains no draws");
  set.retained = set.draws.front().size() / set.dimension;
  for (const auto& chain : set.draws) {
    if (chain.size() != set.retained * set.dimension) {
      throw InputError("draws file chains have unequal lengths");
    }
  }
  return file;
}

}  // namespace vaxbayes
