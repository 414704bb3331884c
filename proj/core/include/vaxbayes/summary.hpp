// Apache License, Version 2.0, refer to LICENSE.txt

/// Posterior summaries, odds ratios, the random-intercept ladder, and
/// plot-ready trace/density series, plus their text formats.

#pragma once

#include <cstddef>
#include <iosfwd>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "vaxbayes/hmc.hpp"
#include "vaxbayes/stats.hpp"
#include "vaxbayes/text_io.hpp"

namespace vaxbayes {

enum class ParameterKind { FixedEffect, RandomIntercept, Scale };

struct ParameterLabel {
  std::string name;      // machine name, also used for file names
  std::string contrast;  // human-readable description
  ParameterKind kind = ParameterKind::FixedEffect;
  bool exp_transform = false;  // sampled on the log scale, reported on the natural scale
};

/// Labels for the unconstrained model vector: beta0..beta10 with their
/// contrasts against the base categories, alpha_<STATE> per roster entry,
/// and sigma_alpha (sampled as log sigma_alpha).
std::vector<ParameterLabel> model_parameter_labels(std::span<const std::string> roster);

/// Reconstructs a label from a machine name produced by
/// model_parameter_labels ("log_sigma_alpha" is accepted for the scale).
/// Unknown names become fixed effects with no contrast text.
ParameterLabel label_from_name(const std::string& name);

/// exp(units * beta).
double odds_ratio(double beta, double units = 1.0);

struct ParameterSummary {
  ParameterLabel label;
  double mean = 0.0;
  double sd = 0.0;
  double q025 = 0.0;
  double q500 = 0.0;
  double q975 = 0.0;
  std::optional<double> odds_ratio;  // fixed effects only, exp(mean)
  double rhat = 0.0;                 // NaN when the draws are constant
  double ess = 0.0;                  // NaN when the draws are constant
};

struct PosteriorSummary {
  std::vector<ParameterSummary> parameters;

  const ParameterSummary* find(const std::string& name) const;
};

/// Pools post-warmup draws across chains. Quantiles use linear interpolation.
/// Throws InputError on a label/dimension mismatch or an empty chain set.
PosteriorSummary summarize_posterior(const ChainSet& chains,
                                     std::span<const ParameterLabel> labels);

struct LadderRow {
  std::string state;
  double mean = 0.0;
  double ci_low = 0.0;
  double ci_high = 0.0;
};

/// Random intercepts sorted by descending posterior mean (stable for ties).
/// Throws InputError unless the summary has exactly one random intercept per
/// roster entry, in roster order.
std::vector<LadderRow> random_intercept_ladder(const PosteriorSummary& summary,
                                               std::span<const std::string> roster);

inline constexpr std::size_t kMaxTracePoints = 1000;

struct DiagnosticSeries {
  ParameterLabel label;
  std::vector<std::vector<std::size_t>> trace_iterations;  // per chain
  std::vector<std::vector<double>> trace_values;           // per chain
  DensitySeries density;                                   // pooled draws
};

/// Thinned traces (at most kMaxTracePoints per chain) and a pooled kernel
/// density per parameter, on the reporting scale.
std::vector<DiagnosticSeries> emit_diagnostics(const ChainSet& chains,
                                               std::span<const ParameterLabel> labels);

/// Tab-separated: name, contrast, estimate, sd, ci_low, median, ci_high,
/// odds_ratio, rhat, ess. Full precision; "NA" for absent values.
void write_summary_tsv(std::ostream& out, const PosteriorSummary& summary,
                       const Provenance& provenance);

/// Aligned human-readable table, six significant digits.
void write_summary_table(std::ostream& out, const PosteriorSummary& summary,
                         const Provenance& provenance);

void write_ladder_tsv(std::ostream& out, std::span<const LadderRow> ladder,
                      const Provenance& provenance);

/// "[trace]" section with chain, iteration, value rows and a "[density]"
/// section with x, density rows (or "point_mass <location>").
void write_diagnostic_series(std::ostream& out, const DiagnosticSeries& series,
                             const Provenance& provenance);

/// Draws as chain, iteration, and one column per parameter, full precision.
void write_draws(std::ostream& out, const ChainSet& chains, std::span<const ParameterLabel> labels,
                 const Provenance& provenance);

struct DrawsFile {
  ChainSet chains;  // draws only; adaptation fields are empty
  std::vector<std::string> names;
};

/// Reads the format produced by write_draws. Throws InputError on malformed
/// input, ragged chains, or non-finite values.
DrawsFile read_draws(std::istream& in);

}  // namespace vaxbayes
