// Apache License, Version 2.0, refer to LICENSE.txt

#include "commands.hpp"

#include <CLI11.hpp>
#include <json.hpp>

#include <algorithm>
#include <cmath>
#include <fstream>
#include <iostream>
#include <random>
#include <set>
#include <utility>

#include "vaxbayes/error.hpp"
#include "vaxbayes/random.hpp"
#include "vaxbayes/summary.hpp"

namespace vaxbayes::cli {
namespace {

namespace fs = std::filesystem;

std::ifstream open_input(const fs::path& path, const char* what) {
  if (path.empty()) throw InputError(std::string("no ") + what + " file given");
  std::ifstream in(path);
  if (!in) throw InputError(std::string("cannot open ") + what + " file '" + path.string() + "'");
  return in;
}

std::ofstream open_output(const fs::path& path, std::ostream& log) {
  std::error_code ec;
  fs::create_directories(path.parent_path(), ec);
  std::ofstream out(path, std::ios::binary);
  if (!out) throw InputError("cannot write '" + path.string() + "'");
  log << "wrote " << path.generic_string() << "\n";
  return out;
}

void write_summary_files(const RunConfig& config, const ChainSet& chains,
                         std::span<const ParameterLabel> labels, std::ostream& log) {
  const auto provenance = config.provenance();
  const auto summary = summarize_posterior(chains, labels);
  {
    auto out = open_output(config.out_dir / "posterior_summary.tsv", log);
    write_summary_tsv(out, summary, provenance);
  }
  {
    auto out = open_output(config.out_dir / "posterior_summary.txt", log);
    write_summary_table(out, summary, provenance);
  }
  std::vector<std::string> roster;
  for (const auto& label : labels) {
    if (label.kind == ParameterKind::RandomIntercept) roster.push_back(label.name.substr(6));
  }
  if (!roster.empty()) {
    const auto ladder = random_intercept_ladder(summary, roster);
    auto out = open_output(config.out_dir / "random_intercepts.tsv", log);
    write_ladder_tsv(out, ladder, provenance);
  }
  for (const auto& series : emit_diagnostics(chains, labels)) {
    auto out = open_output(config.out_dir / "diagnostics" / (series.label.name + ".txt"), log);
    write_diagnostic_series(out, series, provenance);
  }
}

nlohmann::json manifest(const RunConfig& config, const ChainSet& chains,
                        std::span<const ParameterLabel> labels, const SurveyDataset& data) {
  nlohmann::json config_entries = nlohmann::json::object();
  std::istringstream dump(config.canonical_dump());
  for (std::string line; std::getline(dump, line);) {
    const auto eq = line.find('=');
    config_entries[line.substr(0, eq)] = line.substr(eq + 1);
  }
  const auto summary = summarize_posterior(chains, labels);
  double max_rhat = 0.0;
  std::string max_rhat_name;
  for (const auto& row : summary.parameters) {
    if (std::isfinite(row.rhat) && row.rhat > max_rhat) {
      max_rhat = row.rhat;
      max_rhat_name = row.label.name;
    }
  }
  nlohmann::json m;
  m["seed"] = config.seed;
  m["config_digest"] = config.digest();
  m["config"] = config_entries;
  m["records"] = data.records.size();
  m["dropped_rows"] = data.dropped_count;
  m["states"] = data.states;
  m["chains"] = chains.chains();
  m["warmup"] = chains.warmup;
  m["retained"] = chains.retained;
  m["max_rhat"] = max_rhat;
  m["max_rhat_parameter"] = max_rhat_name;
  m["divergences"] = chains.divergence_count;
  m["accept_rate"] = chains.accept_rate;
  m["step_size"] = chains.step_size;
  return m;
}

void require_varied_response(const DesignMatrix& design) {
  const auto ones = static_cast<std::size_t>(std::count(design.response.begin(), design.response.end(), 1));
  if (ones == 0 || ones == design.rows()) {
    throw NumericalError("separation/degenerate response: all " + std::to_string(design.rows()) +
                         " records have vaccinated=" + (ones == 0 ? "0" : "1") +
                         ", so the intercept is not identified");
  }
}

struct Truth {
  ParameterVector params{0};
  std::vector<std::string> states;
};

Truth read_truth(const RunConfig& config) {
  auto in = open_input(config.truth_path, "truth");
  std::map<std::string, double> values;
  std::string line;
  std::size_t number = 0;
  while (std::getline(in, line)) {
    ++number;
    const std::string body = trim(line.substr(0, line.find('#')));
    if (body.empty()) continue;
    const auto eq = body.find('=');
    const std::string where = config.truth_path.string() + ":" + std::to_string(number) + ": ";
    if (eq == std::string::npos) throw InputError(where + "expected name = value");
    const std::string key = trim(body.substr(0, eq));
    const std::string text = trim(body.substr(eq + 1));
    double value = 0.0;
    std::size_t used = 0;
    try {
      value = std::stod(text, &used);
    } catch (const std::exception&) {
      used = 0;
    }
    if (used != text.size() || text.empty() || !std::isfinite(value)) {
      throw InputError(where + "invalid number '" + text + "'");
    }
    if (!values.emplace(key, value).second) throw InputError(where + "duplicate entry '" + key + "'");
  }

  Truth truth;
  truth.states = default_state_roster();
  truth.params = ParameterVector(truth.states.size());
  for (std::size_t k = 0; k < kFixedEffectCount; ++k) {
    const auto it = values.find("beta" + std::to_string(k));
    if (it == values.end()) throw InputError("truth file is missing beta" + std::to_string(k));
    truth.params.beta[k] = it->second;
    values.erase(it);
  }
  const auto sigma = values.find("sigma_alpha");
  if (sigma == values.end() || !(sigma->second > 0.0)) {
    throw InputError("truth file needs a positive sigma_alpha");
  }
  truth.params.log_sigma_alpha = std::log(sigma->second);
  values.erase(sigma);

  Rng rng(derive_seed(config.seed, "alpha"));
  std::normal_distribution<double> alpha(0.0, truth.params.sigma_alpha());
  for (std::size_t j = 0; j < truth.states.size(); ++j) {
    const double drawn = alpha(rng);
    const auto it = values.find("alpha." + truth.states[j]);
    truth.params.alpha[j] = it == values.end() ? drawn : it->second;
    if (it != values.end()) values.erase(it);
  }
  if (!values.empty()) throw InputError("truth file has unknown entry '" + values.begin()->first + "'");
  return truth;
}

}  // namespace

void cmd_cluster(const RunConfig& config, std::ostream& log) {
  auto in = open_input(config.county_path, "county");
  const auto table = parse_county_rates(in);
  if (table.dropped_count > 0) log << "dropped " << table.dropped_count << " county rows\n";
  const auto features = build_state_features(table);
  const auto gap = gap_statistic(features.standardized, config.gap_options());
  const auto dendrogram = agglomerate(features.standardized, config.linkage);
  const auto labels = order_clusters_by_rate(cut_tree(dendrogram, gap.chosen_k), features.states, table);
  const auto summary = summarize_clusters(labels, features.states, table);
  const auto provenance = config.provenance();
  log << "gap statistic chose k=" << gap.chosen_k << " for " << features.states.size() << " states\n";
  {
    auto out = open_output(config.out_dir / "gap_curve.tsv", log);
    write_gap_curve(out, gap, provenance);
  }
  {
    auto out = open_output(config.out_dir / "cluster_assignments.tsv", log);
    write_assignments(out, features.states, labels, provenance);
  }
  {
    auto out = open_output(config.out_dir / "cluster_summary.txt", log);
    write_cluster_summary(out, summary, provenance);
  }
}

void cmd_fit(const RunConfig& config, std::ostream& log) {
  auto in = open_input(config.survey_path, "survey");
  const auto data = parse_survey(in, config.schema());
  log << "read " << data.records.size() << " records over " << data.states.size() << " states";
  if (data.dropped_count > 0) log << " (dropped " << data.dropped_count << ")";
  log << "\n";
  const auto design = encode_design(data);
  require_varied_response(design);
  const ModelInstance model(design, config.prior);
  const auto chains = hmc_sample(
      [&model](std::span<const double> x, std::span<double> g) { return model.log_density_gradient(x, g); },
      model.dimension(), config.hmc_config());
  const auto labels = model_parameter_labels(data.states);

  write_summary_files(config, chains, labels, log);
  {
    auto out = open_output(config.out_dir / "draws.tsv", log);
    write_draws(out, chains, labels, config.provenance());
  }
  auto out = open_output(config.out_dir / "manifest.json", log);
  out << manifest(config, chains, labels, data).dump(2) << "\n";
}

void cmd_simulate(const RunConfig& config, std::ostream& log) {
  if (config.records == 0) throw InputError("records must be positive");
  const auto truth = read_truth(config);
  const auto data = simulate_dataset(truth.params, SimulationLayout::even(truth.states, config.records), config.seed);
  const auto provenance = config.provenance();
  {
    auto out = open_output(config.out_dir / "survey.csv", log);
    const std::vector<std::string> comments{provenance.comment_line().substr(2)};
    write_survey(out, data, comments);
  }
  auto out = open_output(config.out_dir / "truth.tsv", log);
  out << provenance.comment_line() << "\nname\tvalue\n";
  for (std::size_t k = 0; k < kFixedEffectCount; ++k) {
    out << "beta" << k << "\t" << format_full(truth.params.beta[k]) << "\n";
  }
  for (std::size_t j = 0; j < truth.states.size(); ++j) {
    out << "alpha_" << truth.states[j] << "\t" << format_full(truth.params.alpha[j]) << "\n";
  }
  out << "sigma_alpha\t" << format_full(truth.params.sigma_alpha()) << "\n";
}

void cmd_diagnose(const RunConfig& config, std::ostream& log) {
  auto in = open_input(config.draws_path, "draws");
  const auto file = read_draws(in);
  std::vector<ParameterLabel> labels;
  for (const auto& name : file.names) labels.push_back(label_from_name(name));
  write_summary_files(config, file.chains, labels, log);
}

int run(std::span<const std::string> args, std::ostream& out, std::ostream& err) {
  CLI::App app{"Multilevel logistic regression by HMC and clustering of states by county rates", "vaxbayes"};
  app.require_subcommand(1);

  std::string config_path;
  std::vector<std::pair<std::string, std::string>> overrides;
  auto flag = [&overrides](CLI::App* sub, const std::string& name, const std::string& key,
                           const std::string& help) {
    sub->add_option_function<std::string>(
        name, [&overrides, key](const std::string& value) { overrides.emplace_back(key, value); }, help);
  };
  auto common = [&](CLI::App* sub) {
    sub->add_option("--config", config_path, "key = value settings file");
    flag(sub, "--seed", "seed", "top-level random seed");
    flag(sub, "--out-dir", "out_dir", "output directory");
    flag(sub, "--workers", "workers", "worker threads (0 = hardware concurrency)");
  };
  auto sampler = [&](CLI::App* sub) {
    flag(sub, "--chains", "hmc.chains", "number of chains");
    flag(sub, "--iterations", "hmc.iterations", "iterations per chain, warmup included");
    flag(sub, "--warmup-fraction", "hmc.warmup_fraction", "fraction of iterations used for warmup");
    flag(sub, "--target-accept", "hmc.target_accept", "dual-averaging acceptance target");
    flag(sub, "--leapfrog-steps", "hmc.leapfrog_steps", "leapfrog steps per trajectory");
  };

  auto* cluster = app.add_subcommand("cluster", "cluster states by county vaccination rates");
  common(cluster);
  flag(cluster, "--county", "county", "county rate table (state, county, rate_percent)");
  flag(cluster, "--linkage", "cluster.linkage", "ward, complete or average");
  flag(cluster, "--kmax", "cluster.kmax", "largest k tried by the gap statistic");
  flag(cluster, "--gap-refs", "cluster.gap_refs", "reference data sets for the gap statistic");

  auto* fit = app.add_subcommand("fit", "fit the multilevel logistic regression");
  common(fit);
  sampler(fit);
  flag(fit, "--survey", "survey", "survey microdata file");

  auto* simulate = app.add_subcommand("simulate", "simulate a survey file from known parameters");
  common(simulate);
  flag(simulate, "--truth", "truth", "truth parameters (name = value)");
  flag(simulate, "--records", "records", "number of records");

  auto* diagnose = app.add_subcommand("diagnose", "summarize an existing draws file");
  common(diagnose);
  flag(diagnose, "--draws", "draws", "draws.tsv written by fit");

  std::vector<std::string> reversed(args.rbegin(), args.rend());
  if (!reversed.empty()) reversed.pop_back();  // program name
  try {
    app.parse(reversed);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e, out, err);
    return code == 0 ? kExitSuccess : kExitInput;
  }

  try {
    RunConfig config;
    if (!config_path.empty()) apply_config_file(config, config_path);
    for (const auto& [key, value] : overrides) config.set(key, value);
    if (cluster->parsed()) cmd_cluster(config, out);
    if (fit->parsed()) cmd_fit(config, out);
    if (simulate->parsed()) cmd_simulate(config, out);
    if (diagnose->parsed()) cmd_diagnose(config, out);
  } catch (const InputError& e) {
    err << "error: " << e.what() << "\n";
    return kExitInput;
  } catch (const NumericalError& e) {
    err << "error: " << e.what() << "\n";
    return kExitNumerical;
  } catch (const std::exception& e) {
    err << "error: " << e.what() << "\n";
    return kExitNumerical;
  }
  return kExitSuccess;
}

}  // namespace vaxbayes::cli
