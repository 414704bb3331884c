// Apache License, Version 2.0, refer to LICENSE.txt

#include "vaxbayes/model.hpp"

#include <algorithm>
#include <cmath>
#include <map>
#include <numbers>
#include <random>
#include <utility>

#include "vaxbayes/error.hpp"
#include "vaxbayes/random.hpp"

namespace vaxbayes {

namespace {

const double kHalfLog2Pi = 0.5 * std::log(2.0 * std::numbers::pi);

double normal_log_density(double x, double scale) {
  const double z = x / scale;
  return -kHalfLog2Pi - std::log(scale) - 0.5 * z * z;
}

template <std::size_t N>
std::size_t draw_category(const std::array<double, N>& probs, Rng& rng) {
  std::uniform_real_distribution<double> unit(0.0, 1.0);
  const double u = unit(rng);
  double cumulative = 0.0;
  for (std::size_t i = 0; i + 1 < N; ++i) {
    cumulative += probs[i];
    if (u < cumulative) return i;
  }
  return N - 1;
}

template <std::size_t N>
void validate_probabilities(const std::array<double, N>& probs, const char* name) {
  double total = 0.0;
  for (double p : probs) {
    if (!(p >= 0.0) || !std::isfinite(p)) {
      throw InputError(std::string("covariate distribution for ") + name +
                       " has a negative or non-finite probability");
    }
    total += p;
  }
  if (std::abs(total - 1.0) > 1e-9) {
    throw InputError(std::string("covariate distribution for ") + name + " does not sum to 1");
  }
}

double logistic(double eta) {
  if (eta >= 0.0) return 1.0 / (1.0 + std::exp(-eta));
  const double e = std::exp(eta);
  return e / (1.0 + e);
}

}  // namespace

double ParameterVector::sigma_alpha() const { return std::exp(log_sigma_alpha); }

std::vector<double> ParameterVector::flatten() const {
  std::vector<double> flat;
  flat.reserve(dimension());
  flat.insert(flat.end(), beta.begin(), beta.end());
  flat.insert(flat.end(), alpha.begin(), alpha.end());
  flat.push_back(log_sigma_alpha);
  return flat;
}

ParameterVector ParameterVector::unflatten(std::span<const double> flat, std::size_t state_count) {
  if (flat.size() != parameter_dimension(state_count)) {
    throw InputError("parameter vector has length " + std::to_string(flat.size()) +
                     ", expected " + std::to_string(parameter_dimension(state_count)));
  }
  ParameterVector params(state_count);
  std::copy_n(flat.begin(), kFixedEffectCount, params.beta.begin());
  std::copy_n(flat.begin() + kFixedEffectCount, state_count, params.alpha.begin());
  params.log_sigma_alpha = flat.back();
  return params;
}

void PriorSpec::validate() const {
  if (!(beta_scale > 0.0) || !std::isfinite(beta_scale)) {
    throw InputError("prior beta_scale must be positive and finite");
  }
  if (!(sigma_alpha_hyper_scale > 0.0) || !std::isfinite(sigma_alpha_hyper_scale)) {
    throw InputError("prior sigma_alpha_hyper_scale must be positive and finite");
  }
}

ModelInstance::ModelInstance(DesignMatrix design, PriorSpec prior)
    : design_(std::move(design)), prior_(prior) {
  prior_.validate();
  const std::size_t n = design_.rows();
  if (design_.state_index.size() != n || design_.response.size() != n) {
    throw InputError("design matrix columns have inconsistent lengths");
  }
  // Keyed by (pattern, state) so cell order, and therefore summation order,
  // does not depend on row order.
  std::map<std::pair<DesignMatrix::Row, std::size_t>, std::pair<double, double>> tallies;
  for (std::size_t i = 0; i < n; ++i) {
    if (design_.state_index[i] >= design_.state_count) {
      throw InputError("design state index out of range");
    }
    auto& [trials, successes] = tallies[{design_.indicators[i], design_.state_index[i]}];
    trials += 1.0;
    successes += design_.response[i] != 0 ? 1.0 : 0.0;
  }
  cells_.reserve(tallies.size());
  for (const auto& [key, tally] : tallies) {
    Cell cell;
    for (std::size_t k = 0; k < DesignMatrix::kIndicatorCount; ++k) {
      if (key.first[k] == 0) continue;
      if (key.first[k] != 1 || cell.active_count == cell.active.size()) {
        throw InputError("design row is not a valid dummy coding");
      }
      cell.active[cell.active_count++] = static_cast<std::uint8_t>(k + 1);
    }
    cell.state = key.second;
    cell.trials = tally.first;
    cell.successes = tally.second;
    cells_.push_back(cell);
  }
}

void ModelInstance::check_dimension(std::size_t size) const {
  if (size != dimension()) {
    throw InputError("parameter dimension " + std::to_string(size) + " does not match model (" +
                     std::to_string(dimension()) + ")");
  }
}

double ModelInstance::log_density(std::span<const double> theta) const {
  check_dimension(theta.size());
  const std::size_t states = state_count();
  const double* beta = theta.data();
  const double* alpha = theta.data() + kFixedEffectCount;
  const double log_sigma = theta.back();
  const double sigma = std::exp(log_sigma);

  double total = 0.0;
  for (const Cell& cell : cells_) {
    double eta = beta[0] + alpha[cell.state];
    for (std::uint8_t a = 0; a < cell.active_count; ++a) eta += beta[cell.active[a]];
    total += cell.successes * eta - cell.trials * softplus(eta);
  }
  for (std::size_t k = 0; k < kFixedEffectCount; ++k) {
    total += normal_log_density(beta[k], prior_.beta_scale);
  }
  for (std::size_t j = 0; j < states; ++j) total += normal_log_density(alpha[j], sigma);
  total += std::numbers::ln2 + normal_log_density(sigma, prior_.sigma_alpha_hyper_scale);
  total += log_sigma;
  return total;
}

double ModelInstance::log_density_gradient(std::span<const double> theta,
                                           std::span<double> gradient) const {
  check_dimension(theta.size());
  check_dimension(gradient.size());
  const std::size_t states = state_count();
  const double* beta = theta.data();
  const double* alpha = theta.data() + kFixedEffectCount;
  const double log_sigma = theta.back();
  const double sigma = std::exp(log_sigma);
  double* grad_beta = gradient.data();
  double* grad_alpha = gradient.data() + kFixedEffectCount;

  std::fill(gradient.begin(), gradient.end(), 0.0);
  double total = 0.0;
  for (const Cell& cell : cells_) {
    double eta = beta[0] + alpha[cell.state];
    for (std::uint8_t a = 0; a < cell.active_count; ++a) eta += beta[cell.active[a]];
    total += cell.successes * eta - cell.trials * softplus(eta);
    const double residual = cell.successes - cell.trials * logistic(eta);
    grad_beta[0] += residual;
    for (std::uint8_t a = 0; a < cell.active_count; ++a) grad_beta[cell.active[a]] += residual;
    grad_alpha[cell.state] += residual;
  }

  const double beta_precision = 1.0 / (prior_.beta_scale * prior_.beta_scale);
  for (std::size_t k = 0; k < kFixedEffectCount; ++k) {
    total += normal_log_density(beta[k], prior_.beta_scale);
    grad_beta[k] -= beta[k] * beta_precision;
  }
  const double alpha_precision = 1.0 / (sigma * sigma);
  double alpha_ss = 0.0;
  for (std::size_t j = 0; j < states; ++j) {
    total += normal_log_density(alpha[j], sigma);
    grad_alpha[j] -= alpha[j] * alpha_precision;
    alpha_ss += alpha[j] * alpha[j];
  }
  const double hyper = prior_.sigma_alpha_hyper_scale;
  total += std::numbers::ln2 + normal_log_density(sigma, hyper);
  total += log_sigma;
  // d/d(log sigma): alpha prior, half-normal hyperprior, Jacobian.
  gradient.back() = -static_cast<double>(states) + alpha_ss * alpha_precision -
                    sigma * sigma / (hyper * hyper) + 1.0;
  return total;
}

double softplus(double eta) {
  return eta > 0.0 ? eta + std::log1p(std::exp(-eta)) : std::log1p(std::exp(eta));
}

double predict_probability(double eta) {
  if (!std::isfinite(eta)) throw InputError("linear predictor is not finite");
  return logistic(eta);
}

double linear_predictor(const ParameterVector& params, std::size_t row,
                        const ModelInstance& model) {
  const DesignMatrix& design = model.design();
  if (row >= design.rows()) {
    throw InputError("row index " + std::to_string(row) + " out of range");
  }
  if (params.alpha.size() != model.state_count()) {
    throw InputError("parameter state count does not match model");
  }
  double eta = params.beta[0] + params.alpha[design.state_index[row]];
  for (std::size_t k = 0; k < DesignMatrix::kIndicatorCount; ++k) {
    if (design.indicators[row][k] != 0) eta += params.beta[k + 1];
  }
  return eta;
}

double log_posterior(const ParameterVector& params, const ModelInstance& model) {
  if (params.alpha.size() != model.state_count()) {
    throw InputError("parameter state count does not match model");
  }
  return model.log_density(params.flatten());
}

std::vector<double> grad_log_posterior(const ParameterVector& params, const ModelInstance& model) {
  if (params.alpha.size() != model.state_count()) {
    throw InputError("parameter state count does not match model");
  }
  std::vector<double> gradient(model.dimension());
  model.log_density_gradient(params.flatten(), gradient);
  return gradient;
}

void CovariateDistribution::validate() const {
  validate_probabilities(gender, "gender");
  validate_probabilities(race, "race");
  validate_probabilities(education, "education");
  validate_probabilities(income, "income");
}

SimulationLayout SimulationLayout::even(std::vector<std::string> states, std::size_t total) {
  SimulationLayout layout;
  const std::size_t s = states.size();
  if (s == 0) throw InputError("simulation layout needs at least one state");
  layout.counts.assign(s, total / s);
  for (std::size_t j = 0; j < total % s; ++j) ++layout.counts[j];
  layout.states = std::move(states);
  return layout;
}

SurveyDataset simulate_dataset(const ParameterVector& truth, const SimulationLayout& layout,
                               std::uint64_t seed) {
  layout.covariates.validate();
  if (layout.counts.size() != layout.states.size()) {
    throw InputError("simulation layout needs one record count per state");
  }
  if (truth.alpha.size() != layout.states.size()) {
    throw InputError("truth has " + std::to_string(truth.alpha.size()) +
                     " random intercepts for " + std::to_string(layout.states.size()) +
                     " states");
  }
  for (std::size_t j = 1; j < layout.states.size(); ++j) {
    if (!(layout.states[j - 1] < layout.states[j])) {
      throw InputError("simulation states must be sorted and distinct");
    }
  }

  Rng rng(derive_seed(seed, "simulate"));
  std::uniform_real_distribution<double> unit(0.0, 1.0);
  SurveyDataset data;
  data.states = layout.states;
  for (std::size_t j = 0; j < layout.states.size(); ++j) {
    for (std::size_t r = 0; r < layout.counts[j]; ++r) {
      SurveyRecord record;
      record.gender = static_cast<Gender>(draw_category(layout.covariates.gender, rng));
      record.race = static_cast<Race>(draw_category(layout.covariates.race, rng));
      record.education = static_cast<Education>(draw_category(layout.covariates.education, rng));
      record.income = static_cast<Income>(draw_category(layout.covariates.income, rng));
      record.state = layout.states[j];

      const auto x = encode_covariates(record);
      double eta = truth.beta[0] + truth.alpha[j];
      for (std::size_t k = 0; k < x.size(); ++k) {
        if (x[k] != 0) eta += truth.beta[k + 1];
      }
      record.vaccinated = unit(rng) < logistic(eta);
      data.records.push_back(std::move(record));
    }
  }
  return data;
}

}  // namespace vaxbayes
