// Apache License, Version 2.0, refer to LICENSE.txt

/// Multilevel logistic regression with state random intercepts.
///
///   logit(pi_i) = beta_0 + sum_k beta_k x_ki + alpha_{state(i)}
///   beta_k   ~ Normal(0, beta_scale^2)            k = 0..10
///   alpha_j  ~ Normal(0, sigma_alpha^2)           j = 0..S-1
///   sigma_alpha ~ HalfNormal(0, sigma_alpha_hyper_scale^2)
///
/// The sampler works on the unconstrained vector
///   [beta_0 .. beta_10, alpha_0 .. alpha_{S-1}, log sigma_alpha]
/// and the log density includes the log-Jacobian of the exp transform.

#pragma once

#include <array>
#include <cstddef>
#include <cstdint>
#include <span>
#include <string>
#include <vector>

#include "vaxbayes/survey.hpp"

namespace vaxbayes {

inline constexpr std::size_t kFixedEffectCount = DesignMatrix::kFixedEffectCount;

struct ParameterVector {
  std::array<double, kFixedEffectCount> beta{};
  std::vector<double> alpha;
  double log_sigma_alpha = 0.0;

  explicit ParameterVector(std::size_t state_count = 0) : alpha(state_count, 0.0) {}

  std::size_t dimension() const { return kFixedEffectCount + alpha.size() + 1; }
  double sigma_alpha() const;

  std::vector<double> flatten() const;
  static ParameterVector unflatten(std::span<const double> flat, std::size_t state_count);
};

/// Unconstrained dimension for a model with `state_count` random intercepts.
constexpr std::size_t parameter_dimension(std::size_t state_count) {
  return kFixedEffectCount + state_count + 1;
}

struct PriorSpec {
  double beta_scale = 5.0;
  double sigma_alpha_hyper_scale = 2.5;

  /// Throws InputError unless both scales are positive and finite.
  void validate() const;
};

/// Immutable posterior target. Rows sharing a covariate pattern and state are
/// collapsed into binomial cells, so evaluation cost scales with the number
/// of distinct cells rather than respondents. An empty design is allowed and
/// yields the prior alone.
class ModelInstance {
 public:
  ModelInstance(DesignMatrix design, PriorSpec prior);

  const DesignMatrix& design() const { return design_; }
  const PriorSpec& prior() const { return prior_; }
  std::size_t state_count() const { return design_.state_count; }
  std::size_t dimension() const { return parameter_dimension(design_.state_count); }
  std::size_t cell_count() const { return cells_.size(); }

  /// Log posterior (up to the data-independent normalizer of the likelihood,
  /// which is exact for Bernoulli rows). Throws InputError on a dimension
  /// mismatch.
  double log_density(std::span<const double> theta) const;

  /// Same value as log_density; writes the gradient into `gradient`.
  double log_density_gradient(std::span<const double> theta, std::span<double> gradient) const;

 private:
  struct Cell {
    std::array<std::uint8_t, 4> active{};  // indicator columns equal to 1
    std::uint8_t active_count = 0;
    std::size_t state = 0;
    double trials = 0.0;
    double successes = 0.0;
  };

  void check_dimension(std::size_t size) const;

  DesignMatrix design_;
  PriorSpec prior_;
  std::vector<Cell> cells_;
};

double linear_predictor(const ParameterVector& params, std::size_t row,
                        const ModelInstance& model);

/// Logistic function, evaluated without overflow for any finite eta.
/// Throws InputError on a non-finite input.
double predict_probability(double eta);

/// log(1 + exp(eta)) without overflow or cancellation.
double softplus(double eta);

double log_posterior(const ParameterVector& params, const ModelInstance& model);
std::vector<double> grad_log_posterior(const ParameterVector& params, const ModelInstance& model);

/// Independent categorical marginals for simulated respondents; each array is
/// a probability vector over the enum levels in declaration order.
struct CovariateDistribution {
  std::array<double, 2> gender{0.5, 0.5};
  std::array<double, 4> race{0.25, 0.25, 0.25, 0.25};
  std::array<double, 4> education{0.25, 0.25, 0.25, 0.25};
  std::array<double, 4> income{0.25, 0.25, 0.25, 0.25};

  void validate() const;
};

struct SimulationLayout {
  std::vector<std::string> states;   // sorted, distinct; alpha follows this order
  std::vector<std::size_t> counts;   // records per state
  CovariateDistribution covariates;

  /// `total` records spread over `states` as evenly as possible, the
  /// remainder going to the first states.
  static SimulationLayout even(std::vector<std::string> states, std::size_t total);
};

/// Draws covariates, computes pi_i, and draws the response. Deterministic
/// for a fixed seed. The returned roster is the layout's state list.
SurveyDataset simulate_dataset(const ParameterVector& truth, const SimulationLayout& layout,
                               std::uint64_t seed);

}  // namespace vaxbayes
