// Apache License, Version 2.0, refer to LICENSE.txt

#include "vaxbayes/hmc.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <exception>
#include <limits>
#include <random>
#include <string>
#include <thread>

#include "vaxbayes/error.hpp"
#include "vaxbayes/random.hpp"

namespace vaxbayes {

namespace {

bool all_finite(std::span<const double> values) {
  return std::all_of(values.begin(), values.end(), [](double v) { return std::isfinite(v); });
}

bool finite_point(const PhasePoint& point) {
  return std::isfinite(point.log_density) && all_finite(point.position) &&
         all_finite(point.momentum) && all_finite(point.gradient);
}

void draw_momentum(std::vector<double>& momentum, std::span<const double> inverse_mass, Rng& rng) {
  std::normal_distribution<double> normal(0.0, 1.0);
  for (std::size_t i = 0; i < momentum.size(); ++i) {
    momentum[i] = normal(rng) / std::sqrt(inverse_mass[i]);
  }
}

// Hoffman & Gelman (2014), algorithm 5.
class DualAveraging {
 public:
  DualAveraging(double initial_step, double target) { restart(initial_step, target); }

  void restart(double initial_step, double target) {
    mu_ = std::log(10.0 * initial_step);
    target_ = target;
    counter_ = 0;
    error_avg_ = 0.0;
    log_step_ = std::log(initial_step);
    log_step_avg_ = 0.0;
  }

  double update(double accept_probability) {
    ++counter_;
    const double m = static_cast<double>(counter_);
    const double weight = 1.0 / (m + kT0);
    error_avg_ = (1.0 - weight) * error_avg_ + weight * (target_ - accept_probability);
    log_step_ = mu_ - std::sqrt(m) / kGamma * error_avg_;
    const double eta = std::pow(m, -kKappa);
    log_step_avg_ = eta * log_step_ + (1.0 - eta) * log_step_avg_;
    return std::exp(log_step_);
  }

  double final_step() const { return counter_ == 0 ? std::exp(log_step_) : std::exp(log_step_avg_); }

 private:
  static constexpr double kGamma = 0.05;
  static constexpr double kT0 = 10.0;
  static constexpr double kKappa = 0.75;

  double mu_ = 0.0;
  double target_ = 0.8;
  std::size_t counter_ = 0;
  double error_avg_ = 0.0;
  double log_step_ = 0.0;
  double log_step_avg_ = 0.0;
};

// Running mean and variance (Welford).
class VarianceAccumulator {
 public:
  explicit VarianceAccumulator(std::size_t dim) : mean_(dim, 0.0), m2_(dim, 0.0) {}

  void add(std::span<const double> x) {
    ++count_;
    for (std::size_t i = 0; i < x.size(); ++i) {
      const double delta = x[i] - mean_[i];
      mean_[i] += delta / static_cast<double>(count_);
      m2_[i] += delta * (x[i] - mean_[i]);
    }
  }

  // Regularised toward 1e-3 with weight 5 / (n + 5), as in Stan.
  std::vector<double> regularized_variance() const {
    std::vector<double> var(mean_.size(), 1.0);
    if (count_ < 3) return var;
    const double n = static_cast<double>(count_);
    for (std::size_t i = 0; i < var.size(); ++i) {
      const double sample_var = m2_[i] / (n - 1.0);
      var[i] = (n / (n + 5.0)) * sample_var + 1e-3 * (5.0 / (n + 5.0));
    }
    return var;
  }

 private:
  std::size_t count_ = 0;
  std::vector<double> mean_;
  std::vector<double> m2_;
};

double transition_accept(double h_old, double h_new) {
  const double delta = h_old - h_new;
  return delta >= 0.0 ? 1.0 : std::exp(delta);
}

// Doubles or halves the step size until one leapfrog step's acceptance
// probability crosses 1/2.
double initial_step_size(const PhasePoint& start, std::span<const double> inverse_mass,
                         const LogDensityGradient& target, Rng& rng) {
  double step = 1.0;
  PhasePoint probe = start;
  draw_momentum(probe.momentum, inverse_mass, rng);
  const PhasePoint reference = probe;
  const double h0 = hamiltonian(reference, inverse_mass);

  auto accept_at = [&](double eps) {
    PhasePoint trial = reference;
    if (!leapfrog(trial, eps, 1, target, inverse_mass)) return 0.0;
    const double h1 = hamiltonian(trial, inverse_mass);
    return std::isfinite(h1) ? transition_accept(h0, h1) : 0.0;
  };

  double accept = accept_at(step);
  const bool grow = accept > 0.5;
  for (int i = 0; i < 60 && (grow ? accept > 0.5 : accept <= 0.5); ++i) {
    step = grow ? step * 2.0 : step * 0.5;
    accept = accept_at(step);
  }
  return step;
}

struct ChainResult {
  std::vector<double> draws;
  std::vector<TransitionStats> transitions;
  double step_size = 0.0;
  std::vector<double> inverse_mass;
};

ChainResult run_chain(const LogDensityGradient& target, std::size_t dimension,
                      const HmcConfig& config, std::size_t chain) {
  const std::uint64_t chain_seed = derive_seed(config.seed, "chain", chain);
  Rng rng(derive_seed(chain_seed, "transitions"));

  PhasePoint current;
  bool found = false;
  for (std::uint64_t attempt = 0; attempt < 100 && !found; ++attempt) {
    current = make_phase_point(initialize_chain(dimension, derive_seed(chain_seed, "init", attempt)),
                               std::vector<double>(dimension, 0.0), target);
    found = finite_point(current);
  }
  if (!found) {
    throw NumericalError("chain " + std::to_string(chain) +
                         ": no finite initial log density after 100 attempts");
  }

  const std::size_t warmup = config.warmup();
  const std::size_t mass_begin = warmup / 2;
  const std::size_t mass_end = warmup - warmup / 10;
  const std::size_t base_steps = config.leapfrog_steps;
  const auto min_steps = std::max<std::size_t>(
      1, static_cast<std::size_t>(std::lround(base_steps * (1.0 - config.step_jitter))));
  const auto max_steps = std::max<std::size_t>(
      min_steps, static_cast<std::size_t>(std::lround(base_steps * (1.0 + config.step_jitter))));
  std::uniform_int_distribution<std::size_t> steps_dist(min_steps, max_steps);
  std::uniform_real_distribution<double> unit(0.0, 1.0);

  std::vector<double> inverse_mass(dimension, 1.0);
  double step = initial_step_size(current, inverse_mass, target, rng);
  DualAveraging adapter(step, config.target_accept);
  VarianceAccumulator variance(dimension);
  std::size_t warmup_divergences = 0;

  ChainResult result;
  result.draws.reserve(config.retained() * dimension);
  result.transitions.reserve(config.retained());

  for (std::size_t iter = 0; iter < config.iterations; ++iter) {
    const bool adapting = iter < warmup;
    if (iter == warmup) step = adapter.final_step();

    PhasePoint proposal = current;
    draw_momentum(proposal.momentum, inverse_mass, rng);
    const double h_old = hamiltonian(proposal, inverse_mass);
    TransitionStats stats;
    stats.steps = steps_dist(rng);
    const bool finite = leapfrog(proposal, step, stats.steps, target, inverse_mass);
    const double h_new = finite ? hamiltonian(proposal, inverse_mass)
                                : std::numeric_limits<double>::infinity();
    stats.energy_error = h_new - h_old;
    stats.divergent = !finite || !std::isfinite(h_new) ||
                      std::abs(stats.energy_error) > kDivergenceThreshold;
    stats.accept_probability = stats.divergent ? 0.0 : transition_accept(h_old, h_new);
    // One uniform per transition, divergent or not.
    const double u = unit(rng);
    stats.accepted = !stats.divergent && u < stats.accept_probability;
    if (stats.accepted) current = std::move(proposal);

    if (adapting) {
      if (stats.divergent) ++warmup_divergences;
      step = adapter.update(stats.accept_probability);
      if (iter >= mass_begin && iter < mass_end) variance.add(current.position);
      if (iter + 1 == mass_end && mass_end > mass_begin && mass_end < warmup) {
        inverse_mass = variance.regularized_variance();
        step = initial_step_size(current, inverse_mass, target, rng);
        adapter.restart(step, config.target_accept);
      }
    } else {
      result.draws.insert(result.draws.end(), current.position.begin(), current.position.end());
      result.transitions.push_back(stats);
    }
  }
  if (warmup > 0 && warmup_divergences == warmup) {
    throw NumericalError("chain " + std::to_string(chain) +
                         ": every warmup transition diverged; the target may be improper "
                         "or badly scaled");
  }
  result.step_size = step;
  result.inverse_mass = std::move(inverse_mass);
  return result;
}

}  // namespace

PhasePoint make_phase_point(std::vector<double> position, std::vector<double> momentum,
                            const LogDensityGradient& target) {
  PhasePoint point;
  point.position = std::move(position);
  point.momentum = std::move(momentum);
  point.gradient.assign(point.position.size(), 0.0);
  point.log_density = target(point.position, point.gradient);
  return point;
}

double hamiltonian(const PhasePoint& point, std::span<const double> inverse_mass) {
  double kinetic = 0.0;
  for (std::size_t i = 0; i < point.momentum.size(); ++i) {
    const double m_inv = inverse_mass.empty() ? 1.0 : inverse_mass[i];
    kinetic += point.momentum[i] * point.momentum[i] * m_inv;
  }
  return -point.log_density + 0.5 * kinetic;
}

bool leapfrog(PhasePoint& point, double step_size, std::size_t steps,
              const LogDensityGradient& target, std::span<const double> inverse_mass) {
  const std::size_t dim = point.position.size();
  const double half = 0.5 * step_size;
  for (std::size_t s = 0; s < steps; ++s) {
    for (std::size_t i = 0; i < dim; ++i) point.momentum[i] += half * point.gradient[i];
    for (std::size_t i = 0; i < dim; ++i) {
      const double m_inv = inverse_mass.empty() ? 1.0 : inverse_mass[i];
      point.position[i] += step_size * m_inv * point.momentum[i];
    }
    point.log_density = target(point.position, point.gradient);
    for (std::size_t i = 0; i < dim; ++i) point.momentum[i] += half * point.gradient[i];
    if (!finite_point(point)) return false;
  }
  return true;
}

LeapfrogResult leapfrog(std::span<const double> position, std::span<const double> momentum,
                        double step_size, std::size_t steps, const LogDensityGradient& target,
                        std::span<const double> inverse_mass) {
  if (position.size() != momentum.size()) {
    throw InputError("position and momentum dimensions differ");
  }
  if (!(step_size > 0.0)) throw InputError("leapfrog step size must be positive");
  PhasePoint point = make_phase_point({position.begin(), position.end()},
                                      {momentum.begin(), momentum.end()}, target);
  LeapfrogResult result;
  result.divergent = !finite_point(point) || !leapfrog(point, step_size, steps, target, inverse_mass);
  result.position = std::move(point.position);
  result.momentum = std::move(point.momentum);
  return result;
}

std::size_t HmcConfig::warmup() const {
  return static_cast<std::size_t>(std::floor(static_cast<double>(iterations) * warmup_fraction + 1e-9));
}

void HmcConfig::validate() const {
  if (chains == 0) throw InputError("chains must be positive");
  if (iterations == 0) throw InputError("iterations must be positive");
  if (!(warmup_fraction > 0.0 && warmup_fraction < 1.0)) {
    throw InputError("warmup_fraction must lie in (0, 1)");
  }
  if (!(target_accept > 0.0 && target_accept < 1.0)) {
    throw InputError("target_accept must lie in (0, 1)");
  }
  if (leapfrog_steps == 0) throw InputError("leapfrog_steps must be positive");
  if (!(step_jitter >= 0.0 && step_jitter < 1.0)) throw InputError("step_jitter must lie in [0, 1)");
  if (warmup() < 100) {
    throw InputError("warmup must be at least 100 iterations (got " + std::to_string(warmup()) + ")");
  }
  if (retained() == 0) throw InputError("no post-warmup iterations remain");
}

std::vector<std::vector<double>> ChainSet::coordinate(std::size_t index) const {
  std::vector<std::vector<double>> out(chains(), std::vector<double>(retained));
  for (std::size_t c = 0; c < chains(); ++c) {
    for (std::size_t i = 0; i < retained; ++i) out[c][i] = draw(c, i, index);
  }
  return out;
}

std::vector<double> initialize_chain(std::size_t dimension, std::uint64_t seed) {
  Rng rng(seed);
  std::uniform_real_distribution<double> uniform(-1.0, 1.0);
  std::vector<double> position(dimension);
  for (double& x : position) x = uniform(rng);
  return position;
}

ChainSet hmc_sample(const LogDensityGradient& target, std::size_t dimension,
                    const HmcConfig& config) {
  if (dimension == 0) throw InputError("sampler dimension must be at least 1");
  config.validate();

  std::vector<ChainResult> results(config.chains);
  std::vector<std::exception_ptr> errors(config.chains);
  std::atomic<std::size_t> next{0};
  auto worker = [&] {
    for (std::size_t c = next++; c < config.chains; c = next++) {
      try {
        results[c] = run_chain(target, dimension, config, c);
      } catch (...) {
        errors[c] = std::current_exception();
      }
    }
  };
  std::size_t workers = config.workers != 0 ? config.workers
                                            : std::max(1u, std::thread::hardware_concurrency());
  workers = std::min(workers, config.chains);
  if (workers <= 1) {
    worker();
  } else {
    std::vector<std::jthread> pool;
    for (std::size_t w = 0; w < workers; ++w) pool.emplace_back(worker);
  }
  for (const auto& error : errors) {
    if (error) std::rethrow_exception(error);
  }

  ChainSet set;
  set.dimension = dimension;
  set.warmup = config.warmup();
  set.retained = config.retained();
  for (auto& r : results) {
    std::size_t accepted = 0;
    std::size_t divergent = 0;
    for (const auto& t : r.transitions) {
      accepted += t.accepted ? 1 : 0;
      divergent += t.divergent ? 1 : 0;
    }
    set.accept_rate.push_back(static_cast<double>(accepted) / static_cast<double>(set.retained));
    set.divergence_count.push_back(divergent);
    set.step_size.push_back(r.step_size);
    set.draws.push_back(std::move(r.draws));
    set.inverse_mass.push_back(std::move(r.inverse_mass));
    set.transitions.push_back(std::move(r.transitions));
  }
  return set;
}

}  // namespace vaxbayes
