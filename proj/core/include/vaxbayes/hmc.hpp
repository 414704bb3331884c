// Apache License, Version 2.0, refer to LICENSE.txt

/// Static-trajectory Hamiltonian Monte Carlo with dual-averaging step-size
/// adaptation and a diagonal mass matrix estimated during warmup.

#pragma once

#include <cstddef>
#include <cstdint>
#include <functional>
#include <span>
#include <vector>

namespace vaxbayes {

/// Returns log p(x) and writes d log p / dx into the second argument. Must
/// be safe to call concurrently; non-finite values mark a divergence.
using LogDensityGradient = std::function<double(std::span<const double>, std::span<double>)>;

/// Position, momentum, and the cached log density and gradient at the
/// position.
struct PhasePoint {
  std::vector<double> position;
  std::vector<double> momentum;
  std::vector<double> gradient;
  double log_density = 0.0;
};

/// Evaluates log density and gradient at `position`.
PhasePoint make_phase_point(std::vector<double> position, std::vector<double> momentum,
                            const LogDensityGradient& target);

/// Potential plus kinetic energy, -log p(q) + p' M^-1 p / 2. An empty
/// inverse mass means identity.
double hamiltonian(const PhasePoint& point, std::span<const double> inverse_mass = {});

/// Applies `steps` half-kick / drift / half-kick updates in place. Returns
/// false (and stops early) once the state becomes non-finite.
bool leapfrog(PhasePoint& point, double step_size, std::size_t steps,
              const LogDensityGradient& target, std::span<const double> inverse_mass = {});

struct LeapfrogResult {
  std::vector<double> position;
  std::vector<double> momentum;
  bool divergent = false;
};

/// Value-returning convenience form of the in-place integrator.
LeapfrogResult leapfrog(std::span<const double> position, std::span<const double> momentum,
                        double step_size, std::size_t steps, const LogDensityGradient& target,
                        std::span<const double> inverse_mass = {});

struct HmcConfig {
  std::size_t chains = 2;
  std::size_t iterations = 10000;  // per chain, warmup included
  double warmup_fraction = 0.5;
  double target_accept = 0.8;
  std::size_t leapfrog_steps = 32;
  double step_jitter = 0.2;  // trajectory length drawn uniformly in L(1 +/- jitter)
  std::uint64_t seed = 20221219;
  std::size_t workers = 0;  // 0 = hardware concurrency

  std::size_t warmup() const;
  std::size_t retained() const { return iterations - warmup(); }

  /// Throws InputError on out-of-range values or fewer than 100 warmup
  /// iterations.
  void validate() const;
};

/// Hamiltonian error above which a transition counts as divergent.
inline constexpr double kDivergenceThreshold = 1000.0;

struct TransitionStats {
  double accept_probability = 0.0;  // min(1, exp(H_old - H_new)); 0 if divergent
  double energy_error = 0.0;        // H_new - H_old
  std::size_t steps = 0;
  bool accepted = false;
  bool divergent = false;

  friend bool operator==(const TransitionStats&, const TransitionStats&) = default;
};

/// Post-warmup draws of every chain.
struct ChainSet {
  std::size_t dimension = 0;
  std::size_t warmup = 0;
  std::size_t retained = 0;
  std::vector<std::vector<double>> draws;  // per chain, row-major retained x dimension
  std::vector<double> accept_rate;         // accepted / retained
  std::vector<double> step_size;
  std::vector<std::size_t> divergence_count;  // post-warmup
  std::vector<std::vector<double>> inverse_mass;
  std::vector<std::vector<TransitionStats>> transitions;  // post-warmup

  std::size_t chains() const { return draws.size(); }
  double draw(std::size_t chain, std::size_t iteration, std::size_t coordinate) const {
    return draws[chain][iteration * dimension + coordinate];
  }
  /// One coordinate's draws, one vector per chain.
  std::vector<std::vector<double>> coordinate(std::size_t index) const;

  friend bool operator==(const ChainSet&, const ChainSet&) = default;
};

/// Uniform draws on [-1, 1]^dimension.
std::vector<double> initialize_chain(std::size_t dimension, std::uint64_t seed);

/// Runs config.chains independent chains. Chain c draws its randomness from
/// derive_seed(config.seed, "chain", c), so results are bit-identical for a
/// fixed seed whatever the worker count.
///
/// Warmup schedule with W warmup iterations:
///   [0, W)          dual averaging of the step size toward target_accept
///   [W/2, 9W/10)    positions collected for the diagonal mass matrix
///   9W/10           mass matrix installed, step size re-initialised and
///                   dual averaging restarted for the remaining warmup
/// Everything is frozen after warmup.
///
/// Throws NumericalError if no finite initial point is found or every warmup
/// transition diverges.
ChainSet hmc_sample(const LogDensityGradient& target, std::size_t dimension,
                    const HmcConfig& config);

}  // namespace vaxbayes
