// Apache License, Version 2.0, refer to LICENSE.txt

#include <doctest.h>

#include <atomic>
#include <cmath>
#include <memory>

#include "vaxbayes/diagnostics.hpp"
#include "vaxbayes/error.hpp"
#include "vaxbayes/hmc.hpp"
#include "vaxbayes/stats.hpp"

using namespace vaxbayes;

namespace {

// Independent Gaussian with per-coordinate standard deviations.
LogDensityGradient gaussian(std::vector<double> sd) {
  return [sd = std::move(sd)](std::span<const double> x, std::span<double> g) {
    double lp = 0.0;
    for (std::size_t i = 0; i < x.size(); ++i) {
      const double prec = 1.0 / (sd[i] * sd[i]);
      lp -= 0.5 * x[i] * x[i] * prec;
      g[i] = -x[i] * prec;
    }
    return lp;
  };
}

HmcConfig small_config(std::size_t iterations = 4000) {
  HmcConfig config;
  config.iterations = iterations;
  config.seed = 1234;
  config.workers = 1;
  config.leapfrog_steps = 16;
  return config;
}

}  // namespace

TEST_CASE("leapfrog with zero steps is the identity") {
  const std::vector<double> q{0.3, -1.2}, p{1.0, 0.5};
  const auto result = leapfrog(q, p, 0.1, 0, gaussian({1.0, 2.0}));
  CHECK(result.position == q);
  CHECK(result.momentum == p);
  CHECK_FALSE(result.divergent);
}

TEST_CASE("leapfrog is reversible") {
  const auto target = gaussian({1.0, 0.5, 3.0, 2.0, 0.8});
  const std::vector<double> q{0.3, -1.2, 2.0, 0.1, -0.4};
  const std::vector<double> p{1.0, 0.5, -0.7, 0.2, 1.1};
  const auto forward = leapfrog(q, p, 0.05, 40, target);
  std::vector<double> flipped = forward.momentum;
  for (double& v : flipped) v = -v;
  const auto back = leapfrog(forward.position, flipped, 0.05, 40, target);
  for (std::size_t i = 0; i < q.size(); ++i) {
    CHECK(std::abs(back.position[i] - q[i]) < 1e-8);
    CHECK(std::abs(back.momentum[i] + p[i]) < 1e-8);
  }
}

TEST_CASE("leapfrog energy error on the harmonic oscillator") {
  const auto target = gaussian({1.0});
  PhasePoint point = make_phase_point({1.0}, {0.5}, target);
  const double h0 = hamiltonian(point);
  REQUIRE(leapfrog(point, 0.01, 1000, target));
  CHECK(std::abs(hamiltonian(point) - h0) < 1e-3);
}

TEST_CASE("property: halving the step size cuts the energy error about fourfold") {
  const auto target = gaussian({1.0, 2.0});
  auto max_error = [&](double eps) {
    PhasePoint point = make_phase_point({1.0, -0.5}, {0.3, 0.8}, target);
    const double h0 = hamiltonian(point);
    double worst = 0.0;
    const auto steps = static_cast<std::size_t>(std::lround(6.0 / eps));
    for (std::size_t s = 0; s < steps; ++s) {
      leapfrog(point, eps, 1, target);
      worst = std::max(worst, std::abs(hamiltonian(point) - h0));
    }
    return worst;
  };
  const double ratio = max_error(0.1) / max_error(0.05);
  CHECK(ratio > 3.5);
  CHECK(ratio < 4.5);
}

TEST_CASE("leapfrog flags a non-finite gradient") {
  LogDensityGradient bad = [](std::span<const double> x, std::span<double> g) {
    g[0] = x[0] > 0.5 ? std::nan("") : -x[0];
    return -0.5 * x[0] * x[0];
  };
  const std::vector<double> q{0.0}, p{1.0};
  CHECK(leapfrog(q, p, 0.1, 20, bad).divergent);
}

TEST_CASE("initialize_chain") {
  const auto a = initialize_chain(50, 7);
  CHECK(a == initialize_chain(50, 7));
  CHECK(a != initialize_chain(50, 8));
  for (double x : a) {
    CHECK(x >= -1.0);
    CHECK(x <= 1.0);
  }
}

TEST_CASE("hmc_sample recovers standard normal moments") {
  const auto chains = hmc_sample(gaussian({1.0}), 1, small_config());
  REQUIRE(chains.chains() == 2);
  REQUIRE(chains.retained == 2000);
  const auto draws = chains.coordinate(0);
  std::vector<std::vector<double>> squares;
  std::vector<double> pooled;
  for (const auto& chain : draws) {
    pooled.insert(pooled.end(), chain.begin(), chain.end());
    squares.emplace_back();
    for (double x : chain) squares.back().push_back(x * x);
  }
  CHECK(std::abs(mean(pooled)) < 5.0 / std::sqrt(effective_sample_size(draws)));
  // Var(x^2) = 2 for a standard normal.
  CHECK(std::abs(sample_sd(pooled) * sample_sd(pooled) - 1.0) <
        5.0 * std::sqrt(2.0 / effective_sample_size(squares)));
  for (double rate : chains.accept_rate) {
    CHECK(rate >= 0.6);
    CHECK(rate <= 0.95);
  }
}

TEST_CASE("hmc_sample is bit-identical for a fixed seed whatever the worker count") {
  auto config = small_config(400);
  const auto a = hmc_sample(gaussian({1.0, 3.0}), 2, config);
  config.workers = 2;
  const auto b = hmc_sample(gaussian({1.0, 3.0}), 2, config);
  CHECK(a == b);
  config.seed += 1;
  CHECK_FALSE(a == hmc_sample(gaussian({1.0, 3.0}), 2, config));
}

TEST_CASE("property: recorded transitions obey the Metropolis rule") {
  const auto chains = hmc_sample(gaussian({1.0, 0.1, 10.0}), 3, small_config(1000));
  for (std::size_t c = 0; c < chains.chains(); ++c) {
    std::size_t accepted = 0;
    for (const auto& t : chains.transitions[c]) {
      if (t.divergent) {
        CHECK(t.accept_probability == 0.0);
        CHECK_FALSE(t.accepted);
        continue;
      }
      const double expected = std::min(1.0, std::exp(-t.energy_error));
      CHECK(t.accept_probability == doctest::Approx(expected).epsilon(1e-12));
      accepted += t.accepted ? 1 : 0;
    }
    CHECK(chains.accept_rate[c] == doctest::Approx(static_cast<double>(accepted) / chains.retained));
  }
}

TEST_CASE("property: frozen chain passes a moment check and adapts the mass matrix") {
  const std::vector<double> sd{0.2, 1.0, 5.0};
  const auto chains = hmc_sample(gaussian(sd), 3, small_config(4000));
  for (std::size_t d = 0; d < sd.size(); ++d) {
    const auto draws = chains.coordinate(d);
    std::vector<double> pooled, squares;
    for (const auto& chain : draws) {
      for (double x : chain) {
        pooled.push_back(x);
        squares.push_back(x * x);
      }
    }
    const double ess = effective_sample_size(draws);
    const double mcse = sd[d] / std::sqrt(ess);
    CHECK(std::abs(mean(pooled)) < 5.0 * mcse);
    // Second moment: Var(x^2) = 2 sd^4 for a centred Gaussian.
    const double second_se = std::sqrt(2.0) * sd[d] * sd[d] / std::sqrt(effective_sample_size(
                                 std::vector<std::vector<double>>{squares}));
    CHECK(std::abs(mean(squares) - sd[d] * sd[d]) < 5.0 * second_se);
    for (const auto& inv_mass : chains.inverse_mass) {
      CHECK(inv_mass[d] == doctest::Approx(sd[d] * sd[d]).epsilon(0.35));
    }
  }
}

TEST_CASE("property: chains are indexed by their own seed streams") {
  auto config = small_config(400);
  const auto two = hmc_sample(gaussian({1.0}), 1, config);
  config.chains = 3;
  const auto three = hmc_sample(gaussian({1.0}), 1, config);
  CHECK(two.draws[0] == three.draws[0]);
  CHECK(two.draws[1] == three.draws[1]);
  CHECK(three.draws[2] != three.draws[1]);
}

TEST_CASE("hmc_sample error paths") {
  CHECK_THROWS_AS(hmc_sample(gaussian({1.0}), 0, small_config()), InputError);
  auto short_warmup = small_config(150);
  CHECK_THROWS_AS(hmc_sample(gaussian({1.0}), 1, short_warmup), InputError);

  LogDensityGradient nowhere = [](std::span<const double>, std::span<double> g) {
    g[0] = 0.0;
    return std::nan("");
  };
  CHECK_THROWS_AS(hmc_sample(nowhere, 1, small_config(400)), NumericalError);

  // Finite only at the very first evaluation; every move diverges.
  auto calls = std::make_shared<std::atomic<int>>(0);
  LogDensityGradient cliff = [calls](std::span<const double> x, std::span<double> g) {
    g[0] = -x[0];
    return (*calls)++ == 0 ? 0.0 : std::nan("");
  };
  auto config = small_config(400);
  config.chains = 1;
  CHECK_THROWS_WITH_AS(hmc_sample(cliff, 1, config), doctest::Contains("diverged"), NumericalError);
}
