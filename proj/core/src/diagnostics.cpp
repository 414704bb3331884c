// Apache License, Version 2.0, refer to LICENSE.txt

#include "vaxbayes/diagnostics.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

#include "vaxbayes/error.hpp"
#include "vaxbayes/stats.hpp"

namespace vaxbayes {

namespace {

std::size_t common_length(std::span<const std::vector<double>> chains) {
  if (chains.empty()) throw InputError("no chains supplied");
  const std::size_t n = chains.front().size();
  for (const auto& chain : chains) {
    if (chain.size() != n) throw InputError("chains have unequal lengths");
  }
  return n;
}

bool constant_sample(std::span<const std::vector<double>> chains) {
  const double first = chains.front().front();
  for (const auto& chain : chains) {
    for (double v : chain) {
      if (v != first) return false;
    }
  }
  return true;
}

double sample_variance(std::span<const double> values) {
  const double sd = sample_sd(values);
  return sd * sd;
}

// Autocovariance at `lag` with divisor n (biased, positive semi-definite).
double autocovariance(std::span<const double> x, double m, std::size_t lag) {
  double sum = 0.0;
  for (std::size_t i = 0; i + lag < x.size(); ++i) sum += (x[i] - m) * (x[i + lag] - m);
  return sum / static_cast<double>(x.size());
}

}  // namespace

double split_rhat(std::span<const std::vector<double>> chains) {
  const std::size_t n = common_length(chains);
  const std::size_t half = n / 2;
  if (half < 4) throw InputError("split R-hat needs at least 4 draws per half chain");
  if (constant_sample(chains)) throw NumericalError("degenerate chain: zero total variance");

  std::vector<double> means;
  std::vector<double> variances;
  for (const auto& chain : chains) {
    const std::span<const double> all(chain);
    for (const auto part : {all.first(half), all.last(half)}) {
      means.push_back(mean(part));
      variances.push_back(sample_variance(part));
    }
  }
  const double m = static_cast<double>(means.size());
  const double len = static_cast<double>(half);
  const double grand = mean(means);
  double between = 0.0;
  for (double mu : means) between += (mu - grand) * (mu - grand);
  between *= len / (m - 1.0);
  const double within = mean(variances);
  if (!(within > 0.0)) return std::numeric_limits<double>::infinity();
  const double pooled = (len - 1.0) / len * within + between / len;
  return std::sqrt(pooled / within);
}

double effective_sample_size(std::span<const std::vector<double>> chains) {
  const std::size_t n = common_length(chains);
  const std::size_t m = chains.size();
  const double total = static_cast<double>(n * m);
  if (n * m < 8 || n < 2) throw InputError("effective sample size needs at least 8 draws");
  if (constant_sample(chains)) throw NumericalError("degenerate chain: zero total variance");

  std::vector<double> chain_means(m);
  std::vector<double> chain_vars(m);
  for (std::size_t c = 0; c < m; ++c) {
    chain_means[c] = mean(chains[c]);
    chain_vars[c] = sample_variance(chains[c]);
  }
  const double len = static_cast<double>(n);
  const double within = mean(chain_vars);
  double pooled = (len - 1.0) / len * within;
  if (m > 1) pooled += sample_variance(chain_means);
  if (!(pooled > 0.0)) return 1.0;

  // rho_t = 1 - (W - mean_c acov_c(t)) / var+, with chain acov rescaled to
  // the n - 1 denominator used by W.
  auto rho = [&](std::size_t lag) {
    double acov = 0.0;
    for (std::size_t c = 0; c < m; ++c) acov += autocovariance(chains[c], chain_means[c], lag);
    acov = acov / static_cast<double>(m) * len / (len - 1.0);
    return 1.0 - (within - acov) / pooled;
  };

  // Sum of positive adjacent pairs P_k = rho_{2k} + rho_{2k+1}, each
  // forced non-increasing (initial monotone sequence).
  double tau = -1.0;
  double previous_pair = std::numeric_limits<double>::infinity();
  for (std::size_t k = 0; 2 * k + 1 < n; ++k) {
    double pair = rho(2 * k) + rho(2 * k + 1);
    if (!(pair > 0.0)) break;
    pair = std::min(pair, previous_pair);
    tau += 2.0 * pair;
    previous_pair = pair;
  }
  if (!(tau > 0.0)) return total;
  return std::clamp(total / tau, 1.0, total);
}

double effective_sample_size(std::span<const double> draws) {
  const std::vector<std::vector<double>> single{{draws.begin(), draws.end()}};
  return effective_sample_size(single);
}

}  // namespace vaxbayes
