// Apache License, Version 2.0, refer to LICENSE.txt

#include "vaxbayes/stats.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <stdexcept>

namespace vaxbayes {

double mean(std::span<const double> values) {
  if (values.empty()) return 0.0;
  double sum = 0.0;
  for (double v : values) sum += v;
  return sum / static_cast<double>(values.size());
}

double sample_sd(std::span<const double> values) {
  if (values.size() < 2) return 0.0;
  const double m = mean(values);
  double ss = 0.0;
  for (double v : values) ss += (v - m) * (v - m);
  return std::sqrt(ss / static_cast<double>(values.size() - 1));
}

double sorted_quantile(std::span<const double> sorted, double p) {
  if (sorted.empty()) throw std::invalid_argument("quantile of empty sample");
  if (sorted.size() == 1) return sorted.front();
  const double pos = std::clamp(p, 0.0, 1.0) * static_cast<double>(sorted.size() - 1);
  const auto lo = static_cast<std::size_t>(std::floor(pos));
  const std::size_t hi = std::min(lo + 1, sorted.size() - 1);
  const double frac = pos - static_cast<double>(lo);
  return sorted[lo] + frac * (sorted[hi] - sorted[lo]);
}

double quantile(std::span<const double> values, double p) {
  std::vector<double> sorted(values.begin(), values.end());
  std::sort(sorted.begin(), sorted.end());
  return sorted_quantile(sorted, p);
}

double silverman_bandwidth(std::span<const double> values) {
  const double sd = sample_sd(values);
  std::vector<double> sorted(values.begin(), values.end());
  std::sort(sorted.begin(), sorted.end());
  const double iqr = sorted_quantile(sorted, 0.75) - sorted_quantile(sorted, 0.25);
  const double spread = iqr > 0.0 ? std::min(sd, iqr / 1.34) : sd;
  return 0.9 * spread * std::pow(static_cast<double>(values.size()), -0.2);
}

DensitySeries kernel_density(std::span<const double> values, std::size_t grid_points) {
  if (values.empty()) throw std::invalid_argument("kernel density of empty sample");
  if (grid_points < 2) throw std::invalid_argument("density grid needs at least 2 points");
  DensitySeries series;
  const auto [min_it, max_it] = std::minmax_element(values.begin(), values.end());
  const double h = silverman_bandwidth(values);
  if (!(h > 0.0) || *min_it == *max_it) {
    series.point_mass = true;
    series.point_mass_location = mean(values);
    return series;
  }
  series.bandwidth = h;
  const double lo = *min_it - 3.0 * h;
  const double hi = *max_it + 3.0 * h;
  const double step = (hi - lo) / static_cast<double>(grid_points - 1);
  const double norm =
      1.0 / (static_cast<double>(values.size()) * h * std::sqrt(2.0 * std::numbers::pi));

  std::vector<double> sorted(values.begin(), values.end());
  std::sort(sorted.begin(), sorted.end());
  // Kernel contributions beyond 8 bandwidths are below 1e-14 and skipped.
  const double cutoff = 8.0 * h;
  series.grid.resize(grid_points);
  series.density.resize(grid_points);
  for (std::size_t g = 0; g < grid_points; ++g) {
    const double x = lo + step * static_cast<double>(g);
    auto first = std::lower_bound(sorted.begin(), sorted.end(), x - cutoff);
    auto last = std::upper_bound(first, sorted.end(), x + cutoff);
    double sum = 0.0;
    for (auto it = first; it != last; ++it) {
      const double z = (x - *it) / h;
      sum += std::exp(-0.5 * z * z);
    }
    series.grid[g] = x;
    series.density[g] = sum * norm;
  }
  return series;
}

double trapezoid_integral(const DensitySeries& series) {
  if (series.point_mass) return 1.0;
  double total = 0.0;
  for (std::size_t i = 1; i < series.grid.size(); ++i) {
    total += 0.5 * (series.density[i] + series.density[i - 1]) *
             (series.grid[i] - series.grid[i - 1]);
  }
  return total;
}

}  // namespace vaxbayes
