// Apache License, Version 2.0, refer to LICENSE.txt

#pragma once

#include <cstddef>
#include <span>
#include <vector>

namespace vaxbayes {

double mean(std::span<const double> values);

/// Sample standard deviation (n - 1 denominator); 0 for fewer than two values.
double sample_sd(std::span<const double> values);

/// Quantile of already-sorted values with linear interpolation between order
/// statistics (position p * (n - 1)).
double sorted_quantile(std::span<const double> sorted, double p);

/// Sorts a copy and returns sorted_quantile.
double quantile(std::span<const double> values, double p);

/// Silverman's rule of thumb: 0.9 * min(sd, IQR / 1.34) * n^(-1/5), falling
/// back to sd when the IQR is zero.
double silverman_bandwidth(std::span<const double> values);

/// Gaussian kernel density on an evenly spaced grid spanning
/// [min - 3h, max + 3h]. Zero-variance input yields a point-mass marker
/// instead of a grid.
struct DensitySeries {
  std::vector<double> grid;
  std::vector<double> density;
  double bandwidth = 0.0;
  bool point_mass = false;
  double point_mass_location = 0.0;
};

inline constexpr std::size_t kDensityGridPoints = 256;

DensitySeries kernel_density(std::span<const double> values,
                             std::size_t grid_points = kDensityGridPoints);

/// Trapezoidal integral of a density series (1 for a point mass).
double trapezoid_integral(const DensitySeries& series);

}  // namespace vaxbayes
