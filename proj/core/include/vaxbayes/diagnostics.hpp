// Apache License, Version 2.0, refer to LICENSE.txt

#pragma once

#include <span>
#include <vector>

namespace vaxbayes {

/// Split-chain potential scale reduction for one parameter. Each chain is
/// halved (the middle draw of an odd-length chain is dropped) and R-hat is
/// computed over the halves. A single chain is allowed.
///
/// Throws InputError if chains have unequal lengths or fewer than 4 draws
/// per half, and NumericalError("degenerate chain") when every draw is equal.
double split_rhat(std::span<const std::vector<double>> chains);

/// Multi-chain effective sample size from the combined autocorrelation
/// estimate, truncated at the first negative sum of adjacent-lag pairs
/// (Geyer's initial positive sequence). Clipped to [1, total draws].
///
/// Throws InputError for fewer than 8 draws in total or unequal chain
/// lengths, NumericalError for a constant sample.
double effective_sample_size(std::span<const std::vector<double>> chains);

/// Single-chain convenience overload.
double effective_sample_size(std::span<const double> draws);

}  // namespace vaxbayes
