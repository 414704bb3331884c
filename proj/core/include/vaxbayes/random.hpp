// Apache License, Version 2.0, refer to LICENSE.txt

#pragma once

#include <cstdint>
#include <random>
#include <string_view>

namespace vaxbayes {

using Rng = std::mt19937_64;

std::uint64_t splitmix64(std::uint64_t x);

/// Derives an independent seed for a named substream, e.g. ("chain", 1) or
/// ("gap", 37). The result depends only on the arguments, so reruns and
/// partial reruns reproduce the same random streams regardless of threading.
std::uint64_t derive_seed(std::uint64_t seed, std::string_view stream,
                          std::uint64_t index = 0);

/// 64-bit FNV-1a, used for config digests.
std::uint64_t fnv1a64(std::string_view text);

}  // namespace vaxbayes
