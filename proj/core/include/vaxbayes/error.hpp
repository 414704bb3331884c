// Apache License, Version 2.0, refer to LICENSE.txt

#pragma once

#include <stdexcept>

namespace vaxbayes {

/// Malformed input files, bad configuration, or violated preconditions on
/// user-supplied data. The CLI maps this to exit status 2.
class InputError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Numerical or model failure: degenerate chains, divergent warmup,
/// non-finite densities. The CLI maps this to exit status 1.
class NumericalError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

}  // namespace vaxbayes
