#pragma once

#include <stdexcept>
#include <string>

namespace seqab {

// Thrown when a computation is numerically unusable: both plain and ridge
// solves fail, a sandwich variance comes out nonpositive, a degenerate
// crossover variance, etc. The CLI maps this to its own exit code; input
// and configuration problems use std::invalid_argument, protocol misuse
// (wrong call order, empty state) uses std::logic_error.
class NumericalError : public std::runtime_error {
 public:
  explicit NumericalError(const std::string& what) : std::runtime_error(what) {}
};

}  // namespace seqab
