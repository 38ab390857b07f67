#pragma once

#include <stdexcept>
#include <string>

namespace ssr {

/// Failure of a numerical step (singular solve, eigen-solver, non-finite state).
class NumericalError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

}  // namespace ssr
