#pragma once

#include <cstddef>
#include <stdexcept>
#include <string>

namespace mancv {

/// Base class of every exception thrown by this library.
struct error : std::runtime_error {
  using std::runtime_error::runtime_error;
};

/// Precondition violation (bad dimensions, out-of-range parameter, ...).
struct argument_error : error {
  using error::error;
};

/// Malformed input text; remembers the offending 1-based line.
struct parse_error : error {
  parse_error(const std::string& what, std::size_t line_number)
      : error("line " + std::to_string(line_number) + ": " + what),
        line(line_number) {}
  std::size_t line;
};

/// Linear-algebra failure that survived the jitter retry.
struct numerical_error : error {
  using error::error;
};

/// Iterative solver exhausted its iteration budget.
struct convergence_error : error {
  convergence_error(const std::string& what, double last_grad_norm)
      : error(what), grad_norm(last_grad_norm) {}
  double grad_norm;
};

/// The requested operation needs loss derivatives that do not exist.
struct unsupported_loss_error : error {
  using error::error;
};

/// Model selection had no usable grid point.
struct selection_error : error {
  using error::error;
};

}  // namespace mancv
