#pragma once

#include <stdexcept>
#include <string>

namespace roughtfe {

// Argument outside the mathematical domain (u <= 0 for the kernel, theta
// outside the box, nonpositive values in a log-log fit, ...).
class domain_error : public std::domain_error {
 public:
  using std::domain_error::domain_error;
};

// A solver state exceeded the blow-up bound or became non-finite.
class divergence_error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// A model lacks an oracle (gradient, Hessian) that the operation needs.
class unsupported_error : public std::logic_error {
 public:
  using std::logic_error::logic_error;
};

// det J(theta) fell below the invertibility threshold.
class singular_matrix_error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

class resource_error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

class grid_mismatch_error : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

class overflow_error : public std::overflow_error {
 public:
  using std::overflow_error::overflow_error;
};

// A power-law fit had a zero value off the reference point.
class degenerate_fit_error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

}  // namespace roughtfe
