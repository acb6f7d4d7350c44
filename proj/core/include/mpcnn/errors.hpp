#pragma once

#include <stdexcept>
#include <string>

namespace mpcnn {

/// Malformed or inconsistent input data (bad polytope, dimension mismatch, ...).
class ValidationError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Numerical failure: solver divergence, non-finite intermediates.
class NumericError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// The certification machinery cannot produce a valid certificate for the
/// given problem (e.g. the stability condition on c8 has no positive root).
class CertificationError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

}  // namespace mpcnn
