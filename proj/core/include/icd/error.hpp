#pragma once

#include <stdexcept>
#include <string>

namespace icd {

/// Malformed or inconsistent input data (files, records, matrices).
class DataError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// A numerical routine failed to produce a usable result.
class NumericalError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

}  // namespace icd
