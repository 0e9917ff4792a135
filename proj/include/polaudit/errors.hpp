#pragma once

#include <stdexcept>
#include <string>

namespace polaudit {

// Bad input: malformed records, unknown filter values, inconsistent parameters.
// The CLI maps this to exit code 2.
class ValidationError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// Required records are absent (empty corpus, missing alignment coverage,
// missing embedding rows). The CLI maps this to exit code 3.
class MissingDataError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

}  // namespace polaudit
