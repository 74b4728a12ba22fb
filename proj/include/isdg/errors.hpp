#pragma once

#include <stdexcept>
#include <string>

namespace isdg {

// Bad input: malformed files, inconsistent corpora, out-of-range requests.
// The CLI maps this to exit code 2; anything else is an internal error.
class ValidationError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

}  // namespace isdg
