#pragma once

#include <stdexcept>
#include <string>

namespace foram {

// Bad inputs, bad config, violated preconditions. CLI maps this to exit code 1.
struct ValidationError : std::invalid_argument {
  using std::invalid_argument::invalid_argument;
};

// I/O failures, malformed files, numeric divergence. CLI maps this to exit code 2.
struct RuntimeFailure : std::runtime_error {
  using std::runtime_error::runtime_error;
};

}  // namespace foram
