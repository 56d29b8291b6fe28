// error.hpp: exception types shared by every tfperf module
// =============================================================================
//
// The CLI maps these onto exit codes:
//   ConfigError, InfeasibleError -> 2
//   IoError                      -> 3
//
// =============================================================================
#pragma once

#include <stdexcept>
#include <string>

namespace tfperf {

/// A configuration or operator violates a documented invariant.
class ConfigError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

/// The accelerator cannot hold the smallest legal tile / mapping.
class InfeasibleError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

/// Reading or writing a file failed.
class IoError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

}  // namespace tfperf
