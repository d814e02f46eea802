#pragma once

#include <stdexcept>
#include <string>

namespace extdef {

/// Bad configuration or malformed input files. CLI exit code 2.
class config_error : public std::runtime_error {
public:
    explicit config_error(const std::string& msg) : std::runtime_error(msg) {}
};

/// Numerical failure (non-convergence, singular system, invalid domain).
/// CLI exit code 3.
class numeric_error : public std::runtime_error {
public:
    explicit numeric_error(const std::string& msg) : std::runtime_error(msg) {}
};

}  // namespace extdef
