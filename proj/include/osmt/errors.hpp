#pragma once

#include <stdexcept>
#include <string>

namespace osmt {

/// Malformed configuration input (bad key, bad value, parse failure).
class ConfigError : public std::runtime_error {
public:
    explicit ConfigError(const std::string& what, int line = -1)
        : std::runtime_error(line >= 0 ? "line " + std::to_string(line) + ": " + what : what),
          line_(line) {}
    int line() const { return line_; }

private:
    int line_;
};

/// Requested computation exceeds the configured resource guard (e.g. dense matrix depth).
class ResourceError : public std::runtime_error {
    using std::runtime_error::runtime_error;
};

/// A --check recomputation disagreed with the recorded value.
class CheckError : public std::runtime_error {
    using std::runtime_error::runtime_error;
};

/// Iterative solver failed to converge; carries the last residual.
class ConvergenceError : public std::runtime_error {
public:
    ConvergenceError(const std::string& what, double residual)
        : std::runtime_error(what + " (residual " + std::to_string(residual) + ")"),
          residual_(residual) {}
    double residual() const { return residual_; }

private:
    double residual_;
};

}  // namespace osmt
