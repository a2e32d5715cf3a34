#pragma once

#include <stdexcept>
#include <string>

namespace nsmk {

/// Invalid configuration or precondition; the CLI maps it to exit code 2.
class ConfigError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

/// Non-finite state produced by the time integrator.
class IntegrationDiverged : public std::runtime_error {
public:
    IntegrationDiverged(double last_valid_time, const std::string& what)
        : std::runtime_error(what), last_valid_time_(last_valid_time) {}
    double last_valid_time() const { return last_valid_time_; }

private:
    double last_valid_time_;
};

/// Malformed snapshot or CSV input.
class FormatError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

}  // namespace nsmk
