#pragma once

#include <functional>
#include <iostream>
#include <stdexcept>
#include <string>
#include <utility>

namespace sparsemix {

/// Malformed arguments: wrong shapes, out-of-range parameters, bad config values.
class InvalidInput : public std::invalid_argument {
  public:
    using std::invalid_argument::invalid_argument;
};

/// A covariance that must be inverted is singular or indefinite.
class SingularCovariance : public std::runtime_error {
  public:
    using std::runtime_error::runtime_error;
};

/// Exhaustive support enumeration would exceed the configured cap.
class InfeasibleEnumeration : public std::runtime_error {
  public:
    using std::runtime_error::runtime_error;
};

/// A projection of the data has zero variance, so a moment ratio is 0/0.
class DegenerateProjection : public std::runtime_error {
  public:
    using std::runtime_error::runtime_error;
};

/// A calibration table lacks an entry required by a test.
class MissingCalibration : public std::runtime_error {
  public:
    using std::runtime_error::runtime_error;
};

class IoError : public std::runtime_error {
  public:
    using std::runtime_error::runtime_error;
};

// Non-fatal diagnostics (eigenvalue clipping, skipped supports).
using WarningHandler = std::function<void(const std::string&)>;

inline WarningHandler& warning_handler()
{
    static WarningHandler handler = [](const std::string& msg) {
        std::cerr << "sparsemix warning: " << msg << '\n';
    };
    return handler;
}

inline void set_warning_handler(WarningHandler handler)
{
    warning_handler() = std::move(handler);
}

inline void warn(const std::string& msg)
{
    if (warning_handler())
        warning_handler()(msg);
}

}  // namespace sparsemix
