#pragma once

#include <stdexcept>
#include <string>

namespace safeadp {

// Gradient of h requested at the disk center.
class SingularGradient : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

// State left the numerically safe interior (h <= h_min).
class BoundaryViolation : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

class InputOutOfBox : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

class QpInfeasible : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

class StepSizeUnderflow : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

// Construction-time invariant violations (bad matrices, bad geometry, ...).
class InvalidArgument : public std::invalid_argument {
public:
    using std::invalid_argument::invalid_argument;
};

class ConfigError : public std::runtime_error {
public:
    ConfigError(const std::string& key, int line, const std::string& what)
        : std::runtime_error(format(key, line, what)), key_(key), line_(line) {}

    const std::string& key() const noexcept { return key_; }
    int line() const noexcept { return line_; }

private:
    static std::string format(const std::string& key, int line, const std::string& what) {
        std::string msg = "config error";
        if (line > 0) msg += " at line " + std::to_string(line);
        if (!key.empty()) msg += " (key '" + key + "')";
        return msg + ": " + what;
    }

    std::string key_;
    int line_;
};

}  // namespace safeadp
