#pragma once

#include <functional>
#include <stdexcept>
#include <string>

namespace mwqed {

// Bad input to a model routine (negative depth, Δ on the wrong side of the edge, ...).
class PhysicsError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

// An iterative method stopped short of its tolerance. residual() is what it reached.
class ConvergenceError : public PhysicsError {
public:
    ConvergenceError(const std::string& what, double residual)
        : PhysicsError(what + " (residual " + std::to_string(residual) + ")"), residual_(residual) {}
    double residual() const { return residual_; }

private:
    double residual_;
};

// Non-fatal diagnostics. The default handler prints to stderr; passing an empty handler restores it.
using WarningHandler = std::function<void(const std::string&)>;
void set_warning_handler(WarningHandler h);
void warn(const std::string& msg);

}  // namespace mwqed
