#pragma once

#include <stdexcept>
#include <string>
#include <vector>

namespace qndtomo {

/// Malformed or physically invalid input parameters.
class ConfigError : public std::invalid_argument {
public:
    using std::invalid_argument::invalid_argument;
};

/// A numerical routine hit a pathological case (singular system, tolerance
/// violation, underflowing denominator).
class NumericalError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

/// Time integration did not reach a steady state within its step budget.
class ConvergenceError : public NumericalError {
public:
    ConvergenceError(const std::string& what, double residual)
        : NumericalError(what), residual_(residual) {}
    double residual() const noexcept { return residual_; }

private:
    double residual_;
};

/// Two or more logic-state peaks sit within one linewidth of each other.
class DegeneracyError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

/// The measurement plan does not determine every Pauli coefficient.
class PlanInsufficientError : public std::runtime_error {
public:
    PlanInsufficientError(const std::string& what, int rank,
                          std::vector<std::string> unconstrained)
        : std::runtime_error(what), rank_(rank), unconstrained_(std::move(unconstrained)) {}
    int rank() const noexcept { return rank_; }
    const std::vector<std::string>& unconstrained() const noexcept { return unconstrained_; }

private:
    int rank_;
    std::vector<std::string> unconstrained_;
};

}  // namespace qndtomo
