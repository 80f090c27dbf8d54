#pragma once

#include <cstddef>
#include <stdexcept>
#include <string>

namespace mbp {

// Argument outside the mathematical domain of a function (u not in (0,1), x < 0, ...).
class DomainError : public std::domain_error {
public:
    using std::domain_error::domain_error;
};

// Iterative numerics (root finding, quadrature) did not converge.
class NumericError : public std::runtime_error {
public:
    explicit NumericError(const std::string& what, std::ptrdiff_t step = -1)
        : std::runtime_error(what), step_(step) {}

    // Step index at which a trajectory engine hit the failure, -1 if not applicable.
    std::ptrdiff_t step() const noexcept { return step_; }

private:
    std::ptrdiff_t step_;
};

// Bad configuration: unknown key, parameter outside its family domain, parse failure.
class ConfigError : public std::invalid_argument {
public:
    using std::invalid_argument::invalid_argument;
};

// An exact invariant (monotone coupling, absorption) was violated. Always a bug.
class InvariantError : public std::logic_error {
public:
    using std::logic_error::logic_error;
};

// Operation refused because its precondition does not hold (classification gate,
// stochastic-order certificate).
class PreconditionError : public std::invalid_argument {
public:
    using std::invalid_argument::invalid_argument;
};

// Transform requested on a law that does not admit it (zeta path on a law with atoms).
class UnsupportedTransform : public std::invalid_argument {
public:
    using std::invalid_argument::invalid_argument;
};

} // namespace mbp
