#pragma once

#include <stdexcept>
#include <string>

namespace wdl {

/// Raised when an argument violates an operation's precondition.
class InvalidArgument : public std::invalid_argument {
public:
    using std::invalid_argument::invalid_argument;
};

/// Raised when a function is evaluated outside the set where it exists
/// (e.g. the Hessian of the energy density at the origin).
class DomainError : public std::domain_error {
public:
    using std::domain_error::domain_error;
};

/// Raised when the nonlinear solver hits a non-finite state.
class SolverFailure : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

#define WDL_REQUIRE(cond, ExceptionType, msg)                                  \
    do {                                                                       \
        if (!(cond)) {                                                         \
            throw ExceptionType(std::string(msg));                             \
        }                                                                      \
    } while (0)

} // namespace wdl
