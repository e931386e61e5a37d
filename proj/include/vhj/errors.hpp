// SPDX-License-Identifier: MIT
#pragma once

#include <stdexcept>
#include <string>

namespace vhj {

/// Argument outside the domain of a closed-form object (e.g. U* at x <= 0).
class DomainError : public std::domain_error {
public:
    using std::domain_error::domain_error;
};

/// A numerically verified construction property failed.
class ConstructionError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

/// A hypothesis of an algorithm was violated by its input.
class PreconditionError : public std::invalid_argument {
public:
    using std::invalid_argument::invalid_argument;
};

/// The multibump recursion produced an unusable plan.
class PlanError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

/// Time integration failed (step underflow, NaN, Newton breakdown).
class NumericalError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

/// The k-monotone structure of the truncated family was violated.
class ConsistencyError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

/// A critical search was refused because its endpoint signs are invalid.
class SearchRefused : public std::runtime_error {
public:
    SearchRefused(const std::string& what, double objective_value)
        : std::runtime_error(what), objective(objective_value) {}
    double objective;
};

}  // namespace vhj
