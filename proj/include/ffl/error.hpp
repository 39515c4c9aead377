#pragma once

#include <stdexcept>
#include <string>

namespace ffl {

/// Base class for all library errors.
class Error : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

/// A precondition or structural invariant of an input was violated.
class ValidationError : public Error {
public:
    using Error::Error;
};

/// An enumeration or precision budget ran out before the requested accuracy was reached.
class BudgetExhausted : public Error {
public:
    BudgetExhausted(const std::string& what, double achieved)
        : Error(what), achieved_(achieved) {}

    /// Best accuracy (or largest admissible size) that fits in the budget.
    double achieved() const noexcept { return achieved_; }

private:
    double achieved_;
};

}  // namespace ffl
