#pragma once

#include <stdexcept>
#include <string>

namespace bernflow {

// Bad arguments, malformed configs, shape mismatches.
class InvalidArgument : public std::invalid_argument {
public:
    using std::invalid_argument::invalid_argument;
};

// A point lies outside the domain or support an operation is defined on.
class DomainError : public std::domain_error {
public:
    using std::domain_error::domain_error;
};

// Root-finder exhaustion, non-finite losses, vanishing derivatives.
class NumericError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

class MultiplicityError : public NumericError {
public:
    using NumericError::NumericError;
};

}  // namespace bernflow
