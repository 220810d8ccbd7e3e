#pragma once

#include <stdexcept>
#include <string>

namespace hac24 {

/// Invalid input data or a violated precondition on a value (bad labels,
/// zero parts, infeasible reallocations, malformed files).
class DataError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

/// A computation that could not produce a usable answer: rank deficiency,
/// singular matrices, EM failing in every start.
class NumericalError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

/// Bad command-line usage.
class UsageError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

}  // namespace hac24
