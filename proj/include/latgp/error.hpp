#pragma once

#include <stdexcept>
#include <string>

namespace latgp {

// Malformed or invalid input: bad files, schema violations, nonpositive values.
class DataError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

// Numerical failure such as a kernel matrix that will not factorize.
class NumericalError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

}  // namespace latgp
