#pragma once

#include <stdexcept>
#include <string>

namespace imexl1 {

struct Error : std::runtime_error {
    using std::runtime_error::runtime_error;
};

// invalid parameter values (N = 0, gamma < 1, alpha outside (0,1), ...)
struct ParameterError : Error {
    using Error::Error;
};

struct ShapeError : Error {
    using Error::Error;
};

struct DomainError : Error {
    using Error::Error;
};

// argument outside the range where a routine is known to be accurate
struct RangeError : Error {
    using Error::Error;
};

struct LocationError : Error {
    using Error::Error;
};

struct InputError : Error {
    using Error::Error;
};

struct CoefficientError : Error {
    using Error::Error;
};

struct CatalogError : Error {
    using Error::Error;
};

struct UnsupportedForm : Error {
    using Error::Error;
};

// a theorem's hypothesis does not hold, so its conclusion is not claimed
struct HypothesisViolation : Error {
    using Error::Error;
};

struct StepFailure : Error {
    int step;
    StepFailure(int n, const std::string& what)
        : Error("step " + std::to_string(n) + ": " + what), step(n) {}
};

struct ConfigError : Error {
    using Error::Error;
};

}  // namespace imexl1
