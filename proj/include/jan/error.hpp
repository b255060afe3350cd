#pragma once

#include <stdexcept>
#include <string>

namespace jan {

// Error taxonomy. The CLI maps these onto exit codes: ConfigError -> 1,
// DataError/FormatError -> 2, NumericError -> 3.
class Error : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

class ShapeError : public Error {
public:
    using Error::Error;
};

class NumericError : public Error {
public:
    using Error::Error;
};

class ConfigError : public Error {
public:
    using Error::Error;
};

class DataError : public Error {
public:
    using Error::Error;
};

class FormatError : public DataError {
public:
    using DataError::DataError;
};

} // namespace jan
