#pragma once

#include <stdexcept>
#include <string>

namespace fockscope {

// Base of every error raised by the library. Each subclass names one failure
// category from the public contract so callers can map them to exit codes.
class Error : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

class DimensionError : public Error {
public:
    using Error::Error;
};

class InvalidStateError : public Error {
public:
    using Error::Error;
};

class InvalidDistributionError : public Error {
public:
    using Error::Error;
};

class SectorError : public Error {
public:
    using Error::Error;
};

class CapacityError : public Error {
public:
    using Error::Error;
};

class InvalidParameterError : public Error {
public:
    using Error::Error;
};

class WrongBuilderError : public Error {
public:
    using Error::Error;
};

class WindowError : public Error {
public:
    using Error::Error;
};

class FitError : public Error {
public:
    using Error::Error;
};

class DomainError : public Error {
public:
    using Error::Error;
};

class UndefinedCostError : public Error {
public:
    using Error::Error;
};

class OptimizationError : public Error {
public:
    using Error::Error;
};

class KrylovError : public Error {
public:
    using Error::Error;
};

class ConfigError : public Error {
public:
    ConfigError(const std::string& what, int line = 0);
    int line() const noexcept { return line_; }

private:
    int line_;
};

class InsufficientDataError : public Error {
public:
    using Error::Error;
};

} // namespace fockscope
