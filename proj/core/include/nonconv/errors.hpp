#pragma once

#include <cstddef>
#include <stdexcept>
#include <string>

namespace nonconv {

// Base for every error the library throws on purpose.
class Error : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

// Precondition violated by the caller (bad argument, unsupported pairing).
class DomainError : public Error {
public:
    using Error::Error;
};

// Chain is reducible or periodic.
class NoStationaryLawError : public DomainError {
public:
    NoStationaryLawError() : DomainError("no unique stationary law: chain is reducible or periodic") {}
};

// Conditioning on an event of probability zero.
class ZeroProbabilityError : public DomainError {
public:
    using DomainError::DomainError;
};

// An enumeration, table or sampling budget would be exceeded.
class BudgetError : public Error {
public:
    using Error::Error;
};

// Malformed or invalid configuration; carries the 1-based source line (0 if unknown).
class ConfigError : public Error {
public:
    ConfigError(const std::string& message, std::size_t line = 0)
        : Error(line ? "line " + std::to_string(line) + ": " + message : message), line_(line) {}

    std::size_t line() const noexcept { return line_; }

private:
    std::size_t line_;
};

}  // namespace nonconv
