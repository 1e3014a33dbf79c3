// Copyright (c) urv contributors.
// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <cstddef>
#include <stdexcept>
#include <string>

namespace urv {

/// Base of every error raised by the library.
class Error : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

/// Inconsistent dimensions, out-of-range arguments, missing statistics.
class ConfigError : public Error {
public:
    using Error::Error;
};

/// The LP solver failed to reach a conclusion.
class NumericalError : public Error {
public:
    using Error::Error;
};

/// Segment endpoints do not lie strictly on opposite sides of the hyperplane.
class DegenerateSegment : public Error {
public:
    using Error::Error;
};

/// The exact ReLU image needs more member polytopes than allowed.
class BudgetExceeded : public Error {
public:
    using Error::Error;
};

/// Malformed input text; carries the 1-based line number.
class ParseError : public Error {
public:
    ParseError(std::size_t line, const std::string& message, const std::string& source = {})
        : Error((source.empty() ? std::string() : source + ": ") + "line " + std::to_string(line) + ": " + message),
          line_(line),
          message_(message) {}

    std::size_t line() const noexcept { return line_; }
    const std::string& message() const noexcept { return message_; }

    ParseError with_source(const std::string& source) const { return ParseError(line_, message_, source); }

private:
    std::size_t line_;
    std::string message_;
};

}  // namespace urv
