#pragma once

#include <cstddef>
#include <stdexcept>
#include <string>

namespace casekg {

// Base for every error raised by the library. The CLI maps these to exit code 1.
class Error : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

// Malformed input file. Carries the 1-based line number when one applies.
class ParseError : public Error {
public:
    ParseError(const std::string& source, std::size_t line, const std::string& what)
        : Error(source + ":" + std::to_string(line) + ": " + what), line_(line) {}

    std::size_t line() const noexcept { return line_; }

private:
    std::size_t line_;
};

// Tensor or vector dimensions disagree.
class ShapeError : public Error {
public:
    using Error::Error;
};

// A referenced entity, relation, case or label does not exist.
class NotFoundError : public Error {
public:
    using Error::Error;
};

}  // namespace casekg
