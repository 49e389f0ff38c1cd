#pragma once

#include <cstddef>
#include <stdexcept>
#include <string>

namespace skelaug {

// Root of every exception thrown by the library.
class Error : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

// A precondition on arguments was violated (shapes, ranges, counts).
class InvalidInput : public Error {
public:
    using Error::Error;
};

// First frame cannot define an orientation (zero spine or shoulder vector).
class AlignmentDegenerate : public Error {
public:
    using Error::Error;
};

class NoValidBody : public Error {
public:
    using Error::Error;
};

// Corpus / prior file could not be decoded.
class FormatError : public Error {
public:
    using Error::Error;
};

// Text skeleton file violated the grammar. line() is 1-based.
class ParseError : public Error {
public:
    ParseError(std::size_t line, const std::string& what)
        : Error("line " + std::to_string(line) + ": " + what), line_(line) {}

    std::size_t line() const noexcept { return line_; }

private:
    std::size_t line_;
};

}  // namespace skelaug
