#pragma once

#include <stdexcept>
#include <string>

namespace synthval {

class Error : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

// Malformed input file (CSV, manifest, config).
class ParseError : public Error {
public:
    using Error::Error;
};

// Column names/kinds disagree between two tables or with a manifest.
class SchemaError : public Error {
public:
    using Error::Error;
};

// A documented precondition of an operation does not hold.
class PreconditionError : public Error {
public:
    using Error::Error;
};

// Input cannot be processed meaningfully: constant labels, fully missing
// columns, zero-variance corpus dimensions.
class DegenerateError : public Error {
public:
    using Error::Error;
};

class UnsupportedError : public Error {
public:
    using Error::Error;
};

}  // namespace synthval
