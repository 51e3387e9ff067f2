#pragma once

#include <stdexcept>
#include <string>

namespace popgrid {

// Error families map to CLI exit codes: usage 1, data 2, numeric 3.
class Error : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

class UsageError : public Error {
public:
    using Error::Error;
};

class DataError : public Error {
public:
    using Error::Error;
};

class NumericError : public Error {
public:
    using Error::Error;
};

// Parse failure in a file artifact, carrying the failure kind and the
// 1-based line number when the format is line oriented (0 otherwise).
class ParseError : public DataError {
public:
    enum class Kind {
        MalformedHeader,
        DimensionMismatch,
        BadToken,
        BadMagic,
        BadVersion,
        Truncated,
    };

    ParseError(Kind kind, int line, const std::string& msg)
        : DataError(line > 0 ? "line " + std::to_string(line) + ": " + msg : msg),
          kind_(kind),
          line_(line) {}

    Kind kind() const { return kind_; }
    int line() const { return line_; }

private:
    Kind kind_;
    int line_;
};

}  // namespace popgrid
