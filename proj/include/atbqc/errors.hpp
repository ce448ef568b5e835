#pragma once

#include <cstddef>
#include <stdexcept>
#include <string>

namespace atbqc {

/// Base class for all library errors.
class Error : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

/// A contour violates a structural invariant (too few points,
/// consecutive duplicates, non-finite coordinates).
class InvalidContourError : public Error {
public:
    using Error::Error;
};

/// An operation was called with arguments outside its contract
/// (bad fraction, empty range, open contour where closed required).
class InvalidArgumentError : public Error {
public:
    using Error::Error;
};

/// A contour is too short for landmark extraction.
class DegenerateContourError : public Error {
public:
    using Error::Error;
};

/// Required configuration is missing or inconsistent
/// (absent subject reference, malformed config file, bad grid).
class ConfigError : public Error {
public:
    using Error::Error;
};

/// Metric input is empty.
class EmptyInputError : public Error {
public:
    using Error::Error;
};

/// No unflagged anchor frame exists for interpolation.
class UncorrectableVideoError : public Error {
public:
    using Error::Error;
};

/// Prediction/truth flag vectors have mismatched lengths.
class LengthMismatchError : public Error {
public:
    using Error::Error;
};

/// Threshold selection found no positive frame in the validation set.
class ThresholdUndefinedError : public Error {
public:
    using Error::Error;
};

/// Dataset loading or validation failure. Carries the offending file
/// and 1-based line number where applicable (line 0 means whole-file).
class DatasetError : public Error {
public:
    enum class Kind {
        MissingFile,
        MalformedRow,
        OutOfBounds,
        NonContiguousFrames,
        Schema,
        Io,
    };

    DatasetError(Kind kind, std::string file, std::size_t line, const std::string& message)
        : Error(file + (line ? ":" + std::to_string(line) : "") + ": " + message),
          kind_(kind),
          file_(std::move(file)),
          line_(line) {}

    Kind kind() const { return kind_; }
    const std::string& file() const { return file_; }
    std::size_t line() const { return line_; }

private:
    Kind kind_;
    std::string file_;
    std::size_t line_;
};

} // namespace atbqc
