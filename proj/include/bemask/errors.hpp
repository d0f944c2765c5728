#pragma once

#include <stdexcept>
#include <string>

namespace bemask {

// Base class for all errors raised by this library.
struct Error : std::runtime_error {
    using std::runtime_error::runtime_error;
};

// Bad configuration: missing special token, invalid flag combination, ...
struct ConfigError : Error {
    using Error::Error;
};

// Malformed input file. Messages carry the offending line/record where known.
struct FormatError : Error {
    using Error::Error;
};

// Inputs that parse but contradict each other (duplicate ids, span/text
// mismatches, references to missing documents).
struct ConsistencyError : Error {
    using Error::Error;
};

// A documented internal invariant failed. The CLI maps this to exit code 3.
struct InvariantError : Error {
    using Error::Error;
};

}  // namespace bemask
