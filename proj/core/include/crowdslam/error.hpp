#pragma once

#include <stdexcept>
#include <string>

namespace crowdslam {

/// Base class for every error raised by the library.
class Error : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

/// Malformed input, violated precondition or an ill-posed problem.
class ValidationError : public Error {
public:
    using Error::Error;
};

/// Filesystem or stream failure; the message carries the offending path.
class IoError : public Error {
public:
    using Error::Error;
};

}  // namespace crowdslam
