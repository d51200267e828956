#pragma once

#include <stdexcept>
#include <string>

namespace placedet {

// Root of the library's exception hierarchy. The CLI maps these to exit
// code 2 (data error); anything else escapes as a bug.
class Error : public std::runtime_error {
public:
  explicit Error(const std::string& msg) : std::runtime_error(msg) {}
};

// Malformed or out-of-contract input values (too-small image, bad config).
class InvalidInputError : public Error {
public:
  using Error::Error;
};

// Vector/window/model dimension disagreements.
class DimensionError : public Error {
public:
  using Error::Error;
};

// Training data that cannot be fit (single-class set, empty bank, ...).
class DegenerateDataError : public Error {
public:
  using Error::Error;
};

// Filesystem-level failures (missing file, unreadable image).
class IoError : public Error {
public:
  using Error::Error;
};

// Structurally broken persisted data: bad magic, version from the future,
// checksum mismatch, dangling references in manifests.
class FormatError : public Error {
public:
  using Error::Error;
};

}  // namespace placedet
