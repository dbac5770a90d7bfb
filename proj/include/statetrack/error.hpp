#pragma once

#include <stdexcept>
#include <string>

namespace statetrack {

// Base of every error raised by the library. The CLI maps each subclass to
// a distinct exit code.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
  virtual int exit_code() const noexcept { return 1; }
};

// Malformed input: bad RLE, size mismatch, schema violation, bad config.
class ValidationError : public Error {
 public:
  using Error::Error;
  int exit_code() const noexcept override { return 2; }
};

// A replay bundle has no record for a query the pipeline issued.
class BundleIncompleteError : public Error {
 public:
  explicit BundleIncompleteError(std::string key)
      : Error("bundle incomplete: missing record " + key), key_(std::move(key)) {}
  const std::string& key() const noexcept { return key_; }
  int exit_code() const noexcept override { return 3; }

 private:
  std::string key_;
};

class IoError : public Error {
 public:
  using Error::Error;
  int exit_code() const noexcept override { return 4; }
};

// External judge replied with something other than a single integer.
class JudgeProtocolError : public Error {
 public:
  using Error::Error;
};

}  // namespace statetrack
