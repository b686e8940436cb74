#pragma once

#include <stdexcept>
#include <string>

namespace conceptflow {

// Bad command line or configuration values. CLI exit code 1.
class UsageError : public std::runtime_error {
 public:
  explicit UsageError(const std::string& msg) : std::runtime_error(msg) {}
};

// Malformed input files. CLI exit code 2.
class ParseError : public std::runtime_error {
 public:
  ParseError(const std::string& path, long line, const std::string& msg)
      : std::runtime_error(path + ":" + std::to_string(line) + ": " + msg),
        line_(line) {}
  long line() const { return line_; }

 private:
  long line_;
};

// Inputs that parse but violate a precondition (missing files, misaligned
// corpora, out-of-range ids). CLI exit code 2.
class DataError : public std::runtime_error {
 public:
  explicit DataError(const std::string& msg) : std::runtime_error(msg) {}
};

// Shape mismatches between tensors and the operations applied to them.
class DimensionError : public DataError {
 public:
  explicit DimensionError(const std::string& msg) : DataError(msg) {}
};

// NaN or Inf produced by a kernel operation. CLI exit code 3.
class NumericError : public std::runtime_error {
 public:
  explicit NumericError(const std::string& msg) : std::runtime_error(msg) {}
};

}  // namespace conceptflow
