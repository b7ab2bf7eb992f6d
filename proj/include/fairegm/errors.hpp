#pragma once

#include <stdexcept>
#include <string>

namespace fairegm {

// Parse failure in a dataset or embedding file. Carries the offending
// location so callers can report `file:line`.
class ParseError : public std::runtime_error {
 public:
  ParseError(std::string path, long line, const std::string& what)
      : std::runtime_error(path + ":" + std::to_string(line) + ": " + what),
        path_(std::move(path)),
        line_(line) {}

  const std::string& path() const { return path_; }
  long line() const { return line_; }

 private:
  std::string path_;
  long line_;
};

// Input file does not match the declared dataset kind (e.g. the SNAP
// featnames file does not identify the expected sensitive columns).
class SchemaError : public std::runtime_error {
  using std::runtime_error::runtime_error;
};

// A sampler was asked for more items than the population holds.
class CapacityError : public std::runtime_error {
  using std::runtime_error::runtime_error;
};

// Training produced a non-finite loss.
class DivergenceError : public std::runtime_error {
 public:
  DivergenceError(const std::string& what, int epoch)
      : std::runtime_error(what + " (epoch " + std::to_string(epoch) + ")"),
        epoch_(epoch) {}

  int epoch() const { return epoch_; }

 private:
  int epoch_;
};

// backward() was asked for a leaf that is not registered on the tape.
class UnknownParameterError : public std::invalid_argument {
  using std::invalid_argument::invalid_argument;
};

// An operation kind outside the supported tape/elementwise set.
class UnsupportedOperationError : public std::invalid_argument {
  using std::invalid_argument::invalid_argument;
};

}  // namespace fairegm
