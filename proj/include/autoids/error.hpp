#pragma once

#include <stdexcept>
#include <string>

namespace autoids {

// Error taxonomy mirrored by the CLI exit codes.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// bad configuration values, unusable search spaces, invalid specs
class ConfigError : public Error {
 public:
  using Error::Error;
};

// malformed input tables, ragged rows, unparseable cells
class DataError : public Error {
 public:
  using Error::Error;
};

// failures while fitting models (non-finite losses, degenerate folds)
class TrainError : public Error {
 public:
  using Error::Error;
};

// model-file I/O: version mismatch, digest failure, truncation
class PersistError : public Error {
 public:
  using Error::Error;
};

}  // namespace autoids
