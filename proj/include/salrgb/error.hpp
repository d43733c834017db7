#pragma once

#include <cstddef>
#include <stdexcept>
#include <string>

namespace salrgb {

// Root of every exception thrown by the library.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// Bad or inconsistent configuration (maps to the CLI usage exit code).
class ConfigError : public Error {
 public:
  using Error::Error;
};

// Problems with input data: manifests, taxonomies, images, checkpoints.
class DataError : public Error {
 public:
  using Error::Error;
};

class ManifestError : public DataError {
 public:
  ManifestError(std::size_t line, const std::string& what)
      : DataError("manifest line " + std::to_string(line) + ": " + what), line_(line) {}
  std::size_t line() const noexcept { return line_; }

 private:
  std::size_t line_;
};

class FetchError : public DataError {
 public:
  FetchError(std::string record_id, const std::string& what)
      : DataError("fetch '" + record_id + "': " + what), record_id_(std::move(record_id)) {}
  const std::string& record_id() const noexcept { return record_id_; }

 private:
  std::string record_id_;
};

// Tensor or grid dimensions that do not fit the operation.
class ShapeError : public Error {
 public:
  using Error::Error;
};

// Training diverged or could not proceed.
class TrainingError : public Error {
 public:
  using Error::Error;
};

}  // namespace salrgb
