#pragma once

#include <stdexcept>
#include <string>

namespace orchard {

/// Bad input: a parameter, config key, or file content violates a contract.
/// `field()` names the offending field (e.g. "scene.orchard.rows").
class ValidationError : public std::invalid_argument {
 public:
  ValidationError(std::string field, std::string message)
      : std::invalid_argument(field + ": " + message), field_(std::move(field)),
        message_(std::move(message)) {}

  const std::string &field() const { return field_; }
  const std::string &message() const { return message_; }

 private:
  std::string field_;
  std::string message_;
};

/// Filesystem or codec failure; `path()` is the file involved.
class IoError : public std::runtime_error {
 public:
  IoError(std::string path, const std::string &message)
      : std::runtime_error(path + ": " + message), path_(std::move(path)) {}

  const std::string &path() const { return path_; }

 private:
  std::string path_;
};

}  // namespace orchard
