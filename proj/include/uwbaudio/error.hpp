#pragma once

#include <stdexcept>
#include <string>

namespace uwb {

class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// A value object was built with an out-of-range field; `field()` names it.
class ValidationError : public Error {
 public:
  ValidationError(std::string field, const std::string& what)
      : Error(field + ": " + what), field_(std::move(field)) {}
  const std::string& field() const noexcept { return field_; }

 private:
  std::string field_;
};

class AdmissionError : public Error {
 public:
  using Error::Error;
};

class ConfigError : public Error {
 public:
  using Error::Error;
};

class LookupError : public Error {
 public:
  using Error::Error;
};

class ProtocolError : public Error {
 public:
  using Error::Error;
};

}  // namespace uwb
