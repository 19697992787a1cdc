#pragma once

#include <stdexcept>
#include <string>

namespace wbench {

/// Root of every error the engine raises.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Malformed text input (manifest grammar, pose records, scalar lines).
class ParseError : public Error {
 public:
  using Error::Error;
};

/// A manifest record parsed but violates an invariant.
class SchemaError : public Error {
 public:
  SchemaError(std::string case_id, std::string field, const std::string& what)
      : Error("case '" + case_id + "', field '" + field + "': " + what),
        case_id_(std::move(case_id)),
        field_(std::move(field)) {}

  const std::string& case_id() const noexcept { return case_id_; }
  const std::string& field() const noexcept { return field_; }

 private:
  std::string case_id_;
  std::string field_;
};

/// Binary sidecar with a bad magic, header or payload length.
class FormatError : public Error {
 public:
  using Error::Error;
};

/// A per-frame series disagrees with the frame count of its bundle.
class InconsistentLengthError : public Error {
 public:
  using Error::Error;
};

/// Slerp between rotations whose shortest arc is undefined.
class DegenerateError : public Error {
 public:
  using Error::Error;
};

class MissingPoseError : public Error {
 public:
  using Error::Error;
};

/// A judge reply that does not fit the template's answer schema.
class MalformedAnswer : public Error {
 public:
  using Error::Error;
};

/// The judge endpoint could not be reached or returned a non-success status.
class TransportError : public Error {
 public:
  using Error::Error;
};

/// A prompt template placeholder has no substitution.
class MissingFieldError : public Error {
 public:
  using Error::Error;
};

class ConfigError : public Error {
 public:
  using Error::Error;
};

}  // namespace wbench
