#pragma once

#include <stdexcept>
#include <string>

namespace mlsent {

enum class ErrorKind {
  io,
  validation,
  argument,
  empty_input,
  load,
  capability,
  checkpoint,
  probe,
};

const char* to_string(ErrorKind kind);

// Base for every error the library raises. The kind drives CLI exit codes.
class Error : public std::runtime_error {
 public:
  Error(ErrorKind kind, const std::string& message);

  ErrorKind kind() const noexcept { return kind_; }

 private:
  ErrorKind kind_;
};

class IoError : public Error {
 public:
  explicit IoError(const std::string& message) : Error(ErrorKind::io, message) {}
};

class ValidationError : public Error {
 public:
  // line is 1-based; 0 means the error is not tied to a line.
  ValidationError(const std::string& message, std::size_t line = 0);

  std::size_t line() const noexcept { return line_; }

 private:
  std::size_t line_;
};

class ArgumentError : public Error {
 public:
  explicit ArgumentError(const std::string& message) : Error(ErrorKind::argument, message) {}
};

class EmptyInputError : public Error {
 public:
  explicit EmptyInputError(const std::string& message) : Error(ErrorKind::empty_input, message) {}
};

class LoadError : public Error {
 public:
  explicit LoadError(const std::string& message) : Error(ErrorKind::load, message) {}
};

class CapabilityError : public Error {
 public:
  explicit CapabilityError(const std::string& message) : Error(ErrorKind::capability, message) {}
};

class CheckpointError : public Error {
 public:
  explicit CheckpointError(const std::string& message) : Error(ErrorKind::checkpoint, message) {}
};

class ProbeError : public Error {
 public:
  explicit ProbeError(const std::string& message) : Error(ErrorKind::probe, message) {}
};

// Stable process exit codes: 0 success, 2 validation-type errors, 3 runtime/stage errors.
inline constexpr int kExitOk = 0;
inline constexpr int kExitValidation = 2;
inline constexpr int kExitRuntime = 3;

int exit_code_for(ErrorKind kind);

}  // namespace mlsent
