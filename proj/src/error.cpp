#include "mlsent/error.hpp"

namespace mlsent {

const char* to_string(ErrorKind kind) {
  switch (kind) {
    case ErrorKind::io: return "io";
    case ErrorKind::validation: return "validation";
    case ErrorKind::argument: return "argument";
    case ErrorKind::empty_input: return "empty-input";
    case ErrorKind::load: return "load";
    case ErrorKind::capability: return "capability";
    case ErrorKind::checkpoint: return "checkpoint";
    case ErrorKind::probe: return "probe";
  }
  return "unknown";
}

Error::Error(ErrorKind kind, const std::string& message)
    : std::runtime_error(message), kind_(kind) {}

ValidationError::ValidationError(const std::string& message, std::size_t line)
    : Error(ErrorKind::validation,
            line == 0 ? message : "line " + std::to_string(line) + ": " + message),
      line_(line) {}

int exit_code_for(ErrorKind kind) {
  switch (kind) {
    case ErrorKind::validation:
    case ErrorKind::argument:
    case ErrorKind::empty_input:
      return kExitValidation;
    default:
      return kExitRuntime;
  }
}

}  // namespace mlsent
