#pragma once

#include <stdexcept>
#include <string>

namespace dpgap {

/// Broad failure classes; the CLI maps them onto exit statuses.
enum class ErrorKind {
  Precondition,  ///< caller supplied inputs outside an operation's contract
  Numerical,     ///< the computation itself failed (overflow, no bracket, ...)
  Io,
};

/// Every library error carries a stable machine-readable code such as
/// `UNBOUNDED_CONJUGATE` next to the human-readable message.
class Error : public std::runtime_error {
 public:
  Error(ErrorKind kind, std::string code, const std::string& message)
      : std::runtime_error(message), kind_(kind), code_(std::move(code)) {}

  ErrorKind kind() const noexcept { return kind_; }
  const std::string& code() const noexcept { return code_; }

 private:
  ErrorKind kind_;
  std::string code_;
};

inline Error domain_error(const std::string& message) {
  return Error(ErrorKind::Precondition, "DOMAIN_ERROR", message);
}

inline Error precondition_error(std::string code, const std::string& message) {
  return Error(ErrorKind::Precondition, std::move(code), message);
}

inline Error numerical_error(std::string code, const std::string& message) {
  return Error(ErrorKind::Numerical, std::move(code), message);
}

}  // namespace dpgap
