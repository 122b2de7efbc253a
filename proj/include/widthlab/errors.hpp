#pragma once

#include <stdexcept>
#include <string>

namespace widthlab {

/// Failure category. The CLI maps these onto exit codes (validation -> 2,
/// regime and guard -> 3).
enum class ErrorKind {
  validation,  // malformed or out-of-range input
  regime,      // parameters outside the region a formula covers
  guard,       // desk-scale resource caps
};

class Error : public std::runtime_error {
 public:
  Error(ErrorKind kind, const std::string& what) : std::runtime_error(what), kind_(kind) {}
  ErrorKind kind() const noexcept { return kind_; }

 private:
  ErrorKind kind_;
};

[[noreturn]] inline void fail_validation(const std::string& what) {
  throw Error(ErrorKind::validation, what);
}
[[noreturn]] inline void fail_regime(const std::string& what) {
  throw Error(ErrorKind::regime, what);
}
[[noreturn]] inline void fail_guard(const std::string& what) {
  throw Error(ErrorKind::guard, what);
}

}  // namespace widthlab
