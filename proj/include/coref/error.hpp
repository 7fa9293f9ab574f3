#pragma once

#include <stdexcept>
#include <string>

namespace coref {

// All recoverable failures carry a stable kind tag ("UnbalancedSpan",
// "SchemaViolation", ...) so callers and the CLI can branch on it without
// string-matching free-form messages.
class Error : public std::runtime_error {
 public:
  Error(std::string kind, const std::string& msg)
      : std::runtime_error(kind + ": " + msg), kind_(std::move(kind)) {}

  const std::string& kind() const noexcept { return kind_; }

 private:
  std::string kind_;
};

[[noreturn]] inline void fail(const std::string& kind, const std::string& msg) {
  throw Error(kind, msg);
}

}  // namespace coref
