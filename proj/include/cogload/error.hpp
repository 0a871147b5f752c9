#pragma once

#include <stdexcept>
#include <string>

namespace cogload {

/// Data or contract error raised by a module. The code is module-qualified,
/// e.g. "protocol.MALFORMED_LINE", and is what the CLI reports.
class Error : public std::runtime_error {
 public:
  Error(std::string module, std::string code, const std::string& detail = {})
      : std::runtime_error(module + "." + code + (detail.empty() ? "" : ": " + detail)),
        module_(std::move(module)),
        code_(std::move(code)) {}

  const std::string& module() const noexcept { return module_; }
  const std::string& code() const noexcept { return code_; }
  std::string qualified_code() const { return module_ + "." + code_; }

 private:
  std::string module_;
  std::string code_;
};

/// Internal invariant breach (a bug, not bad input).
class InvariantBreach : public std::logic_error {
 public:
  using std::logic_error::logic_error;
};

}  // namespace cogload
