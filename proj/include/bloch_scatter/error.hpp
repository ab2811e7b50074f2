#pragma once

#include <stdexcept>
#include <string>

namespace bloch_scatter {

/// Structured failure raised by every module: which module, which operation,
/// and a human-readable message. The CLI serializes these as error records.
class Error : public std::runtime_error {
 public:
  Error(std::string module, std::string operation, const std::string& message);

  const std::string& module() const noexcept { return module_; }
  const std::string& operation() const noexcept { return operation_; }
  const std::string& message() const noexcept { return message_; }

 private:
  std::string module_;
  std::string operation_;
  std::string message_;
};

}  // namespace bloch_scatter
