#include "bloch_scatter/error.hpp"

namespace bloch_scatter {

Error::Error(std::string module, std::string operation, const std::string& message)
    : std::runtime_error(module + "::" + operation + ": " + message),
      module_(std::move(module)),
      operation_(std::move(operation)),
      message_(message) {}

}  // namespace bloch_scatter
