#pragma once

#include <functional>
#include <string>
#include <vector>

#include "bloch_scatter/spectral.hpp"

namespace bloch_scatter {

struct PropertyResult {
  std::string name;
  bool pass = false;
  double value = 0.0;      // measured quantity
  double tolerance = 0.0;  // bound it was compared against
  std::string detail;
};

/// Replaceable pieces for mutation testing of the suite itself. The branch
/// property evaluates the mode exponent through `exponent`.
struct VerifyHooks {
  std::function<cplx(const BetaBranch&, double xi)> exponent;
};

/// Runs every property at its shipped resolution, in a fixed order.
std::vector<PropertyResult> run_properties(const VerifyHooks& hooks = {}, int threads = 1);

/// One line per property; true when all passed.
bool report_properties(const std::vector<PropertyResult>& results, std::ostream& os);

}  // namespace bloch_scatter
