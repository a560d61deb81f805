#pragma once

#include <cstdint>
#include <iosfwd>
#include <string>
#include <vector>

namespace bregman {

struct CheckResult {
  std::string name;
  bool passed = false;
  std::string detail;
};

/// Self-checks of the library identities, gradients and determinism. Each
/// check is cheap enough for interactive use.
std::vector<CheckResult> run_validation_suite(std::uint64_t seed);

/// One "PASS name  detail" line per check; returns true when all pass.
bool print_check_table(std::ostream& out, const std::vector<CheckResult>& results);

}  // namespace bregman
