#pragma once

// Self-check suites behind `ccgame verify`: closed forms against the
// Monte-Carlo oracle, structural properties of welfare on random
// instances, bound invariants and equilibrium cross-checks.

#include <cstddef>
#include <cstdint>
#include <string>
#include <vector>

namespace ccgame {

struct VerificationOptions {
  std::uint64_t seed = 1;
  std::size_t oracle_cases = 50;
  std::size_t oracle_samples = 1'000'000;
  std::size_t property_instances = 200;
  std::size_t lp_instances = 40;
};

struct CheckResult {
  std::string name;
  bool passed = false;
  std::size_t cases = 0;
  std::size_t violations = 0;
  std::string detail;
};

std::vector<CheckResult> run_verification(const VerificationOptions& options = {});

}  // namespace ccgame
