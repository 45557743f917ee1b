#pragma once

// Exhaustive consistency audits of generated oracles against their secrets.
// The reference side uses the generic GF(2) routines rather than the fast
// evaluation paths inside the oracles.

#include <cstdint>
#include <string>

#include "osslab/oracles.hpp"

namespace osslab::oracles {

struct AuditResult {
  std::uint64_t checks = 0;
  std::uint64_t failures = 0;
  std::string first_failure;

  bool ok() const { return failures == 0; }
  void record(bool passed, const std::string& what);
};

/// P^-1 o P = id for every x; D, D0 and the dispatch oracle against the
/// secrets for every (y, v). Requires n <= 12 and r + k <= 24.
AuditResult audit_oss(const OssInstance& inst);

/// O0..O4 against the random-function tables and D0, over every input.
/// Requires every key-fire oracle input to be at most 24 bits wide.
AuditResult audit_keyfire(const KeyFireInstance& inst);

}  // namespace osslab::oracles
