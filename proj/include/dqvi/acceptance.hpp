#pragma once

#include <iosfwd>
#include <string>
#include <vector>

#include "dqvi/parallel.hpp"

namespace dqvi {

struct CriterionResult {
  int id = 0;
  std::string name;
  bool pass = false;
  std::string detail;
  double seconds = 0.0;
};

struct AcceptanceOutcome {
  std::vector<CriterionResult> criteria;
  std::string artifacts;  // concatenated CSV/JSON outputs, byte-compared for determinism
  double total_seconds = 0.0;

  bool all_pass() const {
    for (const auto& c : criteria)
      if (!c.pass) return false;
    return !criteria.empty();
  }
};

/// Runs every acceptance criterion at desk scale. `progress`, when given,
/// receives one "[PASS]/[FAIL] criterion N: ..." line per criterion as it
/// completes. Timings go to the results, never into the artifact bytes.
AcceptanceOutcome run_acceptance(par::Mode mode = par::Mode::openmp,
                                 std::ostream* progress = nullptr);

}  // namespace dqvi
