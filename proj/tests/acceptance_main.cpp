// Acceptance suite: runs every criterion at the stated tolerance and prints
// one pass/fail line per criterion. Exit status 0 iff all criteria pass.

#include <iostream>

#include "dqvi/acceptance.hpp"

int main() {
  const dqvi::AcceptanceOutcome outcome = dqvi::run_acceptance(dqvi::par::Mode::openmp,
                                                               &std::cout);
  std::size_t passed = 0;
  for (const auto& c : outcome.criteria) passed += c.pass ? 1 : 0;
  std::cout << (outcome.all_pass() ? "PASS" : "FAIL") << " " << passed << "/"
            << outcome.criteria.size() << " criteria, " << outcome.total_seconds
            << " s total\n";
  return outcome.all_pass() ? 0 : 1;
}
