#pragma once

#include <stdexcept>
#include <string>

namespace dqvi {

/// Malformed call-site data: dimension mismatches, bad grids, out-of-range n.
struct input_error : std::invalid_argument {
  using std::invalid_argument::invalid_argument;
};

/// Inconsistent problem configuration: infeasible sets, violated standing
/// hypotheses (m <= beta), unsupported operator/set combinations.
struct config_error : std::runtime_error {
  using std::runtime_error::runtime_error;
};

/// An iterative solve ran out of its iteration budget. Carries the last
/// residual and, when raised inside a time loop, the offending node.
struct nonconvergence_error : std::runtime_error {
  double residual = 0.0;
  long iterations = 0;
  int node = -1;

  nonconvergence_error(const std::string& what, double res, long iters)
      : std::runtime_error(what), residual(res), iterations(iters) {}
};

}  // namespace dqvi
