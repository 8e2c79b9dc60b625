#pragma once

#include <string>
#include <vector>

#include "dqvi/dvi.hpp"

namespace dqvi::oracle {

/// Brute-force reference instance: symmetric affine operator, optional
/// single-dof positive-part term with an optional eta coupling, node-bound or
/// box constraint. The energy 1/2 u'Au + b'u + w u_d+ - fbar'u is scanned on
/// multilevel grids down to `spacing`; symmetry makes the VI the optimality
/// condition of that energy.
struct OracleInstance {
  std::string name;
  SpacePtr V;
  Mat A_lin;  // symmetric positive definite
  Vec A_off;
  double phi_weight = 0.0;
  int phi_dof = -1;
  double couple_slope = 0.0;  // weight(eta) = phi_weight + couple_slope*|eta[couple_dof]|
  int couple_dof = -1;
  ConvexSet K;
  Vec fbar;
  Vec box_lo, box_hi;  // search box; intersected with K per dimension
  double spacing = 1e-4;

  bool coupled() const { return couple_dof >= 0 && couple_slope > 0.0; }
  double weight_at(const Vec& eta) const {
    return phi_weight + (coupled() ? couple_slope * std::fabs(eta[couple_dof]) : 0.0);
  }

  /// Monotonicity and Lipschitz constants of A_lin in the V metric.
  double m() const;
  double Lu() const;
  /// Coupling constant of the eta dependence in the V metric.
  double beta() const;

  OperatorA solver_operator() const;
  NonsmoothJ solver_j() const;
};

/// Feasible grid point minimizing the convex energy; error vs the true
/// minimizer is at most 2x the final spacing for the registered instances
/// (sharp or well-conditioned minimizers). Refuses dim > 2.
Vec brute_force_vi(const OracleInstance& inst, par::Mode mode = par::Mode::openmp);

/// Same with the frozen kink weight overridden (the QVI outer loop's inner
/// problem).
Vec brute_force_vi_weighted(const OracleInstance& inst, double frozen_weight,
                            par::Mode mode = par::Mode::openmp);

/// Outer fixed point on the eta-coupled weight around brute_force_vi;
/// terminates when successive iterates differ by less than the spacing.
Vec brute_force_qvi(const OracleInstance& inst, par::Mode mode = par::Mode::openmp);

/// Fine-tolerance reference: Heun at the given dt with 1e-12 tolerances.
Trajectory reference_trajectory(const DviProblem& problem, double horizon, double dt = 1e-4);

/// The registered desk-scale instances (dims 1-2, active/inactive
/// constraints, kinked and eta-coupled forms) used by the acceptance suite.
std::vector<OracleInstance> registered_instances();

}  // namespace dqvi::oracle
