#pragma once

#include <utility>
#include <vector>

#include <nlohmann/json_fwd.hpp>

#include "dqvi/dvi.hpp"

namespace dqvi {

/// Canonical 1/n perturbation family around a base problem. Each channel is
/// off when its scale is zero; directions are normalized at build time.
/// Constructed so the hypothesis bounds hold with equality-achieving
/// witnesses where the structure permits (F exactly, A tight in u through a
/// monotone Riesz term that keeps m_n >= m).
struct PerturbationSpec {
  // F_n = F + (F_scale/n) (||x||_X + ||u||_V + F_offset) w_hat
  double F_scale = 0.0;
  double F_offset = 1.0;
  Vec F_direction;  // in X

  // A_n = A + (A_scale/n) [ G_V u + (||x||_X + A_offset) d_hat ]
  double A_scale = 0.0;
  double A_offset = 1.0;
  Vec A_direction;  // dual coordinates on V

  // j_n: yield weight offset + j_scale/n (tau_n grows, delta_n unchanged)
  double j_scale = 0.0;

  // f_tilde_n = f_tilde + (f_scale/n) f_direction
  double f_scale = 0.0;
  Vec f_direction;  // in Z

  // x0_n = x0 + (x0_scale/n) x0_direction
  double x0_scale = 0.0;
  Vec x0_direction;

  // K_n = NodeUpperBound(dof, G_n) with G_n = G (1 + gap_scale/n), required
  // to stay inside the uniform bounds [M0, M1].
  double gap_scale = 0.0;
  double M0 = 0.0;
  double M1 = std::numeric_limits<double>::infinity();

  bool any_active() const {
    return F_scale != 0 || A_scale != 0 || j_scale != 0 || f_scale != 0 || x0_scale != 0 ||
           gap_scale != 0;
  }
};

/// Envelope constants normalizing the family the way the convergence theorem
/// assumes: per-n constants never exceed these.
struct FamilyConstants {
  double L_J = 0, Lx = 0, Lu = 0, m = 0, alpha = 0, beta = 0;
  double bound_factor() const { return (Lx + alpha) / (m - beta); }
};

FamilyConstants family_envelope(const DviProblem& base, const PerturbationSpec& spec);

/// Problem P_n. Throws config_error when a per-n constant would violate its
/// uniform bound (e.g. G_n outside [M0, M1]); input_error for n < 1.
DviProblem build_perturbed(const DviProblem& base, const PerturbationSpec& spec, int n);

/// Auxiliary controls: the perturbed QVI solved along the *base* state path.
struct AuxiliarySolve {
  std::vector<Vec> controls;
  double max_norm = 0.0;  // uniform-boundedness witness
};

AuxiliarySolve solve_auxiliary(const Trajectory& base, const DviProblem& problem_n,
                               const QviConfig& cfg);

struct ConvergenceReport {
  struct Row {
    int n;
    double t;
    double e_u, e_x, e_aux;
    double bound_lhs, bound_rhs;
    bool pass;
  };
  std::vector<Row> rows;
  double bound_factor = 0.0;
  double slack = 0.0;
  double aux_uniform_bound = 0.0;

  bool all_bounds_pass() const;
  const Row& at(int n, double t) const;

  /// e(n_large, t) <= factor * e(n_small, t) for u and x at every listed
  /// time; comparisons below noise_floor count as passed.
  bool decay_pass(int n_small, int n_large, double factor, const std::vector<double>& times,
                  double noise_floor) const;

  std::string to_csv() const;
  nlohmann::json summary() const;
};

/// Pointwise error records plus the proof-mirroring bound
/// e_u <= (L'+alpha)/(m-beta) e_x + e_aux + slack at every node and n.
/// Errors are measured in the supplied X and V metrics.
ConvergenceReport certify_convergence(const SpacePtr& X, const SpacePtr& V,
                                      const Trajectory& base,
                                      const std::vector<std::pair<int, Trajectory>>& perturbed,
                                      const std::vector<std::pair<int, AuxiliarySolve>>& aux,
                                      const FamilyConstants& constants, double slack);

/// Runs one family end to end: per-n solves are independent and execute as a
/// kernel in the requested mode; the report reduction is ordered by n.
struct FamilyRun {
  std::vector<int> n_values;
  std::vector<Trajectory> perturbed;
  std::vector<AuxiliarySolve> auxiliaries;
  ConvergenceReport report;
};

FamilyRun run_family(const DviProblem& base, const Trajectory& base_trajectory,
                     const PerturbationSpec& spec, const std::vector<int>& n_values,
                     const std::vector<double>& grid, Scheme scheme, const QviConfig& cfg,
                     par::Mode mode);

}  // namespace dqvi
