#pragma once

#include <functional>
#include <string>
#include <vector>

#include <nlohmann/json_fwd.hpp>

#include "dqvi/space.hpp"
#include "dqvi/vi_solver.hpp"

namespace dqvi {

/// Named load profile theta(t) for the separable right-hand side
/// f(t) = theta(t) * f_tilde.
struct ThetaProfile {
  enum class Kind { constant, ramp, sine };
  Kind kind = Kind::constant;

  double operator()(double t) const;
  static ThetaProfile from_name(const std::string& name);
  std::string name() const;
};

/// The coupled problem: ODE state map F with the frozen-state QVI data.
/// Dual functionals live in plain coordinates; fbar(t) is the Riesz lift of
/// (f(t), pi .)_Z.
struct DviProblem {
  SpacePtr X, V, Z;

  std::function<Vec(double t, const Vec& x, const Vec& u)> F;
  double L_J = 0.0;

  OperatorA A;
  NonsmoothJ j;
  ConvexSet K;
  LinearMap pi;

  ThetaProfile theta;
  Vec f_tilde;  // Z coordinates

  Vec x0;

  Vec f_at(double t) const { return theta(t) * f_tilde; }
  Vec fbar(double t) const { return pi.lift_dual(f_at(t)); }

  /// Machine-checkable slice of the standing hypotheses: m > beta, sampled
  /// monotonicity/Lipschitz estimates never exceeding the declared constants,
  /// ||pi|| finite. Throws config_error on violation.
  void validate(int samples = 200, std::uint64_t seed = 0x5eed) const;
};

struct SolverNodeStats {
  int outer_iterations = 0;
  long inner_iterations = 0;
  double certificate_margin = 0.0;
  double certificate_residual = 0.0;
};

struct Trajectory {
  std::vector<double> times;
  std::vector<Vec> states;    // x(t_i)
  std::vector<Vec> controls;  // u(t_i)
  std::vector<SolverNodeStats> stats;

  std::size_t nodes() const { return times.size(); }

  /// One row per node: t, x components, u components, certificate residual,
  /// outer iterations. 17-significant-digit floats, '\n' endings.
  std::string to_csv() const;
  nlohmann::json to_json() const;
};

enum class Scheme { explicit_euler, heun };

Scheme scheme_from_name(const std::string& name);
std::string scheme_name(Scheme s);

std::vector<double> uniform_grid(double horizon, int steps);

/// Advances the ODE with the QVI solution re-solved at every stage point
/// (Heun re-solves at the predictor state). Every node carries a residual
/// certificate; QVI failure aborts with the node index attached.
Trajectory integrate(const DviProblem& problem, const std::vector<double>& grid, Scheme scheme,
                     const QviConfig& cfg);

/// Reference solution for order measurements: analytic path or a fine
/// trajectory (matched by final time).
struct Reference {
  std::function<Vec(double)> x;
  std::function<Vec(double)> u;  // may be empty; then u-error is skipped
};

struct OrderEstimate {
  double slope = 0.0;
  bool exact = false;  // errors at machine level; slope meaningless
  std::vector<double> dts, errors;
};

/// Least-squares slope of log(final-time error) vs log(dt) over successive
/// halvings of the base grid; errors in ||.||_X + ||.||_V.
OrderEstimate observed_order(const DviProblem& problem, Scheme scheme, double horizon,
                             int base_steps, int refinements, const Reference& ref,
                             const QviConfig& cfg);

}  // namespace dqvi
