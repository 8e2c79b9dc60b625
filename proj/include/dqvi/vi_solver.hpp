#pragma once

#include <cstdint>
#include <functional>
#include <limits>
#include <vector>

#include "dqvi/parallel.hpp"
#include "dqvi/space.hpp"

namespace dqvi {

struct QviConfig {
  double inner_tol = 1e-9;   // V-norm accuracy target of each inner VI solve
  double outer_tol = 1e-10;  // V-norm distance between successive outer iterates
  int max_inner = 500000;
  int max_outer = 20000;
  double step = 0.0;  // gradient step gamma; 0 selects m/Lu^2
  int residual_samples = 256;
  std::uint64_t sample_seed = 0x5eed;
};

/// State-dependent monotone operator in dual coordinates, with the constants
/// of its standing hypotheses: strong monotonicity m, x-Lipschitz Lx,
/// u-Lipschitz Lu.
struct OperatorA {
  std::function<Vec(const Vec& x, const Vec& u)> eval;
  double m = 0.0;
  double Lx = 0.0;
  double Lu = 0.0;
};

/// Nonsmooth convex term j(x, eta, v). Supported shapes: identically zero or
/// weight(x, eta) * max(v[dof], 0) with weight >= 0 (the contact form and the
/// synthetic single-dof instances). alpha/beta are the x- and eta-Lipschitz
/// factors of the four-term bound.
class NonsmoothJ {
 public:
  static NonsmoothJ zero() { return NonsmoothJ(); }

  static NonsmoothJ single_dof_pos_part(int dof,
                                        std::function<double(const Vec&, const Vec&)> weight,
                                        double alpha, double beta) {
    NonsmoothJ j;
    j.dof_ = dof;
    j.weight_ = std::move(weight);
    j.alpha_ = alpha;
    j.beta_ = beta;
    return j;
  }

  bool is_zero() const { return dof_ < 0; }
  int dof() const { return dof_; }
  double alpha() const { return alpha_; }
  double beta() const { return beta_; }

  /// Yield weight, clamped at zero (j(x,eta,.) must stay convex).
  double weight(const Vec& x, const Vec& eta) const {
    if (is_zero()) return 0.0;
    const double w = weight_(x, eta);
    return w > 0.0 ? w : 0.0;
  }

  double eval(const Vec& x, const Vec& eta, const Vec& v) const {
    if (is_zero()) return 0.0;
    return weight(x, eta) * std::max(v[dof_], 0.0);
  }

 private:
  int dof_ = -1;
  std::function<double(const Vec&, const Vec&)> weight_;
  double alpha_ = 0.0;
  double beta_ = 0.0;
};

/// Frozen convex term phi(v) = weight * max(v[dof], 0); dof < 0 means phi = 0.
struct FrozenPhi {
  double weight = 0.0;
  int dof = -1;

  double eval(const Vec& v) const {
    return (dof >= 0 && weight != 0.0) ? weight * std::max(v[dof], 0.0) : 0.0;
  }
};

/// Exact combined proximal map of gamma * (phi + indicator_K) in the V metric.
/// Built once per solve; apply() is the hot-loop step.
struct ProxPlan {
  enum class Scheme { identity, rank_one, coordinatewise };
  Scheme scheme = Scheme::identity;
  int kink_dof = -1;  // dof carrying the positive-part term, -1 if none

  // rank_one: the kink and/or bound act on pivot_dof; the slice minimizer is
  // w + ((s - w_pivot)/d) * Ginv e_pivot.
  int pivot_dof = -1;
  Vec ginv_col;
  double ginv_diag = 0.0;
  double upper = std::numeric_limits<double>::infinity();

  // coordinatewise (diagonal Gram): per-coordinate clamp + soft step.
  Vec lo, hi, gdiag;

  Vec apply(double gamma, double weight, const Vec& w) const;
};

/// Validates that (K, phi dof) admit an exact combined prox in this space and
/// assembles the plan. Throws config_error for unsupported combinations.
ProxPlan make_prox_plan(const Space& V, const ConvexSet& K, int phi_dof);

struct CertificateReport {
  double worst_margin = std::numeric_limits<double>::infinity();
  double worst_residual = std::numeric_limits<double>::infinity();
  int samples = 0;
  bool certified = false;
};

struct ViResult {
  Vec u;
  int iterations = 0;
  double last_step = 0.0;  // V-norm of the final update
  CertificateReport certificate;
};

struct QviResult {
  Vec u;
  std::vector<double> outer_rates;
  double tail_rate = 0.0;
  int outer_iterations = 0;
  long total_inner_iterations = 0;
  double contraction_bound = 0.0;  // beta/m
  CertificateReport certificate;
};

/// Inner solver: projected proximal-gradient in the V metric with fixed step,
/// u_{k+1} = prox(u_k - gamma G^{-1}(A(u_k) - fbar)). Terminates when the
/// contraction estimate puts u within inner_tol of the VI solution.
ViResult solve_vi(const Space& V, const ConvexSet& K,
                  const std::function<Vec(const Vec&)>& A_frozen, double m, double Lu,
                  const FrozenPhi& phi, const Vec& fbar, const QviConfig& cfg,
                  const Vec* initial = nullptr, par::Mode mode = par::Mode::serial);

/// Outer Banach iteration on the second argument of j around solve_vi.
/// Requires the smallness condition m > beta.
QviResult solve_qvi(const Vec& x, const OperatorA& A, const NonsmoothJ& j, const ConvexSet& K,
                    const Vec& fbar, const QviConfig& cfg, const Vec* initial = nullptr,
                    par::Mode mode = par::Mode::serial);

/// min over sampled v in K of
///   G(u,v) = <A(x,u), v-u> + j(x,u,v) - j(x,u,u) - <fbar, v-u>.
/// Nonnegative (up to solver tolerance) exactly at solutions; G(u,u) = 0.
double equilibrium_residual(const Vec& x, const Vec& u, const OperatorA& A, const NonsmoothJ& j,
                            const ConvexSet& K, const Vec& fbar, int samples,
                            std::uint64_t seed = 0x5eed);

/// Same, over an explicit list of test points (each projected onto K).
double equilibrium_residual(const Vec& x, const Vec& u, const OperatorA& A, const NonsmoothJ& j,
                            const ConvexSet& K, const Vec& fbar,
                            const std::vector<Vec>& test_points);

/// Residual certificate of a candidate VI solution: evaluates the defining
/// inequality plus slack tol*(1 + ||v-u||_V) over deterministic boundary
/// moves and seeded random feasible samples. Kernel runs in either mode with
/// bit-identical results.
CertificateReport certify_vi(const Space& V, const ConvexSet& K, const Vec& u, const Vec& A_at_u,
                             const FrozenPhi& phi, const Vec& fbar, double tol, int samples,
                             std::uint64_t seed, par::Mode mode);

/// Feasible test points around u: constraint-active vertices, single-dof
/// moves, seeded random directions; all projected onto K.
std::vector<Vec> sample_feasible_points(const ConvexSet& K, const Vec& u, int kink_dof,
                                        int samples, std::uint64_t seed);

}  // namespace dqvi
