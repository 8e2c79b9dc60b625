#pragma once

#include <string>

#include "dqvi/dvi.hpp"
#include "dqvi/toml.hpp"

namespace dqvi {

/// Physical data of the 1D viscoelastic contact rod: clamped at y = 0, in
/// contact at y = L with a rigid foundation covered by a rigid-elastic layer
/// of thickness `gap`. P1 displacements, P0 stresses.
struct RodConfig {
  double length = 1.0;  // m
  int elements = 50;
  Vec modulus;      // E per element, Pa; all >= m_E > 0
  Vec visco;        // relaxation rate beta per element, 1/s
  double fnl_slope = 1.0;  // constitutive slope before clipping
  double fnl_cap = 1.0;    // slope clip: F(eps) = clamp(slope, -cap, cap) * eps
  double stiffness_k = 0.0;  // contact stiffness, Pa/m
  double gap = 0.1;          // layer thickness G > 0
  double h0 = 0.0, c1 = 0.0, c2 = 0.0;  // yield h(xi,r) = max(0, h0 + c1 xi + c2 r)
  ThetaProfile theta;
  double f0_amplitude = 0.0;  // body load amplitude, f(t) = theta(t) * amplitude
  double u0 = 0.0;            // end displacement of the linear initial profile
  double sigma0 = 0.0;        // uniform initial stress per element

  static RodConfig with_uniform(double length, int elements, double modulus, double visco);
  static RodConfig from_toml(const toml::Table& rod);

  double effective_slope() const;  // clamp(fnl_slope, -fnl_cap, fnl_cap)
  double fnl(double eps) const { return effective_slope() * eps; }
  double yield(double xi, double r) const { return std::max(0.0, h0 + c1 * xi + c2 * r); }
  double yield_lipschitz() const { return std::max(c1, c2); }
};

/// Per-element irreversible stress plus accumulated penetration at the
/// contact node. Flattens to the DVI state vector [sigma_ir..., xi].
struct RodState {
  Vec sigma_ir;
  double xi = 0.0;

  Vec flat() const;
  static RodState from_flat(const Vec& x);
};

/// Assembled discrete problem with the rod-specific handles the diagnostics
/// need on top of the generic DviProblem.
struct RodAssembly {
  RodConfig config;
  DviProblem problem;

  int contact_dof = -1;
  double trace_constant = 0.0;  // c_tr = max |u(L)| over unit V-norm
  double m = 0.0;               // = min_e E_e
  double alpha = 0.0;           // L_h * c_tr
  double beta_coupling = 0.0;   // L_h * c_tr^2

  Mat stiffness_E;   // E-weighted stiffness block of A
  Mat sigma_to_dual; // sigma -> (sigma, eps(v))_Q in dual coordinates

  /// (E eps(u) + sigma_ir, eps(.))_Q without the contact boundary term; the
  /// weak normal stress at the contact node is (elastic_dual - fbar)[contact].
  Vec elastic_dual(const Vec& x, const Vec& u) const;

  Vec strains(const Vec& u) const;  // per-element eps(u)
};

/// Builds the DviProblem of the rod: computes (not declares) m, beta, the
/// trace constant, and validates m > beta. Throws config_error naming L_h and
/// m_E when the smallness condition fails.
RodAssembly assemble(const RodConfig& cfg);

/// sigma_ir' = beta (E eps(u) + sigma_ir - F(eps(u))) per element,
/// xi' = max(u(L), 0).
RodState state_derivative(const RodConfig& cfg, const RodState& x, const Vec& u, double t);

struct ContactDiagnostics {
  double penetration_violation = 0.0;  // max(u(L) - G, 0)
  double sigma_nu = 0.0;               // discrete weak normal stress
  double eta = 0.0;                    // interface reaction selection
  double multiplier = 0.0;             // sigma_nu + k u(L)+ + eta (<= 0 at solutions)
  double sign_residual = 0.0;          // max(multiplier, 0)
  double complementarity_residual = 0.0;  // |(u(L) - G) * multiplier|
  double eta_bounds_residual = 0.0;       // distance of the selection to [0, h]
};

/// Complementarity diagnostics of a certified QVI solution at state x.
/// Refuses (input_error) solutions without a passing residual certificate.
ContactDiagnostics contact_diagnostics(const RodAssembly& rod, const Vec& x, const QviResult& sol,
                                       double t);

}  // namespace dqvi
