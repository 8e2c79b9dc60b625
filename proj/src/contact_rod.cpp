#include "dqvi/contact_rod.hpp"

#include <cmath>
#include <sstream>

#include "dqvi/errors.hpp"

namespace dqvi {

RodConfig RodConfig::with_uniform(double length, int elements, double modulus, double visco) {
  RodConfig cfg;
  cfg.length = length;
  cfg.elements = elements;
  cfg.modulus = Vec::Constant(elements, modulus);
  cfg.visco = Vec::Constant(elements, visco);
  return cfg;
}

double RodConfig::effective_slope() const {
  return std::min(std::max(fnl_slope, -fnl_cap), fnl_cap);
}

RodConfig RodConfig::from_toml(const toml::Table& rod) {
  rod.reject_unknown_keys({"length", "elements", "modulus", "visco", "fnl_slope", "fnl_cap",
                           "stiffness_k", "gap", "h0", "c1", "c2", "theta", "f0_amplitude", "u0",
                           "sigma0"},
                          "rod");
  RodConfig cfg;
  cfg.length = rod.get_number("length", cfg.length);
  cfg.elements = static_cast<int>(rod.get_integer("elements", 50));
  cfg.modulus = Vec::Constant(cfg.elements, rod.get_number("modulus", 1.0));
  cfg.visco = Vec::Constant(cfg.elements, rod.get_number("visco", 0.5));
  cfg.fnl_slope = rod.get_number("fnl_slope", cfg.fnl_slope);
  cfg.fnl_cap = rod.get_number("fnl_cap", cfg.fnl_cap);
  cfg.stiffness_k = rod.get_number("stiffness_k", cfg.stiffness_k);
  cfg.gap = rod.get_number("gap", cfg.gap);
  cfg.h0 = rod.get_number("h0", cfg.h0);
  cfg.c1 = rod.get_number("c1", cfg.c1);
  cfg.c2 = rod.get_number("c2", cfg.c2);
  cfg.theta = ThetaProfile::from_name(rod.get_string("theta", "const"));
  cfg.f0_amplitude = rod.get_number("f0_amplitude", cfg.f0_amplitude);
  cfg.u0 = rod.get_number("u0", cfg.u0);
  cfg.sigma0 = rod.get_number("sigma0", cfg.sigma0);
  return cfg;
}

Vec RodState::flat() const {
  Vec x(sigma_ir.size() + 1);
  x.head(sigma_ir.size()) = sigma_ir;
  x[sigma_ir.size()] = xi;
  return x;
}

RodState RodState::from_flat(const Vec& x) {
  RodState s;
  s.sigma_ir = x.head(x.size() - 1);
  s.xi = x[x.size() - 1];
  return s;
}

RodState state_derivative(const RodConfig& cfg, const RodState& x, const Vec& u, double t) {
  (void)t;
  const int n = cfg.elements;
  if (x.sigma_ir.size() != n || u.size() != n)
    throw input_error("state_derivative: dimensions do not match the rod");
  const double h = cfg.length / n;
  RodState d;
  d.sigma_ir.resize(n);
  double prev = 0.0;
  for (int e = 0; e < n; ++e) {
    const double eps = (u[e] - prev) / h;
    d.sigma_ir[e] = cfg.visco[e] * (cfg.modulus[e] * eps + x.sigma_ir[e] - cfg.fnl(eps));
    prev = u[e];
  }
  d.xi = std::max(u[n - 1], 0.0);
  return d;
}

RodAssembly assemble(const RodConfig& cfg) {
  const int n = cfg.elements;
  if (n < 1) throw input_error("assemble: need at least one element");
  if (cfg.modulus.size() != n || cfg.visco.size() != n)
    throw config_error("assemble: modulus/visco must have one entry per element");
  const double m_E = cfg.modulus.minCoeff();
  if (!(m_E > 0.0)) throw config_error("assemble: ellipticity requires min modulus m_E > 0");
  if (!(cfg.gap > 0.0)) throw config_error("assemble: layer thickness G must be positive");
  if (cfg.stiffness_k < 0.0) throw config_error("assemble: contact stiffness k must be >= 0");
  if (cfg.c1 < 0.0 || cfg.c2 < 0.0)
    throw config_error("assemble: yield slopes c1, c2 must be >= 0");

  const double h = cfg.length / n;

  // V: P1 displacements with the clamped node removed; Gram = int u' v'.
  Mat gram_v = Mat::Zero(n, n);
  Mat stiff_e = Mat::Zero(n, n);
  for (int e = 0; e < n; ++e) {
    const int left = e - 1, right = e;  // dof indices; left = -1 is the clamped node
    const double w = 1.0 / h;
    const double we = cfg.modulus[e] / h;
    if (left >= 0) {
      gram_v(left, left) += w;
      gram_v(left, right) -= w;
      gram_v(right, left) -= w;
      stiff_e(left, left) += we;
      stiff_e(left, right) -= we;
      stiff_e(right, left) -= we;
    }
    gram_v(right, right) += w;
    stiff_e(right, right) += we;
  }
  SpacePtr V = Space::with_gram(gram_v);

  // X = Q x R: per-element stresses with the L2 weight plus the penetration.
  Vec xw(n + 1);
  xw.head(n).setConstant(h);
  xw[n] = 1.0;
  SpacePtr X = Space::with_gram(xw.asDiagonal().toDenseMatrix());

  // Z: P1 mass matrix over the free nodes (body-load pairing).
  Mat mass = Mat::Zero(n, n);
  for (int e = 0; e < n; ++e) {
    const int left = e - 1, right = e;
    if (left >= 0) {
      mass(left, left) += 2.0 * h / 6.0;
      mass(left, right) += h / 6.0;
      mass(right, left) += h / 6.0;
    }
    mass(right, right) += 2.0 * h / 6.0;
  }
  SpacePtr Z = Space::with_gram(mass);

  // (sigma, eps(v))_Q = sum_e sigma_e (v_e - v_{e-1}).
  Mat d = Mat::Zero(n, n);
  for (int i = 0; i < n; ++i) {
    d(i, i) = 1.0;
    if (i + 1 < n) d(i, i + 1) = -1.0;
  }

  RodAssembly rod;
  rod.config = cfg;
  rod.contact_dof = n - 1;
  rod.stiffness_E = stiff_e;
  rod.sigma_to_dual = d;
  rod.trace_constant = std::sqrt(V->gram_inverse_column(n - 1)[n - 1]);

  const double L_h = cfg.yield_lipschitz();
  rod.m = m_E;
  rod.alpha = L_h * rod.trace_constant;
  rod.beta_coupling = L_h * rod.trace_constant * rod.trace_constant;
  if (!(rod.m > rod.beta_coupling)) {
    std::ostringstream os;
    os << "assemble: smallness condition fails, m_E = " << m_E << " <= L_h * c_tr^2 = "
       << rod.beta_coupling << " (L_h = " << L_h << ")";
    throw config_error(os.str());
  }

  const int contact = rod.contact_dof;
  const double k = cfg.stiffness_k;
  const double c_tr = rod.trace_constant;
  const double e_max = cfg.modulus.maxCoeff();
  const double beta_max = cfg.visco.maxCoeff();
  const double l_f = std::fabs(cfg.effective_slope());

  DviProblem p{.X = X,
               .V = V,
               .Z = Z,
               .F = {},
               .L_J = std::max(beta_max, beta_max * (e_max + l_f) + c_tr),
               .A = {},
               .j = {},
               .K = ConvexSet::node_upper_bound(V, contact, cfg.gap),
               .pi = LinearMap(Mat::Identity(n, n), V, Z),
               .theta = cfg.theta,
               .f_tilde = Vec::Constant(n, cfg.f0_amplitude),
               .x0 = {}};

  const Mat stiff = stiff_e;
  const Mat dual = d;
  p.A.eval = [stiff, dual, k, contact, n](const Vec& x, const Vec& u) {
    Vec a = stiff * u + dual * x.head(n);
    if (k != 0.0) a[contact] += k * std::max(u[contact], 0.0);
    return a;
  };
  p.A.m = m_E;
  p.A.Lx = 1.0;
  p.A.Lu = e_max + k * c_tr * c_tr;

  const RodConfig cfg_copy = cfg;
  if (L_h > 0.0 || cfg.h0 > 0.0) {
    p.j = NonsmoothJ::single_dof_pos_part(
        contact,
        [cfg_copy, contact, n](const Vec& x, const Vec& eta) {
          return cfg_copy.yield(x[n], std::max(eta[contact], 0.0));
        },
        rod.alpha, rod.beta_coupling);
  } else {
    p.j = NonsmoothJ::zero();
  }

  p.F = [cfg_copy](double t, const Vec& x, const Vec& u) {
    return state_derivative(cfg_copy, RodState::from_flat(x), u, t).flat();
  };

  // sigma_ir(0) = sigma0 - E eps(u0), xi(0) = 0, with the linear u0 profile.
  RodState init;
  init.sigma_ir.resize(n);
  const double eps0 = cfg.u0 / cfg.length;
  for (int e = 0; e < n; ++e) init.sigma_ir[e] = cfg.sigma0 - cfg.modulus[e] * eps0;
  init.xi = 0.0;
  p.x0 = init.flat();

  rod.problem = std::move(p);
  return rod;
}

Vec RodAssembly::elastic_dual(const Vec& x, const Vec& u) const {
  const int n = config.elements;
  return stiffness_E * u + sigma_to_dual * x.head(n);
}

Vec RodAssembly::strains(const Vec& u) const {
  const int n = config.elements;
  const double h = config.length / n;
  Vec eps(n);
  double prev = 0.0;
  for (int e = 0; e < n; ++e) {
    eps[e] = (u[e] - prev) / h;
    prev = u[e];
  }
  return eps;
}

ContactDiagnostics contact_diagnostics(const RodAssembly& rod, const Vec& x, const QviResult& sol,
                                       double t) {
  if (!sol.certificate.certified)
    throw input_error("contact_diagnostics: refused, the solution carries no passing certificate");
  const int c = rod.contact_dof;
  const double un = sol.u[c];
  const double g = rod.config.gap;
  const double k = rod.config.stiffness_k;
  const double xi = x[x.size() - 1];
  const double un_pos = std::max(un, 0.0);
  const double h_val = rod.config.yield(xi, un_pos);

  ContactDiagnostics out;
  out.penetration_violation = std::max(un - g, 0.0);
  out.sigma_nu = (rod.elastic_dual(x, sol.u) - rod.problem.fbar(t))[c];

  const double contact_tol = 1e-9 * (1.0 + std::fabs(g));
  if (un > contact_tol) {
    out.eta = h_val;
  } else if (un < -contact_tol) {
    out.eta = 0.0;
  } else {
    // At the kink the solver certifies a subgradient selection in [0, h].
    const double implied = -out.sigma_nu - k * un_pos;
    out.eta = std::min(std::max(implied, 0.0), h_val);
    out.eta_bounds_residual = std::max(0.0, implied - h_val) + std::max(0.0, -implied);
  }
  out.multiplier = out.sigma_nu + k * un_pos + out.eta;
  out.sign_residual = std::max(out.multiplier, 0.0);
  out.complementarity_residual = std::fabs((un - g) * out.multiplier);
  return out;
}

}  // namespace dqvi
