#include "dqvi/vi_solver.hpp"

#include <algorithm>
#include <cmath>
#include <random>
#include <sstream>

#include "dqvi/errors.hpp"

namespace dqvi {

namespace {

// 1D prox of (s - w)^2 / (2 a) + c s^+ over s <= upper (a > 0, c >= 0).
double prox_1d(double w, double a, double c, double upper) {
  double s;
  const double th = a * c;
  if (w - th > 0.0)
    s = w - th;
  else if (w < 0.0)
    s = w;
  else
    s = 0.0;
  return std::min(s, upper);
}

}  // namespace

Vec ProxPlan::apply(double gamma, double weight, const Vec& w) const {
  switch (scheme) {
    case Scheme::identity:
      return w;
    case Scheme::rank_one: {
      const double c = (kink_dof == pivot_dof && kink_dof >= 0) ? weight : 0.0;
      const double s = prox_1d(w[pivot_dof], gamma * ginv_diag, c, upper);
      if (s == w[pivot_dof]) return w;
      Vec v = w + ((s - w[pivot_dof]) / ginv_diag) * ginv_col;
      v[pivot_dof] = s;
      return v;
    }
    case Scheme::coordinatewise: {
      Vec v = w;
      for (int i = 0; i < v.size(); ++i) {
        double s = v[i];
        if (i == kink_dof && weight > 0.0) s = prox_1d(s, gamma / gdiag[i], weight, hi[i]);
        v[i] = std::min(std::max(s, lo[i]), hi[i]);
      }
      return v;
    }
  }
  throw config_error("ProxPlan::apply: unreachable");
}

ProxPlan make_prox_plan(const Space& V, const ConvexSet& K, int phi_dof) {
  ProxPlan p;
  p.kink_dof = phi_dof;
  const double inf = std::numeric_limits<double>::infinity();

  const bool smooth = phi_dof < 0;
  switch (K.kind()) {
    case ConvexSet::Kind::whole_space:
      if (smooth) {
        p.scheme = ProxPlan::Scheme::identity;
      } else {
        p.scheme = ProxPlan::Scheme::rank_one;
        p.pivot_dof = phi_dof;
        p.ginv_col = V.gram_inverse_column(phi_dof);
        p.ginv_diag = p.ginv_col[phi_dof];
        p.upper = inf;
      }
      return p;
    case ConvexSet::Kind::node_upper_bound:
      if (smooth || K.dof() == phi_dof) {
        p.scheme = ProxPlan::Scheme::rank_one;
        p.pivot_dof = K.dof();
        p.ginv_col = K.ginv_column();
        p.ginv_diag = K.ginv_diag();
        p.upper = K.bound();
        return p;
      }
      if (V.diagonal_gram()) {
        p.scheme = ProxPlan::Scheme::coordinatewise;
        p.lo = Vec::Constant(V.dim(), -inf);
        p.hi = Vec::Constant(V.dim(), inf);
        p.hi[K.dof()] = K.bound();
        p.gdiag = V.gram().diagonal();
        return p;
      }
      throw config_error(
          "make_prox_plan: nonsmooth dof and constrained dof differ under a non-diagonal Gram; "
          "no exact combined prox");
    case ConvexSet::Kind::box:
      if (!V.diagonal_gram())
        throw config_error("make_prox_plan: box constraint requires a diagonal Gram");
      p.scheme = ProxPlan::Scheme::coordinatewise;
      p.lo = K.lower();
      p.hi = K.upper();
      p.gdiag = V.gram().diagonal();
      return p;
  }
  throw config_error("make_prox_plan: unreachable");
}

std::vector<Vec> sample_feasible_points(const ConvexSet& K, const Vec& u, int kink_dof,
                                        int samples, std::uint64_t seed) {
  const Space& V = K.space();
  const int dim = V.dim();
  std::vector<Vec> pts;
  pts.reserve(static_cast<std::size_t>(samples) + 4 * dim + 4);

  const double scale = 1.0 + u.cwiseAbs().maxCoeff();

  // Constraint-active vertices reachable by single-dof moves.
  if (K.kind() == ConvexSet::Kind::node_upper_bound) {
    Vec v = u;
    v[K.dof()] = K.bound();
    pts.push_back(v);
  } else if (K.kind() == ConvexSet::Kind::box) {
    for (int i = 0; i < dim; ++i) {
      if (std::isfinite(K.lower()[i])) {
        Vec v = u;
        v[i] = K.lower()[i];
        pts.push_back(v);
      }
      if (std::isfinite(K.upper()[i])) {
        Vec v = u;
        v[i] = K.upper()[i];
        pts.push_back(v);
      }
    }
  }
  // The kink hyperplane v[dof] = 0 is where the subgradient switches.
  if (kink_dof >= 0) {
    Vec v = u;
    v[kink_dof] = 0.0;
    pts.push_back(K.project(v));
  }

  // Single-dof moves at two scales.
  for (int i = 0; i < dim; ++i) {
    for (double step : {0.1 * scale, scale}) {
      Vec up = u;
      up[i] += step;
      pts.push_back(K.project(up));
      Vec dn = u;
      dn[i] -= step;
      pts.push_back(K.project(dn));
    }
  }

  // Seeded random feasible directions at several radii.
  const double radii[4] = {0.01, 0.1, 1.0, 3.0};
  const int nrand = std::max(0, samples - static_cast<int>(pts.size()));
  for (int s = 0; s < nrand; ++s) {
    std::mt19937_64 gen(par::index_seed(seed, static_cast<std::uint64_t>(s)));
    std::uniform_real_distribution<double> unif(-1.0, 1.0);
    Vec dir(dim);
    for (int i = 0; i < dim; ++i) dir[i] = unif(gen);
    pts.push_back(K.project(u + radii[s % 4] * scale * dir));
  }
  return pts;
}

CertificateReport certify_vi(const Space& V, const ConvexSet& K, const Vec& u, const Vec& A_at_u,
                             const FrozenPhi& phi, const Vec& fbar, double tol, int samples,
                             std::uint64_t seed, par::Mode mode) {
  const std::vector<Vec> pts = sample_feasible_points(K, u, phi.dof, samples, seed);
  const double phi_u = phi.eval(u);

  std::vector<double> margin(pts.size());
  std::vector<double> residual(pts.size());
  par::for_each_index(pts.size(), mode, [&](std::size_t s) {
    const Vec d = pts[s] - u;
    const double lhs = A_at_u.dot(d) + phi.eval(pts[s]) - phi_u - fbar.dot(d);
    residual[s] = lhs;
    margin[s] = lhs + tol * (1.0 + V.norm(d));
  });

  CertificateReport rep;
  rep.samples = static_cast<int>(pts.size());
  for (std::size_t s = 0; s < pts.size(); ++s) {
    rep.worst_margin = std::min(rep.worst_margin, margin[s]);
    rep.worst_residual = std::min(rep.worst_residual, residual[s]);
  }
  rep.certified = rep.worst_margin >= 0.0;
  return rep;
}

namespace {

void check_config(const QviConfig& cfg, const char* who) {
  if (!(cfg.inner_tol > 0.0) || !(cfg.outer_tol > 0.0))
    throw config_error(std::string(who) + ": tolerances must be positive");
  if (cfg.max_inner < 1 || cfg.max_outer < 1)
    throw config_error(std::string(who) + ": iteration budgets must be at least 1");
}

}  // namespace

ViResult solve_vi(const Space& V, const ConvexSet& K,
                  const std::function<Vec(const Vec&)>& A_frozen, double m, double Lu,
                  const FrozenPhi& phi, const Vec& fbar, const QviConfig& cfg,
                  const Vec* initial, par::Mode mode) {
  check_config(cfg, "solve_vi");
  if (!(m > 0.0)) throw config_error("solve_vi: strong monotonicity constant m must be positive");
  if (Lu < m) throw config_error("solve_vi: Lipschitz constant Lu must satisfy Lu >= m");
  const double gamma_max = 2.0 * m / (Lu * Lu);
  const double gamma = cfg.step > 0.0 ? cfg.step : m / (Lu * Lu);
  if (!(gamma > 0.0) || !(gamma < gamma_max)) {
    std::ostringstream os;
    os << "solve_vi: step " << gamma << " outside (0, 2m/Lu^2) = (0, " << gamma_max << ")";
    throw config_error(os.str());
  }
  // Contraction factor of the prox-gradient map in the V norm.
  const double q =
      std::sqrt(std::max(0.0, 1.0 - 2.0 * gamma * m + gamma * gamma * Lu * Lu));
  const double stop_tol =
      cfg.inner_tol * std::max(1e-16, 1.0 - q) / std::max(1.0, Lu);

  const ProxPlan plan = make_prox_plan(V, K, phi.weight != 0.0 ? phi.dof : -1);

  ViResult res;
  res.u = initial ? K.project(*initial) : K.project(Vec::Zero(V.dim()));

  int iters = 0;
  double step_norm = std::numeric_limits<double>::infinity();
  bool converged = false;
  while (iters < cfg.max_inner) {
    const Vec grad = A_frozen(res.u) - fbar;
    const Vec w = res.u - gamma * V.riesz(grad);
    Vec next = plan.apply(gamma, phi.weight, w);
    step_norm = V.distance(next, res.u);
    res.u = std::move(next);
    ++iters;
    if (step_norm <= stop_tol) {
      converged = true;
      break;
    }
  }
  res.iterations = iters;
  res.last_step = step_norm;
  if (!converged) {
    nonconvergence_error err("solve_vi: max_inner exhausted", step_norm, cfg.max_inner);
    throw err;
  }

  if (cfg.residual_samples >= 0)
    res.certificate = certify_vi(V, K, res.u, A_frozen(res.u), phi, fbar, cfg.inner_tol,
                                 cfg.residual_samples, cfg.sample_seed, mode);
  return res;
}

QviResult solve_qvi(const Vec& x, const OperatorA& A, const NonsmoothJ& j, const ConvexSet& K,
                    const Vec& fbar, const QviConfig& cfg, const Vec* initial, par::Mode mode) {
  check_config(cfg, "solve_qvi");
  if (!(A.m > j.beta())) {
    std::ostringstream os;
    os << "solve_qvi: contraction condition violated, m = " << A.m << " <= beta = " << j.beta();
    throw config_error(os.str());
  }
  const Space& V = K.space();

  QviConfig inner_cfg = cfg;
  inner_cfg.inner_tol = std::min(cfg.inner_tol, cfg.outer_tol / 10.0);
  inner_cfg.residual_samples = -1;  // certify once at the end

  QviResult res;
  res.contraction_bound = j.beta() / A.m;

  Vec eta = initial ? K.project(*initial) : K.project(Vec::Zero(V.dim()));
  const double rate_floor = 1e3 * inner_cfg.inner_tol * (1.0 + V.norm(eta));

  auto frozen = [&](const Vec& u) { return A.eval(x, u); };

  double prev_dist = -1.0;
  bool converged = false;
  for (int k = 0; k < cfg.max_outer; ++k) {
    const FrozenPhi phi{j.weight(x, eta), j.dof()};
    ViResult inner = solve_vi(V, K, frozen, A.m, A.Lu, phi, fbar, inner_cfg, &eta, mode);
    res.total_inner_iterations += inner.iterations;
    const double dist = V.distance(inner.u, eta);
    if (prev_dist > rate_floor && dist > 0.0) res.outer_rates.push_back(dist / prev_dist);
    prev_dist = dist;
    eta = std::move(inner.u);
    ++res.outer_iterations;
    if (dist <= cfg.outer_tol) {
      converged = true;
      break;
    }
  }
  if (!converged) {
    nonconvergence_error err("solve_qvi: max_outer exhausted", prev_dist, cfg.max_outer);
    throw err;
  }

  res.u = eta;
  if (!res.outer_rates.empty()) {
    const std::size_t tail = (res.outer_rates.size() + 1) / 2;
    res.tail_rate = *std::max_element(res.outer_rates.end() - tail, res.outer_rates.end());
  }

  const FrozenPhi phi_final{j.weight(x, res.u), j.dof()};
  res.certificate = certify_vi(V, K, res.u, A.eval(x, res.u), phi_final, fbar, cfg.inner_tol,
                               cfg.residual_samples, cfg.sample_seed, mode);
  return res;
}

double equilibrium_residual(const Vec& x, const Vec& u, const OperatorA& A, const NonsmoothJ& j,
                            const ConvexSet& K, const Vec& fbar,
                            const std::vector<Vec>& test_points) {
  if (u.size() != K.space().dim()) throw input_error("equilibrium_residual: dimension mismatch");
  const Vec a = A.eval(x, u);
  const double ju = j.eval(x, u, u);
  double best = std::numeric_limits<double>::infinity();
  for (const Vec& v : test_points) {
    const Vec d = v - u;
    const double g = a.dot(d) + j.eval(x, u, v) - ju - fbar.dot(d);
    best = std::min(best, g);
  }
  return best;
}

double equilibrium_residual(const Vec& x, const Vec& u, const OperatorA& A, const NonsmoothJ& j,
                            const ConvexSet& K, const Vec& fbar, int samples,
                            std::uint64_t seed) {
  std::vector<Vec> pts = sample_feasible_points(K, u, j.dof(), samples, seed);
  pts.insert(pts.begin(), u);  // G(u,u) = 0 anchors the sample set
  return equilibrium_residual(x, u, A, j, K, fbar, pts);
}

}  // namespace dqvi
