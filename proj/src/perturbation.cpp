#include "dqvi/perturbation.hpp"

#include <cmath>
#include <exception>
#include <sstream>

#include <nlohmann/json.hpp>

#include "dqvi/errors.hpp"
#include "dqvi/io.hpp"

namespace dqvi {

FamilyConstants family_envelope(const DviProblem& base, const PerturbationSpec& spec) {
  FamilyConstants c;
  const double g1 = spec.F_scale;   // Gamma_1, largest member of the family
  const double l1 = spec.A_scale;   // Lambda_1
  c.L_J = base.L_J + g1;
  c.Lx = base.A.Lx + l1;
  c.Lu = base.A.Lu + l1;
  c.m = base.A.m;  // m_n = m + Lambda_n >= m
  c.alpha = base.j.alpha();
  c.beta = base.j.beta();  // weight offsets leave the coupling constant alone
  if (!(c.m > c.beta)) throw config_error("family_envelope: m > beta fails for the family");
  return c;
}

DviProblem build_perturbed(const DviProblem& base, const PerturbationSpec& spec, int n) {
  if (n < 1) throw input_error("build_perturbed: n must be >= 1");
  DviProblem p = base;

  if (spec.F_scale != 0.0) {
    if (spec.F_direction.size() != base.X->dim())
      throw config_error("build_perturbed: F_direction must live in X");
    const double norm = base.X->norm(spec.F_direction);
    if (!(norm > 0.0)) throw config_error("build_perturbed: F_direction must be nonzero");
    const Vec what = spec.F_direction / norm;
    const double gamma_n = spec.F_scale / n;
    const double offset = spec.F_offset;
    const auto baseF = base.F;
    const SpacePtr X = base.X;
    const SpacePtr V = base.V;
    p.F = [baseF, X, V, what, gamma_n, offset](double t, const Vec& x, const Vec& u) {
      return Vec(baseF(t, x, u) + gamma_n * (X->norm(x) + V->norm(u) + offset) * what);
    };
    p.L_J = base.L_J + gamma_n;
  }

  if (spec.A_scale != 0.0) {
    if (spec.A_direction.size() != base.V->dim())
      throw config_error("build_perturbed: A_direction must live on V");
    const double dn = base.V->dual_norm(spec.A_direction);
    if (!(dn > 0.0)) throw config_error("build_perturbed: A_direction must be nonzero");
    const Vec dhat = spec.A_direction / dn;
    const double lambda_n = spec.A_scale / n;
    const double offset = spec.A_offset;
    const auto baseA = base.A.eval;
    const SpacePtr X = base.X;
    const Mat gram_v = base.V->gram();
    p.A.eval = [baseA, X, gram_v, dhat, lambda_n, offset](const Vec& x, const Vec& u) {
      return Vec(baseA(x, u) + lambda_n * (gram_v * u) +
                 lambda_n * (X->norm(x) + offset) * dhat);
    };
    p.A.m = base.A.m + lambda_n;
    p.A.Lu = base.A.Lu + lambda_n;
    p.A.Lx = base.A.Lx + lambda_n;
  }

  if (spec.j_scale != 0.0) {
    const double offset_n = spec.j_scale / n;
    if (offset_n < 0.0) throw config_error("build_perturbed: j offset must be >= 0");
    if (!base.j.is_zero()) {
      const NonsmoothJ bj = base.j;
      p.j = NonsmoothJ::single_dof_pos_part(
          base.j.dof(),
          [bj, offset_n](const Vec& x, const Vec& eta) { return bj.weight(x, eta) + offset_n; },
          base.j.alpha(), base.j.beta());
    } else {
      if (base.K.kind() != ConvexSet::Kind::node_upper_bound)
        throw config_error("build_perturbed: j offset needs a contact dof (node-bound K)");
      const int dof = base.K.dof();
      p.j = NonsmoothJ::single_dof_pos_part(
          dof, [offset_n](const Vec&, const Vec&) { return offset_n; }, 0.0, 0.0);
    }
  }

  if (spec.f_scale != 0.0) {
    if (spec.f_direction.size() != base.Z->dim())
      throw config_error("build_perturbed: f_direction must live in Z");
    p.f_tilde = base.f_tilde + (spec.f_scale / n) * spec.f_direction;
  }

  if (spec.x0_scale != 0.0) {
    if (spec.x0_direction.size() != base.X->dim())
      throw config_error("build_perturbed: x0_direction must live in X");
    p.x0 = base.x0 + (spec.x0_scale / n) * spec.x0_direction;
  }

  if (spec.gap_scale != 0.0) {
    if (base.K.kind() != ConvexSet::Kind::node_upper_bound)
      throw config_error("build_perturbed: gap perturbation needs a node-bound K");
    const double g = base.K.bound();
    const double gn = g * (1.0 + spec.gap_scale / n);
    if (gn < spec.M0 || gn > spec.M1) {
      std::ostringstream os;
      os << "build_perturbed: G_" << n << " = " << gn << " violates the uniform bounds [" << spec.M0
         << ", " << spec.M1 << "]";
      throw config_error(os.str());
    }
    p.K = ConvexSet::node_upper_bound(base.V, base.K.dof(), gn);
  }
  return p;
}

AuxiliarySolve solve_auxiliary(const Trajectory& base, const DviProblem& problem_n,
                               const QviConfig& cfg) {
  AuxiliarySolve out;
  out.controls.reserve(base.nodes());
  const Vec* warm = nullptr;
  Vec warm_store;
  for (std::size_t i = 0; i < base.nodes(); ++i) {
    QviResult r;
    try {
      r = solve_qvi(base.states[i], problem_n.A, problem_n.j, problem_n.K,
                    problem_n.fbar(base.times[i]), cfg, warm);
    } catch (nonconvergence_error& e) {
      e.node = static_cast<int>(i);
      throw;
    }
    out.max_norm = std::max(out.max_norm, problem_n.V->norm(r.u));
    warm_store = r.u;
    warm = &warm_store;
    out.controls.push_back(std::move(r.u));
  }
  return out;
}

ConvergenceReport certify_convergence(const SpacePtr& X, const SpacePtr& V,
                                      const Trajectory& base,
                                      const std::vector<std::pair<int, Trajectory>>& perturbed,
                                      const std::vector<std::pair<int, AuxiliarySolve>>& aux,
                                      const FamilyConstants& constants, double slack) {
  ConvergenceReport rep;
  rep.bound_factor = constants.bound_factor();
  rep.slack = slack;

  if (perturbed.size() != aux.size())
    throw input_error("certify_convergence: perturbed/auxiliary lists differ in length");

  for (std::size_t k = 0; k < perturbed.size(); ++k) {
    const auto& [n, traj] = perturbed[k];
    const auto& [n_aux, auxk] = aux[k];
    if (n != n_aux) throw input_error("certify_convergence: n mismatch between lists");
    if (traj.times != base.times || auxk.controls.size() != base.nodes())
      throw input_error("certify_convergence: trajectories must share the time grid");
    rep.aux_uniform_bound = std::max(rep.aux_uniform_bound, auxk.max_norm);
    for (std::size_t i = 0; i < base.nodes(); ++i) {
      ConvergenceReport::Row row;
      row.n = n;
      row.t = base.times[i];
      row.e_u = V->distance(traj.controls[i], base.controls[i]);
      row.e_x = X->distance(traj.states[i], base.states[i]);
      row.e_aux = V->distance(auxk.controls[i], base.controls[i]);
      row.bound_lhs = row.e_u;
      row.bound_rhs = rep.bound_factor * row.e_x + row.e_aux + slack;
      row.pass = row.bound_lhs <= row.bound_rhs;
      rep.rows.push_back(row);
    }
  }
  return rep;
}

bool ConvergenceReport::all_bounds_pass() const {
  for (const auto& r : rows)
    if (!r.pass) return false;
  return true;
}

const ConvergenceReport::Row& ConvergenceReport::at(int n, double t) const {
  for (const auto& r : rows)
    if (r.n == n && std::fabs(r.t - t) <= 1e-12 * (1.0 + std::fabs(t))) return r;
  throw input_error("ConvergenceReport::at: no row for the requested (n, t)");
}

bool ConvergenceReport::decay_pass(int n_small, int n_large, double factor,
                                   const std::vector<double>& times, double noise_floor) const {
  for (double t : times) {
    const Row& a = at(n_small, t);
    const Row& b = at(n_large, t);
    const bool u_ok = b.e_u <= factor * a.e_u || a.e_u <= noise_floor;
    const bool x_ok = b.e_x <= factor * a.e_x || a.e_x <= noise_floor;
    if (!u_ok || !x_ok) return false;
  }
  return true;
}

std::string ConvergenceReport::to_csv() const {
  std::ostringstream os;
  os << "n,t,e_u,e_x,e_aux,bound_lhs,bound_rhs,pass\n";
  for (const auto& r : rows) {
    os << r.n << ',' << format_g17(r.t) << ',' << format_g17(r.e_u) << ',' << format_g17(r.e_x)
       << ',' << format_g17(r.e_aux) << ',' << format_g17(r.bound_lhs) << ','
       << format_g17(r.bound_rhs) << ',' << (r.pass ? 1 : 0) << '\n';
  }
  return os.str();
}

nlohmann::json ConvergenceReport::summary() const {
  nlohmann::json out;
  out["bound_factor"] = bound_factor;
  out["slack"] = slack;
  out["aux_uniform_bound"] = aux_uniform_bound;
  out["all_bounds_pass"] = all_bounds_pass();
  out["weak_convergence_realized_as"] = "norm-convergent sequences (finite dimensions)";
  nlohmann::json per_n = nlohmann::json::object();
  for (const auto& r : rows) {
    auto key = std::to_string(r.n);
    if (!per_n.contains(key)) {
      per_n[key] = {{"max_e_u", 0.0}, {"max_e_x", 0.0}, {"max_e_aux", 0.0}};
    }
    per_n[key]["max_e_u"] = std::max(per_n[key]["max_e_u"].get<double>(), r.e_u);
    per_n[key]["max_e_x"] = std::max(per_n[key]["max_e_x"].get<double>(), r.e_x);
    per_n[key]["max_e_aux"] = std::max(per_n[key]["max_e_aux"].get<double>(), r.e_aux);
  }
  out["per_n"] = per_n;
  return out;
}

FamilyRun run_family(const DviProblem& base, const Trajectory& base_trajectory,
                     const PerturbationSpec& spec, const std::vector<int>& n_values,
                     const std::vector<double>& grid, Scheme scheme, const QviConfig& cfg,
                     par::Mode mode) {
  FamilyRun run;
  run.n_values = n_values;
  run.perturbed.resize(n_values.size());
  run.auxiliaries.resize(n_values.size());

  std::vector<std::exception_ptr> errors(n_values.size());
  par::for_each_index(n_values.size(), mode, [&](std::size_t k) {
    try {
      const DviProblem pn = build_perturbed(base, spec, n_values[k]);
      run.perturbed[k] = integrate(pn, grid, scheme, cfg);
      run.auxiliaries[k] = solve_auxiliary(base_trajectory, pn, cfg);
    } catch (const nonconvergence_error& e) {
      nonconvergence_error tagged(
          "family member n=" + std::to_string(n_values[k]) + ": " + e.what(), e.residual,
          e.iterations);
      tagged.node = e.node;
      errors[k] = std::make_exception_ptr(tagged);
    } catch (...) {
      errors[k] = std::current_exception();
    }
  });
  for (auto& e : errors)
    if (e) std::rethrow_exception(e);

  std::vector<std::pair<int, Trajectory>> perturbed;
  std::vector<std::pair<int, AuxiliarySolve>> aux;
  for (std::size_t k = 0; k < n_values.size(); ++k) {
    perturbed.emplace_back(n_values[k], run.perturbed[k]);
    aux.emplace_back(n_values[k], run.auxiliaries[k]);
  }
  const FamilyConstants env = family_envelope(base, spec);
  const double slack = 100.0 * (cfg.inner_tol + cfg.outer_tol);
  run.report = certify_convergence(base.X, base.V, base_trajectory, perturbed, aux, env, slack);
  return run;
}

}  // namespace dqvi
