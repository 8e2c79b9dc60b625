#include "dqvi/dvi.hpp"

#include <cmath>
#include <random>
#include <sstream>

#include <nlohmann/json.hpp>

#include "dqvi/errors.hpp"
#include "dqvi/io.hpp"

namespace dqvi {

double ThetaProfile::operator()(double t) const {
  switch (kind) {
    case Kind::constant:
      return 1.0;
    case Kind::ramp:
      return t;
    case Kind::sine:
      return std::sin(t);
  }
  return 1.0;
}

ThetaProfile ThetaProfile::from_name(const std::string& name) {
  if (name == "const") return {Kind::constant};
  if (name == "ramp") return {Kind::ramp};
  if (name == "sine") return {Kind::sine};
  throw config_error("unknown theta profile '" + name + "' (expected const|ramp|sine)");
}

std::string ThetaProfile::name() const {
  switch (kind) {
    case Kind::constant:
      return "const";
    case Kind::ramp:
      return "ramp";
    case Kind::sine:
      return "sine";
  }
  return "const";
}

void DviProblem::validate(int samples, std::uint64_t seed) const {
  if (!(A.m > j.beta())) {
    std::ostringstream os;
    os << "DviProblem: contraction condition m > beta violated (m = " << A.m
       << ", beta = " << j.beta() << ")";
    throw config_error(os.str());
  }
  if (x0.size() != X->dim()) throw config_error("DviProblem: x0 does not live in X");
  if (f_tilde.size() != Z->dim()) throw config_error("DviProblem: f_tilde does not live in Z");

  std::mt19937_64 gen(seed);
  std::uniform_real_distribution<double> unif(-1.0, 1.0);
  auto rand_vec = [&](int dim, double scale) {
    Vec v(dim);
    for (int i = 0; i < dim; ++i) v[i] = scale * unif(gen);
    return v;
  };

  for (int s = 0; s < samples; ++s) {
    const double scale = (s % 3 == 0) ? 0.1 : ((s % 3 == 1) ? 1.0 : 5.0);
    const Vec x1 = rand_vec(X->dim(), scale), x2 = rand_vec(X->dim(), scale);
    const Vec u1 = rand_vec(V->dim(), scale), u2 = rand_vec(V->dim(), scale);
    const double t = 0.5 * (unif(gen) + 1.0);

    // A: strong monotonicity and both Lipschitz constants.
    const Vec a11 = A.eval(x1, u1), a12 = A.eval(x1, u2), a21 = A.eval(x2, u1);
    const double du = V->distance(u1, u2);
    if (du > 1e-12) {
      const double mono = (a11 - a12).dot(u1 - u2);
      if (mono < A.m * du * du * (1.0 - 1e-6) - 1e-12)
        throw config_error("DviProblem: sampled monotonicity of A fell below the declared m");
      if (V->dual_norm(a11 - a12) > A.Lu * du * (1.0 + 1e-6) + 1e-12)
        throw config_error("DviProblem: sampled u-Lipschitz constant of A exceeds declared Lu");
    }
    const double dx = X->distance(x1, x2);
    if (dx > 1e-12 && V->dual_norm(a11 - a21) > A.Lx * dx * (1.0 + 1e-6) + 1e-12)
      throw config_error("DviProblem: sampled x-Lipschitz constant of A exceeds declared Lx");

    // F: declared L_J dominates sampled difference quotients (1% slack).
    const Vec f1 = F(t, x1, u1), f2 = F(t, x2, u2);
    const double df = X->distance(f1, f2);
    if (dx + du > 1e-12 && df > L_J * (dx + du) * 1.01 + 1e-12)
      throw config_error("DviProblem: sampled Lipschitz constant of F exceeds declared L_J");

    // j: four-term bound with the declared alpha, beta.
    if (!j.is_zero()) {
      const Vec v1 = rand_vec(V->dim(), scale), v2 = rand_vec(V->dim(), scale);
      const double lhs = j.eval(x1, u1, v2) - j.eval(x1, u1, v1) + j.eval(x2, u2, v1) -
                         j.eval(x2, u2, v2);
      const double dv = V->distance(v1, v2);
      const double rhs = j.alpha() * dx * dv + j.beta() * du * dv;
      if (lhs > rhs * (1.0 + 1e-6) + 1e-10)
        throw config_error("DviProblem: sampled four-term bound of j exceeds declared constants");
      // midpoint convexity in the third argument
      const Vec mid = 0.5 * (v1 + v2);
      if (j.eval(x1, u1, mid) >
          0.5 * (j.eval(x1, u1, v1) + j.eval(x1, u1, v2)) + 1e-10)
        throw config_error("DviProblem: j(x,u,.) failed the midpoint convexity check");
    }
  }
  (void)pi.operator_norm();  // finite by construction
}

std::vector<double> uniform_grid(double horizon, int steps) {
  if (!(horizon > 0.0) || steps < 1) throw input_error("uniform_grid: need horizon > 0, steps >= 1");
  std::vector<double> g(static_cast<std::size_t>(steps) + 1);
  for (int i = 0; i <= steps; ++i) g[i] = horizon * static_cast<double>(i) / steps;
  return g;
}

Scheme scheme_from_name(const std::string& name) {
  if (name == "euler") return Scheme::explicit_euler;
  if (name == "heun") return Scheme::heun;
  throw config_error("unknown scheme '" + name + "' (expected euler|heun)");
}

std::string scheme_name(Scheme s) { return s == Scheme::explicit_euler ? "euler" : "heun"; }

Trajectory integrate(const DviProblem& problem, const std::vector<double>& grid, Scheme scheme,
                     const QviConfig& cfg) {
  if (grid.empty() || grid.front() != 0.0)
    throw input_error("integrate: grid must start at t = 0");
  for (std::size_t i = 1; i < grid.size(); ++i)
    if (!(grid[i] > grid[i - 1])) throw input_error("integrate: grid must be strictly increasing");
  if (!(problem.A.m > problem.j.beta()))
    throw config_error("integrate: contraction condition m > beta violated");

  Trajectory traj;
  traj.times = grid;
  traj.states.reserve(grid.size());
  traj.controls.reserve(grid.size());
  traj.stats.reserve(grid.size());

  Vec x = problem.x0;
  const Vec* warm = nullptr;
  Vec warm_store;

  for (std::size_t i = 0; i < grid.size(); ++i) {
    const double t = grid[i];
    QviResult node;
    try {
      node = solve_qvi(x, problem.A, problem.j, problem.K, problem.fbar(t), cfg, warm);
    } catch (nonconvergence_error& e) {
      e.node = static_cast<int>(i);
      throw;
    }
    if (!problem.K.contains(node.u, 1e-12))
      throw config_error("integrate: node control left the constraint set");

    traj.states.push_back(x);
    traj.controls.push_back(node.u);
    traj.stats.push_back({node.outer_iterations, node.total_inner_iterations,
                          node.certificate.worst_margin, node.certificate.worst_residual});

    warm_store = node.u;
    warm = &warm_store;

    if (i + 1 == grid.size()) break;
    const double dt = grid[i + 1] - grid[i];
    const Vec k1 = problem.F(t, x, node.u);
    if (scheme == Scheme::explicit_euler) {
      x = x + dt * k1;
    } else {
      const Vec xp = x + dt * k1;
      QviResult pred;
      try {
        pred = solve_qvi(xp, problem.A, problem.j, problem.K, problem.fbar(grid[i + 1]), cfg,
                         warm);
      } catch (nonconvergence_error& e) {
        e.node = static_cast<int>(i);
        throw;
      }
      const Vec k2 = problem.F(grid[i + 1], xp, pred.u);
      x = x + 0.5 * dt * (k1 + k2);
    }
  }
  return traj;
}

std::string Trajectory::to_csv() const {
  std::ostringstream os;
  const int xd = states.empty() ? 0 : static_cast<int>(states.front().size());
  const int ud = controls.empty() ? 0 : static_cast<int>(controls.front().size());
  os << "t";
  for (int i = 0; i < xd; ++i) os << ",x" << i;
  for (int i = 0; i < ud; ++i) os << ",u" << i;
  os << ",residual,outer_iterations\n";
  for (std::size_t r = 0; r < times.size(); ++r) {
    os << format_g17(times[r]);
    for (int i = 0; i < xd; ++i) os << ',' << format_g17(states[r][i]);
    for (int i = 0; i < ud; ++i) os << ',' << format_g17(controls[r][i]);
    os << ',' << format_g17(stats[r].certificate_residual) << ',' << stats[r].outer_iterations
       << '\n';
  }
  return os.str();
}

nlohmann::json Trajectory::to_json() const {
  nlohmann::json nodes = nlohmann::json::array();
  for (std::size_t r = 0; r < times.size(); ++r) {
    nlohmann::json row;
    row["t"] = times[r];
    row["x"] = std::vector<double>(states[r].data(), states[r].data() + states[r].size());
    row["u"] = std::vector<double>(controls[r].data(), controls[r].data() + controls[r].size());
    row["outer_iterations"] = stats[r].outer_iterations;
    row["inner_iterations"] = stats[r].inner_iterations;
    row["certificate_margin"] = stats[r].certificate_margin;
    row["certificate_residual"] = stats[r].certificate_residual;
    nodes.push_back(row);
  }
  nlohmann::json out;
  out["nodes"] = nodes;
  out["node_count"] = times.size();
  return out;
}

OrderEstimate observed_order(const DviProblem& problem, Scheme scheme, double horizon,
                             int base_steps, int refinements, const Reference& ref,
                             const QviConfig& cfg) {
  if (refinements < 3) throw input_error("observed_order: need at least 3 refinement levels");
  OrderEstimate est;
  double scale = 0.0;
  for (int level = 0; level < refinements; ++level) {
    const int steps = base_steps << level;
    const Trajectory traj = integrate(problem, uniform_grid(horizon, steps), scheme, cfg);
    const Vec xr = ref.x(horizon);
    double err = problem.X->distance(traj.states.back(), xr);
    scale = std::max(scale, problem.X->norm(xr));
    if (ref.u) {
      const Vec ur = ref.u(horizon);
      err += problem.V->distance(traj.controls.back(), ur);
      scale = std::max(scale, problem.V->norm(ur));
    }
    est.dts.push_back(horizon / steps);
    est.errors.push_back(err);
  }

  bool all_tiny = true;
  for (double e : est.errors) all_tiny = all_tiny && e <= 1e-12 * (1.0 + scale);
  if (all_tiny) {
    est.exact = true;
    return est;
  }

  // least-squares slope of log(err) vs log(dt)
  double sx = 0, sy = 0, sxx = 0, sxy = 0;
  const int n = static_cast<int>(est.dts.size());
  for (int i = 0; i < n; ++i) {
    const double lx = std::log(est.dts[i]);
    const double ly = std::log(std::max(est.errors[i], 1e-300));
    sx += lx;
    sy += ly;
    sxx += lx * lx;
    sxy += lx * ly;
  }
  est.slope = (n * sxy - sx * sy) / (n * sxx - sx * sx);
  return est;
}

}  // namespace dqvi
