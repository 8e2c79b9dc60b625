#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <random>

#include "dqvi/contact_rod.hpp"
#include "dqvi/perturbation.hpp"
#include "dqvi/scenario.hpp"

using namespace dqvi;

namespace {

// R^1 instance with a closed-form solution: A(u) = 2u, no constraint,
// fbar(t) = f_tilde, so u(t) = f_tilde / 2 and x' = -x decouples.
DviProblem scalar_problem(double f_tilde) {
  const SpacePtr r1 = Space::euclidean(1);
  DviProblem p{.X = r1,
               .V = r1,
               .Z = r1,
               .F = [](double, const Vec& x, const Vec&) { return Vec(-x); },
               .L_J = 1.0,
               .A = {[](const Vec&, const Vec& u) { return Vec(2.0 * u); }, 2.0, 0.0, 2.0},
               .j = NonsmoothJ::zero(),
               .K = ConvexSet::whole_space(r1),
               .pi = LinearMap(Mat::Identity(1, 1), r1, r1),
               .theta = {},
               .f_tilde = Vec::Constant(1, f_tilde),
               .x0 = Vec::Constant(1, 1.0)};
  return p;
}

RodConfig mini_rod() {
  RodConfig rc = RodConfig::with_uniform(1.0, 8, 1.0, 0.5);
  rc.fnl_slope = 0.8;
  rc.fnl_cap = 1.0;
  rc.stiffness_k = 0.0;
  rc.gap = 0.3;
  rc.h0 = 0.02;
  rc.c1 = 0.05;
  rc.c2 = 0.3;
  rc.theta = ThetaProfile::from_name("ramp");
  rc.f0_amplitude = 1.0;
  return rc;
}

}  // namespace

TEST_CASE("zero perturbation returns the base problem bitwise") {
  const DviProblem base = scalar_problem(1.0);
  const PerturbationSpec spec;  // every channel off
  const DviProblem same = build_perturbed(base, spec, 7);

  CHECK(same.L_J == base.L_J);
  CHECK(same.A.m == base.A.m);
  CHECK(same.A.Lu == base.A.Lu);
  CHECK(same.f_tilde[0] == base.f_tilde[0]);
  CHECK(same.x0[0] == base.x0[0]);
  CHECK(same.K.bound() == base.K.bound());

  std::mt19937_64 gen(3);
  std::uniform_real_distribution<double> unif(-2.0, 2.0);
  for (int s = 0; s < 50; ++s) {
    const Vec x = Vec::Constant(1, unif(gen)), u = Vec::Constant(1, unif(gen));
    const double t = 0.5 * (unif(gen) + 2.0);
    CHECK(same.F(t, x, u)[0] == base.F(t, x, u)[0]);
    CHECK(same.A.eval(x, u)[0] == base.A.eval(x, u)[0]);
  }

  CHECK_THROWS_AS(build_perturbed(base, spec, 0), input_error);
}

TEST_CASE("F perturbation bound is tight by construction") {
  const DviProblem base = scalar_problem(1.0);
  PerturbationSpec spec;
  spec.F_scale = 1.0;  // Gamma_n = 1/n
  spec.F_offset = 1.0;
  spec.F_direction = Vec::Constant(1, 1.0);

  std::mt19937_64 gen(11);
  std::uniform_real_distribution<double> unif(-3.0, 3.0);
  for (int n : {1, 3, 10}) {
    const DviProblem pn = build_perturbed(base, spec, n);
    for (int s = 0; s < 30; ++s) {
      const Vec x = Vec::Constant(1, unif(gen)), u = Vec::Constant(1, unif(gen));
      const double diff = base.X->norm(pn.F(0.3, x, u) - base.F(0.3, x, u));
      const double bound = (1.0 / n) * (base.X->norm(x) + base.V->norm(u) + 1.0);
      CHECK(diff == doctest::Approx(bound).epsilon(1e-12));
    }
  }
}

TEST_CASE("A perturbation keeps the monotonicity floor") {
  const DviProblem base = scalar_problem(1.0);
  PerturbationSpec spec;
  spec.A_scale = 0.5;
  spec.A_offset = 1.0;
  spec.A_direction = Vec::Constant(1, 1.0);

  const DviProblem pn = build_perturbed(base, spec, 2);
  CHECK(pn.A.m == doctest::Approx(2.25));
  CHECK(pn.A.m >= base.A.m);
  pn.validate(300);  // sampled monotonicity against the declared m_n

  // Norm bound of (3.7)(a) on samples.
  std::mt19937_64 gen(13);
  std::uniform_real_distribution<double> unif(-2.0, 2.0);
  for (int s = 0; s < 50; ++s) {
    const Vec x = Vec::Constant(1, unif(gen)), u = Vec::Constant(1, unif(gen));
    const double diff = base.V->dual_norm(pn.A.eval(x, u) - base.A.eval(x, u));
    CHECK(diff <= 0.25 * (base.X->norm(x) + base.V->norm(u) + 1.0) + 1e-12);
  }
}

TEST_CASE("gap family: scaled sets admit the mosco recovery map") {
  const RodAssembly rod = assemble(mini_rod());
  PerturbationSpec spec;
  spec.gap_scale = 1.0;
  spec.M0 = 0.5 * rod.problem.K.bound();
  spec.M1 = 3.0 * rod.problem.K.bound();

  Vec v = Vec::Zero(rod.problem.V->dim());
  v[rod.contact_dof] = rod.problem.K.bound();  // extreme feasible point
  v[0] = 0.1;
  const double base_norm = rod.problem.V->norm(v);

  for (int n = 1; n <= 64; ++n) {
    const DviProblem pn = build_perturbed(rod.problem, spec, n);
    const double gn = pn.K.bound();
    CHECK(gn == doctest::Approx(rod.problem.K.bound() * (1.0 + 1.0 / n)));
    const Vec vn = mosco_scale(rod.problem.K.bound(), gn, v, rod.contact_dof);
    CHECK(pn.K.contains(vn, 0.0));
    CHECK(rod.problem.V->distance(vn, v) == doctest::Approx(base_norm / n).epsilon(1e-10));
  }

  PerturbationSpec outside = spec;
  outside.M1 = 1.01 * rod.problem.K.bound();
  CHECK_THROWS_WITH_AS(build_perturbed(rod.problem, outside, 1),
                       doctest::Contains("uniform bounds"), config_error);
}

TEST_CASE("auxiliary solves: same problem reproduces the base controls") {
  QviConfig cfg;
  const DviProblem base = scalar_problem(1.0);
  const auto grid = uniform_grid(1.0, 20);
  const Trajectory traj = integrate(base, grid, Scheme::explicit_euler, cfg);
  const AuxiliarySolve aux = solve_auxiliary(traj, base, cfg);
  REQUIRE(aux.controls.size() == traj.nodes());
  for (std::size_t i = 0; i < traj.nodes(); ++i)
    CHECK(base.V->distance(aux.controls[i], traj.controls[i]) <= 10.0 * cfg.outer_tol);
  CHECK(aux.max_norm == doctest::Approx(0.5).epsilon(1e-6));
}

TEST_CASE("auxiliary solves: load shift has the closed-form offset 1/(n m)") {
  QviConfig cfg;
  const DviProblem base = scalar_problem(1.0);
  const auto grid = uniform_grid(1.0, 10);
  const Trajectory traj = integrate(base, grid, Scheme::explicit_euler, cfg);

  PerturbationSpec spec;
  spec.f_scale = 1.0;
  spec.f_direction = Vec::Constant(1, 1.0);
  for (int n : {1, 2, 8, 64}) {
    const DviProblem pn = build_perturbed(base, spec, n);
    const AuxiliarySolve aux = solve_auxiliary(traj, pn, cfg);
    for (std::size_t i = 0; i < traj.nodes(); ++i)
      CHECK(aux.controls[i][0] - traj.controls[i][0] ==
            doctest::Approx(1.0 / (n * 2.0)).epsilon(1e-7));
  }
}

TEST_CASE("auxiliary solves honor the perturbed constraint exactly") {
  QviConfig cfg;
  RodConfig rc = mini_rod();
  rc.f0_amplitude = 3.0;  // clamp the contact node
  rc.theta = ThetaProfile::from_name("const");
  const RodAssembly rod = assemble(rc);
  const auto grid = uniform_grid(0.5, 10);
  const Trajectory traj = integrate(rod.problem, grid, Scheme::explicit_euler, cfg);

  PerturbationSpec spec;
  spec.gap_scale = -0.5;  // shrink the gap: G_n = G (1 - 0.5/n)
  spec.M0 = 0.1 * rod.problem.K.bound();
  spec.M1 = 2.0 * rod.problem.K.bound();
  const DviProblem pn = build_perturbed(rod.problem, spec, 1);
  const AuxiliarySolve aux = solve_auxiliary(traj, pn, cfg);
  for (const Vec& u : aux.controls) CHECK(u[rod.contact_dof] <= pn.K.bound() + 1e-15);
}

TEST_CASE("certified convergence: load family follows the 1/n law") {
  QviConfig cfg;
  const DviProblem base = scalar_problem(1.0);
  const auto grid = uniform_grid(1.0, 20);
  const Trajectory traj = integrate(base, grid, Scheme::explicit_euler, cfg);

  PerturbationSpec spec;
  spec.f_scale = 1.0;
  spec.f_direction = Vec::Constant(1, 1.0);
  const std::vector<int> ns{1, 4, 16, 64};
  const FamilyRun run =
      run_family(base, traj, spec, ns, grid, Scheme::explicit_euler, cfg, par::Mode::serial);

  CHECK(run.report.all_bounds_pass());
  // e_u(n, t) = (1/n)/m exactly in the unconstrained regime.
  for (int n : ns) {
    const auto& row = run.report.at(n, 1.0);
    CHECK(row.e_u == doctest::Approx(0.5 / n).epsilon(1e-6));
  }
  CHECK(run.report.decay_pass(1, 64, 0.1, {0.25, 0.5, 1.0}, 1e-7));
  CHECK(run.report.aux_uniform_bound < 1.5);

  // Rerun reproduces the uniform bound exactly.
  const FamilyRun again =
      run_family(base, traj, spec, ns, grid, Scheme::explicit_euler, cfg, par::Mode::serial);
  CHECK(again.report.aux_uniform_bound == run.report.aux_uniform_bound);
}

TEST_CASE("zero family: errors at solver-tolerance level, bounds pass") {
  QviConfig cfg;
  const DviProblem base = scalar_problem(1.0);
  const auto grid = uniform_grid(1.0, 10);
  const Trajectory traj = integrate(base, grid, Scheme::explicit_euler, cfg);
  const PerturbationSpec spec;  // inactive channels
  const FamilyRun run =
      run_family(base, traj, spec, {1, 2}, grid, Scheme::explicit_euler, cfg, par::Mode::serial);
  CHECK(run.report.all_bounds_pass());
  for (const auto& row : run.report.rows) {
    CHECK(row.e_u <= 10.0 * (cfg.inner_tol + cfg.outer_tol));
    CHECK(row.e_x <= 10.0 * (cfg.inner_tol + cfg.outer_tol));
  }
}

TEST_CASE("rod joint family: proof bound holds node by node") {
  QviConfig cfg;
  cfg.residual_samples = 16;
  const RodAssembly rod = assemble(mini_rod());
  const auto grid = uniform_grid(1.0, 25);
  const Trajectory traj = integrate(rod.problem, grid, Scheme::explicit_euler, cfg);
  const PerturbationSpec spec = make_family_spec(rod.problem, "joint", 0.5);
  const FamilyRun run = run_family(rod.problem, traj, spec, {1, 4, 16}, grid,
                                   Scheme::explicit_euler, cfg, par::Mode::serial);
  CHECK(run.report.all_bounds_pass());
  CHECK(run.report.rows.size() == 3 * traj.nodes());

  const std::string csv = run.report.to_csv();
  CHECK(csv.rfind("n,t,e_u,e_x,e_aux,bound_lhs,bound_rhs,pass\n", 0) == 0);
}

TEST_CASE("family envelope factor") {
  const DviProblem base = scalar_problem(1.0);
  PerturbationSpec spec;
  spec.A_scale = 0.5;
  spec.A_direction = Vec::Constant(1, 1.0);
  const FamilyConstants env = family_envelope(base, spec);
  CHECK(env.Lx == doctest::Approx(base.A.Lx + 0.5));
  CHECK(env.m == base.A.m);
  CHECK(env.bound_factor() == doctest::Approx((env.Lx + env.alpha) / (env.m - env.beta)));
}
