#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include "dqvi/contact_rod.hpp"
#include "test_support.hpp"

using namespace dqvi;

namespace {

RodConfig one_element(double modulus) {
  RodConfig cfg = RodConfig::with_uniform(1.0, 1, modulus, 0.5);
  cfg.fnl_slope = modulus;
  cfg.fnl_cap = modulus;  // linear viscoelastic subcase by default
  return cfg;
}

}  // namespace

TEST_CASE("assembly: one element by hand") {
  const RodAssembly rod = assemble(one_element(1.0));
  CHECK(rod.stiffness_E(0, 0) == doctest::Approx(1.0));
  CHECK(rod.problem.V->gram()(0, 0) == doctest::Approx(1.0));
  CHECK(rod.contact_dof == 0);
  CHECK(rod.trace_constant == doctest::Approx(1.0));
  CHECK(rod.m == 1.0);
}

TEST_CASE("assembly: contact-free data gives beta = 0") {
  RodConfig cfg = one_element(1.0);
  cfg.stiffness_k = 0.0;
  cfg.h0 = cfg.c1 = cfg.c2 = 0.0;
  const RodAssembly rod = assemble(cfg);
  CHECK(rod.problem.j.is_zero());
  CHECK(rod.beta_coupling == 0.0);
}

TEST_CASE("assembly: constant yield is eta-independent with beta = 0") {
  RodConfig cfg = one_element(1.0);
  cfg.h0 = 0.4;
  cfg.c1 = cfg.c2 = 0.0;
  const RodAssembly rod = assemble(cfg);
  CHECK(rod.beta_coupling == 0.0);
  const Vec x = rod.problem.x0;
  CHECK(rod.problem.j.weight(x, Vec::Constant(1, 0.9)) == 0.4);
  CHECK(rod.problem.j.weight(x, Vec::Constant(1, -3.0)) == 0.4);
}

TEST_CASE("assembly: smallness violation names the constants") {
  RodConfig cfg = one_element(1.0);
  cfg.c2 = 2.0;  // beta = L_h c_tr^2 = 2 > m_E = 1
  CHECK_THROWS_WITH_AS(assemble(cfg), doctest::Contains("m_E"), config_error);
  RodConfig zero = one_element(1.0);
  zero.elements = 0;
  CHECK_THROWS_AS(assemble(zero), input_error);
}

TEST_CASE("state derivative examples") {
  // Rest state with F(0) = 0.
  RodConfig rest = one_element(1.0);
  RodState x{Vec::Zero(1), 0.0};
  const RodState d0 = state_derivative(rest, x, Vec::Zero(1), 0.0);
  CHECK(d0.sigma_ir[0] == 0.0);
  CHECK(d0.xi == 0.0);

  // Linear viscoelasticity: sigma' = beta sigma regardless of u.
  RodConfig lin = one_element(3.0);
  lin.visco = Vec::Constant(1, 0.5);
  RodState s2{Vec::Constant(1, 2.0), 0.0};
  const RodState d1 = state_derivative(lin, s2, Vec::Constant(1, -0.3), 0.0);
  CHECK(d1.sigma_ir[0] == doctest::Approx(1.0).epsilon(1e-14));
  CHECK(d1.xi == 0.0);  // u(L) < 0 keeps the penetration frozen

  // Slope-clipped constitutive map: E = 2, slope 2 clipped at cap 1.
  RodConfig clipped = one_element(2.0);
  clipped.fnl_slope = 2.0;
  clipped.fnl_cap = 1.0;
  clipped.visco = Vec::Constant(1, 1.0);
  const RodState d2 =
      state_derivative(clipped, RodState{Vec::Zero(1), 0.0}, Vec::Constant(1, 0.3), 0.0);
  CHECK(d2.sigma_ir[0] == doctest::Approx(0.3).epsilon(1e-14));
  CHECK(d2.xi == doctest::Approx(0.3).epsilon(1e-14));
}

TEST_CASE("contact diagnostics across the three regimes") {
  QviConfig cfg;

  // Leftward pull: traction-free contact node.
  {
    RodConfig rc = one_element(1.0);
    rc.stiffness_k = 1.0;
    rc.gap = 0.3;
    rc.h0 = 0.05;
    rc.f0_amplitude = -0.5;
    const RodAssembly rod = assemble(rc);
    const QviResult q = solve_qvi(rod.problem.x0, rod.problem.A, rod.problem.j, rod.problem.K,
                                  rod.problem.fbar(0.0), cfg);
    CHECK(q.u[0] < 0.0);
    const ContactDiagnostics d = contact_diagnostics(rod, rod.problem.x0, q, 0.0);
    const double scale = 1.0 + rod.problem.V->dual_norm(rod.problem.fbar(0.0));
    CHECK(std::fabs(d.multiplier) <= 1e-8 * scale);
    CHECK(d.penetration_violation == 0.0);
    CHECK(d.complementarity_residual <= 1e-8 * scale);
    CHECK(d.eta == 0.0);
  }

  // Huge rightward load: clamped at the layer, negative total multiplier.
  {
    RodConfig rc = one_element(1.0);
    rc.stiffness_k = 1.0;
    rc.gap = 0.3;
    rc.h0 = 0.05;
    rc.f0_amplitude = 10.0;
    const RodAssembly rod = assemble(rc);
    const QviResult q = solve_qvi(rod.problem.x0, rod.problem.A, rod.problem.j, rod.problem.K,
                                  rod.problem.fbar(0.0), cfg);
    CHECK(q.u[0] == doctest::Approx(0.3).epsilon(1e-12));
    const ContactDiagnostics d = contact_diagnostics(rod, rod.problem.x0, q, 0.0);
    CHECK(d.multiplier < -0.1);
    CHECK(d.complementarity_residual <= 1e-8);

    // 1D grid oracle for the clamped displacement.
    const double fbar = rod.problem.fbar(0.0)[0];
    const double expected = testing::grid_argmin_1d(
        [&](double u) {
          return 0.5 * u * u + 0.5 * rc.stiffness_k * std::pow(std::max(u, 0.0), 2) +
                 rc.h0 * std::max(u, 0.0) - fbar * u;
        },
        -1.0, 0.3, 1e-4);
    CHECK(q.u[0] == doctest::Approx(expected).epsilon(2e-4));
  }

  // Intermediate penetration: zero total multiplier, eta = h exactly.
  {
    RodConfig rc = one_element(1.0);
    rc.stiffness_k = 1.0;
    rc.gap = 0.3;
    rc.h0 = 0.05;
    rc.c2 = 0.2;
    rc.f0_amplitude = 0.5;
    const RodAssembly rod = assemble(rc);
    const QviResult q = solve_qvi(rod.problem.x0, rod.problem.A, rod.problem.j, rod.problem.K,
                                  rod.problem.fbar(0.0), cfg);
    CHECK(q.u[0] > 0.0);
    CHECK(q.u[0] < 0.3);
    const ContactDiagnostics d = contact_diagnostics(rod, rod.problem.x0, q, 0.0);
    const double h_exact = rc.h0 + rc.c2 * q.u[0];
    CHECK(d.eta == doctest::Approx(h_exact).epsilon(1e-12));
    CHECK(std::fabs(d.multiplier) <= 1e-7);

    const double fbar = rod.problem.fbar(0.0)[0];
    const double expected = testing::grid_argmin_1d(
        [&](double u) {
          const double up = std::max(u, 0.0);
          return 0.5 * u * u + 0.5 * rc.stiffness_k * up * up +
                 (rc.h0 + rc.c2 * q.u[0]) * up - fbar * u;
        },
        -1.0, 0.3, 1e-5);
    CHECK(q.u[0] == doctest::Approx(expected).epsilon(2e-4));
  }
}

TEST_CASE("diagnostics refuse uncertified solutions") {
  const RodAssembly rod = assemble(one_element(1.0));
  QviResult fake;
  fake.u = Vec::Zero(1);
  fake.certificate.certified = false;
  CHECK_THROWS_AS(contact_diagnostics(rod, rod.problem.x0, fake, 0.0), input_error);
}

TEST_CASE("trajectory invariants: penetration monotone, gap respected") {
  RodConfig rc = RodConfig::with_uniform(1.0, 12, 1.0, 0.5);
  rc.fnl_slope = 0.8;
  rc.fnl_cap = 1.0;
  rc.stiffness_k = 1.0;
  rc.gap = 0.15;
  rc.h0 = 0.02;
  rc.c1 = 0.1;
  rc.c2 = 0.3;
  rc.f0_amplitude = 2.0;
  const RodAssembly rod = assemble(rc);
  rod.problem.validate(300);

  const Trajectory traj =
      integrate(rod.problem, uniform_grid(1.0, 100), Scheme::explicit_euler, {});
  double xi_prev = 0.0;
  bool clamped_somewhere = false;
  for (std::size_t i = 0; i < traj.nodes(); ++i) {
    const double xi = traj.states[i][rc.elements];
    CHECK(xi >= xi_prev - 1e-15);
    xi_prev = xi;
    CHECK(traj.controls[i][rod.contact_dof] <= rc.gap + 1e-12);
    clamped_somewhere =
        clamped_somewhere || traj.controls[i][rod.contact_dof] >= rc.gap - 1e-9;
  }
  CHECK(clamped_somewhere);  // the load is strong enough to reach the layer
}

TEST_CASE("linear subcase: irreversible stress grows like exp(beta t)") {
  RodConfig rc = RodConfig::with_uniform(1.0, 4, 1.0, 0.5);
  rc.fnl_slope = 1.0;
  rc.fnl_cap = 1.0;  // Fnl = E eps
  rc.stiffness_k = 0.0;
  rc.h0 = rc.c1 = rc.c2 = 0.0;
  rc.f0_amplitude = 0.0;
  rc.sigma0 = 2.0;
  rc.gap = 0.3;
  const RodAssembly rod = assemble(rc);
  const Trajectory traj = integrate(rod.problem, uniform_grid(1.0, 1000), Scheme::heun, {});
  const double expected = 2.0 * std::exp(0.5);
  for (int e = 0; e < rc.elements; ++e)
    CHECK(traj.states.back()[e] == doctest::Approx(expected).epsilon(1e-6));
}

TEST_CASE("diagnostic residuals scale with the solver tolerance") {
  RodConfig rc = one_element(1.0);
  rc.stiffness_k = 1.0;
  rc.gap = 0.3;
  rc.h0 = 0.05;
  rc.c2 = 0.2;
  rc.f0_amplitude = 0.5;
  const RodAssembly rod = assemble(rc);

  auto residual_at = [&](double tol) {
    QviConfig cfg;
    cfg.inner_tol = tol;
    cfg.outer_tol = tol / 10.0;
    const QviResult q = solve_qvi(rod.problem.x0, rod.problem.A, rod.problem.j, rod.problem.K,
                                  rod.problem.fbar(0.0), cfg);
    const ContactDiagnostics d = contact_diagnostics(rod, rod.problem.x0, q, 0.0);
    return std::fabs(d.multiplier) + d.complementarity_residual;
  };
  const double loose = residual_at(1e-4);
  const double tight = residual_at(1e-7);
  CHECK(tight <= 0.1 * loose + 1e-13);
}

TEST_CASE("rod config parses from a strict toml table") {
  const std::string text = R"([rod]
length = 2.0
elements = 8
modulus = 1.5
visco = 0.25
fnl_slope = 1.2
fnl_cap = 1.0
stiffness_k = 0.7
gap = 0.2
h0 = 0.01
c1 = 0.05
c2 = 0.1
theta = "ramp"
f0_amplitude = 0.9
u0 = 0.1
sigma0 = 0.3
)";
  const toml::Document doc = toml::parse(text);
  const RodConfig cfg = RodConfig::from_toml(doc.table("rod"));
  CHECK(cfg.length == 2.0);
  CHECK(cfg.elements == 8);
  CHECK(cfg.modulus[0] == 1.5);
  CHECK(cfg.effective_slope() == 1.0);  // slope 1.2 clipped at cap 1.0
  CHECK(cfg.theta.name() == "ramp");

  const toml::Document bad = toml::parse("[rod]\nlength = 1.0\nbogus_key = 3\n");
  CHECK_THROWS_WITH_AS(RodConfig::from_toml(bad.table("rod")), doctest::Contains("bogus_key"),
                       config_error);
}

TEST_CASE("initial state uses the ramp profile for u0") {
  RodConfig rc = RodConfig::with_uniform(2.0, 4, 3.0, 0.5);
  rc.u0 = 0.5;     // uniform strain 0.25
  rc.sigma0 = 1.0;
  const RodAssembly rod = assemble(rc);
  for (int e = 0; e < 4; ++e)
    CHECK(rod.problem.x0[e] == doctest::Approx(1.0 - 3.0 * 0.25).epsilon(1e-14));
  CHECK(rod.problem.x0[4] == 0.0);  // xi(0) = 0
}
