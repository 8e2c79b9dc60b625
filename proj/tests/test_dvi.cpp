#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <algorithm>
#include <cstring>

#include <nlohmann/json.hpp>

#include "dqvi/oracle.hpp"
#include "dqvi/scenario.hpp"

using namespace dqvi;

TEST_CASE("theta profiles") {
  CHECK(ThetaProfile::from_name("const")(0.7) == 1.0);
  CHECK(ThetaProfile::from_name("ramp")(0.7) == 0.7);
  CHECK(ThetaProfile::from_name("sine")(0.7) == doctest::Approx(std::sin(0.7)));
  CHECK_THROWS_AS(ThetaProfile::from_name("square"), config_error);
}

TEST_CASE("stationary state map keeps the state constant") {
  const DviProblem prob = synthetic_instance("stationary");
  const Trajectory traj = integrate(prob, uniform_grid(1.0, 50), Scheme::explicit_euler, {});
  for (const Vec& x : traj.states) CHECK(x[0] == prob.x0[0]);
}

TEST_CASE("exponential decay matches the analytic solution") {
  const DviProblem prob = synthetic_instance("exp_decay");
  const Trajectory traj = integrate(prob, uniform_grid(1.0, 1000), Scheme::explicit_euler, {});
  CHECK(std::fabs(traj.states.back()[0] - std::exp(-1.0)) <= 1e-3);
  for (const Vec& u : traj.controls) CHECK(std::fabs(u[0]) <= 1e-9);
}

TEST_CASE("linear growth is exact for Euler") {
  const DviProblem prob = synthetic_instance("linear_growth");
  const Trajectory traj = integrate(prob, uniform_grid(1.0, 100), Scheme::explicit_euler, {});
  CHECK(std::fabs(traj.states.back()[0] - 3.0) <= 1e-12);
  CHECK(std::fabs(traj.controls.back()[0] - 3.0) <= 1e-9);
}

TEST_CASE("grid validation") {
  const DviProblem prob = synthetic_instance("stationary");
  CHECK_THROWS_AS(integrate(prob, {0.5, 1.0}, Scheme::explicit_euler, {}), input_error);
  CHECK_THROWS_AS(integrate(prob, {0.0, 0.5, 0.5}, Scheme::explicit_euler, {}), input_error);
  CHECK_THROWS_AS(integrate(prob, {0.0, 0.5, 0.2}, Scheme::explicit_euler, {}), input_error);
}

TEST_CASE("observed order: Euler one, Heun two, exact sentinel") {
  QviConfig cfg;
  const DviProblem prob = synthetic_instance("exp_decay");
  Reference ref;
  ref.x = [](double t) { return Vec(Vec::Constant(1, std::exp(-t))); };
  ref.u = [](double) { return Vec(Vec::Zero(1)); };

  const OrderEstimate euler =
      observed_order(prob, Scheme::explicit_euler, 1.0, 50, 4, ref, cfg);
  CHECK(!euler.exact);
  CHECK(euler.slope >= 0.8);
  CHECK(euler.slope <= 1.2);

  const OrderEstimate heun = observed_order(prob, Scheme::heun, 1.0, 50, 4, ref, cfg);
  CHECK(!heun.exact);
  CHECK(heun.slope >= 1.7);
  CHECK(heun.slope <= 2.3);

  const DviProblem still = synthetic_instance("stationary");
  Reference still_ref;
  still_ref.x = [&](double) { return still.x0; };
  const OrderEstimate degenerate =
      observed_order(still, Scheme::explicit_euler, 1.0, 50, 3, still_ref, cfg);
  CHECK(degenerate.exact);

  CHECK_THROWS_AS(observed_order(prob, Scheme::heun, 1.0, 50, 2, ref, cfg), input_error);
}

TEST_CASE("grid refinement never worsens the final error by more than 5%") {
  QviConfig cfg;
  const DviProblem prob = synthetic_instance("exp_decay");
  double prev = -1.0;
  for (int steps : {100, 200, 400, 800}) {
    const Trajectory t = integrate(prob, uniform_grid(1.0, steps), Scheme::explicit_euler, cfg);
    const double err = std::fabs(t.states.back()[0] - std::exp(-1.0));
    if (prev >= 0.0) CHECK(err <= 1.05 * prev);
    prev = err;
  }
}

TEST_CASE("determinism: identical inputs, bit-identical trajectories") {
  const DviProblem prob = synthetic_instance("exp_decay");
  const auto grid = uniform_grid(1.0, 100);
  const Trajectory a = integrate(prob, grid, Scheme::heun, {});
  const Trajectory b = integrate(prob, grid, Scheme::heun, {});
  REQUIRE(a.nodes() == b.nodes());
  for (std::size_t i = 0; i < a.nodes(); ++i) {
    CHECK(std::memcmp(a.states[i].data(), b.states[i].data(), sizeof(double)) == 0);
    CHECK(std::memcmp(a.controls[i].data(), b.controls[i].data(), sizeof(double)) == 0);
  }
  CHECK(a.to_csv() == b.to_csv());
}

TEST_CASE("csv layout: header plus one row per node, 17 significant digits") {
  const DviProblem prob = synthetic_instance("exp_decay");
  const Trajectory t = integrate(prob, uniform_grid(1.0, 10), Scheme::explicit_euler, {});
  const std::string csv = t.to_csv();
  const std::size_t lines = std::count(csv.begin(), csv.end(), '\n');
  CHECK(lines == 12);  // header + 11 nodes
  CHECK(csv.rfind("t,x0,u0,residual,outer_iterations\n", 0) == 0);
  CHECK(csv.find("0.90000000000000002") != std::string::npos);  // g17 rendering of 0.9
}

TEST_CASE("json serialization carries the full per-node metadata") {
  const DviProblem prob = synthetic_instance("exp_decay");
  const Trajectory t = integrate(prob, uniform_grid(1.0, 5), Scheme::explicit_euler, {});
  const nlohmann::json j = t.to_json();
  CHECK(j["node_count"] == 6);
  CHECK(j["nodes"].size() == 6);
  CHECK(j["nodes"][0].contains("x"));
  CHECK(j["nodes"][0].contains("u"));
  CHECK(j["nodes"][0].contains("certificate_margin"));
  CHECK(j["nodes"][0].contains("inner_iterations"));
  CHECK(j.dump() == t.to_json().dump());
}

TEST_CASE("problem validation catches understated constants") {
  DviProblem prob = synthetic_instance("exp_decay");
  prob.validate(200);
  prob.L_J = 0.5;  // true Lipschitz constant of F = -x is 1
  CHECK_THROWS_AS(prob.validate(200), config_error);

  DviProblem bad = synthetic_instance("exp_decay");
  bad.A.m = 2.0;  // overstated monotonicity
  CHECK_THROWS_AS(bad.validate(200), config_error);
}
