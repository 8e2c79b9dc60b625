#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cstring>
#include <random>

#include "dqvi/oracle.hpp"
#include "dqvi/scenario.hpp"

using namespace dqvi;
using oracle::OracleInstance;

namespace {

const OracleInstance* find_instance(const std::vector<OracleInstance>& all,
                                    const std::string& name) {
  for (const auto& i : all)
    if (i.name == name) return &i;
  return nullptr;
}

}  // namespace

TEST_CASE("brute force frozen examples") {
  const auto all = oracle::registered_instances();
  REQUIRE(all.size() == 12);

  const auto* clamped = find_instance(all, "1d-clamped-quadratic");
  REQUIRE(clamped != nullptr);
  CHECK(oracle::brute_force_vi(*clamped)[0] == doctest::Approx(0.5).epsilon(2e-4));

  // 0 is the sharp minimizer: 0.4 lies strictly inside the subdifferential
  // [0, 1] shifted by the load.
  const auto* kink = find_instance(all, "1d-kink-sharp");
  REQUIRE(kink != nullptr);
  CHECK(std::fabs(oracle::brute_force_vi(*kink)[0]) <= 2e-4);

  const auto* interior = find_instance(all, "1d-kink-interior");
  REQUIRE(interior != nullptr);
  CHECK(std::fabs(oracle::brute_force_vi(*interior)[0]) <= 2e-4);
}

TEST_CASE("oracle agrees with the solver on representative instances") {
  const auto all = oracle::registered_instances();
  QviConfig cfg;
  for (const std::string name :
       {"1d-gram2-negative", "2d-smooth-inactive", "2d-node-active", "2d-box-kink"}) {
    const auto* inst = find_instance(all, name);
    REQUIRE(inst != nullptr);
    const Vec ref = oracle::brute_force_vi(*inst);
    const OperatorA a = inst->solver_operator();
    const Vec x = Vec::Zero(1);
    const Vec solved = solve_vi(
                           *inst->V, inst->K, [&](const Vec& u) { return a.eval(x, u); }, a.m,
                           a.Lu, FrozenPhi{inst->phi_weight, inst->phi_dof}, inst->fbar, cfg)
                           .u;
    CHECK(inst->V->distance(solved, ref) <= 2.0 * inst->spacing + 1e-8);
  }
}

TEST_CASE("coupled instances: outer fixed point against the solver") {
  const auto all = oracle::registered_instances();
  QviConfig cfg;
  for (const std::string name : {"1d-coupled", "2d-coupled-node"}) {
    const auto* inst = find_instance(all, name);
    REQUIRE(inst != nullptr);
    REQUIRE(inst->coupled());
    const Vec ref = oracle::brute_force_qvi(*inst);
    const QviResult solved =
        solve_qvi(Vec::Zero(1), inst->solver_operator(), inst->solver_j(), inst->K, inst->fbar,
                  cfg);
    CHECK(inst->V->distance(solved.u, ref) <= 2.0 * inst->spacing + 1e-8);
  }

  const auto* coupled = find_instance(all, "1d-coupled");
  CHECK(oracle::brute_force_qvi(*coupled)[0] == doctest::Approx(-0.5).epsilon(2e-4));
}

TEST_CASE("parallel and serial scans agree bitwise") {
  const auto all = oracle::registered_instances();
  const auto* inst = find_instance(all, "2d-box-kink");
  REQUIRE(inst != nullptr);
  const Vec serial = oracle::brute_force_vi(*inst, par::Mode::serial);
  const Vec openmp = oracle::brute_force_vi(*inst, par::Mode::openmp);
  CHECK(std::memcmp(serial.data(), openmp.data(), sizeof(double) * serial.size()) == 0);
}

TEST_CASE("dimension three is refused") {
  const SpacePtr e3 = Space::euclidean(3);
  OracleInstance inst{.name = "3d",
                      .V = e3,
                      .A_lin = Mat::Identity(3, 3),
                      .A_off = Vec::Zero(3),
                      .K = ConvexSet::whole_space(e3),
                      .fbar = Vec::Zero(3),
                      .box_lo = Vec::Constant(3, -1.0),
                      .box_hi = Vec::Constant(3, 1.0)};
  CHECK_THROWS_AS(oracle::brute_force_vi(inst), input_error);
}

TEST_CASE("a search box that clips the minimizer is reported, not returned") {
  const SpacePtr r1 = Space::euclidean(1);
  OracleInstance inst{.name = "tight-box",
                      .V = r1,
                      .A_lin = Mat::Identity(1, 1),
                      .A_off = Vec::Zero(1),
                      .K = ConvexSet::whole_space(r1),
                      .fbar = Vec::Constant(1, 3.0),  // minimizer at 3
                      .box_lo = Vec::Constant(1, -1.0),
                      .box_hi = Vec::Constant(1, 1.0)};
  CHECK_THROWS_AS(oracle::brute_force_vi(inst), config_error);
}

TEST_CASE("hypothesis constants hold on 1000 samples per registered instance") {
  std::mt19937_64 gen(0xabc);
  std::uniform_real_distribution<double> unif(-4.0, 4.0);
  for (const auto& inst : oracle::registered_instances()) {
    const OperatorA a = inst.solver_operator();
    const NonsmoothJ j = inst.solver_j();
    const Vec x = Vec::Zero(1);
    const int dim = inst.V->dim();
    for (int s = 0; s < 1000; ++s) {
      Vec u1(dim), u2(dim), v1(dim), v2(dim);
      for (int i = 0; i < dim; ++i) {
        u1[i] = unif(gen);
        u2[i] = unif(gen);
        v1[i] = unif(gen);
        v2[i] = unif(gen);
      }
      const double du = inst.V->distance(u1, u2);
      REQUIRE((a.eval(x, u1) - a.eval(x, u2)).dot(u1 - u2) >= a.m * du * du - 1e-10);
      REQUIRE(inst.V->dual_norm(a.eval(x, u1) - a.eval(x, u2)) <= a.Lu * du + 1e-10);
      if (!j.is_zero()) {
        const double dv = inst.V->distance(v1, v2);
        const double four_term =
            j.eval(x, u1, v2) - j.eval(x, u1, v1) + j.eval(x, u2, v1) - j.eval(x, u2, v2);
        REQUIRE(four_term <= j.beta() * du * dv + 1e-10);
      }
    }
  }
}

TEST_CASE("reference trajectory reproduces the analytic decay") {
  const DviProblem prob = synthetic_instance("exp_decay");
  const Trajectory ref = oracle::reference_trajectory(prob, 1.0, 1e-3);
  CHECK(std::fabs(ref.states.back()[0] - std::exp(-1.0)) <= 1e-7);

  const DviProblem frozen = synthetic_instance("stationary");
  const Trajectory still = oracle::reference_trajectory(frozen, 1.0, 1e-2);
  CHECK(still.states.back()[0] == frozen.x0[0]);
}
