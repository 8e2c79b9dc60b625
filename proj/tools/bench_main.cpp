// Serial vs OpenMP timing of the data-parallel kernels: oracle grid scans,
// residual certification, perturbation families, control sweeps.

#include <chrono>
#include <cstdio>

#include "dqvi/contact_rod.hpp"
#include "dqvi/control.hpp"
#include "dqvi/oracle.hpp"
#include "dqvi/perturbation.hpp"
#include "dqvi/scenario.hpp"

using namespace dqvi;

namespace {

template <typename Fn>
double time_best_of(int reps, Fn&& fn) {
  double best = 1e300;
  for (int r = 0; r < reps; ++r) {
    const auto t0 = std::chrono::steady_clock::now();
    fn();
    const double dt = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
    best = std::min(best, dt);
  }
  return best;
}

void report(const char* name, double serial, double openmp) {
  std::printf("%-28s serial %8.3f ms   openmp %8.3f ms   speedup %.2fx\n", name, serial * 1e3,
              openmp * 1e3, serial / openmp);
}

}  // namespace

int main() {
  std::printf("threads available: %d\n\n", par::max_threads());

  {
    const auto instances = oracle::registered_instances();
    const oracle::OracleInstance* inst = nullptr;
    for (const auto& i : instances)
      if (i.name == "2d-box-kink") inst = &i;
    const double s = time_best_of(3, [&] { oracle::brute_force_vi(*inst, par::Mode::serial); });
    const double o = time_best_of(3, [&] { oracle::brute_force_vi(*inst, par::Mode::openmp); });
    report("oracle 2d grid scan", s, o);
  }

  {
    const RodAssembly rod = assemble(RodConfig::with_uniform(1.0, 100, 1.0, 0.5));
    QviConfig cfg;
    cfg.residual_samples = 4096;
    const Vec x = rod.problem.x0;
    const QviResult r = solve_qvi(x, rod.problem.A, rod.problem.j, rod.problem.K,
                                  rod.problem.fbar(1.0), cfg);
    const Vec a = rod.problem.A.eval(x, r.u);
    const FrozenPhi phi{rod.problem.j.weight(x, r.u), rod.problem.j.dof()};
    const double s = time_best_of(3, [&] {
      certify_vi(*rod.problem.V, rod.problem.K, r.u, a, phi, rod.problem.fbar(1.0),
                 cfg.inner_tol, cfg.residual_samples, cfg.sample_seed, par::Mode::serial);
    });
    const double o = time_best_of(3, [&] {
      certify_vi(*rod.problem.V, rod.problem.K, r.u, a, phi, rod.problem.fbar(1.0),
                 cfg.inner_tol, cfg.residual_samples, cfg.sample_seed, par::Mode::openmp);
    });
    report("residual certificate x4096", s, o);
  }

  {
    RodConfig rc = RodConfig::with_uniform(1.0, 50, 1.0, 0.5);
    rc.gap = 0.3;
    rc.h0 = 0.02;
    rc.c2 = 0.3;
    rc.f0_amplitude = 1.0;
    rc.theta = ThetaProfile::from_name("ramp");
    const RodAssembly rod = assemble(rc);
    QviConfig cfg;
    cfg.residual_samples = 32;
    const auto grid = uniform_grid(1.0, 100);
    const Trajectory base = integrate(rod.problem, grid, Scheme::explicit_euler, cfg);
    const PerturbationSpec spec = make_family_spec(rod.problem, "joint", 0.5);
    const std::vector<int> n_values{1, 2, 4, 8, 16, 32};
    const double s = time_best_of(2, [&] {
      run_family(rod.problem, base, spec, n_values, grid, Scheme::explicit_euler, cfg,
                 par::Mode::serial);
    });
    const double o = time_best_of(2, [&] {
      run_family(rod.problem, base, spec, n_values, grid, Scheme::explicit_euler, cfg,
                 par::Mode::openmp);
    });
    report("perturbation family (6 n)", s, o);
  }

  {
    RodConfig rc = RodConfig::with_uniform(1.0, 50, 1.0, 0.5);
    rc.gap = 0.2;
    rc.h0 = 0.01;
    rc.c2 = 0.2;
    rc.f0_amplitude = 0.5;
    ControlSpec spec;
    spec.amp_min = 0.2;
    spec.amp_max = 1.2;
    spec.gap_min = 0.08;
    spec.gap_max = 0.4;
    spec.target = 0.1;
    spec.time = 0.5;
    spec.grid = 9;
    spec.refine = false;
    TimeGridSpec tg{100, 1.0, Scheme::explicit_euler};
    QviConfig cfg;
    cfg.residual_samples = 16;
    const double s =
        time_best_of(2, [&] { optimize(spec, rc, tg, cfg, par::Mode::serial); });
    const double o =
        time_best_of(2, [&] { optimize(spec, rc, tg, cfg, par::Mode::openmp); });
    report("control grid sweep 9x9", s, o);
  }

  return 0;
}
