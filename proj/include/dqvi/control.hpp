#pragma once

#include <array>
#include <string>
#include <vector>

#include <nlohmann/json_fwd.hpp>

#include "dqvi/contact_rod.hpp"

namespace dqvi {

struct TimeGridSpec {
  int steps = 200;
  double horizon = 1.0;
  Scheme scheme = Scheme::explicit_euler;
};

/// Two-parameter control set U: body-load amplitude a in [amp_min, amp_max]
/// and layer thickness G in [gap_min, gap_max]. Reduced cost
/// J_t(q) = |u(L; t) - target|^2 + rho |q|^2 through a full coupled solve.
struct ControlSpec {
  double amp_min = -1.0, amp_max = 1.0;
  double gap_min = 0.05, gap_max = 0.5;
  double target = 0.0;
  double time = 1.0;
  double rho = 0.0;
  int grid = 15;
  bool refine = true;

  static ControlSpec from_toml(const toml::Table& control);
};

double evaluate_cost(const ControlSpec& spec, const RodConfig& base, const TimeGridSpec& tg,
                     const QviConfig& cfg, double amp, double gap);

struct ControlResult {
  std::array<double, 2> q_star{0.0, 0.0};  // (amp, gap)
  double j_star = 0.0;
  struct Eval {
    double amp, gap, cost;
    bool failed;
  };
  std::vector<Eval> evaluations;
  std::string method;  // "grid" or "grid+refine"
  std::vector<std::array<double, 2>> grid_ties;  // grid points within 1e-10 of the grid minimum
  double grid_minimum = 0.0;

  std::string grid_csv() const;
  nlohmann::json to_json() const;
};

/// Exhaustive grid over U (grid_per_dim points per axis) followed, when
/// requested, by a projected Nelder-Mead descent from the best grid point.
/// The returned minimum never exceeds any logged evaluation; failed solves
/// log +inf and the run aborts if more than 10% of the grid fails.
ControlResult optimize(const ControlSpec& spec, const RodConfig& base, const TimeGridSpec& tg,
                       const QviConfig& cfg, par::Mode mode = par::Mode::openmp);

struct LscProbeResult {
  std::vector<double> j_seq;
  double j_limit = 0.0;
  double min_tail = 0.0;
  double slack = 0.0;
  bool pass = false;
};

/// Consistency probe of the lower-semicontinuity hypothesis along a
/// norm-converging parameter sequence: PASS iff min over the tail of J(q_n)
/// >= J(q) - slack with slack = 100 x solver tolerances.
LscProbeResult lsc_probe(const ControlSpec& spec, const RodConfig& base, const TimeGridSpec& tg,
                         const QviConfig& cfg,
                         const std::vector<std::array<double, 2>>& q_seq,
                         const std::array<double, 2>& q_limit);

}  // namespace dqvi
