#include "dqvi/control.hpp"

#include <algorithm>
#include <cmath>
#include <exception>
#include <sstream>

#include <nlohmann/json.hpp>

#include "dqvi/errors.hpp"
#include "dqvi/io.hpp"

namespace dqvi {

ControlSpec ControlSpec::from_toml(const toml::Table& control) {
  control.reject_unknown_keys(
      {"amp_min", "amp_max", "gap_min", "gap_max", "target", "time", "rho", "grid", "refine"},
      "control");
  ControlSpec s;
  s.amp_min = control.get_number("amp_min", s.amp_min);
  s.amp_max = control.get_number("amp_max", s.amp_max);
  s.gap_min = control.get_number("gap_min", s.gap_min);
  s.gap_max = control.get_number("gap_max", s.gap_max);
  s.target = control.get_number("target", s.target);
  s.time = control.get_number("time", s.time);
  s.rho = control.get_number("rho", s.rho);
  s.grid = static_cast<int>(control.get_integer("grid", s.grid));
  s.refine = control.get_bool("refine", s.refine);
  if (!(s.amp_min <= s.amp_max) || !(s.gap_min <= s.gap_max))
    throw config_error("control: bounds must be ordered");
  if (!(s.gap_min > 0.0)) throw config_error("control: gap_min must be positive");
  return s;
}

double evaluate_cost(const ControlSpec& spec, const RodConfig& base, const TimeGridSpec& tg,
                     const QviConfig& cfg, double amp, double gap) {
  if (amp < spec.amp_min - 1e-12 || amp > spec.amp_max + 1e-12 || gap < spec.gap_min - 1e-12 ||
      gap > spec.gap_max + 1e-12)
    throw input_error("evaluate_cost: q outside the control set U");
  if (!(spec.time > 0.0) || spec.time > tg.horizon + 1e-12)
    throw input_error("evaluate_cost: evaluation time outside the horizon");

  RodConfig cfg_q = base;
  cfg_q.f0_amplitude = amp;
  cfg_q.gap = gap;
  const RodAssembly rod = assemble(cfg_q);

  const int steps = std::max(1, static_cast<int>(std::llround(tg.steps * spec.time / tg.horizon)));
  const Trajectory traj = integrate(rod.problem, uniform_grid(spec.time, steps), tg.scheme, cfg);
  const double ul = traj.controls.back()[rod.contact_dof];
  const double dev = ul - spec.target;
  return dev * dev + spec.rho * (amp * amp + gap * gap);
}

namespace {

struct BestTracker {
  double j = std::numeric_limits<double>::infinity();
  std::array<double, 2> q{0.0, 0.0};

  void offer(double amp, double gap, double cost) {
    if (cost < j) {
      j = cost;
      q = {amp, gap};
    }
  }
};

}  // namespace

ControlResult optimize(const ControlSpec& spec, const RodConfig& base, const TimeGridSpec& tg,
                       const QviConfig& cfg, par::Mode mode) {
  if (spec.grid < 3) throw input_error("optimize: grid_per_dim must be >= 3");
  const int gp = spec.grid;

  auto amp_at = [&](int i) {
    return gp == 1 ? spec.amp_min : spec.amp_min + (spec.amp_max - spec.amp_min) * i / (gp - 1);
  };
  auto gap_at = [&](int j) {
    return gp == 1 ? spec.gap_min : spec.gap_min + (spec.gap_max - spec.gap_min) * j / (gp - 1);
  };

  ControlResult result;
  result.method = spec.refine ? "grid+refine" : "grid";
  result.evaluations.resize(static_cast<std::size_t>(gp) * gp);

  std::vector<std::exception_ptr> hard_errors(result.evaluations.size());
  par::for_each_index(result.evaluations.size(), mode, [&](std::size_t idx) {
    const int i = static_cast<int>(idx) % gp;
    const int j = static_cast<int>(idx) / gp;
    ControlResult::Eval ev{amp_at(i), gap_at(j), std::numeric_limits<double>::infinity(), false};
    try {
      ev.cost = evaluate_cost(spec, base, tg, cfg, ev.amp, ev.gap);
    } catch (const nonconvergence_error&) {
      ev.failed = true;  // +inf sentinel, excluded from the minimum
    } catch (...) {
      hard_errors[idx] = std::current_exception();
    }
    result.evaluations[idx] = ev;
  });
  for (auto& e : hard_errors)
    if (e) std::rethrow_exception(e);

  std::size_t failures = 0;
  BestTracker best;
  for (const auto& ev : result.evaluations) {
    if (ev.failed) {
      ++failures;
      continue;
    }
    best.offer(ev.amp, ev.gap, ev.cost);
  }
  if (failures * 10 > result.evaluations.size())
    throw nonconvergence_error("optimize: more than 10% of grid evaluations failed",
                               static_cast<double>(failures),
                               static_cast<long>(result.evaluations.size()));
  result.grid_minimum = best.j;
  for (const auto& ev : result.evaluations)
    if (!ev.failed && ev.cost <= best.j + 1e-10) result.grid_ties.push_back({ev.amp, ev.gap});

  if (spec.refine) {
    // Projected Nelder-Mead from the best grid point; every probe is clamped
    // into U before evaluation, so the iteration never leaves the set.
    auto clamp_q = [&](std::array<double, 2> q) {
      q[0] = std::min(std::max(q[0], spec.amp_min), spec.amp_max);
      q[1] = std::min(std::max(q[1], spec.gap_min), spec.gap_max);
      return q;
    };
    auto eval_q = [&](const std::array<double, 2>& q) {
      double c;
      try {
        c = evaluate_cost(spec, base, tg, cfg, q[0], q[1]);
      } catch (const nonconvergence_error&) {
        c = std::numeric_limits<double>::infinity();
        result.evaluations.push_back({q[0], q[1], c, true});
        return c;
      }
      result.evaluations.push_back({q[0], q[1], c, false});
      best.offer(q[0], q[1], c);
      return c;
    };

    const double da = gp > 1 ? (spec.amp_max - spec.amp_min) / (gp - 1) : 0.1;
    const double dg = gp > 1 ? (spec.gap_max - spec.gap_min) / (gp - 1) : 0.1;
    std::array<std::array<double, 2>, 3> simplex;
    simplex[0] = best.q;
    simplex[1] = clamp_q({best.q[0] + (best.q[0] + da <= spec.amp_max ? da : -da), best.q[1]});
    simplex[2] = clamp_q({best.q[0], best.q[1] + (best.q[1] + dg <= spec.gap_max ? dg : -dg)});
    std::array<double, 3> f{};
    for (int i = 0; i < 3; ++i) f[i] = eval_q(simplex[i]);

    for (int iter = 0; iter < 200; ++iter) {
      std::array<int, 3> ord{0, 1, 2};
      std::sort(ord.begin(), ord.end(), [&](int a, int b) { return f[a] < f[b]; });
      const int lo = ord[0], mid = ord[1], hi = ord[2];
      const double spread = f[hi] - f[lo];
      const double diam = std::max(std::fabs(simplex[hi][0] - simplex[lo][0]),
                                   std::fabs(simplex[hi][1] - simplex[lo][1]));
      if (spread <= 1e-14 * (1.0 + std::fabs(f[lo])) && diam <= 1e-10) break;

      const std::array<double, 2> centroid{0.5 * (simplex[lo][0] + simplex[mid][0]),
                                           0.5 * (simplex[lo][1] + simplex[mid][1])};
      auto blend = [&](double scale) {
        return clamp_q({centroid[0] + scale * (centroid[0] - simplex[hi][0]),
                        centroid[1] + scale * (centroid[1] - simplex[hi][1])});
      };
      const auto reflected = blend(1.0);
      const double fr = eval_q(reflected);
      if (fr < f[lo]) {
        const auto expanded = blend(2.0);
        const double fe = eval_q(expanded);
        if (fe < fr) {
          simplex[hi] = expanded;
          f[hi] = fe;
        } else {
          simplex[hi] = reflected;
          f[hi] = fr;
        }
      } else if (fr < f[mid]) {
        simplex[hi] = reflected;
        f[hi] = fr;
      } else {
        const auto contracted = blend(-0.5);
        const double fc = eval_q(contracted);
        if (fc < f[hi]) {
          simplex[hi] = contracted;
          f[hi] = fc;
        } else {
          for (int i : {mid, hi}) {
            simplex[i] = clamp_q({0.5 * (simplex[i][0] + simplex[lo][0]),
                                  0.5 * (simplex[i][1] + simplex[lo][1])});
            f[i] = eval_q(simplex[i]);
          }
        }
      }
    }
  }

  result.q_star = best.q;
  result.j_star = best.j;
  return result;
}

LscProbeResult lsc_probe(const ControlSpec& spec, const RodConfig& base, const TimeGridSpec& tg,
                         const QviConfig& cfg,
                         const std::vector<std::array<double, 2>>& q_seq,
                         const std::array<double, 2>& q_limit) {
  if (q_seq.empty()) throw input_error("lsc_probe: empty sequence");
  LscProbeResult out;
  out.slack = 100.0 * (cfg.inner_tol + cfg.outer_tol);
  for (const auto& q : q_seq) out.j_seq.push_back(evaluate_cost(spec, base, tg, cfg, q[0], q[1]));
  out.j_limit = evaluate_cost(spec, base, tg, cfg, q_limit[0], q_limit[1]);
  const std::size_t tail_start = q_seq.size() / 2;
  out.min_tail = *std::min_element(out.j_seq.begin() + tail_start, out.j_seq.end());
  out.pass = out.min_tail >= out.j_limit - out.slack;
  return out;
}

std::string ControlResult::grid_csv() const {
  std::ostringstream os;
  os << "amp,gap,cost,failed\n";
  for (const auto& ev : evaluations)
    os << format_g17(ev.amp) << ',' << format_g17(ev.gap) << ',' << format_g17(ev.cost) << ','
       << (ev.failed ? 1 : 0) << '\n';
  return os.str();
}

nlohmann::json ControlResult::to_json() const {
  nlohmann::json out;
  out["q_star"] = {{"amp", q_star[0]}, {"gap", q_star[1]}};
  out["j_star"] = j_star;
  out["method"] = method;
  out["grid_minimum"] = grid_minimum;
  nlohmann::json ties = nlohmann::json::array();
  for (const auto& q : grid_ties) ties.push_back({{"amp", q[0]}, {"gap", q[1]}});
  out["grid_ties"] = ties;
  nlohmann::json evals = nlohmann::json::array();
  for (const auto& ev : evaluations)
    evals.push_back({{"amp", ev.amp},
                     {"gap", ev.gap},
                     {"cost", ev.failed ? nlohmann::json() : nlohmann::json(ev.cost)},
                     {"failed", ev.failed}});
  out["evaluations"] = evals;
  return out;
}

}  // namespace dqvi
