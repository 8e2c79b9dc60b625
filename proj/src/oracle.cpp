#include "dqvi/oracle.hpp"

#include <algorithm>
#include <cmath>

#include "dqvi/errors.hpp"

namespace dqvi::oracle {

namespace {

// Extremal eigenvalues of A_lin in the V metric (whitened pencil).
std::pair<double, double> metric_spectrum(const Mat& a, const Space& V) {
  Eigen::LLT<Mat> llt(V.gram());
  const Mat l = llt.matrixL();
  const Mat w = l.triangularView<Eigen::Lower>().solve(
      l.triangularView<Eigen::Lower>().solve(a).transpose());
  Eigen::SelfAdjointEigenSolver<Mat> es(0.5 * (w + w.transpose()));
  return {es.eigenvalues().minCoeff(), es.eigenvalues().maxCoeff()};
}

struct Axis {
  std::vector<double> coords;
};

// Grid coordinates on [lo, hi] at the given spacing, aligned to multiples of
// the spacing so kink points (0) land exactly; appends `extra` when inside.
Axis make_axis(double lo, double hi, double spacing, double extra) {
  Axis ax;
  const double start = std::ceil(lo / spacing) * spacing;
  for (double c = start; c <= hi + 0.5 * spacing; c += spacing) ax.coords.push_back(std::min(c, hi));
  if (ax.coords.empty() || ax.coords.front() > lo) ax.coords.insert(ax.coords.begin(), lo);
  if (std::isfinite(extra) && extra > lo && extra < hi) {
    ax.coords.push_back(extra);
    std::sort(ax.coords.begin(), ax.coords.end());
  }
  return ax;
}

}  // namespace

double OracleInstance::m() const { return metric_spectrum(A_lin, *V).first; }
double OracleInstance::Lu() const { return metric_spectrum(A_lin, *V).second; }

double OracleInstance::beta() const {
  if (!coupled()) return 0.0;
  const double cc = std::sqrt(V->gram_inverse_column(couple_dof)[couple_dof]);
  const double cd = std::sqrt(V->gram_inverse_column(phi_dof)[phi_dof]);
  return couple_slope * cc * cd;
}

OperatorA OracleInstance::solver_operator() const {
  OperatorA a;
  const Mat lin = A_lin;
  const Vec off = A_off;
  a.eval = [lin, off](const Vec&, const Vec& u) { return Vec(lin * u + off); };
  a.m = m();
  a.Lu = Lu();
  a.Lx = 0.0;
  return a;
}

NonsmoothJ OracleInstance::solver_j() const {
  if (phi_dof < 0 || (phi_weight == 0.0 && !coupled())) return NonsmoothJ::zero();
  const double w0 = phi_weight;
  const double slope = coupled() ? couple_slope : 0.0;
  const int cd = couple_dof;
  return NonsmoothJ::single_dof_pos_part(
      phi_dof,
      [w0, slope, cd](const Vec&, const Vec& eta) {
        return w0 + (slope > 0.0 ? slope * std::fabs(eta[cd]) : 0.0);
      },
      0.0, beta());
}

Vec brute_force_vi_weighted(const OracleInstance& inst, double frozen_weight, par::Mode mode) {
  const int dim = inst.V->dim();
  if (dim > 2) throw input_error("brute_force_vi: refused, oracle supports dim <= 2 only");

  // Feasible box: search box intersected with the constraint.
  Vec lo = inst.box_lo, hi = inst.box_hi;
  if (inst.K.kind() == ConvexSet::Kind::node_upper_bound)
    hi[inst.K.dof()] = std::min(hi[inst.K.dof()], inst.K.bound());
  else if (inst.K.kind() == ConvexSet::Kind::box)
    for (int i = 0; i < dim; ++i) {
      lo[i] = std::max(lo[i], inst.K.lower()[i]);
      hi[i] = std::min(hi[i], inst.K.upper()[i]);
    }
  for (int i = 0; i < dim; ++i)
    if (!(lo[i] < hi[i])) throw config_error("brute_force_vi: empty feasible search box");

  const double kink = frozen_weight;
  auto energy = [&](const Vec& u) {
    double e = 0.5 * u.dot(inst.A_lin * u) + inst.A_off.dot(u) - inst.fbar.dot(u);
    if (inst.phi_dof >= 0 && kink != 0.0) e += kink * std::max(u[inst.phi_dof], 0.0);
    return e;
  };

  const auto [mval, lmax] = metric_spectrum(inst.A_lin, *inst.V);
  if (!(mval > 0.0)) throw config_error("brute_force_vi: oracle operator must be elliptic");

  double span = 0.0;
  for (int i = 0; i < dim; ++i) span = std::max(span, hi[i] - lo[i]);
  double s = span / 240.0;

  Vec center = 0.5 * (lo + hi);
  Vec argmin = center;

  bool final_level = false;
  while (true) {
    if (s <= inst.spacing) {
      s = inst.spacing;
      final_level = true;
    }
    std::vector<Axis> axes;
    for (int i = 0; i < dim; ++i) {
      double bound = std::numeric_limits<double>::quiet_NaN();
      if (inst.K.kind() == ConvexSet::Kind::node_upper_bound && inst.K.dof() == i)
        bound = inst.K.bound();
      axes.push_back(make_axis(lo[i], hi[i], s, bound));
    }
    const std::size_t n0 = axes[0].coords.size();
    const std::size_t n1 = dim == 2 ? axes[1].coords.size() : 1;
    std::vector<double> values(n0 * n1);
    par::for_each_index(n0 * n1, mode, [&](std::size_t idx) {
      Vec u(dim);
      u[0] = axes[0].coords[idx % n0];
      if (dim == 2) u[1] = axes[1].coords[idx / n0];
      values[idx] = energy(u);
    });
    std::size_t best = 0;
    for (std::size_t idx = 1; idx < values.size(); ++idx)
      if (values[idx] < values[best]) best = idx;
    argmin[0] = axes[0].coords[best % n0];
    if (dim == 2) argmin[1] = axes[1].coords[best / n0];

    if (final_level) break;

    // Certified zoom radius for strongly convex energy with a kink of weight
    // |kink|: f(nearest grid point) - f* <= |kink| s + lmax d s^2, hence
    // ||argmin - u*|| <= sqrt(2 (|kink| s + lmax d s^2) / m).
    const double gap_bound = std::fabs(kink) * s + lmax * dim * s * s;
    const double radius = std::sqrt(2.0 * gap_bound / mval) + 2.0 * s;
    for (int i = 0; i < dim; ++i) {
      lo[i] = std::max(inst.box_lo[i], argmin[i] - radius);
      hi[i] = std::min(inst.box_hi[i], argmin[i] + radius);
      if (inst.K.kind() == ConvexSet::Kind::node_upper_bound && inst.K.dof() == i)
        hi[i] = std::min(hi[i], inst.K.bound());
      else if (inst.K.kind() == ConvexSet::Kind::box) {
        lo[i] = std::max(lo[i], inst.K.lower()[i]);
        hi[i] = std::min(hi[i], inst.K.upper()[i]);
      }
    }
    s = std::max(inst.spacing, s / 16.0);
  }

  // A minimizer pinned to the artificial search boundary means the box was
  // too small; fail loudly rather than return a wrong reference.
  for (int i = 0; i < dim; ++i) {
    const bool at_artificial_lo = argmin[i] <= inst.box_lo[i] + 0.5 * inst.spacing;
    bool hi_is_constraint = inst.K.kind() == ConvexSet::Kind::node_upper_bound &&
                            inst.K.dof() == i;
    if (inst.K.kind() == ConvexSet::Kind::box)
      hi_is_constraint = inst.box_hi[i] >= inst.K.upper()[i];
    const bool at_artificial_hi =
        !hi_is_constraint && argmin[i] >= inst.box_hi[i] - 0.5 * inst.spacing;
    if (at_artificial_lo || at_artificial_hi)
      throw config_error("brute_force_vi: minimizer touched the search box on '" + inst.name +
                         "'; enlarge box_lo/box_hi");
  }
  return argmin;
}

Vec brute_force_vi(const OracleInstance& inst, par::Mode mode) {
  return brute_force_vi_weighted(inst, inst.phi_weight, mode);
}

Vec brute_force_qvi(const OracleInstance& inst, par::Mode mode) {
  if (!inst.coupled()) return brute_force_vi(inst, mode);
  if (!(inst.beta() < inst.m()))
    throw config_error("brute_force_qvi: coupling contraction beta/m >= 1");
  Vec eta = Vec::Zero(inst.V->dim());
  for (int k = 0; k < 200; ++k) {
    const Vec u = brute_force_vi_weighted(inst, inst.weight_at(eta), mode);
    if ((u - eta).cwiseAbs().maxCoeff() < inst.spacing) return u;
    eta = u;
  }
  throw nonconvergence_error("brute_force_qvi: outer fixed point did not settle", 0.0, 200);
}

Trajectory reference_trajectory(const DviProblem& problem, double horizon, double dt) {
  QviConfig cfg;
  cfg.inner_tol = 1e-12;
  cfg.outer_tol = 1e-12;
  cfg.residual_samples = 16;
  const int steps = std::max(1, static_cast<int>(std::llround(horizon / dt)));
  return integrate(problem, uniform_grid(horizon, steps), Scheme::heun, cfg);
}

std::vector<OracleInstance> registered_instances() {
  std::vector<OracleInstance> out;
  auto r1 = [](double g = 1.0) { return Space::with_gram(Mat::Constant(1, 1, g)); };
  const SpacePtr e2 = Space::euclidean(2);

  {
    OracleInstance i{.name = "1d-clamped-quadratic",
                     .V = r1(),
                     .A_lin = Mat::Constant(1, 1, 2.0),
                     .A_off = Vec::Zero(1),
                     .K = ConvexSet::node_upper_bound(r1(), 0, 0.5),
                     .fbar = Vec::Constant(1, 2.0),
                     .box_lo = Vec::Constant(1, -4.0),
                     .box_hi = Vec::Constant(1, 4.0)};
    i.V = i.K.space_ptr();
    out.push_back(i);
  }
  {
    OracleInstance i{.name = "1d-kink-sharp",
                     .V = r1(),
                     .A_lin = Mat::Identity(1, 1),
                     .A_off = Vec::Zero(1),
                     .phi_weight = 1.0,
                     .phi_dof = 0,
                     .K = ConvexSet::whole_space(r1()),
                     .fbar = Vec::Constant(1, 0.4),
                     .box_lo = Vec::Constant(1, -4.0),
                     .box_hi = Vec::Constant(1, 4.0)};
    i.V = i.K.space_ptr();
    out.push_back(i);
  }
  {
    OracleInstance i{.name = "1d-kink-clamp",
                     .V = r1(),
                     .A_lin = Mat::Constant(1, 1, 2.0),
                     .A_off = Vec::Zero(1),
                     .phi_weight = 1.0,
                     .phi_dof = 0,
                     .K = ConvexSet::node_upper_bound(r1(), 0, 0.5),
                     .fbar = Vec::Constant(1, 2.0),
                     .box_lo = Vec::Constant(1, -4.0),
                     .box_hi = Vec::Constant(1, 4.0)};
    i.V = i.K.space_ptr();
    out.push_back(i);
  }
  {
    OracleInstance i{.name = "1d-unconstrained",
                     .V = r1(),
                     .A_lin = Mat::Identity(1, 1),
                     .A_off = Vec::Zero(1),
                     .K = ConvexSet::whole_space(r1()),
                     .fbar = Vec::Constant(1, 3.0),
                     .box_lo = Vec::Constant(1, -8.0),
                     .box_hi = Vec::Constant(1, 8.0)};
    i.V = i.K.space_ptr();
    out.push_back(i);
  }
  {
    OracleInstance i{.name = "1d-active-clamp",
                     .V = r1(),
                     .A_lin = Mat::Identity(1, 1),
                     .A_off = Vec::Zero(1),
                     .K = ConvexSet::node_upper_bound(r1(), 0, 2.0),
                     .fbar = Vec::Constant(1, 3.0),
                     .box_lo = Vec::Constant(1, -8.0),
                     .box_hi = Vec::Constant(1, 8.0)};
    i.V = i.K.space_ptr();
    out.push_back(i);
  }
  {
    OracleInstance i{.name = "1d-coupled",
                     .V = r1(),
                     .A_lin = Mat::Constant(1, 1, 2.0),
                     .A_off = Vec::Zero(1),
                     .phi_weight = 0.0,
                     .phi_dof = 0,
                     .couple_slope = 0.5,
                     .couple_dof = 0,
                     .K = ConvexSet::node_upper_bound(r1(), 0, 1.0),
                     .fbar = Vec::Constant(1, -1.0),
                     .box_lo = Vec::Constant(1, -4.0),
                     .box_hi = Vec::Constant(1, 4.0)};
    i.V = i.K.space_ptr();
    out.push_back(i);
  }
  {
    OracleInstance i{.name = "1d-kink-interior",
                     .V = r1(),
                     .A_lin = Mat::Constant(1, 1, 1.5),
                     .A_off = Vec::Zero(1),
                     .phi_weight = 0.7,
                     .phi_dof = 0,
                     .K = ConvexSet::whole_space(r1()),
                     .fbar = Vec::Constant(1, 0.3),
                     .box_lo = Vec::Constant(1, -4.0),
                     .box_hi = Vec::Constant(1, 4.0)};
    i.V = i.K.space_ptr();
    out.push_back(i);
  }
  {
    OracleInstance i{.name = "1d-gram2-negative",
                     .V = r1(2.0),
                     .A_lin = Mat::Constant(1, 1, 2.0),
                     .A_off = Vec::Zero(1),
                     .phi_weight = 1.0,
                     .phi_dof = 0,
                     .K = ConvexSet::node_upper_bound(r1(2.0), 0, 0.25),
                     .fbar = Vec::Constant(1, -1.0),
                     .box_lo = Vec::Constant(1, -4.0),
                     .box_hi = Vec::Constant(1, 4.0)};
    i.V = i.K.space_ptr();
    out.push_back(i);
  }

  Mat a2(2, 2);
  a2 << 2.0, 1.0, 1.0, 2.0;
  {
    OracleInstance i{.name = "2d-smooth-inactive",
                     .V = e2,
                     .A_lin = a2,
                     .A_off = Vec::Zero(2),
                     .K = ConvexSet::node_upper_bound(e2, 1, 5.0),
                     .fbar = Vec::Constant(2, 1.0),
                     .box_lo = Vec::Constant(2, -3.0),
                     .box_hi = Vec::Constant(2, 3.0)};
    out.push_back(i);
  }
  {
    OracleInstance i{.name = "2d-node-active",
                     .V = e2,
                     .A_lin = a2,
                     .A_off = Vec::Zero(2),
                     .K = ConvexSet::node_upper_bound(e2, 1, 0.3),
                     .fbar = Vec::Constant(2, 2.0),
                     .box_lo = Vec::Constant(2, -3.0),
                     .box_hi = Vec::Constant(2, 3.0)};
    out.push_back(i);
  }
  {
    Vec fb(2);
    fb << 1.0, 1.2;
    OracleInstance i{.name = "2d-box-kink",
                     .V = e2,
                     .A_lin = a2,
                     .A_off = Vec::Zero(2),
                     .phi_weight = 1.0,
                     .phi_dof = 0,
                     .K = ConvexSet::box(e2, Vec::Constant(2, -1.0), Vec::Constant(2, 1.0)),
                     .fbar = fb,
                     .box_lo = Vec::Constant(2, -1.0),
                     .box_hi = Vec::Constant(2, 1.0)};
    out.push_back(i);
  }
  {
    Mat a3(2, 2);
    a3 << 3.0, 1.0, 1.0, 2.0;
    Vec fb(2);
    fb << 1.5, 0.5;
    OracleInstance i{.name = "2d-coupled-node",
                     .V = e2,
                     .A_lin = a3,
                     .A_off = Vec::Zero(2),
                     .phi_weight = 0.2,
                     .phi_dof = 0,
                     .couple_slope = 0.4,
                     .couple_dof = 0,
                     .K = ConvexSet::node_upper_bound(e2, 0, 0.6),
                     .fbar = fb,
                     .box_lo = Vec::Constant(2, -3.0),
                     .box_hi = Vec::Constant(2, 3.0)};
    out.push_back(i);
  }
  return out;
}

}  // namespace dqvi::oracle
