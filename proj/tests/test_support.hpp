#pragma once

#include <cmath>
#include <functional>
#include <limits>
#include <vector>

#include "dqvi/space.hpp"

namespace dqvi::testing {

/// Independent 1D grid minimizer over [lo, hi] used to freeze expected
/// values; intentionally unaware of the solver code paths.
inline double grid_argmin_1d(const std::function<double(double)>& f, double lo, double hi,
                             double spacing) {
  double best_x = lo, best_f = f(lo);
  for (double x = lo; x <= hi + 0.5 * spacing; x += spacing) {
    const double fx = f(std::min(x, hi));
    if (fx < best_f) {
      best_f = fx;
      best_x = std::min(x, hi);
    }
  }
  return best_x;
}

/// Dense-grid metric projection oracle: minimizes ||w - v||_V over a feasible
/// grid (node-bound constraint), per the projection examples.
inline Vec projection_oracle_node_bound(const Space& V, const Vec& v, int dof, double bound,
                                        double spacing, double radius) {
  const int dim = V.dim();
  std::vector<double> lo(dim), hi(dim);
  for (int i = 0; i < dim; ++i) {
    lo[i] = v[i] - radius;
    hi[i] = v[i] + radius;
  }
  hi[dof] = std::min(hi[dof], bound);

  Vec best = v;
  double best_d = std::numeric_limits<double>::infinity();
  if (dim == 1) {
    for (double x = lo[0]; x <= hi[0]; x += spacing) {
      Vec w(1);
      w << x;
      const double d = V.distance(w, v);
      if (d < best_d) {
        best_d = d;
        best = w;
      }
    }
    return best;
  }
  for (double x = lo[0]; x <= hi[0]; x += spacing)
    for (double y = lo[1]; y <= hi[1]; y += spacing) {
      Vec w(2);
      w << x, y;
      const double d = V.distance(w, v);
      if (d < best_d) {
        best_d = d;
        best = w;
      }
    }
  return best;
}

}  // namespace dqvi::testing
