#pragma once

#include <Eigen/Cholesky>
#include <Eigen/Dense>
#include <limits>
#include <memory>

#include "dqvi/errors.hpp"

namespace dqvi {

using Vec = Eigen::VectorXd;
using Mat = Eigen::MatrixXd;

class Space;
using SpacePtr = std::shared_ptr<const Space>;

/// Finite-dimensional inner-product space (u,v) = u^T G v with a cached
/// Cholesky factorization of the Gram matrix G. Immutable after construction.
class Space {
 public:
  /// Validates symmetry (1e-12 relative) and positive definiteness (LLT must
  /// succeed). Throws config_error otherwise.
  explicit Space(Mat gram);

  static SpacePtr euclidean(int dim);
  static SpacePtr with_gram(Mat gram) { return std::make_shared<Space>(std::move(gram)); }

  int dim() const { return static_cast<int>(gram_.rows()); }
  const Mat& gram() const { return gram_; }
  bool diagonal_gram() const { return diagonal_; }

  double inner(const Vec& u, const Vec& v) const;
  double norm(const Vec& v) const;
  double distance(const Vec& u, const Vec& v) const { return norm(u - v); }

  /// Riesz representative G^{-1} d of a dual-coordinate functional d.
  Vec riesz(const Vec& dual) const;

  /// Dual norm sqrt(d^T G^{-1} d).
  double dual_norm(const Vec& dual) const;

  /// Column i of G^{-1} (projection and prox formulas are rank-one in it).
  Vec gram_inverse_column(int i) const;

 private:
  void check_dim(const Vec& v, const char* who) const;

  Mat gram_;
  Eigen::LLT<Mat> llt_;
  bool diagonal_ = false;
};

/// Closed convex constraint set with an exact projection in the space metric.
/// Variants: whole space, coordinate box (diagonal Gram only), single-dof
/// upper bound (any Gram, rank-one closed form).
class ConvexSet {
 public:
  enum class Kind { whole_space, box, node_upper_bound };

  /// Uninitialized set; any geometric use throws. Exists so problem bundles
  /// can be built field by field.
  ConvexSet() = default;

  static ConvexSet whole_space(SpacePtr space);
  static ConvexSet box(SpacePtr space, Vec lower, Vec upper);
  static ConvexSet node_upper_bound(SpacePtr space, int dof, double bound);

  Kind kind() const { return kind_; }
  const Space& space() const {
    if (!space_) throw config_error("ConvexSet: used before initialization");
    return *space_;
  }
  SpacePtr space_ptr() const { return space_; }

  int dof() const { return dof_; }
  double bound() const { return bound_; }
  const Vec& lower() const { return lower_; }
  const Vec& upper() const { return upper_; }

  /// Metric projection. Exact closed forms only; box projection under a
  /// non-diagonal Gram throws config_error.
  Vec project(const Vec& v) const;

  bool contains(const Vec& v, double tol = 1e-12) const;

  /// For node_upper_bound: cached G^{-1} e_dof and its dof-th entry.
  const Vec& ginv_column() const { return ginv_col_; }
  double ginv_diag() const { return ginv_diag_; }

 private:
  ConvexSet(SpacePtr space, Kind kind) : space_(std::move(space)), kind_(kind) {}

  SpacePtr space_;
  Kind kind_ = Kind::whole_space;
  int dof_ = -1;
  double bound_ = std::numeric_limits<double>::infinity();
  Vec lower_, upper_;
  Vec ginv_col_;
  double ginv_diag_ = 0.0;
};

/// Linear continuous operator between spaces, dual pairing through the
/// codomain Gram. The operator norm in the endpoint metrics is computed once
/// at construction.
class LinearMap {
 public:
  /// Uninitialized map; apply/lift throw until assigned.
  LinearMap() = default;

  LinearMap(Mat matrix, SpacePtr domain, SpacePtr codomain);

  const Mat& matrix() const { return matrix_; }
  const Space& domain() const { return *domain_; }
  const Space& codomain() const { return *codomain_; }

  Vec apply(const Vec& v) const;

  /// Dual-coordinate functional v -> (z, Av)_codomain, i.e. A^T G_Z z.
  /// This is the Riesz lift used to build fbar from f(t).
  Vec lift_dual(const Vec& z) const;

  double operator_norm() const { return op_norm_; }

 private:
  Mat matrix_;
  SpacePtr domain_, codomain_;
  double op_norm_ = 0.0;
};

/// Recovery map for the gap-scaled constraint family: v_n = (g_n/g) v, with a
/// bit-level clamp at the constrained dof so v_n satisfies the scaled bound
/// exactly. Throws config_error for nonpositive bounds, input_error if v
/// violates the base constraint.
Vec mosco_scale(double base_bound, double scaled_bound, const Vec& v, int constraint_dof);

}  // namespace dqvi
