#include "dqvi/space.hpp"

#include <cmath>
#include <string>

namespace dqvi {

namespace {

bool is_diagonal(const Mat& m) {
  for (Eigen::Index i = 0; i < m.rows(); ++i)
    for (Eigen::Index j = 0; j < m.cols(); ++j)
      if (i != j && m(i, j) != 0.0) return false;
  return true;
}

}  // namespace

Space::Space(Mat gram) : gram_(std::move(gram)) {
  if (gram_.rows() == 0 || gram_.rows() != gram_.cols())
    throw config_error("Space: Gram matrix must be square and nonempty");
  const double scale = gram_.cwiseAbs().maxCoeff();
  const double asym = (gram_ - gram_.transpose()).cwiseAbs().maxCoeff();
  if (asym > 1e-12 * (scale > 0 ? scale : 1.0))
    throw config_error("Space: Gram matrix is not symmetric within 1e-12 relative");
  gram_ = 0.5 * (gram_ + gram_.transpose().eval());  // exact symmetry for downstream identities
  llt_.compute(gram_);
  if (llt_.info() != Eigen::Success)
    throw config_error("Space: Gram matrix is not positive definite (Cholesky failed)");
  diagonal_ = is_diagonal(gram_);
}

SpacePtr Space::euclidean(int dim) {
  return std::make_shared<Space>(Mat::Identity(dim, dim));
}

void Space::check_dim(const Vec& v, const char* who) const {
  if (v.size() != gram_.rows())
    throw input_error(std::string(who) + ": vector length " + std::to_string(v.size()) +
                      " does not match space dimension " + std::to_string(gram_.rows()));
}

double Space::inner(const Vec& u, const Vec& v) const {
  check_dim(u, "Space::inner");
  check_dim(v, "Space::inner");
  return u.dot(gram_ * v);
}

double Space::norm(const Vec& v) const {
  check_dim(v, "Space::norm");
  return std::sqrt(std::max(0.0, v.dot(gram_ * v)));
}

Vec Space::riesz(const Vec& dual) const {
  check_dim(dual, "Space::riesz");
  return llt_.solve(dual);
}

double Space::dual_norm(const Vec& dual) const {
  check_dim(dual, "Space::dual_norm");
  return std::sqrt(std::max(0.0, dual.dot(llt_.solve(dual))));
}

Vec Space::gram_inverse_column(int i) const {
  if (i < 0 || i >= dim()) throw input_error("Space::gram_inverse_column: index out of range");
  Vec e = Vec::Zero(dim());
  e[i] = 1.0;
  return llt_.solve(e);
}

ConvexSet ConvexSet::whole_space(SpacePtr space) {
  return ConvexSet(std::move(space), Kind::whole_space);
}

ConvexSet ConvexSet::box(SpacePtr space, Vec lower, Vec upper) {
  ConvexSet s(std::move(space), Kind::box);
  if (lower.size() != s.space().dim() || upper.size() != s.space().dim())
    throw config_error("ConvexSet::box: bound vectors must match the space dimension");
  for (int i = 0; i < s.space().dim(); ++i)
    if (!(lower[i] <= upper[i]))
      throw config_error("ConvexSet::box: empty set, lower > upper at dof " + std::to_string(i));
  s.lower_ = std::move(lower);
  s.upper_ = std::move(upper);
  return s;
}

ConvexSet ConvexSet::node_upper_bound(SpacePtr space, int dof, double bound) {
  ConvexSet s(std::move(space), Kind::node_upper_bound);
  if (dof < 0 || dof >= s.space().dim())
    throw config_error("ConvexSet::node_upper_bound: dof out of range");
  if (!std::isfinite(bound))
    throw config_error("ConvexSet::node_upper_bound: bound must be finite");
  s.dof_ = dof;
  s.bound_ = bound;
  s.ginv_col_ = s.space().gram_inverse_column(dof);
  s.ginv_diag_ = s.ginv_col_[dof];
  return s;
}

Vec ConvexSet::project(const Vec& v) const {
  if (v.size() != space().dim()) throw input_error("ConvexSet::project: dimension mismatch");
  switch (kind_) {
    case Kind::whole_space:
      return v;
    case Kind::node_upper_bound: {
      const double excess = v[dof_] - bound_;
      if (excess <= 0.0) return v;
      Vec p = v - (excess / ginv_diag_) * ginv_col_;
      p[dof_] = bound_;  // exact feasibility and idempotence
      return p;
    }
    case Kind::box: {
      if (!space().diagonal_gram())
        throw config_error(
            "ConvexSet::project: box projection has no closed form under a non-diagonal Gram");
      Vec p = v;
      for (int i = 0; i < p.size(); ++i) p[i] = std::min(std::max(p[i], lower_[i]), upper_[i]);
      return p;
    }
  }
  throw config_error("ConvexSet::project: unreachable");
}

bool ConvexSet::contains(const Vec& v, double tol) const {
  if (v.size() != space().dim()) throw input_error("ConvexSet::contains: dimension mismatch");
  switch (kind_) {
    case Kind::whole_space:
      return true;
    case Kind::node_upper_bound:
      return v[dof_] <= bound_ + tol;
    case Kind::box:
      for (int i = 0; i < v.size(); ++i)
        if (v[i] < lower_[i] - tol || v[i] > upper_[i] + tol) return false;
      return true;
  }
  return false;
}

LinearMap::LinearMap(Mat matrix, SpacePtr domain, SpacePtr codomain)
    : matrix_(std::move(matrix)), domain_(std::move(domain)), codomain_(std::move(codomain)) {
  if (matrix_.cols() != domain_->dim() || matrix_.rows() != codomain_->dim())
    throw config_error("LinearMap: matrix shape does not match domain/codomain");
  // ||Av||_Z^2 = v^T (A^T Gz A) v; the operator norm is the largest
  // generalized eigenvalue of A^T Gz A against Gv.
  const Mat quad = matrix_.transpose() * codomain_->gram() * matrix_;
  Eigen::LLT<Mat> llt(domain_->gram());
  const Mat l = llt.matrixL();
  const Mat whitened = l.triangularView<Eigen::Lower>().solve(
      l.triangularView<Eigen::Lower>().solve(quad).transpose());
  Eigen::SelfAdjointEigenSolver<Mat> es(0.5 * (whitened + whitened.transpose()));
  op_norm_ = std::sqrt(std::max(0.0, es.eigenvalues().maxCoeff()));
}

Vec LinearMap::apply(const Vec& v) const {
  if (!domain_) throw config_error("LinearMap: used before initialization");
  if (v.size() != domain_->dim()) throw input_error("LinearMap::apply: dimension mismatch");
  return matrix_ * v;
}

Vec LinearMap::lift_dual(const Vec& z) const {
  if (!codomain_) throw config_error("LinearMap: used before initialization");
  if (z.size() != codomain_->dim()) throw input_error("LinearMap::lift_dual: dimension mismatch");
  return matrix_.transpose() * (codomain_->gram() * z);
}

Vec mosco_scale(double base_bound, double scaled_bound, const Vec& v, int constraint_dof) {
  if (!(base_bound > 0.0) || !(scaled_bound > 0.0))
    throw config_error("mosco_scale: bounds must be positive");
  if (constraint_dof < 0 || constraint_dof >= v.size())
    throw input_error("mosco_scale: constraint dof out of range");
  if (v[constraint_dof] > base_bound * (1.0 + 1e-12) + 1e-15)
    throw input_error("mosco_scale: input violates the base constraint");
  Vec scaled = (scaled_bound / base_bound) * v;
  scaled[constraint_dof] = std::min(scaled[constraint_dof], scaled_bound);
  return scaled;
}

}  // namespace dqvi
