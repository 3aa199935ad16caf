#pragma once

#include <map>
#include <memory>
#include <string>

#include "hermicone/exterior.hpp"
#include "hermicone/model.hpp"

namespace hermicone {

struct HermitianMetric {
  Eigen::MatrixXcd H;

  int n() const { return static_cast<int>(H.rows()); }
  static HermitianMetric identity(int n);
};

/// Validates Hermitian symmetry (1e-12 relative) and positive definiteness, then
/// returns the symmetrized metric. Throws NotPositiveDefinite.
HermitianMetric make_metric(const Eigen::MatrixXcd& H);

double min_eigenvalue(const Eigen::MatrixXcd& H);

enum class Laplacian { Del, Delbar, D };

const char* laplacian_name(Laplacian which);

/// Eigen-decomposition of one Laplacian block. Columns of `vectors` are
/// orthonormal for the pointwise Gram matrix of the block.
struct EigenBlock {
  Eigen::VectorXd values;
  Mat vectors;
};

/// Every operator is stored as a matrix on the full exterior algebra (global
/// ordering of ExteriorBasis); use block() to restrict to a (bi)degree.
class OperatorBundle {
 public:
  ComplexLieModel model;
  HermitianMetric metric;
  std::shared_ptr<const ExteriorBasis> basis;
  DifferentialMatrices diff;
  Form omega;
  double volume = 1.0;  // det H

  Mat gram;  // pointwise: <u, v> = v^dagger * gram * u
  Mat gram_inv;
  Mat star;
  Mat lefschetz;
  Mat lambda;
  Mat del_star;
  Mat delbar_star;
  Mat d_star;
  Mat lap_del;
  Mat lap_delbar;
  Mat lap_d;

  std::map<Bidegree, EigenBlock> spectrum_del;
  std::map<Bidegree, EigenBlock> spectrum_delbar;
  std::map<int, EigenBlock> spectrum_d;

  int n() const { return model.n; }
  int size() const { return basis->size(); }

  /// Adjoint with respect to the pointwise (equivalently L2) inner product.
  Mat adjoint(const Mat& A) const { return gram_inv * A.adjoint() * gram; }
  cplx inner(const Vec& u, const Vec& v) const { return v.dot(gram * u); }
  cplx l2(const Vec& u, const Vec& v) const { return volume * inner(u, v); }
  double l2_norm(const Vec& u) const { return std::sqrt(std::max(0.0, l2(u, u).real())); }

  cplx l2(const Form& u, const Form& v) const { return l2(u.to_global(), v.to_global()); }
  double l2_norm(const Form& u) const { return l2_norm(u.to_global()); }

  const Mat& laplacian(Laplacian which) const;
  const EigenBlock& eigen_block(Laplacian which, const Space& s) const;
  OperatorMatrix block(const Mat& global, const Space& src, const Space& tgt) const {
    return restrict_operator(*basis, global, src, tgt);
  }
  Vec apply(const Mat& global, const Form& u) const { return global * u.to_global(); }
  Form to_form(const Vec& v) const { return Form::from_global(n(), v); }
};

/// Throws ModelInvalid, ModelNotUnimodular, NotPositiveDefinite, DimensionMismatch.
OperatorBundle build_bundle(const ComplexLieModel& m, const HermitianMetric& g);

/// Gram matrix of the pointwise product on the full algebra for metric H.
Mat gram_matrix(const Eigen::MatrixXcd& H);

struct IdentityReport {
  std::map<std::string, double> residuals;
  double max_residual() const;
};

/// Max-entry residuals of the operator identities certified for a bundle.
/// Randomized (1,1)-forms are drawn from `seed`.
IdentityReport identity_suite(const OperatorBundle& b, std::uint64_t seed = 1, int samples = 3);

}  // namespace hermicone
