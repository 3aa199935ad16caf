#pragma once

#include <Eigen/Dense>
#include <compare>
#include <cstdint>
#include <map>
#include <memory>
#include <vector>

#include "hermicone/model.hpp"

namespace hermicone {

using Mat = Eigen::MatrixXcd;
using Vec = Eigen::VectorXcd;
using Mask = std::uint32_t;

struct Bidegree {
  int p = 0;
  int q = 0;
  auto operator<=>(const Bidegree&) const = default;
};

/// Multi-index pair (I, J) of a monomial theta_I ^ thetabar_J, 1-based.
struct BidegreeIndex {
  std::vector<int> I;
  std::vector<int> J;
  bool operator==(const BidegreeIndex&) const = default;
};

/// Either a bidegree block Lambda^{p,q} or a total-degree block Lambda^k.
struct Space {
  enum class Kind { Bigraded, Total };
  Kind kind = Kind::Total;
  int p = 0;
  int q = 0;
  int k = 0;

  static Space bidegree(int p, int q) { return {Kind::Bigraded, p, q, p + q}; }
  static Space total(int k) { return {Kind::Total, 0, 0, k}; }
  bool operator==(const Space&) const = default;
};

/// Monomials over the 2n generators theta^1..theta^n, thetabar^1..thetabar^n,
/// stored as bit masks (holomorphic j -> bit j-1, antiholomorphic j -> bit n+j-1).
/// Global ordering: total degree ascending, then p descending, then (I, J)
/// lexicographic. Every bidegree and total-degree block is contiguous.
class ExteriorBasis {
 public:
  explicit ExteriorBasis(int n);
  static std::shared_ptr<const ExteriorBasis> get(int n);

  int n() const { return n_; }
  int size() const { return static_cast<int>(masks_.size()); }
  Mask mask(int idx) const { return masks_[idx]; }
  int index(Mask m) const { return index_[m]; }
  Bidegree bidegree_of(Mask m) const;

  int offset(Bidegree b) const;
  int count(Bidegree b) const;
  int offset(int k) const;
  int count(int k) const;
  int offset(const Space& s) const;
  int count(const Space& s) const;

  std::vector<BidegreeIndex> basis(int p, int q) const;
  BidegreeIndex multi_index(Mask m) const;
  Mask mask_of(const BidegreeIndex& idx) const;

  Mask holo_bit(int j) const { return Mask{1} << (j - 1); }
  Mask anti_bit(int j) const { return Mask{1} << (n_ + j - 1); }
  Mask holo_part(Mask m) const { return m & ((Mask{1} << n_) - 1); }
  Mask anti_part(Mask m) const { return m >> n_; }
  Mask top_mask() const { return (Mask{1} << (2 * n_)) - 1; }

 private:
  int n_;
  std::vector<Mask> masks_;
  std::vector<int> index_;
  std::map<Bidegree, int> bi_offset_;
  std::vector<int> total_offset_;
};

std::vector<BidegreeIndex> basis(const ComplexLieModel& m, int p, int q);

/// Sign of e_a ^ e_b reordered to canonical form; 0 if the monomials overlap.
int wedge_sign(Mask a, Mask b);

class Form {
 public:
  Form() = default;
  explicit Form(int n);

  int n() const { return n_; }
  const std::map<Bidegree, Vec>& components() const { return components_; }
  Vec component(Bidegree b) const;
  void set_component(Bidegree b, Vec v);
  void add_to(Bidegree b, Mask m, cplx c);

  Form part(Bidegree b) const;
  Form degree_part(int k) const;
  double max_abs() const;
  bool is_zero() const { return max_abs() == 0.0; }

  Vec to_global() const;
  static Form from_global(int n, const Vec& v);
  static Form monomial(int n, const std::vector<int>& I, const std::vector<int>& J,
                       cplx c = 1.0);

  Form& operator+=(const Form& o);
  Form& operator-=(const Form& o);
  Form& operator*=(cplx c);

 private:
  int n_ = 0;
  std::map<Bidegree, Vec> components_;
};

Form operator+(Form a, const Form& b);
Form operator-(Form a, const Form& b);
Form operator*(cplx c, Form a);

Form wedge(const Form& u, const Form& v);
Form conj(const Form& u);
bool is_real(const Form& u, double tol = 1e-12);

/// omega = i * sum_{j,k} H_{jk} theta^j ^ thetabar^k.
Form metric_form(const Eigen::MatrixXcd& H);
/// Hermitian matrix of a (1,1)-form written as i * sum H_{jk} theta^j ^ thetabar^k.
Eigen::MatrixXcd metric_matrix(const Form& omega);
/// gamma^p / p!.
Form normalized_power(const Form& gamma, int p);

/// Theta = (i theta^1 ^ thetabar^1) ^ ... ^ (i theta^n ^ thetabar^n) equals
/// this constant times the canonical top monomial.
cplx theta_coefficient(int n);
/// Integral of the top-degree part against Theta (base volume 1).
cplx integrate(const Form& u);

/// Matrix of left multiplication u -> eta ^ u on the full algebra.
Mat wedge_matrix(const Form& eta);
/// conj(u).to_global() == conj_permutation(n) * u.to_global().conjugate().
Mat conj_permutation(int n);

struct OperatorMatrix {
  Space source;
  Space target;
  Mat matrix;
};

OperatorMatrix restrict_operator(const ExteriorBasis& basis, const Mat& global, const Space& src,
                                 const Space& tgt);
Vec restrict_vector(const ExteriorBasis& basis, const Vec& global, const Space& s);
Vec embed_vector(const ExteriorBasis& basis, const Vec& block, const Space& s);

/// Matrix of d on the full algebra, built from the structure constants by the
/// graded Leibniz rule. No integrability check.
Mat raw_differential(const ComplexLieModel& m);

struct DifferentialMatrices {
  int n = 0;
  Mat d;
  Mat del;
  Mat delbar;

  OperatorMatrix d_block(int k) const;
  OperatorMatrix del_block(int p, int q) const;
  OperatorMatrix delbar_block(int p, int q) const;
};

/// Throws ModelInvalid for non-integrable models or when d^2 != 0.
DifferentialMatrices differential_matrices(const ComplexLieModel& m);

}  // namespace hermicone
