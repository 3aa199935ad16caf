#include "hermicone/exterior.hpp"

#include <bit>
#include <mutex>

#include "hermicone/errors.hpp"

namespace hermicone {

namespace {

void combinations(int n, int r, int start, std::vector<int>& cur, std::vector<std::vector<int>>& out) {
  if (static_cast<int>(cur.size()) == r) {
    out.push_back(cur);
    return;
  }
  for (int x = start; x <= n; ++x) {
    cur.push_back(x);
    combinations(n, r, x + 1, cur, out);
    cur.pop_back();
  }
}

std::vector<std::vector<int>> combinations(int n, int r) {
  std::vector<std::vector<int>> out;
  std::vector<int> cur;
  combinations(n, r, 1, cur, out);
  return out;
}

int binomial(int n, int r) {
  if (r < 0 || r > n) return 0;
  long long v = 1;
  for (int i = 1; i <= r; ++i) v = v * (n - r + i) / i;
  return static_cast<int>(v);
}

void check_dims(const Form& u, const Form& v) {
  if (u.n() != v.n())
    throw Error(ErrorCode::DimensionMismatch,
                "forms of dimension " + std::to_string(u.n()) + " and " + std::to_string(v.n()));
}

// Conjugate of a canonical monomial: returns the target mask and the reorder sign.
std::pair<Mask, int> conj_monomial(const ExteriorBasis& eb, Mask m) {
  const Mask h = eb.holo_part(m);
  const Mask a = eb.anti_part(m);
  const int p = std::popcount(h);
  const int q = std::popcount(a);
  const Mask out = a | (h << eb.n());
  return {out, ((p * q) % 2 == 0) ? 1 : -1};
}

}  // namespace

ExteriorBasis::ExteriorBasis(int n) : n_(n) {
  if (n < 1 || n > 8) throw Error(ErrorCode::DegreeOutOfRange, "unsupported dimension");
  index_.assign(std::size_t{1} << (2 * n), -1);
  for (int k = 0; k <= 2 * n; ++k) {
    total_offset_.push_back(static_cast<int>(masks_.size()));
    for (int p = std::min(k, n); p >= std::max(0, k - n); --p) {
      const int q = k - p;
      bi_offset_[{p, q}] = static_cast<int>(masks_.size());
      for (const auto& I : combinations(n, p)) {
        for (const auto& J : combinations(n, q)) {
          const Mask m = mask_of({I, J});
          index_[m] = static_cast<int>(masks_.size());
          masks_.push_back(m);
        }
      }
    }
  }
  total_offset_.push_back(static_cast<int>(masks_.size()));
}

std::shared_ptr<const ExteriorBasis> ExteriorBasis::get(int n) {
  static std::mutex mu;
  static std::map<int, std::shared_ptr<const ExteriorBasis>> cache;
  std::lock_guard<std::mutex> lock(mu);
  auto it = cache.find(n);
  if (it != cache.end()) return it->second;
  auto eb = std::make_shared<const ExteriorBasis>(n);
  cache[n] = eb;
  return eb;
}

Bidegree ExteriorBasis::bidegree_of(Mask m) const {
  return {std::popcount(holo_part(m)), std::popcount(anti_part(m))};
}

int ExteriorBasis::offset(Bidegree b) const {
  auto it = bi_offset_.find(b);
  return it == bi_offset_.end() ? 0 : it->second;
}

int ExteriorBasis::count(Bidegree b) const {
  if (b.p < 0 || b.q < 0 || b.p > n_ || b.q > n_) return 0;
  return binomial(n_, b.p) * binomial(n_, b.q);
}

int ExteriorBasis::offset(int k) const {
  if (k < 0) return 0;
  if (k > 2 * n_) return size();
  return total_offset_[k];
}

int ExteriorBasis::count(int k) const {
  if (k < 0 || k > 2 * n_) return 0;
  return total_offset_[k + 1] - total_offset_[k];
}

int ExteriorBasis::offset(const Space& s) const {
  return s.kind == Space::Kind::Total ? offset(s.k) : offset(Bidegree{s.p, s.q});
}

int ExteriorBasis::count(const Space& s) const {
  return s.kind == Space::Kind::Total ? count(s.k) : count(Bidegree{s.p, s.q});
}

std::vector<BidegreeIndex> ExteriorBasis::basis(int p, int q) const {
  if (p < 0 || q < 0 || p > n_ || q > n_)
    throw Error(ErrorCode::DegreeOutOfRange,
                "(" + std::to_string(p) + "," + std::to_string(q) + ") for n=" + std::to_string(n_));
  std::vector<BidegreeIndex> out;
  const int off = offset(Bidegree{p, q});
  for (int i = 0; i < count(Bidegree{p, q}); ++i) out.push_back(multi_index(masks_[off + i]));
  return out;
}

BidegreeIndex ExteriorBasis::multi_index(Mask m) const {
  BidegreeIndex idx;
  for (int j = 1; j <= n_; ++j) {
    if (m & holo_bit(j)) idx.I.push_back(j);
    if (m & anti_bit(j)) idx.J.push_back(j);
  }
  return idx;
}

Mask ExteriorBasis::mask_of(const BidegreeIndex& idx) const {
  Mask m = 0;
  for (int j : idx.I) m |= holo_bit(j);
  for (int j : idx.J) m |= anti_bit(j);
  return m;
}

std::vector<BidegreeIndex> basis(const ComplexLieModel& m, int p, int q) {
  return ExteriorBasis::get(m.n)->basis(p, q);
}

int wedge_sign(Mask a, Mask b) {
  if (a & b) return 0;
  int inversions = 0;
  for (Mask rest = b; rest; rest &= rest - 1) {
    const int y = std::countr_zero(rest);
    const Mask above = (y + 1 >= 32) ? 0 : (a >> (y + 1));
    inversions += std::popcount(above);
  }
  return (inversions % 2 == 0) ? 1 : -1;
}

Form::Form(int n) : n_(n) {}

Vec Form::component(Bidegree b) const {
  auto it = components_.find(b);
  if (it != components_.end()) return it->second;
  return Vec::Zero(ExteriorBasis::get(n_)->count(b));
}

void Form::set_component(Bidegree b, Vec v) {
  if (b.p < 0 || b.q < 0 || b.p > n_ || b.q > n_)
    throw Error(ErrorCode::DegreeOutOfRange, "bidegree outside 0..n");
  if (v.size() != ExteriorBasis::get(n_)->count(b))
    throw Error(ErrorCode::DimensionMismatch, "component length does not match basis size");
  components_[b] = std::move(v);
}

void Form::add_to(Bidegree b, Mask m, cplx c) {
  const auto eb = ExteriorBasis::get(n_);
  auto it = components_.find(b);
  if (it == components_.end()) it = components_.emplace(b, Vec::Zero(eb->count(b))).first;
  it->second(eb->index(m) - eb->offset(b)) += c;
}

Form Form::part(Bidegree b) const {
  Form out(n_);
  auto it = components_.find(b);
  if (it != components_.end()) out.components_[b] = it->second;
  return out;
}

Form Form::degree_part(int k) const {
  Form out(n_);
  for (const auto& [b, v] : components_)
    if (b.p + b.q == k) out.components_[b] = v;
  return out;
}

double Form::max_abs() const {
  double m = 0.0;
  for (const auto& [b, v] : components_)
    if (v.size() > 0) m = std::max(m, v.cwiseAbs().maxCoeff());
  return m;
}

Vec Form::to_global() const {
  const auto eb = ExteriorBasis::get(n_);
  Vec out = Vec::Zero(eb->size());
  for (const auto& [b, v] : components_) out.segment(eb->offset(b), v.size()) = v;
  return out;
}

Form Form::from_global(int n, const Vec& v) {
  const auto eb = ExteriorBasis::get(n);
  if (v.size() != eb->size()) throw Error(ErrorCode::DimensionMismatch, "global vector length");
  Form out(n);
  for (int p = 0; p <= n; ++p) {
    for (int q = 0; q <= n; ++q) {
      const Bidegree b{p, q};
      Vec seg = v.segment(eb->offset(b), eb->count(b));
      if (seg.size() > 0 && seg.cwiseAbs().maxCoeff() > 0.0) out.components_[b] = seg;
    }
  }
  return out;
}

Form Form::monomial(int n, const std::vector<int>& I, const std::vector<int>& J, cplx c) {
  const auto eb = ExteriorBasis::get(n);
  auto check = [&](const std::vector<int>& idx) {
    for (std::size_t r = 0; r < idx.size(); ++r) {
      if (idx[r] < 1 || idx[r] > n || (r > 0 && idx[r] <= idx[r - 1]))
        throw Error(ErrorCode::DegreeOutOfRange, "multi-index must be strictly increasing in 1..n");
    }
  };
  check(I);
  check(J);
  Form out(n);
  out.add_to({static_cast<int>(I.size()), static_cast<int>(J.size())}, eb->mask_of({I, J}), c);
  return out;
}

Form& Form::operator+=(const Form& o) {
  check_dims(*this, o);
  for (const auto& [b, v] : o.components_) {
    auto it = components_.find(b);
    if (it == components_.end())
      components_[b] = v;
    else
      it->second += v;
  }
  return *this;
}

Form& Form::operator-=(const Form& o) {
  check_dims(*this, o);
  for (const auto& [b, v] : o.components_) {
    auto it = components_.find(b);
    if (it == components_.end())
      components_[b] = -v;
    else
      it->second -= v;
  }
  return *this;
}

Form& Form::operator*=(cplx c) {
  for (auto& [b, v] : components_) v *= c;
  return *this;
}

Form operator+(Form a, const Form& b) { return a += b; }
Form operator-(Form a, const Form& b) { return a -= b; }
Form operator*(cplx c, Form a) { return a *= c; }

Form wedge(const Form& u, const Form& v) {
  check_dims(u, v);
  const int n = u.n();
  const auto eb = ExteriorBasis::get(n);
  Form out(n);
  for (const auto& [bu, cu] : u.components()) {
    for (const auto& [bv, cv] : v.components()) {
      const Bidegree bt{bu.p + bv.p, bu.q + bv.q};
      if (bt.p > n || bt.q > n) continue;
      const int ou = eb->offset(bu);
      const int ov = eb->offset(bv);
      for (int a = 0; a < cu.size(); ++a) {
        if (cu(a) == cplx(0.0)) continue;
        const Mask ma = eb->mask(ou + a);
        for (int b = 0; b < cv.size(); ++b) {
          if (cv(b) == cplx(0.0)) continue;
          const Mask mb = eb->mask(ov + b);
          const int s = wedge_sign(ma, mb);
          if (s != 0) out.add_to(bt, ma | mb, static_cast<double>(s) * cu(a) * cv(b));
        }
      }
    }
  }
  return out;
}

Form conj(const Form& u) {
  const auto eb = ExteriorBasis::get(u.n());
  Form out(u.n());
  for (const auto& [b, v] : u.components()) {
    const int off = eb->offset(b);
    Vec w = Vec::Zero(v.size());
    const int off_t = eb->offset(Bidegree{b.q, b.p});
    for (int a = 0; a < v.size(); ++a) {
      auto [m, s] = conj_monomial(*eb, eb->mask(off + a));
      w(eb->index(m) - off_t) = static_cast<double>(s) * std::conj(v(a));
    }
    out.set_component({b.q, b.p}, w);
  }
  return out;
}

bool is_real(const Form& u, double tol) { return (conj(u) - u).max_abs() <= tol; }

Form metric_form(const Eigen::MatrixXcd& H) {
  const int n = static_cast<int>(H.rows());
  const auto eb = ExteriorBasis::get(n);
  Form out(n);
  for (int j = 1; j <= n; ++j)
    for (int k = 1; k <= n; ++k)
      out.add_to({1, 1}, eb->holo_bit(j) | eb->anti_bit(k), cplx(0.0, 1.0) * H(j - 1, k - 1));
  return out;
}

Eigen::MatrixXcd metric_matrix(const Form& omega) {
  const int n = omega.n();
  const auto eb = ExteriorBasis::get(n);
  const Vec c = omega.component({1, 1});
  Eigen::MatrixXcd H(n, n);
  for (int j = 1; j <= n; ++j)
    for (int k = 1; k <= n; ++k)
      H(j - 1, k - 1) =
          c(eb->index(eb->holo_bit(j) | eb->anti_bit(k)) - eb->offset(Bidegree{1, 1})) /
          cplx(0.0, 1.0);
  return H;
}

Form normalized_power(const Form& gamma, int p) {
  Form out = Form::monomial(gamma.n(), {}, {}, 1.0);
  double fact = 1.0;
  for (int r = 1; r <= p; ++r) {
    out = wedge(out, gamma);
    fact *= r;
  }
  return (1.0 / fact) * out;
}

cplx theta_coefficient(int n) {
  const auto eb = ExteriorBasis::get(n);
  Mask cur = 0;
  cplx c = 1.0;
  for (int j = 1; j <= n; ++j) {
    const Mask f = eb->holo_bit(j) | eb->anti_bit(j);
    c *= cplx(0.0, 1.0) * static_cast<double>(wedge_sign(cur, f));
    cur |= f;
  }
  return c;
}

cplx integrate(const Form& u) {
  return u.component({u.n(), u.n()})(0) / theta_coefficient(u.n());
}

Mat wedge_matrix(const Form& eta) {
  const auto eb = ExteriorBasis::get(eta.n());
  const int N = eb->size();
  Mat out = Mat::Zero(N, N);
  for (const auto& [b, v] : eta.components()) {
    const int off = eb->offset(b);
    for (int e = 0; e < v.size(); ++e) {
      if (v(e) == cplx(0.0)) continue;
      const Mask me = eb->mask(off + e);
      for (int col = 0; col < N; ++col) {
        const Mask mc = eb->mask(col);
        const int s = wedge_sign(me, mc);
        if (s != 0) out(eb->index(me | mc), col) += static_cast<double>(s) * v(e);
      }
    }
  }
  return out;
}

Mat conj_permutation(int n) {
  const auto eb = ExteriorBasis::get(n);
  const int N = eb->size();
  Mat out = Mat::Zero(N, N);
  for (int col = 0; col < N; ++col) {
    auto [m, s] = conj_monomial(*eb, eb->mask(col));
    out(eb->index(m), col) = static_cast<double>(s);
  }
  return out;
}

OperatorMatrix restrict_operator(const ExteriorBasis& eb, const Mat& global, const Space& src,
                                 const Space& tgt) {
  return {src, tgt,
          global.block(eb.offset(tgt), eb.offset(src), eb.count(tgt), eb.count(src))};
}

Vec restrict_vector(const ExteriorBasis& eb, const Vec& global, const Space& s) {
  return global.segment(eb.offset(s), eb.count(s));
}

Vec embed_vector(const ExteriorBasis& eb, const Vec& block, const Space& s) {
  Vec out = Vec::Zero(eb.size());
  out.segment(eb.offset(s), eb.count(s)) = block;
  return out;
}

Mat raw_differential(const ComplexLieModel& m) {
  const int n = m.n;
  const auto eb = ExteriorBasis::get(n);
  const int N = eb->size();

  // d of each generator as (mask, coefficient) pairs; generator bit index g.
  std::vector<std::vector<std::pair<Mask, cplx>>> dgen(2 * n);
  for (const auto& t : m.terms) {
    Mask mk = 0;
    switch (t.kind) {
      case TermKind::Holo: mk = eb->holo_bit(t.j) | eb->holo_bit(t.k); break;
      case TermKind::Mixed: mk = eb->holo_bit(t.j) | eb->anti_bit(t.k); break;
      case TermKind::Anti: mk = eb->anti_bit(t.j) | eb->anti_bit(t.k); break;
    }
    // Sign of the written order relative to canonical order.
    int s = 1;
    if (t.kind != TermKind::Mixed && t.j > t.k) s = -1;
    dgen[t.i - 1].push_back({mk, static_cast<double>(s) * t.coef});
  }
  for (int i = 0; i < n; ++i) {
    for (const auto& [mk, c] : dgen[i]) {
      auto [cm, s] = conj_monomial(*eb, mk);
      dgen[n + i].push_back({cm, static_cast<double>(s) * std::conj(c)});
    }
  }

  Mat d = Mat::Zero(N, N);
  for (int col = 0; col < N; ++col) {
    const Mask mono = eb->mask(col);
    int r = 0;
    for (Mask rest = mono; rest; rest &= rest - 1, ++r) {
      const int g = std::countr_zero(rest);
      const Mask bit = Mask{1} << g;
      const Mask prefix = mono & (bit - 1);
      const Mask suffix = mono & ~(prefix | bit);
      for (const auto& [t, c] : dgen[g]) {
        if (t & (prefix | suffix)) continue;
        const int s1 = wedge_sign(prefix, t);
        const int s2 = wedge_sign(prefix | t, suffix);
        const double sign = ((r % 2 == 0) ? 1.0 : -1.0) * s1 * s2;
        d(eb->index(prefix | t | suffix), col) += sign * c;
      }
    }
  }
  return d;
}

DifferentialMatrices differential_matrices(const ComplexLieModel& input) {
  const ComplexLieModel m = normalize_model(input);
  for (const auto& t : m.terms)
    if (t.kind == TermKind::Anti)
      throw Error(ErrorCode::ModelInvalid, "complex structure is not integrable");
  DifferentialMatrices out;
  out.n = m.n;
  out.d = raw_differential(m);
  const double dd = (out.d * out.d).cwiseAbs().maxCoeff();
  if (dd > 1e-12) throw Error(ErrorCode::ModelInvalid, "d^2 != 0 (" + sci(dd) + ")");
  const auto eb = ExteriorBasis::get(m.n);
  const int N = eb->size();
  out.del = Mat::Zero(N, N);
  out.delbar = Mat::Zero(N, N);
  for (int row = 0; row < N; ++row) {
    const Bidegree br = eb->bidegree_of(eb->mask(row));
    for (int col = 0; col < N; ++col) {
      if (out.d(row, col) == cplx(0.0)) continue;
      const Bidegree bc = eb->bidegree_of(eb->mask(col));
      if (br.p == bc.p + 1 && br.q == bc.q)
        out.del(row, col) = out.d(row, col);
      else if (br.q == bc.q + 1 && br.p == bc.p)
        out.delbar(row, col) = out.d(row, col);
      else
        throw Error(ErrorCode::ModelInvalid, "d has a component outside (p+1,q) + (p,q+1)");
    }
  }
  return out;
}

OperatorMatrix DifferentialMatrices::d_block(int k) const {
  return restrict_operator(*ExteriorBasis::get(n), d, Space::total(k), Space::total(k + 1));
}

OperatorMatrix DifferentialMatrices::del_block(int p, int q) const {
  return restrict_operator(*ExteriorBasis::get(n), del, Space::bidegree(p, q),
                           Space::bidegree(p + 1, q));
}

OperatorMatrix DifferentialMatrices::delbar_block(int p, int q) const {
  return restrict_operator(*ExteriorBasis::get(n), delbar, Space::bidegree(p, q),
                           Space::bidegree(p, q + 1));
}

}  // namespace hermicone
