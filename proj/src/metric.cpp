#include "hermicone/metric.hpp"

#include <cmath>

#include "hermicone/errors.hpp"
#include "hermicone/random.hpp"

namespace hermicone {

namespace {

double max_entry(const Mat& m) { return m.size() == 0 ? 0.0 : m.cwiseAbs().maxCoeff(); }

Eigen::MatrixXcd submatrix(const Eigen::MatrixXcd& a, const std::vector<int>& rows,
                           const std::vector<int>& cols) {
  Eigen::MatrixXcd s(rows.size(), cols.size());
  for (std::size_t r = 0; r < rows.size(); ++r)
    for (std::size_t c = 0; c < cols.size(); ++c) s(r, c) = a(rows[r] - 1, cols[c] - 1);
  return s;
}

cplx minor_det(const Eigen::MatrixXcd& a, const std::vector<int>& rows,
               const std::vector<int>& cols) {
  if (rows.empty()) return 1.0;
  return submatrix(a, rows, cols).determinant();
}

cplx i_power(int e) {
  switch (((e % 4) + 4) % 4) {
    case 0: return {1.0, 0.0};
    case 1: return {0.0, 1.0};
    case 2: return {-1.0, 0.0};
    default: return {0.0, -1.0};
  }
}

EigenBlock decompose(const Mat& lap, const Mat& gram) {
  EigenBlock out;
  const int m = static_cast<int>(lap.rows());
  if (m == 0) return out;
  Eigen::LLT<Mat> llt(gram);
  const Mat l = llt.matrixL();
  const Mat l_inv_adj =
      l.adjoint().triangularView<Eigen::Upper>().solve(Mat::Identity(m, m));
  Mat herm = l.adjoint() * lap * l_inv_adj;
  herm = 0.5 * (herm + herm.adjoint()).eval();
  Eigen::SelfAdjointEigenSolver<Mat> es(herm);
  out.values = es.eigenvalues();
  out.vectors = l_inv_adj * es.eigenvectors();
  return out;
}

}  // namespace

HermitianMetric HermitianMetric::identity(int n) {
  return {Eigen::MatrixXcd::Identity(n, n)};
}

double min_eigenvalue(const Eigen::MatrixXcd& H) {
  const Eigen::MatrixXcd s = 0.5 * (H + H.adjoint());
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXcd> es(s, Eigen::EigenvaluesOnly);
  return es.eigenvalues()(0);
}

HermitianMetric make_metric(const Eigen::MatrixXcd& H) {
  if (H.rows() != H.cols() || H.rows() == 0)
    throw Error(ErrorCode::DimensionMismatch, "metric matrix must be square");
  const double scale = std::max(1.0, H.cwiseAbs().maxCoeff());
  if ((H - H.adjoint()).cwiseAbs().maxCoeff() > 1e-12 * scale)
    throw Error(ErrorCode::NotPositiveDefinite, "metric matrix is not Hermitian");
  if (!H.allFinite()) throw Error(ErrorCode::NotPositiveDefinite, "metric has non-finite entries");
  const Eigen::MatrixXcd s = 0.5 * (H + H.adjoint());
  const double lmin = min_eigenvalue(s);
  if (!(lmin > 0.0))
    throw Error(ErrorCode::NotPositiveDefinite,
                "minimum eigenvalue " + sci(lmin) + " is not positive");
  return {s};
}

const char* laplacian_name(Laplacian which) {
  switch (which) {
    case Laplacian::Del: return "del";
    case Laplacian::Delbar: return "delbar";
    case Laplacian::D: return "d";
  }
  return "?";
}

const Mat& OperatorBundle::laplacian(Laplacian which) const {
  switch (which) {
    case Laplacian::Del: return lap_del;
    case Laplacian::Delbar: return lap_delbar;
    case Laplacian::D: return lap_d;
  }
  return lap_d;
}

const EigenBlock& OperatorBundle::eigen_block(Laplacian which, const Space& s) const {
  if (which == Laplacian::D) {
    if (s.kind != Space::Kind::Total || s.k < 0 || s.k > 2 * n())
      throw Error(ErrorCode::DegreeOutOfRange, "d-Laplacian blocks are indexed by total degree");
    return spectrum_d.at(s.k);
  }
  if (s.kind != Space::Kind::Bigraded || s.p < 0 || s.q < 0 || s.p > n() || s.q > n())
    throw Error(ErrorCode::DegreeOutOfRange, "del/delbar-Laplacian blocks are indexed by bidegree");
  const auto& spectra = (which == Laplacian::Del) ? spectrum_del : spectrum_delbar;
  return spectra.at(Bidegree{s.p, s.q});
}

Mat gram_matrix(const Eigen::MatrixXcd& H) {
  const int n = static_cast<int>(H.rows());
  const auto eb = ExteriorBasis::get(n);
  const Eigen::MatrixXcd hinv = H.inverse();
  const Eigen::MatrixXcd hinv_bar = hinv.conjugate();
  Mat gram = Mat::Zero(eb->size(), eb->size());
  for (int p = 0; p <= n; ++p) {
    for (int q = 0; q <= n; ++q) {
      const auto idx = eb->basis(p, q);
      const int off = eb->offset(Bidegree{p, q});
      for (std::size_t a = 0; a < idx.size(); ++a)
        for (std::size_t b = 0; b < idx.size(); ++b)
          gram(off + a, off + b) =
              minor_det(hinv, idx[a].I, idx[b].I) * minor_det(hinv_bar, idx[a].J, idx[b].J);
    }
  }
  return gram;
}

OperatorBundle build_bundle(const ComplexLieModel& m, const HermitianMetric& g) {
  const ValidationReport rep = validate_model(m);
  if (!rep.integrable || rep.d_squared_max_residual > 1e-12)
    throw Error(ErrorCode::ModelInvalid, rep.messages.empty() ? "invalid model" : rep.messages[0]);
  if (!rep.unimodular) throw Error(ErrorCode::ModelNotUnimodular, "d is nonzero on top-1 degree");
  if (g.n() != m.n)
    throw Error(ErrorCode::DimensionMismatch, "metric is " + std::to_string(g.n()) +
                                                  "x" + std::to_string(g.n()) + ", model n=" +
                                                  std::to_string(m.n));

  OperatorBundle b;
  b.model = normalize_model(m);
  b.metric = make_metric(g.H);
  b.basis = ExteriorBasis::get(m.n);
  b.diff = differential_matrices(b.model);
  b.omega = metric_form(b.metric.H);
  b.volume = b.metric.H.determinant().real();

  const int n = m.n;
  const int N = b.basis->size();
  const auto& eb = *b.basis;

  b.gram = gram_matrix(b.metric.H);
  b.gram_inv = Mat::Zero(N, N);
  for (int p = 0; p <= n; ++p) {
    for (int q = 0; q <= n; ++q) {
      const int off = eb.offset(Bidegree{p, q});
      const int c = eb.count(Bidegree{p, q});
      b.gram_inv.block(off, off, c, c) = b.gram.block(off, off, c, c).inverse();
    }
  }

  // Hodge star from u ^ star(conj v) = <u, v> det(H) Theta, solved per bidegree.
  const cplx theta_c = theta_coefficient(n);
  b.star = Mat::Zero(N, N);
  for (int p = 0; p <= n; ++p) {
    for (int q = 0; q <= n; ++q) {
      const Bidegree src{p, q};
      const Bidegree comp{n - p, n - q};
      const int off = eb.offset(src);
      const int cnt = eb.count(src);
      const int off_c = eb.offset(comp);
      Mat w = Mat::Zero(cnt, cnt);
      for (int a = 0; a < cnt; ++a) {
        const Mask ma = eb.mask(off + a);
        const Mask mc = eb.top_mask() & ~ma;
        w(a, eb.index(mc) - off_c) = static_cast<double>(wedge_sign(ma, mc)) / theta_c;
      }
      const Eigen::PartialPivLU<Mat> w_lu(w);
      const Mat g_block = b.gram.block(off, off, cnt, cnt);
      const double sign = ((p * q) % 2 == 0) ? 1.0 : -1.0;
      const Mat cols = w_lu.solve(g_block.transpose()) * (sign * b.volume);
      for (int bi = 0; bi < cnt; ++bi) {
        const Mask mb = eb.mask(off + bi);
        const Mask conj_mask = eb.anti_part(mb) | (eb.holo_part(mb) << n);
        b.star.block(off_c, eb.index(conj_mask), cnt, 1) = cols.col(bi);
      }
    }
  }

  b.lefschetz = wedge_matrix(b.omega);
  b.lambda = b.adjoint(b.lefschetz);
  b.del_star = b.adjoint(b.diff.del);
  b.delbar_star = b.adjoint(b.diff.delbar);
  b.d_star = b.adjoint(b.diff.d);
  b.lap_del = b.diff.del * b.del_star + b.del_star * b.diff.del;
  b.lap_delbar = b.diff.delbar * b.delbar_star + b.delbar_star * b.diff.delbar;
  b.lap_d = b.diff.d * b.d_star + b.d_star * b.diff.d;

  for (int p = 0; p <= n; ++p) {
    for (int q = 0; q <= n; ++q) {
      const Space s = Space::bidegree(p, q);
      const Mat gb = b.block(b.gram, s, s).matrix;
      b.spectrum_del[{p, q}] = decompose(b.block(b.lap_del, s, s).matrix, gb);
      b.spectrum_delbar[{p, q}] = decompose(b.block(b.lap_delbar, s, s).matrix, gb);
    }
  }
  for (int k = 0; k <= 2 * n; ++k) {
    const Space s = Space::total(k);
    b.spectrum_d[k] = decompose(b.block(b.lap_d, s, s).matrix, b.block(b.gram, s, s).matrix);
  }
  return b;
}

double IdentityReport::max_residual() const {
  double m = 0.0;
  for (const auto& [name, r] : residuals) m = std::max(m, r);
  return m;
}

IdentityReport identity_suite(const OperatorBundle& b, std::uint64_t seed, int samples) {
  IdentityReport rep;
  const int n = b.n();
  const int N = b.size();
  const auto& eb = *b.basis;
  Rng rng(seed);

  Vec sign(N);
  for (int i = 0; i < N; ++i) {
    const int k = std::popcount(eb.mask(i));
    sign(i) = (k % 2 == 0) ? 1.0 : -1.0;
  }
  rep.residuals["star_star"] = max_entry(b.star * b.star - Mat(sign.asDiagonal()));
  rep.residuals["star_L"] = max_entry(b.star * b.lefschetz - b.lambda * b.star);

  double r_mult = 0.0;
  double r_adj11 = 0.0;
  const int off11 = eb.offset(Bidegree{1, 1});
  const int cnt11 = eb.count(Bidegree{1, 1});
  for (int s = 0; s < samples; ++s) {
    const Form eta = random_form(n, {1, 1}, rng);
    const Mat e_mult = wedge_matrix(eta);
    const Mat e_bar_mult = wedge_matrix(conj(eta));
    r_mult = std::max(r_mult, max_entry(b.star * e_mult - b.adjoint(e_bar_mult) * b.star));
    // (eta ^ .)^* on (1,1) lands in degree 0 and equals <., eta>.
    const Mat adj = b.adjoint(e_mult).block(0, off11, 1, cnt11);
    const Vec e11 = eta.component({1, 1});
    const Mat pairing = e11.adjoint() * b.gram.block(off11, off11, cnt11, cnt11);
    r_adj11 = std::max(r_adj11, max_entry(adj - pairing));
  }
  rep.residuals["star_mult"] = r_mult;
  rep.residuals["mult_adjoint_11"] = r_adj11;

  double r_comm = 0.0;
  const Mat comm = b.lambda * b.lefschetz - b.lefschetz * b.lambda;
  for (int p = 0; p <= n; ++p) {
    for (int q = 0; q <= n; ++q) {
      const Space sp = Space::bidegree(p, q);
      const Mat blk = b.block(comm, sp, sp).matrix;
      r_comm = std::max(r_comm,
                        max_entry(blk - static_cast<double>(n - p - q) *
                                            Mat::Identity(blk.rows(), blk.cols())));
    }
  }
  rep.residuals["lambda_L_commutator"] = r_comm;

  double r_prim = 0.0;
  for (int p = 0; p <= n; ++p) {
    for (int q = 0; q <= n && p + q <= n; ++q) {
      const int k = p + q;
      const Space sp = Space::bidegree(p, q);
      const int cnt = eb.count(sp);
      Mat primitive;
      if (p == 0 || q == 0) {
        primitive = Mat::Identity(cnt, cnt);
      } else {
        const Mat lam = b.block(b.lambda, sp, Space::bidegree(p - 1, q - 1)).matrix;
        Eigen::JacobiSVD<Mat> svd(lam, Eigen::ComputeFullV);
        const auto& sv = svd.singularValues();
        const double thr = 1e-10 * std::max(1.0, sv.size() ? sv(0) : 0.0);
        int rank = 0;
        for (int i = 0; i < sv.size(); ++i)
          if (sv(i) > thr) ++rank;
        primitive = svd.matrixV().rightCols(cnt - rank);
      }
      if (primitive.cols() == 0) continue;
      const Mat embed = [&] {
        Mat e = Mat::Zero(N, primitive.cols());
        e.block(eb.offset(sp), 0, cnt, primitive.cols()) = primitive;
        return e;
      }();
      const double sgn = ((k * (k + 1) / 2) % 2 == 0) ? 1.0 : -1.0;
      const Mat rhs =
          sgn * i_power(p - q) * wedge_matrix(normalized_power(b.omega, n - k)) * embed;
      r_prim = std::max(r_prim, max_entry(b.star * embed - rhs));
    }
  }
  rep.residuals["primitive_star"] = r_prim;

  rep.residuals["d_star_formula"] = max_entry(b.d_star + b.star * b.diff.d * b.star);
  rep.residuals["del_star_formula"] = max_entry(b.del_star + b.star * b.diff.delbar * b.star);
  rep.residuals["delbar_star_formula"] = max_entry(b.delbar_star + b.star * b.diff.del * b.star);
  rep.residuals["adjoint_pairing"] =
      b.volume * max_entry(b.gram * b.diff.d - b.d_star.adjoint() * b.gram);
  return rep;
}

}  // namespace hermicone
