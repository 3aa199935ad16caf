#include "hermicone/hodge_decomp.hpp"

#include <cmath>

#include "hermicone/errors.hpp"

namespace hermicone {

namespace {

std::vector<Space> all_spaces(int n, Laplacian which) {
  std::vector<Space> out;
  if (which == Laplacian::D) {
    for (int k = 0; k <= 2 * n; ++k) out.push_back(Space::total(k));
  } else {
    for (int p = 0; p <= n; ++p)
      for (int q = 0; q <= n; ++q) out.push_back(Space::bidegree(p, q));
  }
  return out;
}

bool valid_space(int n, const Space& s) {
  if (s.kind == Space::Kind::Total) return s.k >= 0 && s.k <= 2 * n;
  return s.p >= 0 && s.q >= 0 && s.p <= n && s.q <= n;
}

enum class Piece { Harmonic, Green };

Mat block_operator(const OperatorBundle& b, Laplacian which, const Space& s, double tol,
                   Piece piece) {
  const SpectralDecomposition sd = spectral_decomposition(b, which, s, tol);
  if (sd.ambiguous)
    throw Error(ErrorCode::ToleranceAmbiguity,
                std::string("spectrum of the ") + laplacian_name(which) +
                    "-Laplacian crowds the kernel threshold " + sci(sd.threshold));
  const Mat gb = b.block(b.gram, s, s).matrix;
  const int m = static_cast<int>(sd.eigenvalues.size());
  Mat out = Mat::Zero(m, m);
  if (piece == Piece::Harmonic) {
    const Mat xk = sd.eigenvectors.leftCols(sd.kernel_dim);
    out = xk * xk.adjoint() * gb;
  } else {
    const int r = m - sd.kernel_dim;
    const Mat xr = sd.eigenvectors.rightCols(r);
    const Eigen::VectorXd inv = sd.eigenvalues.tail(r).cwiseInverse();
    out = xr * inv.cast<cplx>().asDiagonal() * xr.adjoint() * gb;
  }
  return out;
}

// Block-diagonal assembly restricted to the listed spaces (others left zero).
Mat assemble(const OperatorBundle& b, Laplacian which, const std::vector<Space>& spaces,
             double tol, Piece piece) {
  const int N = b.size();
  Mat out = Mat::Zero(N, N);
  for (const Space& s : spaces) {
    if (!valid_space(b.n(), s)) continue;
    const int off = b.basis->offset(s);
    const int cnt = b.basis->count(s);
    out.block(off, off, cnt, cnt) = block_operator(b, which, s, tol, piece);
  }
  return out;
}

double residual_scale(double x) { return std::max(1.0, x); }

}  // namespace

SpectralDecomposition spectral_decomposition(const OperatorBundle& b, Laplacian which,
                                             const Space& s, double tol) {
  const EigenBlock& eb = b.eigen_block(which, s);
  SpectralDecomposition sd;
  sd.which = which;
  sd.space = s;
  sd.eigenvalues = eb.values;
  sd.eigenvectors = eb.vectors;
  sd.kernel_tol = tol;
  const double lmax = eb.values.size() ? eb.values.maxCoeff() : 0.0;
  sd.threshold = tol * std::max(1.0, lmax);
  for (int i = 0; i < eb.values.size(); ++i) {
    const double v = eb.values(i);
    if (v < sd.threshold) ++sd.kernel_dim;
    if (v >= sd.threshold / 10.0 && v <= 10.0 * sd.threshold) sd.ambiguous = true;
  }
  return sd;
}

OperatorMatrix harmonic_projector(const OperatorBundle& b, Laplacian which, const Space& s,
                                  double tol) {
  return {s, s, block_operator(b, which, s, tol, Piece::Harmonic)};
}

OperatorMatrix green(const OperatorBundle& b, Laplacian which, const Space& s, double tol) {
  return {s, s, block_operator(b, which, s, tol, Piece::Green)};
}

Mat global_harmonic_projector(const OperatorBundle& b, Laplacian which, double tol) {
  return assemble(b, which, all_spaces(b.n(), which), tol, Piece::Harmonic);
}

Mat global_green(const OperatorBundle& b, Laplacian which, double tol) {
  return assemble(b, which, all_spaces(b.n(), which), tol, Piece::Green);
}

Mat harmonic_on(const OperatorBundle& b, Laplacian which, const std::vector<Space>& spaces,
                double tol) {
  return assemble(b, which, spaces, tol, Piece::Harmonic);
}

Mat green_on(const OperatorBundle& b, Laplacian which, const std::vector<Space>& spaces,
             double tol) {
  return assemble(b, which, spaces, tol, Piece::Green);
}

OperatorMatrix image_projector_d(const OperatorBundle& b, int k, double tol) {
  const Mat g = assemble(b, Laplacian::D, {Space::total(k - 1)}, tol, Piece::Green);
  return b.block(b.diff.d * g * b.d_star, Space::total(k), Space::total(k));
}

OperatorMatrix image_projector_d_star(const OperatorBundle& b, int k, double tol) {
  const Mat g = assemble(b, Laplacian::D, {Space::total(k + 1)}, tol, Piece::Green);
  return b.block(b.d_star * g * b.diff.d, Space::total(k), Space::total(k));
}

OperatorMatrix image_projector_dbar(const OperatorBundle& b, int p, int q, double tol) {
  const Mat g = assemble(b, Laplacian::Delbar, {Space::bidegree(p, q - 1)}, tol, Piece::Green);
  return b.block(b.diff.delbar * g * b.delbar_star, Space::bidegree(p, q), Space::bidegree(p, q));
}

OperatorMatrix image_projector_dbar_star(const OperatorBundle& b, int p, int q, double tol) {
  const Mat g = assemble(b, Laplacian::Delbar, {Space::bidegree(p, q + 1)}, tol, Piece::Green);
  return b.block(b.delbar_star * g * b.diff.delbar, Space::bidegree(p, q),
                 Space::bidegree(p, q));
}

ThreeSpaceReport three_space_check(const OperatorBundle& b, int k, double tol) {
  const Space s = Space::total(k);
  const Mat h = harmonic_projector(b, Laplacian::D, s, tol).matrix;
  const Mat pi = image_projector_d(b, k, tol).matrix;
  const Mat pc = image_projector_d_star(b, k, tol).matrix;
  const Mat g = b.block(b.gram, s, s).matrix;
  ThreeSpaceReport rep;
  if (h.size() == 0) return rep;
  rep.sum_residual = (h + pi + pc - Mat::Identity(h.rows(), h.cols())).cwiseAbs().maxCoeff();
  const Mat* ps[3] = {&h, &pi, &pc};
  for (int i = 0; i < 3; ++i) {
    rep.idempotence_residual =
        std::max(rep.idempotence_residual, (*ps[i] * *ps[i] - *ps[i]).cwiseAbs().maxCoeff());
    for (int j = 0; j < 3; ++j) {
      if (i == j) continue;
      rep.orthogonality_residual =
          std::max(rep.orthogonality_residual,
                   (ps[i]->adjoint() * g * *ps[j]).cwiseAbs().maxCoeff());
    }
  }
  return rep;
}

TorsionReport torsion_rho(const OperatorBundle& b, double tol, double kernel_tol) {
  const double skt = ddbar_residual(b.diff, b.omega);
  if (skt > tol)
    throw Error(ErrorCode::NotSKT, "|del delbar omega| = " + sci(skt));
  const std::vector<Space> spaces = {Space::total(1), Space::total(2), Space::total(3)};
  const Mat green2 = assemble(b, Laplacian::D, spaces, kernel_tol, Piece::Green);
  const Mat harm = assemble(b, Laplacian::D, spaces, kernel_tol, Piece::Harmonic);
  const Mat img = b.diff.d * green2 * b.d_star;

  const Vec src = b.diff.del * b.omega.to_global();
  const Vec projected = img * src;
  const Vec rho = green2 * b.d_star * projected;

  TorsionReport rep;
  rep.kind = TorsionReport::Kind::Rho;
  rep.metric = b.metric;
  rep.tol = tol;
  rep.source = b.to_form(src);
  rep.torsion = b.to_form(rho);
  rep.harmonic_part = b.to_form(harm * src);
  rep.projected_part = b.to_form(projected);
  rep.equation_residual = b.l2_norm(Vec(b.diff.d * rho - projected));
  rep.kernel_residual = b.l2_norm(Vec((harm + img) * rho));
  rep.norm_squared = b.l2(rho, rho).real();
  const double scale = residual_scale(b.l2_norm(src));
  if (rep.equation_residual > tol * scale || rep.kernel_residual > tol * scale)
    throw Error(ErrorCode::ToleranceFailure,
                "torsion residuals " + sci(rep.equation_residual) + ", " +
                    sci(rep.kernel_residual));
  return rep;
}

TorsionReport torsion_gamma(const OperatorBundle& b, double tol, double kernel_tol) {
  const int n = b.n();
  const Form omega_n1 = normalized_power(b.omega, n - 1);
  const double bal = balanced_residual(b.diff, b.omega);
  if (bal > tol)
    throw Error(ErrorCode::NotBalanced, "|d omega_{n-1}| = " + sci(bal));
  const std::vector<Space> spaces = {Space::bidegree(n - 1, n - 3), Space::bidegree(n - 1, n - 2),
                                     Space::bidegree(n - 1, n - 1)};
  const Mat green2 = assemble(b, Laplacian::Delbar, spaces, kernel_tol, Piece::Green);
  const Mat harm = assemble(b, Laplacian::Delbar, spaces, kernel_tol, Piece::Harmonic);
  const Mat img = b.diff.delbar * green2 * b.delbar_star;

  const Vec src = omega_n1.to_global();
  const Vec projected = img * src;
  const Vec gamma = green2 * b.delbar_star * projected;

  TorsionReport rep;
  rep.kind = TorsionReport::Kind::Gamma;
  rep.metric = b.metric;
  rep.tol = tol;
  rep.source = omega_n1;
  rep.torsion = b.to_form(gamma);
  rep.harmonic_part = b.to_form(harm * src);
  rep.projected_part = b.to_form(projected);
  rep.equation_residual = b.l2_norm(Vec(b.diff.delbar * gamma - projected));
  rep.kernel_residual = b.l2_norm(Vec((harm + img) * gamma));
  rep.norm_squared = b.l2(gamma, gamma).real();
  const double scale = residual_scale(b.l2_norm(src));
  if (rep.equation_residual > tol * scale || rep.kernel_residual > tol * scale)
    throw Error(ErrorCode::ToleranceFailure,
                "torsion residuals " + sci(rep.equation_residual) + ", " +
                    sci(rep.kernel_residual));
  return rep;
}

Eigen::MatrixXcd balanced_matrix(const Form& Omega) {
  const int n = Omega.n();
  const Form top = Omega.part({n - 1, n - 1});
  Eigen::MatrixXcd B(n, n);
  for (int j = 1; j <= n; ++j) {
    for (int k = 1; k <= n; ++k) {
      const Form f = Form::monomial(n, {j}, {k}, cplx(0.0, 1.0));
      B(k - 1, j - 1) = integrate(wedge(top, f));
    }
  }
  return B;
}

Form balanced_form(int n, const Eigen::MatrixXcd& B) {
  const auto eb = ExteriorBasis::get(n);
  const cplx theta_c = theta_coefficient(n);
  Form out(n);
  for (int j = 1; j <= n; ++j) {
    for (int k = 1; k <= n; ++k) {
      const Mask f = eb->holo_bit(j) | eb->anti_bit(k);
      const Mask m = eb->top_mask() & ~f;
      const cplx pairing = cplx(0.0, 1.0) * static_cast<double>(wedge_sign(m, f)) / theta_c;
      out.add_to({n - 1, n - 1}, m, B(k - 1, j - 1) / pairing);
    }
  }
  return out;
}

HermitianMetric root_n_minus_1(const Form& Omega) {
  const int n = Omega.n();
  if (n < 2) throw Error(ErrorCode::DegenerateDimension, "root needs n >= 2");
  const Eigen::MatrixXcd B = balanced_matrix(Omega);
  const double scale = std::max(1.0, B.cwiseAbs().maxCoeff());
  if ((B - B.adjoint()).cwiseAbs().maxCoeff() > 1e-10 * scale)
    throw Error(ErrorCode::NotPositive, "(n-1,n-1)-form is not real");
  const Eigen::MatrixXcd Bs = 0.5 * (B + B.adjoint());
  const double lmin = min_eigenvalue(Bs);
  if (!(lmin > 0.0))
    throw Error(ErrorCode::NotPositive, "matrix has eigenvalue " + sci(lmin));
  const double det = Bs.determinant().real();
  const double factor = std::pow(det, 1.0 / (n - 1));
  Eigen::MatrixXcd H = factor * Bs.inverse();
  return {0.5 * (H + H.adjoint())};
}

double ddbar_residual(const DifferentialMatrices& diff, const Form& omega) {
  const Vec v = diff.del * (diff.delbar * omega.to_global());
  return v.size() ? v.cwiseAbs().maxCoeff() : 0.0;
}

double balanced_residual(const DifferentialMatrices& diff, const Form& omega) {
  const Vec v = diff.d * normalized_power(omega, omega.n() - 1).to_global();
  return v.size() ? v.cwiseAbs().maxCoeff() : 0.0;
}

double kahler_residual(const DifferentialMatrices& diff, const Form& omega) {
  const Vec v = diff.d * omega.to_global();
  return v.size() ? v.cwiseAbs().maxCoeff() : 0.0;
}

Predicates predicates(const OperatorBundle& b, double tol) {
  Predicates p;
  p.ddbar_residual = ddbar_residual(b.diff, b.omega);
  p.balanced_residual = balanced_residual(b.diff, b.omega);
  p.kahler_residual = kahler_residual(b.diff, b.omega);
  p.is_skt = p.ddbar_residual <= tol;
  p.is_balanced = p.balanced_residual <= tol;
  p.is_kahler = p.kahler_residual <= tol;
  return p;
}

}  // namespace hermicone
