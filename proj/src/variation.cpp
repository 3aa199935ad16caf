#include "hermicone/variation.hpp"

#include <map>
#include <memory>
#include <thread>

#include "hermicone/random.hpp"

namespace hermicone {

namespace {

double max_entry(const Vec& v) { return v.size() ? v.cwiseAbs().maxCoeff() : 0.0; }

// (-1)^(k+1) on k-forms.
Vec degree_sign_plus_one(const ExteriorBasis& eb) {
  Vec s(eb.size());
  for (int i = 0; i < eb.size(); ++i)
    s(i) = (std::popcount(eb.mask(i)) % 2 == 0) ? -1.0 : 1.0;
  return s;
}

const Mat& adjoint_of(const OperatorBundle& b, AdjointOp op) {
  switch (op) {
    case AdjointOp::DelStar: return b.del_star;
    case AdjointOp::DelbarStar: return b.delbar_star;
    case AdjointOp::DStar: return b.d_star;
  }
  return b.d_star;
}

const Mat& operator_of(const OperatorBundle& b, AdjointOp op) {
  switch (op) {
    case AdjointOp::DelStar: return b.diff.del;
    case AdjointOp::DelbarStar: return b.diff.delbar;
    case AdjointOp::DStar: return b.diff.d;
  }
  return b.diff.d;
}

AdjointOp adjoint_for(Laplacian which) {
  switch (which) {
    case Laplacian::Del: return AdjointOp::DelStar;
    case Laplacian::Delbar: return AdjointOp::DelbarStar;
    case Laplacian::D: return AdjointOp::DStar;
  }
  return AdjointOp::DStar;
}

void require_real_11(const Form& gamma, double tol) {
  for (const auto& [bd, v] : gamma.components())
    if (!(bd == Bidegree{1, 1}) && max_entry(v) > 0.0)
      throw Error(ErrorCode::DirectionNotAdmissible, "direction must be a (1,1)-form");
  if ((conj(gamma) - gamma).max_abs() > tol * std::max(1.0, gamma.max_abs()))
    throw Error(ErrorCode::DirectionNotAdmissible, "direction must be real");
}

Mat embed(const OperatorBundle& b, const OperatorMatrix& op) {
  Mat out = Mat::Zero(b.size(), b.size());
  out.block(b.basis->offset(op.target), b.basis->offset(op.source), op.matrix.rows(),
            op.matrix.cols()) = op.matrix;
  return out;
}

// A = d/dt (harmonic projector)(v) with the sign flipped, i.e. the derivative
// of the complementary projection applied to a fixed v: (P dL G + G dL P) v.
Vec projector_complement_derivative(const OperatorBundle& b, const Form& direction,
                                    Laplacian which, const Space& s, const Vec& v, double tol) {
  const Mat P = embed(b, harmonic_projector(b, which, s, tol));
  const Mat G = embed(b, green(b, which, s, tol));
  const Mat dL = var_laplacian_matrix(b, direction, which);
  return P * (dL * (G * v)) + G * (dL * (P * v));
}

}  // namespace

double default_fd_step(const Eigen::MatrixXcd& H, const Eigen::MatrixXcd& direction) {
  Eigen::JacobiSVD<Eigen::MatrixXcd> svd(direction);
  const double norm = svd.singularValues().size() ? svd.singularValues()(0) : 0.0;
  const double lmin = min_eigenvalue(H);
  return 1e-3 * lmin / std::max(norm, 1e-300);
}

Mat commutator_mult(const OperatorBundle& b, const Form& gamma) {
  const Mat w = wedge_matrix(gamma);
  return b.lambda * w - w * b.lambda;
}

Form var_hodge_star(const OperatorBundle& b, const Form& gamma, const Form& v0, const Form& dv) {
  const Mat k = commutator_mult(b, gamma);
  return b.to_form(b.star * (dv.to_global() + k * v0.to_global()));
}

Form var_trace(const OperatorBundle& b, const Form& gamma, const Form& alpha0,
               const Form& dalpha) {
  const Mat w_adj = b.adjoint(wedge_matrix(gamma));
  return b.to_form(b.lambda * dalpha.to_global() - w_adj * alpha0.to_global());
}

cplx var_trace_11(const OperatorBundle& b, const Form& gamma, const Form& alpha0,
                  const Form& dalpha) {
  const Form a0 = alpha0.part({1, 1});
  const Form da = dalpha.part({1, 1});
  const Vec lam = b.lambda * da.to_global();
  return lam(0) - b.inner(a0.to_global(), gamma.part({1, 1}).to_global());
}

Mat var_adjoint_matrix(const OperatorBundle& b, const Form& gamma, AdjointOp op) {
  const Mat k = commutator_mult(b, gamma);
  const Mat& astar = adjoint_of(b, op);
  const Vec sign = degree_sign_plus_one(*b.basis);
  return astar * k + b.star * k * b.star * astar * sign.asDiagonal();
}

Mat var_laplacian_matrix(const OperatorBundle& b, const Form& gamma, Laplacian which) {
  const AdjointOp op = adjoint_for(which);
  const Mat da = var_adjoint_matrix(b, gamma, op);
  const Mat& a = operator_of(b, op);
  return a * da + da * a;
}

AdjointVariation var_adjoints(const OperatorBundle& b, const Form& gamma, const Form& v0,
                              const Form& dv) {
  const Vec v = v0.to_global();
  const Vec w = dv.to_global();
  AdjointVariation out;
  out.del_star = b.to_form(b.del_star * w + var_adjoint_matrix(b, gamma, AdjointOp::DelStar) * v);
  out.delbar_star =
      b.to_form(b.delbar_star * w + var_adjoint_matrix(b, gamma, AdjointOp::DelbarStar) * v);
  out.d_star = b.to_form(b.d_star * w + var_adjoint_matrix(b, gamma, AdjointOp::DStar) * v);
  return out;
}

LaplacianVariation var_laplacians(const OperatorBundle& b, const Form& gamma, const Form& v0,
                                  const Form& dv) {
  const Vec v = v0.to_global();
  const Vec w = dv.to_global();
  LaplacianVariation out;
  out.del = b.to_form(b.lap_del * w + var_laplacian_matrix(b, gamma, Laplacian::Del) * v);
  out.delbar =
      b.to_form(b.lap_delbar * w + var_laplacian_matrix(b, gamma, Laplacian::Delbar) * v);
  out.d = b.to_form(b.lap_d * w + var_laplacian_matrix(b, gamma, Laplacian::D) * v);
  return out;
}

ProjectorVariation var_harmonic_projector(const OperatorBundle& b, const Form& gamma,
                                          Laplacian which, const Space& s, const Form& v,
                                          double tol) {
  const SpectralDecomposition sd = spectral_decomposition(b, which, s, tol);
  ProjectorVariation out;
  out.kernel_threshold = sd.threshold;
  out.spectral_gap = sd.kernel_dim < sd.eigenvalues.size() ? sd.eigenvalues(sd.kernel_dim)
                                                           : std::numeric_limits<double>::infinity();
  if (sd.ambiguous || out.spectral_gap < 100.0 * sd.threshold)
    throw Error(ErrorCode::KernelJump,
                "spectral gap " + sci(out.spectral_gap) + " near kernel threshold");

  const Mat P = embed(b, harmonic_projector(b, which, s, tol));
  const Mat G = embed(b, green(b, which, s, tol));
  const Mat dL = var_laplacian_matrix(b, gamma, which);
  const Vec vs = embed_vector(*b.basis, restrict_vector(*b.basis, v.to_global(), s), s);

  // Residue formula: F0(A(u00)) with A(u) = -dL u and u00 = green v.
  const Vec u00 = G * vs;
  out.residue_formula = b.to_form(P * (-(dL * u00)));
  out.perturbation_oracle = b.to_form(-(P * (dL * (G * vs)) + G * (dL * (P * vs))));
  const Vec pv = P * vs;
  out.harmonic_norm = b.l2_norm(pv);
  out.harmonic_component = out.harmonic_norm > 1e-10 * std::max(1.0, b.l2_norm(vs));
  return out;
}

Form root_direction(const OperatorBundle& b, const Form& Omega) {
  const int n = b.n();
  const Vec star_omega = b.star * Omega.part({n - 1, n - 1}).to_global();
  const cplx trace = (b.lambda * star_omega)(0);
  return b.to_form((trace / static_cast<double>(n - 1)) * b.omega.to_global() - star_omega);
}

FunctionalDerivative dF(const OperatorBundle& b, const Form& gamma, const DerivativeOptions& opt) {
  require_real_11(gamma, 1e-12);
  const double adm = ddbar_residual(b.diff, gamma);
  if (adm > opt.tol)
    throw Error(ErrorCode::DirectionNotAdmissible,
                "|del delbar gamma| = " + sci(adm));
  const TorsionReport rep = torsion_rho(b, opt.tol);

  FunctionalDerivative out;
  out.name = "dF";
  const std::vector<Space> spaces = {Space::total(1), Space::total(2), Space::total(3)};
  const Mat g = green_on(b, Laplacian::D, spaces);
  const Mat img = b.diff.d * g * b.d_star;
  const Vec eta = g * b.d_star * (img * (b.diff.del * gamma.to_global()));
  const Vec rho = rep.torsion.to_global();
  const Mat k = commutator_mult(b, gamma);
  const Form eta_f = b.to_form(eta);

  double sum = 0.0;
  double imag = 0.0;
  for (const Bidegree bd : {Bidegree{2, 0}, Bidegree{1, 1}, Bidegree{0, 2}}) {
    const std::string tag = std::to_string(bd.p) + std::to_string(bd.q);
    const Vec ep = eta_f.part(bd).to_global();
    const Vec rp = rep.torsion.part(bd).to_global();
    const cplx t1 = b.l2(ep, rp);
    const cplx t2 = b.l2(rp, Vec(ep + k * rp));
    out.terms["eta_rho_" + tag] = t1.real();
    out.terms["rho_eta_plus_K_rho_" + tag] = t2.real();
    sum += t1.real() + t2.real();
    imag += t1.imag() + t2.imag();
  }

  const Vec src = b.diff.del * b.omega.to_global();
  const Vec a = projector_complement_derivative(b, gamma, Laplacian::D, Space::total(3), src,
                                                kDefaultKernelTol);
  out.a_form = b.to_form(a);
  out.a_norm = b.l2_norm(a);
  const Vec x = g * b.d_star * a;
  const double a_term = 2.0 * b.l2_norm(rho) * b.l2_norm(x);
  out.terms["a_term"] = a_term;
  out.a_pairing = 2.0 * b.l2(x, rho).real();
  out.analytic = sum + a_term;
  out.diagnostics["imaginary_residual"] = imag;
  out.diagnostics["first_order_value"] = sum + out.a_pairing;

  if (opt.compute_fd) {
    const Eigen::MatrixXcd H = b.metric.H;
    const Eigen::MatrixXcd dir = metric_matrix(gamma);
    const double h = opt.fd_step > 0 ? opt.fd_step : default_fd_step(H, dir);
    auto f = [&](double t) {
      return eval_F(build_bundle(b.model, make_metric(H + t * dir)), opt.tol).value;
    };
    const auto fd = fd_derivative(f, h);
    out.fd = fd.value;
    out.fd_error = fd.error_estimate;
    out.fd_step = h;
    out.fd_computed = true;
    out.discrepancy = std::abs(out.analytic - out.fd);
  }
  return out;
}

FunctionalDerivative dG(const OperatorBundle& b, const Form& Omega, const DerivativeOptions& opt) {
  const int n = b.n();
  for (const auto& [bd, v] : Omega.components())
    if (!(bd == Bidegree{n - 1, n - 1}) && max_entry(v) > 0.0)
      throw Error(ErrorCode::DirectionNotAdmissible, "direction must be an (n-1,n-1)-form");
  if ((conj(Omega) - Omega).max_abs() > 1e-12 * std::max(1.0, Omega.max_abs()))
    throw Error(ErrorCode::DirectionNotAdmissible, "direction must be real");
  const Vec dbar_omega = b.diff.delbar * Omega.to_global();
  if (max_entry(dbar_omega) > opt.tol)
    throw Error(ErrorCode::DirectionNotAdmissible,
                "|delbar Omega| = " + sci(max_entry(dbar_omega)));
  const TorsionReport rep = torsion_gamma(b, opt.tol);

  FunctionalDerivative out;
  out.name = "dG";
  const std::vector<Space> spaces = {Space::bidegree(n - 1, n - 3), Space::bidegree(n - 1, n - 2),
                                     Space::bidegree(n - 1, n - 1)};
  const Mat g = green_on(b, Laplacian::Delbar, spaces);
  const Mat img = b.diff.delbar * g * b.delbar_star;
  const Vec eta = g * b.delbar_star * (img * Omega.to_global());
  const Vec gam = rep.torsion.to_global();
  const Form rho_dir = root_direction(b, Omega);
  const Mat k = commutator_mult(b, rho_dir);

  const cplx t1 = b.l2(eta, gam);
  const cplx t2 = b.l2(gam, Vec(eta + k * gam));
  out.terms["eta_gamma"] = t1.real();
  out.terms["gamma_eta_plus_K_gamma"] = t2.real();

  const Vec src = rep.source.to_global();
  const Vec a = projector_complement_derivative(b, rho_dir, Laplacian::Delbar,
                                                Space::bidegree(n - 1, n - 1), src,
                                                kDefaultKernelTol);
  out.a_form = b.to_form(a);
  out.a_norm = b.l2_norm(a);
  const Vec x = g * b.delbar_star * a;
  const double a_term = 2.0 * b.l2_norm(gam) * b.l2_norm(x);
  out.terms["a_term"] = a_term;
  out.a_pairing = 2.0 * b.l2(x, gam).real();
  out.analytic = t1.real() + t2.real() + a_term;
  out.diagnostics["imaginary_residual"] = t1.imag() + t2.imag();
  out.diagnostics["first_order_value"] = t1.real() + t2.real() + out.a_pairing;

  if (opt.compute_fd) {
    const Eigen::MatrixXcd B0 = balanced_matrix(rep.source);
    const Eigen::MatrixXcd dB = balanced_matrix(Omega);
    const double h = opt.fd_step > 0 ? opt.fd_step : default_fd_step(B0, dB);
    auto f = [&](double t) {
      const HermitianMetric m = root_n_minus_1(rep.source + t * Omega);
      return eval_G(build_bundle(b.model, m), opt.tol).value;
    };
    const auto fd = fd_derivative(f, h);
    out.fd = fd.value;
    out.fd_error = fd.error_estimate;
    out.fd_step = h;
    out.fd_computed = true;
    out.discrepancy = std::abs(out.analytic - out.fd);

    auto root = [&](double t) -> Eigen::MatrixXcd {
      return root_n_minus_1(rep.source + t * Omega).H;
    };
    const auto droot = fd_derivative(root, h);
    out.diagnostics["root_direction_residual"] =
        (droot.value - metric_matrix(rho_dir)).cwiseAbs().maxCoeff();
  }
  return out;
}

FunctionalDerivative dH(const OperatorBundle& b_omega, const Form& eta,
                        const OperatorBundle& b_gamma, const DerivativeOptions& opt) {
  require_real_11(eta, 1e-12);
  const int n = b_omega.n();
  const cplx i(0.0, 1.0);
  const Vec om = b_omega.omega.to_global();
  const Form lam_dbar = b_omega.to_form(b_omega.lambda * (b_omega.diff.delbar * om));
  const Form gamma_n1 = normalized_power(b_gamma.omega, n - 1);
  const Form tail = wedge(lam_dbar, gamma_n1);

  const Form lam_del_eta =
      b_omega.to_form(b_omega.lambda * (b_omega.diff.del * eta.to_global()));
  const Form adj_term = b_omega.to_form(b_omega.adjoint(wedge_matrix(eta)) *
                                        (b_omega.diff.del * om));
  FunctionalDerivative out;
  out.name = "dH";
  out.terms["trace_del_eta"] = 2.0 * (i * integrate(wedge(lam_del_eta, tail))).real();
  out.terms["adjoint_mult_del_omega"] = -2.0 * (i * integrate(wedge(adj_term, tail))).real();
  out.analytic = out.terms["trace_del_eta"] + out.terms["adjoint_mult_del_omega"];

  if (opt.compute_fd) {
    const Eigen::MatrixXcd H = b_omega.metric.H;
    const Eigen::MatrixXcd dir = metric_matrix(eta);
    const double h = opt.fd_step > 0 ? opt.fd_step : default_fd_step(H, dir);
    auto f = [&](double t) {
      return eval_H(build_bundle(b_omega.model, make_metric(H + t * dir)), b_gamma, opt.tol)
          .value;
    };
    const auto fd = fd_derivative(f, h);
    out.fd = fd.value;
    out.fd_error = fd.error_estimate;
    out.fd_step = h;
    out.fd_computed = true;
    out.discrepancy = std::abs(out.analytic - out.fd);
  }
  return out;
}

FunctionalDerivative dF_tilde(const OperatorBundle& b, const Form& gamma,
                              const HermitianMetric& nu, const DerivativeOptions& opt) {
  DerivativeOptions inner = opt;
  inner.compute_fd = false;
  const FunctionalDerivative d = dF(b, gamma, inner);
  const double F = torsion_rho(b, opt.tol).norm_squared;
  const double vol = volume_pairing(b.omega, nu);
  const double vol_dir = volume_pairing(gamma, nu);
  const int n = b.n();
  const double denom = std::pow(vol, n);

  FunctionalDerivative out = d;
  out.name = "dF_tilde";
  out.terms["dF"] = d.analytic;
  out.terms["volume_term"] = -n * (vol_dir / vol) * F;
  out.analytic = (d.analytic - n * (vol_dir / vol) * F) / denom;
  out.diagnostics["first_order_value"] =
      (d.diagnostics.at("first_order_value") - n * (vol_dir / vol) * F) / denom;
  out.diagnostics["normalization_integral"] = vol;
  out.fd_computed = false;

  if (opt.compute_fd) {
    const Eigen::MatrixXcd H = b.metric.H;
    const Eigen::MatrixXcd dir = metric_matrix(gamma);
    const double h = opt.fd_step > 0 ? opt.fd_step : default_fd_step(H, dir);
    auto f = [&](double t) {
      return eval_F_tilde(build_bundle(b.model, make_metric(H + t * dir)), nu, opt.tol).value;
    };
    const auto fd = fd_derivative(f, h);
    out.fd = fd.value;
    out.fd_error = fd.error_estimate;
    out.fd_step = h;
    out.fd_computed = true;
    out.discrepancy = std::abs(out.analytic - out.fd);
  }
  return out;
}

VariationCheck make_check(const std::string& name, double analytic, double fd, double step,
                          double threshold, double abs_floor) {
  VariationCheck c;
  c.name = name;
  c.analytic = analytic;
  c.fd = fd;
  c.step = step;
  c.threshold = threshold;
  c.abs_err = std::abs(analytic - fd);
  const double scale = std::max(std::abs(analytic), std::abs(fd));
  c.rel_err = scale > 0 ? c.abs_err / scale : 0.0;
  c.passed = c.abs_err <= abs_floor || c.rel_err <= threshold;
  return c;
}

VariationCheck make_check(const std::string& name, const Vec& analytic, const Vec& fd,
                          double step, double threshold, double abs_floor) {
  VariationCheck c;
  c.name = name;
  c.analytic = max_entry(analytic);
  c.fd = max_entry(fd);
  c.step = step;
  c.threshold = threshold;
  c.abs_err = max_entry(Vec(analytic - fd));
  const double scale = std::max(c.analytic, c.fd);
  c.rel_err = scale > 0 ? c.abs_err / scale : 0.0;
  c.passed = c.abs_err <= abs_floor || c.rel_err <= threshold;
  return c;
}

namespace {

// Bundles along omega + t*gamma, memoized per t.
class BundleFamily {
 public:
  BundleFamily(const ComplexLieModel& m, Eigen::MatrixXcd H, Eigen::MatrixXcd dir)
      : model_(m), H_(std::move(H)), dir_(std::move(dir)) {}

  const OperatorBundle& at(double t) {
    auto it = cache_.find(t);
    if (it != cache_.end()) return *it->second;
    auto b = std::make_unique<OperatorBundle>(build_bundle(model_, make_metric(H_ + t * dir_)));
    return *cache_.emplace(t, std::move(b)).first->second;
  }

 private:
  ComplexLieModel model_;
  Eigen::MatrixXcd H_;
  Eigen::MatrixXcd dir_;
  std::map<double, std::unique_ptr<OperatorBundle>> cache_;
};

std::vector<VariationCheck> battery_tuple(const ComplexLieModel& m, std::uint64_t seed, int t,
                                          const BatteryOptions& opt) {
  std::vector<VariationCheck> out;
  Rng rng(seed * 1000003ULL + static_cast<std::uint64_t>(t));
  const int n = m.n;
  const Eigen::MatrixXcd H = random_metric_matrix(n, rng);
  const Eigen::MatrixXcd dir = random_hermitian(n, rng);
  const Form gamma = metric_form(dir);
  std::uniform_int_distribution<int> deg(0, n);
  const Bidegree bd{deg(rng), deg(rng)};
  const Form v0 = random_form(n, bd, rng);
  const Form dv = random_form(n, bd, rng);
  const Form a0 = random_form(n, {1, 1}, rng);
  const Form da = random_form(n, {1, 1}, rng);
  const Vec v0g = v0.to_global();
  const Vec dvg = dv.to_global();

  BundleFamily fam(m, H, dir);
  const OperatorBundle& b = fam.at(0.0);
  const double h = default_fd_step(H, dir);
  const std::string tag = "[" + std::to_string(t) + "] ";

  auto fd_vec = [&](auto&& op) {
    auto f = [&](double s) -> Vec { return op(fam.at(s), Vec(v0g + s * dvg)); };
    return fd_derivative(f, h).value;
  };

  auto add = [&](VariationCheck c) {
    c.name = tag + c.name;
    out.push_back(std::move(c));
  };

  add(make_check("hodge_star", var_hodge_star(b, gamma, v0, dv).to_global(),
                 fd_vec([](const OperatorBundle& bt, const Vec& v) { return Vec(bt.star * v); }),
                 h, opt.threshold));
  add(make_check("trace", var_trace(b, gamma, v0, dv).to_global(),
                 fd_vec([](const OperatorBundle& bt, const Vec& v) { return Vec(bt.lambda * v); }),
                 h, opt.threshold));
  {
    auto f = [&](double s) -> cplx {
      const OperatorBundle& bt = fam.at(s);
      return (bt.lambda * (a0.to_global() + s * da.to_global()))(0);
    };
    const cplx an = var_trace_11(b, gamma, a0, da);
    const cplx fd = fd_derivative(f, h).value;
    Vec va(2), vf(2);
    va << an, 0.0;
    vf << fd, 0.0;
    add(make_check("trace_11", va, vf, h, opt.threshold));
    const cplx general = var_trace(b, gamma, a0, da).to_global()(0);
    Vec vg(2);
    vg << general, 0.0;
    add(make_check("trace_11_vs_general", va, vg, 0.0, opt.threshold));
  }

  const AdjointVariation av = var_adjoints(b, gamma, v0, dv);
  add(make_check("del_star", av.del_star.to_global(),
                 fd_vec([](const OperatorBundle& bt, const Vec& v) { return Vec(bt.del_star * v); }),
                 h, opt.threshold));
  add(make_check(
      "delbar_star", av.delbar_star.to_global(),
      fd_vec([](const OperatorBundle& bt, const Vec& v) { return Vec(bt.delbar_star * v); }), h,
      opt.threshold));
  add(make_check("d_star", av.d_star.to_global(),
                 fd_vec([](const OperatorBundle& bt, const Vec& v) { return Vec(bt.d_star * v); }),
                 h, opt.threshold));
  {
    const AdjointVariation ac = var_adjoints(b, gamma, conj(v0), conj(dv));
    add(make_check("delbar_star_conjugation", av.delbar_star.to_global(),
                   conj(ac.del_star).to_global(), 0.0, opt.threshold));
  }

  const LaplacianVariation lv = var_laplacians(b, gamma, v0, dv);
  add(make_check("lap_del", lv.del.to_global(),
                 fd_vec([](const OperatorBundle& bt, const Vec& v) { return Vec(bt.lap_del * v); }),
                 h, opt.threshold));
  add(make_check(
      "lap_delbar", lv.delbar.to_global(),
      fd_vec([](const OperatorBundle& bt, const Vec& v) { return Vec(bt.lap_delbar * v); }), h,
      opt.threshold));
  add(make_check("lap_d", lv.d.to_global(),
                 fd_vec([](const OperatorBundle& bt, const Vec& v) { return Vec(bt.lap_d * v); }),
                 h, opt.threshold));

  for (const Laplacian which : {Laplacian::Del, Laplacian::Delbar, Laplacian::D}) {
    const Space s = which == Laplacian::D ? Space::total(bd.p + bd.q) : Space::bidegree(bd.p, bd.q);
    const std::string nm = std::string("harmonic_projector_") + laplacian_name(which);
    try {
      const Mat P0 = harmonic_projector(b, which, s, kDefaultKernelTol).matrix;
      const Vec vblock = restrict_vector(*b.basis, dvg, s);
      // Remove the harmonic component so the residue formula is in scope.
      const Vec vclean = vblock - P0 * vblock;
      const Form vf = b.to_form(embed_vector(*b.basis, vclean, s));
      const ProjectorVariation pv = var_harmonic_projector(b, gamma, which, s, vf);
      add(make_check(nm + "_residue_vs_oracle", pv.residue_formula.to_global(),
                     pv.perturbation_oracle.to_global(), 0.0, opt.projector_threshold));

      const Form vraw = b.to_form(embed_vector(*b.basis, vblock, s));
      const ProjectorVariation pr = var_harmonic_projector(b, gamma, which, s, vraw);
      auto f = [&](double x) -> Vec {
        const Mat Pt = harmonic_projector(fam.at(x), which, s, kDefaultKernelTol).matrix;
        return Pt * vblock;
      };
      const Vec fd = embed_vector(*b.basis, fd_derivative(f, h).value, s);
      add(make_check(nm + "_oracle_vs_fd", pr.perturbation_oracle.to_global(), fd, h,
                     opt.projector_threshold));
      VariationCheck raw = make_check(nm + "_residue_raw_v", pr.residue_formula.to_global(),
                                      pr.perturbation_oracle.to_global(), 0.0,
                                      opt.projector_threshold);
      if (pr.harmonic_component) {
        raw.in_scope = false;
        raw.note = "v has a harmonic component; residue formula omits it";
      }
      add(raw);
    } catch (const Error& e) {
      if (e.code() != ErrorCode::KernelJump && e.code() != ErrorCode::ToleranceAmbiguity) throw;
      VariationCheck c;
      c.name = nm;
      c.in_scope = false;
      c.note = e.what();
      add(c);
    }
  }
  return out;
}

}  // namespace

std::vector<VariationCheck> variation_battery(const ComplexLieModel& m, std::uint64_t seed,
                                              const BatteryOptions& opt) {
  std::vector<std::vector<VariationCheck>> per(opt.tuples);
  const int threads = std::max(1, std::min(opt.threads, opt.tuples));
  auto work = [&](int start) {
    for (int t = start; t < opt.tuples; t += threads) per[t] = battery_tuple(m, seed, t, opt);
  };
  if (threads == 1) {
    work(0);
  } else {
    std::vector<std::thread> pool;
    std::vector<std::exception_ptr> errors(threads);
    for (int i = 0; i < threads; ++i) {
      pool.emplace_back([&, i] {
        try {
          work(i);
        } catch (...) {
          errors[i] = std::current_exception();
        }
      });
    }
    for (auto& th : pool) th.join();
    for (auto& e : errors)
      if (e) std::rethrow_exception(e);
  }
  std::vector<VariationCheck> out;
  for (auto& v : per) out.insert(out.end(), v.begin(), v.end());
  return out;
}

std::vector<VariationCheck> functional_checks(const OperatorBundle& b, const HermitianMetric& nu,
                                              const DerivativeOptions& opt) {
  std::vector<VariationCheck> out;
  const int n = b.n();
  const Predicates pr = predicates(b, opt.tol);
  auto skipped = [&](const std::string& name, const std::string& why) {
    VariationCheck c;
    c.name = name;
    c.in_scope = false;
    c.note = why;
    out.push_back(c);
  };

  if (pr.is_skt) {
    const double F = eval_F(b, opt.tol).value;
    const FunctionalDerivative d = dF(b, b.omega, opt);
    out.push_back(make_check("dF_scaling", d.analytic, n * F, 0.0, 1e-8));
    out.push_back(make_check("dF_fd", d.analytic, d.fd, d.fd_step, 1e-5));
    const FunctionalDerivative t = dF_tilde(b, b.omega, nu, opt);
    out.push_back(make_check("dF_tilde_ray", t.analytic, 0.0, 0.0, 0.0));
    out.push_back(make_check("dF_tilde_fd", t.analytic, t.fd, t.fd_step, 1e-5));
  } else {
    for (const char* name : {"dF_scaling", "dF_fd", "dF_tilde_ray", "dF_tilde_fd"})
      skipped(name, "metric is not SKT");
  }

  if (pr.is_balanced) {
    const double G = eval_G(b, opt.tol).value;
    const FunctionalDerivative d = dG(b, normalized_power(b.omega, n - 1), opt);
    out.push_back(make_check("dG_scaling", d.analytic, (n + 1.0) / (n - 1.0) * G, 0.0, 1e-8));
    out.push_back(make_check("dG_fd", d.analytic, d.fd, d.fd_step, 1e-5));
    VariationCheck root = make_check("dG_root_direction", d.diagnostics.at("root_direction_residual"),
                                     0.0, d.fd_step, 0.0, 1e-6);
    out.push_back(root);
  } else {
    for (const char* name : {"dG_scaling", "dG_fd", "dG_root_direction"})
      skipped(name, "metric is not balanced");
  }

  const FunctionalDerivative h = dH(b, b.omega, b, opt);
  out.push_back(make_check("dH_ray", h.analytic, 0.0, 0.0, 0.0));
  out.push_back(make_check("dH_fd", h.analytic, h.fd, h.fd_step, 1e-5));
  return out;
}

}  // namespace hermicone
