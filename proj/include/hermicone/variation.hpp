#pragma once

#include <cmath>
#include <functional>
#include <string>
#include <vector>

#include "hermicone/errors.hpp"
#include "hermicone/functionals.hpp"

namespace hermicone {

// ---------------------------------------------------------------------------
// Finite differences

inline double fd_magnitude(double x) { return std::abs(x); }
inline double fd_magnitude(cplx x) { return std::abs(x); }
template <class Derived>
double fd_magnitude(const Eigen::MatrixBase<Derived>& x) {
  return x.size() ? x.cwiseAbs().maxCoeff() : 0.0;
}

template <class T>
struct FdValue {
  T value;
  double error_estimate = 0.0;
  double h = 0.0;
};

/// Central differences at h and h/2, combined by Richardson extrapolation.
/// A positivity failure of the evaluated map (NotPositiveDefinite, NotPositive)
/// is reported as StepTooLarge.
template <class Fn>
auto fd_derivative(Fn&& f, double h) -> FdValue<std::decay_t<decltype(f(0.0))>> {
  using T = std::decay_t<decltype(f(0.0))>;
  auto eval = [&](double t) -> T {
    try {
      return f(t);
    } catch (const Error& e) {
      if (e.code() == ErrorCode::NotPositiveDefinite || e.code() == ErrorCode::NotPositive)
        throw Error(ErrorCode::StepTooLarge, "positivity lost at t = " + std::to_string(t));
      throw;
    }
  };
  const T fp = eval(h);
  const T fm = eval(-h);
  const T fp2 = eval(h / 2);
  const T fm2 = eval(-h / 2);
  const T d1 = (fp - fm) / (2.0 * h);
  const T d2 = (fp2 - fm2) / h;
  FdValue<T> out{T((4.0 * d2 - d1) / 3.0), 0.0, h};
  out.error_estimate = fd_magnitude(T(d2 - d1)) / 3.0;
  return out;
}

/// 1e-3 * lambda_min(H) / |direction|_2, so that H + t*direction stays positive
/// for |t| <= h.
double default_fd_step(const Eigen::MatrixXcd& H, const Eigen::MatrixXcd& direction);

// ---------------------------------------------------------------------------
// Operator variations along omega + t*gamma (gamma a real (1,1)-form)

/// [Lambda, gamma ^ .] on the full algebra.
Mat commutator_mult(const OperatorBundle& b, const Form& gamma);

/// d/dt star_{omega+t gamma} v_t = star(dv + [Lambda, gamma^.] v0).
Form var_hodge_star(const OperatorBundle& b, const Form& gamma, const Form& v0, const Form& dv);

/// d/dt Lambda_{omega+t gamma} alpha_t = Lambda(d alpha) - (gamma ^ .)^* alpha0.
Form var_trace(const OperatorBundle& b, const Form& gamma, const Form& alpha0, const Form& dalpha);
/// (1,1) case: Lambda(d alpha) - <alpha0, gamma>.
cplx var_trace_11(const OperatorBundle& b, const Form& gamma, const Form& alpha0,
                  const Form& dalpha);

enum class AdjointOp { DelStar, DelbarStar, DStar };

/// Matrix of u -> d/dt|_0 (A*_t u) for fixed u, A in {del, delbar, d}.
Mat var_adjoint_matrix(const OperatorBundle& b, const Form& gamma, AdjointOp op);
/// Matrix of u -> d/dt|_0 (Laplacian_t u) for fixed u.
Mat var_laplacian_matrix(const OperatorBundle& b, const Form& gamma, Laplacian which);

struct AdjointVariation {
  Form del_star;
  Form delbar_star;
  Form d_star;
};
AdjointVariation var_adjoints(const OperatorBundle& b, const Form& gamma, const Form& v0,
                              const Form& dv);

struct LaplacianVariation {
  Form del;
  Form delbar;
  Form d;
};
LaplacianVariation var_laplacians(const OperatorBundle& b, const Form& gamma, const Form& v0,
                                  const Form& dv);

struct ProjectorVariation {
  Form residue_formula;        // F0(A(u00)), u00 = green * v
  Form perturbation_oracle;    // -(P dL G + G dL P) v
  double harmonic_norm = 0.0;  // L2 norm of P v
  bool harmonic_component = false;  // residue formula omits the P v contribution
  double spectral_gap = 0.0;
  double kernel_threshold = 0.0;
};

/// Derivative of the harmonic projector of `which` on space s, applied to a
/// fixed v. Throws KernelJump when the spectral gap is too small.
ProjectorVariation var_harmonic_projector(const OperatorBundle& b, const Form& gamma,
                                          Laplacian which, const Space& s, const Form& v,
                                          double tol = kDefaultKernelTol);

// ---------------------------------------------------------------------------
// Functional variations

struct FunctionalDerivative {
  std::string name;
  double analytic = 0.0;  // value of the closed-form expression
  std::map<std::string, double> terms;
  Form a_form;             // derivative of the projected source
  double a_norm = 0.0;     // L2 norm of a_form
  double a_pairing = 0.0;  // 2 Re <<torsion, green d* A>>, the first-order A contribution
  double fd = 0.0;
  double fd_error = 0.0;
  double fd_step = 0.0;
  bool fd_computed = false;
  double discrepancy = 0.0;  // |analytic - fd|
  std::map<std::string, double> diagnostics;
};

struct DerivativeOptions {
  bool compute_fd = true;
  double tol = 1e-9;
  double fd_step = 0.0;  // 0: default_fd_step
};

/// Throws DirectionNotAdmissible, NotSKT.
FunctionalDerivative dF(const OperatorBundle& b, const Form& gamma,
                        const DerivativeOptions& opt = {});
/// Omega is a real (n-1,n-1)-form direction. Throws DirectionNotAdmissible, NotBalanced.
FunctionalDerivative dG(const OperatorBundle& b, const Form& Omega,
                        const DerivativeOptions& opt = {});
/// Variation of H in its first argument along eta.
FunctionalDerivative dH(const OperatorBundle& b_omega, const Form& eta,
                        const OperatorBundle& b_gamma, const DerivativeOptions& opt = {});
FunctionalDerivative dF_tilde(const OperatorBundle& b, const Form& gamma,
                              const HermitianMetric& nu, const DerivativeOptions& opt = {});

/// Closed-form derivative of the (n-1)-st root along Omega, as a real (1,1)-form:
/// (1/(n-1)) Lambda(star Omega) omega - star Omega.
Form root_direction(const OperatorBundle& b, const Form& Omega);

// ---------------------------------------------------------------------------
// Check batteries

struct VariationCheck {
  std::string name;
  double analytic = 0.0;  // scalar value, or max-abs entry for form-valued checks
  double fd = 0.0;
  double abs_err = 0.0;
  double rel_err = 0.0;
  double step = 0.0;
  double threshold = 1e-5;
  bool in_scope = true;
  bool passed = true;
  std::string note;
};

/// Relative error with an absolute floor: |a - f| / max(|a|, |f|), and a check
/// passes when abs_err <= abs_floor or rel_err <= threshold.
VariationCheck make_check(const std::string& name, double analytic, double fd, double step,
                          double threshold, double abs_floor = 1e-10);
VariationCheck make_check(const std::string& name, const Vec& analytic, const Vec& fd,
                          double step, double threshold, double abs_floor = 1e-10);

struct BatteryOptions {
  int tuples = 20;
  double threshold = 1e-5;
  double projector_threshold = 1e-6;
  int threads = 1;
};

/// Seeded random (metric, direction, form) tuples checking every operator
/// variation formula against finite differences.
std::vector<VariationCheck> variation_battery(const ComplexLieModel& m, std::uint64_t seed,
                                              const BatteryOptions& opt = {});

/// Scaling-direction and ray-invariance checks of dF, dG, dH and dF_tilde at
/// one metric, each also compared with finite differences. Functionals the
/// metric does not admit (not SKT, not balanced) are reported out of scope.
std::vector<VariationCheck> functional_checks(const OperatorBundle& b, const HermitianMetric& nu,
                                              const DerivativeOptions& opt = {});

}  // namespace hermicone
