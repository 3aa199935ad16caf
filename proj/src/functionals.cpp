#include "hermicone/functionals.hpp"

#include <cmath>

#include "hermicone/errors.hpp"

namespace hermicone {

const char* functional_name(FunctionalKind kind) {
  switch (kind) {
    case FunctionalKind::F: return "F";
    case FunctionalKind::G: return "G";
    case FunctionalKind::H: return "H";
    case FunctionalKind::FTilde: return "Ftilde";
  }
  return "?";
}

FunctionalKind parse_functional(const std::string& s) {
  if (s == "F") return FunctionalKind::F;
  if (s == "G") return FunctionalKind::G;
  if (s == "H") return FunctionalKind::H;
  if (s == "Ftilde" || s == "F_tilde") return FunctionalKind::FTilde;
  throw Error(ErrorCode::SchemaError, "unknown functional '" + s + "'");
}

double volume_pairing(const Form& omega, const HermitianMetric& nu) {
  const Form nu_n1 = normalized_power(metric_form(nu.H), nu.n() - 1);
  return integrate(wedge(omega, nu_n1)).real();
}

FunctionalValue eval_F(const OperatorBundle& b, double tol) {
  const TorsionReport rep = torsion_rho(b, tol);
  FunctionalValue v;
  v.kind = FunctionalKind::F;
  v.value = rep.norm_squared;
  for (const Bidegree bd : {Bidegree{2, 0}, Bidegree{1, 1}, Bidegree{0, 2}}) {
    const Form part = rep.torsion.part(bd);
    v.ingredients["rho_norm2_" + std::to_string(bd.p) + std::to_string(bd.q)] =
        b.l2(part, part).real();
  }
  v.ingredients["del_omega_norm2"] = b.l2(rep.source, rep.source).real();
  v.ingredients["harmonic_norm2"] = b.l2(rep.harmonic_part, rep.harmonic_part).real();
  v.ingredients["exact_norm2"] = b.l2(rep.projected_part, rep.projected_part).real();
  v.ingredients["equation_residual"] = rep.equation_residual;
  v.ingredients["kernel_residual"] = rep.kernel_residual;
  return v;
}

FunctionalValue eval_G(const OperatorBundle& b, double tol) {
  const TorsionReport rep = torsion_gamma(b, tol);
  FunctionalValue v;
  v.kind = FunctionalKind::G;
  v.value = rep.norm_squared;
  v.ingredients["omega_n1_norm2"] = b.l2(rep.source, rep.source).real();
  v.ingredients["harmonic_norm2"] = b.l2(rep.harmonic_part, rep.harmonic_part).real();
  v.ingredients["exact_norm2"] = b.l2(rep.projected_part, rep.projected_part).real();
  v.ingredients["equation_residual"] = rep.equation_residual;
  v.ingredients["kernel_residual"] = rep.kernel_residual;
  return v;
}

Form trace_of_torsion(const OperatorBundle& b) {
  return b.to_form(b.lambda * (b.diff.del * b.omega.to_global()));
}

FunctionalValue eval_H(const OperatorBundle& b_omega, const OperatorBundle& b_gamma,
                       double tol) {
  if (b_omega.n() != b_gamma.n())
    throw Error(ErrorCode::DimensionMismatch, "omega and gamma bundles differ in dimension");
  const int n = b_omega.n();
  const Form u = trace_of_torsion(b_omega);
  FunctionalValue v;
  v.kind = FunctionalKind::H;
  v.value = b_gamma.l2(u, u).real();
  const Form gamma_n1 = normalized_power(b_gamma.omega, n - 1);
  const cplx wedge_value = cplx(0.0, 1.0) * integrate(wedge(wedge(u, conj(u)), gamma_n1));
  v.ingredients["norm_form"] = v.value;
  v.ingredients["wedge_form"] = wedge_value.real();
  v.ingredients["wedge_form_imag"] = wedge_value.imag();
  v.ingredients["cross_check"] = std::abs(wedge_value - v.value);
  v.ingredients["omega_is_skt"] = ddbar_residual(b_omega.diff, b_omega.omega) <= tol ? 1.0 : 0.0;
  v.ingredients["gamma_is_balanced"] =
      balanced_residual(b_gamma.diff, b_gamma.omega) <= tol ? 1.0 : 0.0;
  return v;
}

FunctionalValue eval_F_tilde(const OperatorBundle& b, const HermitianMetric& nu, double tol) {
  if (nu.n() != b.n()) throw Error(ErrorCode::DimensionMismatch, "nu has the wrong dimension");
  const FunctionalValue f = eval_F(b, tol);
  const double vol = volume_pairing(b.omega, nu);
  FunctionalValue v;
  v.kind = FunctionalKind::FTilde;
  v.value = f.value / std::pow(vol, b.n());
  v.ingredients = f.ingredients;
  v.ingredients["F"] = f.value;
  v.ingredients["normalization_integral"] = vol;
  return v;
}

}  // namespace hermicone
