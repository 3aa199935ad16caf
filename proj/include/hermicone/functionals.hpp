#pragma once

#include <map>
#include <string>

#include "hermicone/hodge_decomp.hpp"

namespace hermicone {

enum class FunctionalKind { F, G, H, FTilde };

const char* functional_name(FunctionalKind kind);
/// Accepts "F", "G", "H", "Ftilde". Throws SchemaError.
FunctionalKind parse_functional(const std::string& s);

struct FunctionalValue {
  FunctionalKind kind = FunctionalKind::F;
  double value = 0.0;
  std::map<std::string, double> ingredients;
};

/// Integral of omega ^ nu_{n-1} against Theta; positive for positive forms.
double volume_pairing(const Form& omega, const HermitianMetric& nu);

/// F = L2 norm squared of rho. Throws NotSKT.
FunctionalValue eval_F(const OperatorBundle& b, double tol = 1e-9);
/// G = L2 norm squared of Gamma. Throws NotBalanced.
FunctionalValue eval_G(const OperatorBundle& b, double tol = 1e-9);
/// H = |Lambda_omega(del omega)|^2 in the gamma-L2 product, cross-checked
/// against i * int Lambda(del omega) ^ Lambda(delbar omega) ^ gamma_{n-1}.
FunctionalValue eval_H(const OperatorBundle& b_omega, const OperatorBundle& b_gamma,
                       double tol = 1e-9);
/// F / (int omega ^ nu_{n-1})^n. Throws NotSKT.
FunctionalValue eval_F_tilde(const OperatorBundle& b, const HermitianMetric& nu,
                             double tol = 1e-9);

/// Lambda_omega(del omega) as a (1,0)-form.
Form trace_of_torsion(const OperatorBundle& b);

}  // namespace hermicone
