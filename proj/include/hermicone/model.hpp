#pragma once

#include <complex>
#include <string>
#include <vector>

namespace hermicone {

using cplx = std::complex<double>;

enum class TermKind { Holo, Mixed, Anti };

const char* term_kind_name(TermKind kind);

/// One structure entry: d(theta^i) contains coef * (factor j) ^ (factor k),
/// with factors holomorphic or antiholomorphic according to `kind`.
struct StructureTerm {
  int i = 0;
  TermKind kind = TermKind::Holo;
  int j = 0;
  int k = 0;
  cplx coef{0.0, 0.0};

  bool operator==(const StructureTerm&) const = default;
};

struct ComplexLieModel {
  std::string name;
  int n = 0;
  std::vector<StructureTerm> terms;

  bool operator==(const ComplexLieModel&) const = default;
};

struct ValidationReport {
  bool integrable = true;
  double d_squared_max_residual = 0.0;
  bool unimodular = true;
  std::vector<std::string> messages;

  bool ok(double tol = 1e-12) const {
    return integrable && unimodular && d_squared_max_residual <= tol;
  }
};

/// Sorts by (i, kind, j, k), orders holo/anti pairs with a sign flip, merges
/// duplicates and drops zero coefficients. Throws SchemaError on bad indices.
ComplexLieModel normalize_model(ComplexLieModel m);

ComplexLieModel parse_model(const std::string& text);
std::string serialize_model(const ComplexLieModel& m);

ValidationReport validate_model(const ComplexLieModel& m);

ComplexLieModel catalog(const std::string& name);
std::vector<std::string> catalog_names();

/// Stable 64-bit FNV-1a hash of the serialized model, as 16 hex digits.
std::string model_hash(const ComplexLieModel& m);

}  // namespace hermicone
