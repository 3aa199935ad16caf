#include "hermicone/report.hpp"

#include <charconv>
#include <cmath>
#include <sstream>

#include "hermicone/errors.hpp"

namespace hermicone {

namespace {

// JSON has no NaN or infinity; those become null.
Json number(double x) { return std::isfinite(x) ? Json(x) : Json(nullptr); }

Json object_of(const std::map<std::string, double>& m) {
  Json out = Json::object();
  for (const auto& [k, v] : m) out[k] = number(v);
  return out;
}

const Json& require(const Json& j, const char* key) {
  if (!j.is_object() || !j.contains(key))
    throw Error(ErrorCode::SchemaError, std::string("missing field '") + key + "'");
  return j.at(key);
}

double as_number(const Json& j, const char* what) {
  if (!j.is_number()) throw Error(ErrorCode::SchemaError, std::string(what) + " must be a number");
  return j.get<double>();
}

cplx complex_of(const Json& j) {
  const double re = as_number(require(j, "re"), "re");
  const double im = j.contains("im") ? as_number(j.at("im"), "im") : 0.0;
  return {re, im};
}

}  // namespace

std::string format_double(double x) {
  if (!std::isfinite(x)) return std::isnan(x) ? "nan" : (x > 0 ? "inf" : "-inf");
  char buf[64];
  const auto res = std::to_chars(buf, buf + sizeof buf, x);
  return std::string(buf, res.ptr);
}

Json to_json(const Form& f) {
  Json out = Json::array();
  if (f.n() == 0) return out;
  const auto eb = ExteriorBasis::get(f.n());
  for (const auto& [bd, v] : f.components()) {
    const auto idx = eb->basis(bd.p, bd.q);
    for (int k = 0; k < v.size(); ++k) {
      if (v(k) == cplx(0.0)) continue;
      Json e;
      e["p"] = bd.p;
      e["q"] = bd.q;
      e["I"] = idx[k].I;
      e["J"] = idx[k].J;
      e["re"] = number(v(k).real());
      e["im"] = number(v(k).imag());
      out.push_back(e);
    }
  }
  return out;
}

Form form_from_json(int n, const Json& j) {
  if (!j.is_array()) throw Error(ErrorCode::SchemaError, "form must be an array of entries");
  Form f(n);
  for (const Json& e : j) {
    const auto I = require(e, "I").get<std::vector<int>>();
    const auto J = require(e, "J").get<std::vector<int>>();
    for (int x : I)
      if (x < 1 || x > n) throw Error(ErrorCode::SchemaError, "form index out of range");
    for (int x : J)
      if (x < 1 || x > n) throw Error(ErrorCode::SchemaError, "form index out of range");
    f += Form::monomial(n, I, J, complex_of(e));
  }
  return f;
}

Json metric_to_json(const Eigen::MatrixXcd& H) {
  Json out = Json::array();
  for (int r = 0; r < H.rows(); ++r) {
    Json row = Json::array();
    for (int c = 0; c < H.cols(); ++c) row.push_back({{"re", H(r, c).real()}, {"im", H(r, c).imag()}});
    out.push_back(row);
  }
  return out;
}

HermitianMetric metric_from_json(int n, const Json& j) {
  if (j.is_string()) {
    if (j.get<std::string>() == "identity") return HermitianMetric::identity(n);
    throw Error(ErrorCode::SchemaError, "metric string must be \"identity\"");
  }
  if (!j.is_array()) throw Error(ErrorCode::SchemaError, "metric must be an array of rows");
  if (static_cast<int>(j.size()) != n)
    throw Error(ErrorCode::DimensionMismatch,
                "metric has " + std::to_string(j.size()) + " rows, expected " + std::to_string(n));
  Eigen::MatrixXcd H(n, n);
  for (int r = 0; r < n; ++r) {
    const Json& row = j.at(r);
    if (!row.is_array() || static_cast<int>(row.size()) != n)
      throw Error(ErrorCode::DimensionMismatch, "metric row " + std::to_string(r) + " has wrong length");
    for (int c = 0; c < n; ++c) H(r, c) = complex_of(row.at(c));
  }
  return make_metric(H);
}

HermitianMetric parse_metric(int n, const std::string& text) {
  std::string trimmed = text;
  trimmed.erase(0, trimmed.find_first_not_of(" \t\r\n"));
  trimmed.erase(trimmed.find_last_not_of(" \t\r\n") + 1);
  if (trimmed == "identity") return HermitianMetric::identity(n);
  Json j;
  try {
    j = Json::parse(trimmed);
  } catch (const Json::parse_error& e) {
    throw Error(ErrorCode::SchemaError, std::string("metric is not valid JSON: ") + e.what());
  }
  return metric_from_json(n, j);
}

Json to_json(const ValidationReport& r) {
  return {{"integrable", r.integrable},
          {"d_squared_max_residual", number(r.d_squared_max_residual)},
          {"unimodular", r.unimodular},
          {"messages", r.messages}};
}

Json to_json(const IdentityReport& r) {
  return {{"residuals", object_of(r.residuals)}, {"max_residual", number(r.max_residual())}};
}

Json to_json(const ThreeSpaceReport& r) {
  return {{"sum_residual", number(r.sum_residual)},
          {"orthogonality_residual", number(r.orthogonality_residual)},
          {"idempotence_residual", number(r.idempotence_residual)}};
}

Json to_json(const TorsionReport& r) {
  Json out;
  out["kind"] = r.kind == TorsionReport::Kind::Rho ? "rho" : "Gamma";
  out["norm_squared"] = number(r.norm_squared);
  out["equation_residual"] = number(r.equation_residual);
  out["kernel_residual"] = number(r.kernel_residual);
  out["tol"] = number(r.tol);
  out["torsion"] = to_json(r.torsion);
  out["source"] = to_json(r.source);
  out["harmonic_part"] = to_json(r.harmonic_part);
  out["projected_part"] = to_json(r.projected_part);
  return out;
}

Json to_json(const Predicates& p) {
  return {{"is_skt", p.is_skt},
          {"is_balanced", p.is_balanced},
          {"is_kahler", p.is_kahler},
          {"ddbar_residual", number(p.ddbar_residual)},
          {"balanced_residual", number(p.balanced_residual)},
          {"kahler_residual", number(p.kahler_residual)}};
}

Json to_json(const FunctionalValue& v) {
  return {{"functional", functional_name(v.kind)},
          {"value", number(v.value)},
          {"ingredients", object_of(v.ingredients)}};
}

Json to_json(const FunctionalDerivative& d) {
  Json out;
  out["name"] = d.name;
  out["analytic"] = number(d.analytic);
  out["terms"] = object_of(d.terms);
  out["a_norm"] = number(d.a_norm);
  out["a_pairing"] = number(d.a_pairing);
  if (d.fd_computed) {
    out["fd"] = number(d.fd);
    out["fd_error"] = number(d.fd_error);
    out["fd_step"] = number(d.fd_step);
    out["discrepancy"] = number(d.discrepancy);
  }
  out["diagnostics"] = object_of(d.diagnostics);
  return out;
}

Json to_json(const VariationCheck& c) {
  Json out;
  out["name"] = c.name;
  out["analytic"] = number(c.analytic);
  out["fd"] = number(c.fd);
  out["abs_err"] = number(c.abs_err);
  out["rel_err"] = number(c.rel_err);
  out["step"] = number(c.step);
  out["threshold"] = number(c.threshold);
  out["in_scope"] = c.in_scope;
  out["passed"] = c.passed;
  if (!c.note.empty()) out["note"] = c.note;
  return out;
}

Json to_json(const std::vector<VariationCheck>& checks) {
  Json out = Json::array();
  for (const auto& c : checks) out.push_back(to_json(c));
  return out;
}

Json to_json(const DescentRecord& r) {
  Json out;
  out["iteration"] = r.iteration;
  out["value"] = number(r.value);
  out["gradient_norm"] = number(r.gradient_norm);
  out["min_eigenvalue"] = number(r.min_eigenvalue);
  out["step"] = number(r.step);
  out["normalization"] = number(r.normalization);
  out["constraint_residual"] = number(r.constraint_residual);
  out["analytic_components"] = r.analytic_components;
  out["coefficients"] = std::vector<double>(r.coefficients.data(),
                                            r.coefficients.data() + r.coefficients.size());
  return out;
}

Json to_json(const DescentTrace& t) {
  Json out;
  out["functional"] = functional_name(t.functional);
  out["cone"] = cone_name(t.cone);
  out["cone_dimension"] = t.basis.dimension();
  out["termination"] = termination_name(t.termination);
  out["iterations"] = t.records.empty() ? 0 : t.records.back().iteration;
  out["monotone"] = t.monotone();
  out["kahler_detected"] = t.kahler_detected;
  out["inconsistent"] = t.inconsistent;
  out["degenerating"] = t.degenerating;
  out["rejected_steps"] = t.rejected_steps;
  if (!t.records.empty()) {
    out["initial_value"] = number(t.records.front().value);
    out["final_value"] = number(t.records.back().value);
  }
  out["final_metric"] = metric_to_json(t.final_metric.H);
  Json recs = Json::array();
  for (const auto& r : t.records) recs.push_back(to_json(r));
  out["records"] = recs;
  return out;
}

std::string checks_to_csv(const std::vector<VariationCheck>& checks) {
  std::ostringstream os;
  os << "name,analytic,fd,abs_err,rel_err,threshold,in_scope,passed\n";
  for (const auto& c : checks)
    os << '"' << c.name << "\"," << format_double(c.analytic) << ',' << format_double(c.fd) << ','
       << format_double(c.abs_err) << ',' << format_double(c.rel_err) << ','
       << format_double(c.threshold) << ',' << (c.in_scope ? 1 : 0) << ',' << (c.passed ? 1 : 0)
       << '\n';
  return os.str();
}

std::string trace_to_csv(const DescentTrace& t) {
  std::ostringstream os;
  os << "iteration,value,gradient_norm,min_eigenvalue,step,normalization,constraint_residual,"
        "analytic_components\n";
  for (const auto& r : t.records)
    os << r.iteration << ',' << format_double(r.value) << ',' << format_double(r.gradient_norm)
       << ',' << format_double(r.min_eigenvalue) << ',' << format_double(r.step) << ','
       << format_double(r.normalization) << ',' << format_double(r.constraint_residual) << ','
       << r.analytic_components << '\n';
  return os.str();
}

}  // namespace hermicone
