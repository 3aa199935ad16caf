#include "hermicone/model.hpp"

#include <algorithm>
#include <cstdio>
#include <json.hpp>
#include <map>
#include <tuple>

#include "hermicone/errors.hpp"
#include "hermicone/exterior.hpp"

namespace hermicone {

namespace {

using json = nlohmann::ordered_json;

constexpr int kMaxDimension = 5;

TermKind parse_kind(const std::string& s) {
  if (s == "holo") return TermKind::Holo;
  if (s == "mixed") return TermKind::Mixed;
  if (s == "anti") return TermKind::Anti;
  throw Error(ErrorCode::SchemaError, "unknown term kind '" + s + "'");
}

int require_int(const json& obj, const char* key) {
  if (!obj.contains(key) || !obj[key].is_number_integer())
    throw Error(ErrorCode::SchemaError, std::string("field '") + key + "' must be an integer");
  return obj[key].get<int>();
}

double number_or(const json& obj, const char* key, bool required) {
  if (!obj.contains(key)) {
    if (required) throw Error(ErrorCode::SchemaError, std::string("missing field '") + key + "'");
    return 0.0;
  }
  if (!obj[key].is_number())
    throw Error(ErrorCode::SchemaError, std::string("field '") + key + "' must be a number");
  return obj[key].get<double>();
}

}  // namespace

const char* term_kind_name(TermKind kind) {
  switch (kind) {
    case TermKind::Holo: return "holo";
    case TermKind::Mixed: return "mixed";
    case TermKind::Anti: return "anti";
  }
  return "?";
}

ComplexLieModel normalize_model(ComplexLieModel m) {
  if (m.n < 2 || m.n > kMaxDimension)
    throw Error(ErrorCode::SchemaError,
                "n must lie in 2.." + std::to_string(kMaxDimension) + ", got " + std::to_string(m.n));
  std::map<std::tuple<int, int, int, int>, cplx> merged;
  for (StructureTerm t : m.terms) {
    auto in_range = [&](int x) { return x >= 1 && x <= m.n; };
    if (!in_range(t.i) || !in_range(t.j) || !in_range(t.k))
      throw Error(ErrorCode::SchemaError, "term index out of 1.." + std::to_string(m.n));
    if (t.kind != TermKind::Mixed) {
      if (t.j == t.k)
        throw Error(ErrorCode::SchemaError,
                    std::string(term_kind_name(t.kind)) + " term needs j != k");
      if (t.j > t.k) {
        std::swap(t.j, t.k);
        t.coef = -t.coef;
      }
    }
    merged[{t.i, static_cast<int>(t.kind), t.j, t.k}] += t.coef;
  }
  m.terms.clear();
  for (const auto& [key, c] : merged) {
    if (c == cplx(0.0, 0.0)) continue;
    auto [i, kind, j, k] = key;
    m.terms.push_back({i, static_cast<TermKind>(kind), j, k, c});
  }
  return m;
}

ComplexLieModel parse_model(const std::string& text) {
  json doc;
  try {
    doc = json::parse(text);
  } catch (const json::parse_error& e) {
    throw Error(ErrorCode::SchemaError, std::string("invalid JSON: ") + e.what());
  }
  if (!doc.is_object()) throw Error(ErrorCode::SchemaError, "model must be a JSON object");
  ComplexLieModel m;
  if (doc.contains("name")) {
    if (!doc["name"].is_string()) throw Error(ErrorCode::SchemaError, "'name' must be a string");
    m.name = doc["name"].get<std::string>();
  }
  m.n = require_int(doc, "n");
  if (!doc.contains("terms") || !doc["terms"].is_array())
    throw Error(ErrorCode::SchemaError, "'terms' must be an array");
  for (const auto& t : doc["terms"]) {
    if (!t.is_object()) throw Error(ErrorCode::SchemaError, "each term must be an object");
    if (!t.contains("kind") || !t["kind"].is_string())
      throw Error(ErrorCode::SchemaError, "term 'kind' must be a string");
    StructureTerm term;
    term.i = require_int(t, "i");
    term.kind = parse_kind(t["kind"].get<std::string>());
    term.j = require_int(t, "j");
    term.k = require_int(t, "k");
    term.coef = cplx(number_or(t, "re", true), number_or(t, "im", false));
    m.terms.push_back(term);
  }
  return normalize_model(std::move(m));
}

std::string serialize_model(const ComplexLieModel& m) {
  ComplexLieModel norm = normalize_model(m);
  json doc;
  doc["name"] = norm.name;
  doc["n"] = norm.n;
  doc["terms"] = json::array();
  for (const auto& t : norm.terms) {
    json jt;
    jt["i"] = t.i;
    jt["kind"] = term_kind_name(t.kind);
    jt["j"] = t.j;
    jt["k"] = t.k;
    jt["re"] = t.coef.real();
    jt["im"] = t.coef.imag();
    doc["terms"].push_back(jt);
  }
  return doc.dump(2);
}

ValidationReport validate_model(const ComplexLieModel& input) {
  ValidationReport report;
  ComplexLieModel m;
  try {
    m = normalize_model(input);
  } catch (const Error& e) {
    report.integrable = false;
    report.unimodular = false;
    report.d_squared_max_residual = 0.0;
    report.messages.push_back(e.what());
    return report;
  }
  for (const auto& t : m.terms) {
    if (t.kind == TermKind::Anti) {
      report.integrable = false;
      report.messages.push_back("d(theta^" + std::to_string(t.i) +
                                ") has a nonzero (0,2)-component");
    }
  }
  const Mat d = raw_differential(m);
  report.d_squared_max_residual = (d * d).cwiseAbs().maxCoeff();
  if (report.d_squared_max_residual > 1e-12)
    report.messages.push_back("d^2 != 0 (max residual " +
                              sci(report.d_squared_max_residual) + ")");
  const auto eb = ExteriorBasis::get(m.n);
  const int k = 2 * m.n - 1;
  const double top = d.block(eb->offset(k + 1), eb->offset(k), eb->count(k + 1), eb->count(k))
                         .cwiseAbs()
                         .maxCoeff();
  report.unimodular = top <= 1e-12;
  if (!report.unimodular)
    report.messages.push_back("d does not vanish on degree " + std::to_string(k) + " forms");
  return report;
}

ComplexLieModel catalog(const std::string& name) {
  ComplexLieModel m;
  m.name = name;
  if (name == "torus2") {
    m.n = 2;
  } else if (name == "torus3") {
    m.n = 3;
  } else if (name == "iwasawa") {
    m.n = 3;
    m.terms.push_back({3, TermKind::Holo, 1, 2, cplx(-1.0, 0.0)});
  } else if (name == "kodaira_thurston") {
    m.n = 2;
    m.terms.push_back({2, TermKind::Mixed, 1, 1, cplx(1.0, 0.0)});
  } else {
    throw Error(ErrorCode::UnknownCatalogName, "'" + name + "'");
  }
  return m;
}

std::vector<std::string> catalog_names() {
  return {"torus2", "torus3", "iwasawa", "kodaira_thurston"};
}

std::string model_hash(const ComplexLieModel& m) {
  const std::string s = serialize_model(m);
  std::uint64_t h = 1469598103934665603ULL;
  for (unsigned char c : s) {
    h ^= c;
    h *= 1099511628211ULL;
  }
  char buf[17];
  std::snprintf(buf, sizeof buf, "%016llx", static_cast<unsigned long long>(h));
  return buf;
}

}  // namespace hermicone
