#include <doctest.h>

#include "hermicone/errors.hpp"
#include "hermicone/model.hpp"

using namespace hermicone;

namespace {

ErrorCode code_of(auto&& fn) {
  try {
    fn();
  } catch (const Error& e) {
    return e.code();
  }
  FAIL("expected an Error");
  return ErrorCode::SchemaError;
}

}  // namespace

TEST_CASE("parse_model reads the iwasawa file") {
  const auto m = parse_model(R"({"name": "iw", "n": 3,
      "terms": [{"i": 3, "kind": "holo", "j": 1, "k": 2, "re": -1}]})");
  CHECK(m.n == 3);
  REQUIRE(m.terms.size() == 1);
  CHECK(m.terms[0] == StructureTerm{3, TermKind::Holo, 1, 2, cplx(-1.0, 0.0)});
}

TEST_CASE("parse_model accepts an empty torus") {
  const auto m = parse_model(R"({"name": "t", "n": 3, "terms": []})");
  CHECK(m.terms.empty());
  CHECK(validate_model(m).ok());
}

TEST_CASE("parse_model rejects malformed input") {
  CHECK(code_of([] { parse_model("{"); }) == ErrorCode::SchemaError);
  CHECK(code_of([] { parse_model(R"({"n": 3})"); }) == ErrorCode::SchemaError);
  CHECK(code_of([] { parse_model(R"({"n": 1, "terms": []})"); }) == ErrorCode::SchemaError);
  CHECK(code_of([] { parse_model(R"({"n": 6, "terms": []})"); }) == ErrorCode::SchemaError);
  CHECK(code_of([] {
          parse_model(R"({"n": 3, "terms": [{"i": 5, "kind": "holo", "j": 1, "k": 2, "re": 1}]})");
        }) == ErrorCode::SchemaError);
  CHECK(code_of([] {
          parse_model(R"({"n": 3, "terms": [{"i": 3, "kind": "holo", "j": 2, "k": 2, "re": 1}]})");
        }) == ErrorCode::SchemaError);
  CHECK(code_of([] {
          parse_model(R"({"n": 3, "terms": [{"i": 3, "kind": "weird", "j": 1, "k": 2, "re": 1}]})");
        }) == ErrorCode::SchemaError);
  CHECK(code_of([] {
          parse_model(R"({"n": 3, "terms": [{"i": 3, "kind": "holo", "j": 1, "k": 2}]})");
        }) == ErrorCode::SchemaError);
}

TEST_CASE("normalize_model orders pairs and merges duplicates") {
  ComplexLieModel m{"x", 3, {{3, TermKind::Holo, 2, 1, cplx(1.0, 0.0)},
                             {3, TermKind::Holo, 1, 2, cplx(0.0, 2.0)},
                             {2, TermKind::Mixed, 1, 1, cplx(1.0, 0.0)},
                             {1, TermKind::Mixed, 2, 3, cplx(1.0, 0.0)},
                             {1, TermKind::Mixed, 2, 3, cplx(-1.0, 0.0)}}};
  const auto out = normalize_model(m);
  REQUIRE(out.terms.size() == 2);
  CHECK(out.terms[0] == StructureTerm{2, TermKind::Mixed, 1, 1, cplx(1.0, 0.0)});
  // theta^2 ^ theta^1 = -theta^1 ^ theta^2.
  CHECK(out.terms[1] == StructureTerm{3, TermKind::Holo, 1, 2, cplx(-1.0, 2.0)});
}

TEST_CASE("serialize_model roundtrips every catalog entry") {
  for (const auto& name : catalog_names()) {
    const auto m = catalog(name);
    CHECK(parse_model(serialize_model(m)) == normalize_model(m));
    CHECK(serialize_model(parse_model(serialize_model(m))) == serialize_model(m));
  }
}

TEST_CASE("serialization sorts terms by (i, kind, j, k)") {
  ComplexLieModel m{"s", 3, {{3, TermKind::Holo, 1, 2, cplx(1.0, 0.0)},
                             {2, TermKind::Mixed, 1, 1, cplx(1.0, 0.0)}}};
  const std::string s = serialize_model(m);
  CHECK(s.find("\"i\": 2") < s.find("\"i\": 3"));
}

TEST_CASE("model_hash is stable and content sensitive") {
  const auto iw = catalog("iwasawa");
  CHECK(model_hash(iw).size() == 16);
  CHECK(model_hash(iw) == model_hash(parse_model(serialize_model(iw))));
  CHECK(model_hash(iw) != model_hash(catalog("torus3")));
}

TEST_CASE("catalog entries are valid and unknown names are rejected") {
  for (const auto& name : catalog_names()) {
    const auto r = validate_model(catalog(name));
    CHECK_MESSAGE(r.ok(), name);
    CHECK(r.d_squared_max_residual == 0.0);
  }
  CHECK(code_of([] { catalog("hopf"); }) == ErrorCode::UnknownCatalogName);
}

TEST_CASE("validate_model flags a Jacobi failure") {
  // d theta^3 = theta^1 ^ theta^2, d theta^1 = theta^1 ^ theta^3: d^2 theta^3 != 0.
  ComplexLieModel m{"bad", 3, {{3, TermKind::Holo, 1, 2, cplx(1.0, 0.0)},
                               {1, TermKind::Holo, 1, 3, cplx(1.0, 0.0)}}};
  const auto r = validate_model(m);
  CHECK(r.d_squared_max_residual > 0.5);
  CHECK_FALSE(r.ok());
}

TEST_CASE("validate_model flags a non-unimodular algebra") {
  // d theta^2 = theta^1 ^ theta^2 has nonzero trace.
  ComplexLieModel m{"affine", 2, {{2, TermKind::Holo, 1, 2, cplx(1.0, 0.0)}}};
  const auto r = validate_model(m);
  CHECK(r.d_squared_max_residual == 0.0);
  CHECK_FALSE(r.unimodular);
  CHECK_FALSE(r.ok());
}

TEST_CASE("validate_model flags a (0,2) component as non-integrable") {
  ComplexLieModel m{"anti", 2, {{2, TermKind::Anti, 1, 2, cplx(1.0, 0.0)}}};
  const auto r = validate_model(m);
  CHECK_FALSE(r.integrable);
  CHECK_FALSE(r.ok());
}

TEST_CASE("exit codes group error classes") {
  CHECK(exit_code_for(ErrorCode::SchemaError) == 2);
  CHECK(exit_code_for(ErrorCode::UnknownCatalogName) == 2);
  CHECK(exit_code_for(ErrorCode::ModelInvalid) == 3);
  CHECK(exit_code_for(ErrorCode::NotPositiveDefinite) == 3);
  CHECK(exit_code_for(ErrorCode::NotSKT) == 4);
  CHECK(exit_code_for(ErrorCode::NotBalanced) == 4);
  CHECK(exit_code_for(ErrorCode::ToleranceAmbiguity) == 5);
  CHECK(exit_code_for(ErrorCode::KernelJump) == 5);
  CHECK(exit_code_for(ErrorCode::EmptyCone) == 6);
  CHECK(exit_code_for(ErrorCode::InfeasibleStart) == 6);
}
