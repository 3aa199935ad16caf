#pragma once

#include <string>
#include <vector>

#include <json.hpp>

#include "hermicone/optimizer.hpp"

namespace hermicone {

using Json = nlohmann::ordered_json;

/// Nonzero coefficients as {"p","q","I","J","re","im"} entries (1-based indices).
Json to_json(const Form& f);
Form form_from_json(int n, const Json& j);

/// n x n array of {"re","im"} pairs.
Json metric_to_json(const Eigen::MatrixXcd& H);
/// Accepts the string "identity" or an n x n array of {"re","im"} pairs.
/// Throws SchemaError, DimensionMismatch, NotPositiveDefinite.
HermitianMetric metric_from_json(int n, const Json& j);
/// Text is either the bare word identity or JSON.
HermitianMetric parse_metric(int n, const std::string& text);

Json to_json(const ValidationReport& r);
Json to_json(const IdentityReport& r);
Json to_json(const ThreeSpaceReport& r);
Json to_json(const TorsionReport& r);
Json to_json(const Predicates& p);
Json to_json(const FunctionalValue& v);
Json to_json(const FunctionalDerivative& d);
Json to_json(const VariationCheck& c);
Json to_json(const std::vector<VariationCheck>& checks);
Json to_json(const DescentRecord& r);
/// Summary plus the per-iteration records.
Json to_json(const DescentTrace& t);

/// name,analytic,fd,abs_err,rel_err,threshold,in_scope,passed
std::string checks_to_csv(const std::vector<VariationCheck>& checks);
/// One row per iteration.
std::string trace_to_csv(const DescentTrace& t);

/// Shortest round-trip decimal rendering, as used in CSV output.
std::string format_double(double x);

}  // namespace hermicone
