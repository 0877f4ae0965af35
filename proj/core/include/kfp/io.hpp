#pragma once

// JSON parsing/serialization for the configurable inputs (operator, region,
// field) and fixed-format CSV emission. Malformed text throws ConfigError;
// semantically invalid but well-formed input throws the usual math errors.

#include <string>
#include <vector>

#include "kfp/operator_model.hpp"
#include "kfp/region.hpp"
#include "kfp/scalar_field.hpp"

namespace kfp {

// Accepts {"dim": int, "Q": [[...]], "B": [[...]], "name": string} with
// row-major matrices, {"catalog": name, "param": int}, or a bare catalog
// name string. The result is validated (PSD Q, matching shapes).
OperatorSpec parse_operator_json(const std::string& text);
std::string operator_to_json(const OperatorSpec& spec, int indent = 2);

// {"shape": "ball", "center": [...], "radius": r}
// {"shape": "box", "lo": [...], "hi": [...]}
// {"shape": "ellipsoid", "center": [...], "A": [[...]]}
// {"shape": "union", "parts": [ ... ]}
RegionPtr parse_region_json(const std::string& text);

// {"kind": "gaussian", "mean": [...], "cov": [[...]] | "sigma": s, "amp": a}
// {"kind": "bump", "center": [...], "radius": R, "amp": a, "power": k}
// {"kind": "linear", "coeffs": [...], "offset": b}
// {"kind": "indicator", "region": { ... }}
// {"kind": "sum", "terms": [{"weight": w, "field": { ... }}, ...]}
ScalarField parse_field_json(const std::string& text);

// Serializes gaussian/bump/linear/sum fields. Indicator fields are rejected:
// their region has no structured introspection, so configs should echo the
// original region object instead.
std::string field_to_json(const ScalarField& f, int indent = 2);

// Rectangular numeric table rendered with fixed %.12g formatting, so
// identical estimates give byte-identical text.
struct ResultTable {
  std::vector<std::string> columns;
  std::vector<std::vector<double>> rows;
};

// CSV: '#' comment lines carrying the resolved config (compact JSON), then
// the header row, then the body. No timestamps anywhere.
std::string table_csv(const ResultTable& table, const std::string& config_json);

}  // namespace kfp
