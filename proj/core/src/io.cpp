#include "kfp/io.hpp"

#include <cstdio>
#include <functional>
#include <utility>

#include "json.hpp"

namespace kfp {

using nlohmann::json;

namespace {

json parse_text(const std::string& text) {
  json j = json::parse(text, nullptr, /*allow_exceptions=*/false);
  if (j.is_discarded()) throw ConfigError("malformed JSON");
  return j;
}

const json& need(const json& j, const char* key) {
  auto it = j.find(key);
  if (it == j.end())
    throw ConfigError(std::string("missing key \"") + key + "\"");
  return *it;
}

double number(const json& j, const char* what) {
  if (!j.is_number())
    throw ConfigError(std::string(what) + " must be a number");
  return j.get<double>();
}

Vector vector_from(const json& j, const char* what) {
  if (!j.is_array() || j.empty())
    throw ConfigError(std::string(what) + " must be a nonempty array");
  Vector v(j.size());
  for (size_t i = 0; i < j.size(); ++i)
    v[static_cast<Eigen::Index>(i)] = number(j[i], what);
  return v;
}

Matrix matrix_from(const json& j, const char* what) {
  if (!j.is_array() || j.empty())
    throw ConfigError(std::string(what) + " must be a nonempty array of rows");
  size_t rows = j.size();
  if (!j[0].is_array() || j[0].empty())
    throw ConfigError(std::string(what) + " rows must be nonempty arrays");
  size_t cols = j[0].size();
  Matrix m(rows, cols);
  for (size_t r = 0; r < rows; ++r) {
    if (!j[r].is_array() || j[r].size() != cols)
      throw ConfigError(std::string(what) + " rows must have equal length");
    for (size_t c = 0; c < cols; ++c)
      m(static_cast<Eigen::Index>(r), static_cast<Eigen::Index>(c)) =
          number(j[r][c], what);
  }
  return m;
}

json matrix_to(const Matrix& m) {
  json rows = json::array();
  for (Eigen::Index r = 0; r < m.rows(); ++r) {
    json row = json::array();
    for (Eigen::Index c = 0; c < m.cols(); ++c) row.push_back(m(r, c));
    rows.push_back(std::move(row));
  }
  return rows;
}

json vector_to(const Vector& v) {
  json a = json::array();
  for (Eigen::Index i = 0; i < v.size(); ++i) a.push_back(v[i]);
  return a;
}

RegionPtr region_from(const json& j);

ScalarField field_from(const json& j) {
  if (!j.is_object()) throw ConfigError("field must be a JSON object");
  std::string kind = need(j, "kind").get<std::string>();
  double amp = j.value("amp", 1.0);
  if (kind == "gaussian") {
    Vector mean = vector_from(need(j, "mean"), "mean");
    if (j.contains("sigma"))
      return ScalarField::gaussian_isotropic(mean, number(j["sigma"], "sigma"),
                                             amp);
    return ScalarField::gaussian(mean, matrix_from(need(j, "cov"), "cov"), amp);
  }
  if (kind == "bump") {
    Vector center = vector_from(need(j, "center"), "center");
    double radius = number(need(j, "radius"), "radius");
    int power = j.value("power", 2);
    return ScalarField::bump(center, radius, amp, power);
  }
  if (kind == "linear") {
    Vector coeffs = vector_from(need(j, "coeffs"), "coeffs");
    return ScalarField::linear(coeffs, j.value("offset", 0.0));
  }
  if (kind == "indicator") return ScalarField::indicator(region_from(need(j, "region")));
  if (kind == "sum") {
    const json& terms = need(j, "terms");
    if (!terms.is_array() || terms.empty())
      throw ConfigError("sum terms must be a nonempty array");
    std::vector<std::pair<double, ScalarField>> parts;
    parts.reserve(terms.size());
    for (const json& t : terms)
      parts.emplace_back(number(need(t, "weight"), "weight"),
                         field_from(need(t, "field")));
    return ScalarField::weighted_sum(std::move(parts));
  }
  throw ConfigError("unknown field kind \"" + kind + "\"");
}

RegionPtr region_from(const json& j) {
  if (!j.is_object()) throw ConfigError("region must be a JSON object");
  std::string shape = need(j, "shape").get<std::string>();
  if (shape == "ball")
    return make_ball(vector_from(need(j, "center"), "center"),
                     number(need(j, "radius"), "radius"));
  if (shape == "box")
    return make_box(vector_from(need(j, "lo"), "lo"),
                    vector_from(need(j, "hi"), "hi"));
  if (shape == "ellipsoid")
    return make_ellipsoid(vector_from(need(j, "center"), "center"),
                          matrix_from(need(j, "A"), "A"));
  if (shape == "union") {
    const json& parts = need(j, "parts");
    if (!parts.is_array() || parts.empty())
      throw ConfigError("union parts must be a nonempty array");
    std::vector<RegionPtr> rs;
    rs.reserve(parts.size());
    for (const json& p : parts) rs.push_back(region_from(p));
    return make_union(rs);
  }
  throw ConfigError("unknown region shape \"" + shape + "\"");
}

}  // namespace

OperatorSpec parse_operator_json(const std::string& text) {
  json j = parse_text(text);
  if (j.is_string()) {
    OperatorSpec spec = catalog(j.get<std::string>());
    spec.validate();
    return spec;
  }
  if (!j.is_object()) throw ConfigError("operator must be an object or name");
  if (j.contains("catalog")) {
    OperatorSpec spec = catalog(need(j, "catalog").get<std::string>(),
                                j.value("param", 0));
    spec.validate();
    return spec;
  }
  OperatorSpec spec;
  spec.dim = need(j, "dim").get<int>();
  spec.Q = matrix_from(need(j, "Q"), "Q");
  spec.B = matrix_from(need(j, "B"), "B");
  spec.name = j.value("name", "custom");
  spec.validate();
  return spec;
}

std::string operator_to_json(const OperatorSpec& spec, int indent) {
  json j;
  j["dim"] = spec.dim;
  j["Q"] = matrix_to(spec.Q);
  j["B"] = matrix_to(spec.B);
  j["name"] = spec.name;
  return j.dump(indent);
}

RegionPtr parse_region_json(const std::string& text) {
  return region_from(parse_text(text));
}

ScalarField parse_field_json(const std::string& text) {
  return field_from(parse_text(text));
}

std::string field_to_json(const ScalarField& f, int indent) {
  std::function<json(const ScalarField&)> to_json = [&](const ScalarField& g) -> json {
    json j;
    switch (g.kind()) {
      case ScalarField::Kind::Gaussian:
        j["kind"] = "gaussian";
        j["mean"] = vector_to(g.gaussian_mean());
        j["cov"] = matrix_to(g.gaussian_cov());
        j["amp"] = g.amplitude();
        return j;
      case ScalarField::Kind::Bump:
        j["kind"] = "bump";
        j["center"] = vector_to(g.bump_center());
        j["radius"] = g.bump_radius();
        j["amp"] = g.amplitude();
        j["power"] = g.bump_power();
        return j;
      case ScalarField::Kind::Linear:
        j["kind"] = "linear";
        j["coeffs"] = vector_to(g.linear_coeffs());
        j["offset"] = g.linear_offset();
        return j;
      case ScalarField::Kind::Sum: {
        j["kind"] = "sum";
        json terms = json::array();
        for (const auto& [w, part] : g.terms()) {
          json t;
          t["weight"] = w;
          t["field"] = to_json(part);
          terms.push_back(std::move(t));
        }
        j["terms"] = std::move(terms);
        return j;
      }
      case ScalarField::Kind::Indicator:
        break;
    }
    throw InvalidInput(
        "indicator fields serialize by their region source; echo the region "
        "object instead");
  };
  return to_json(f).dump(indent);
}

std::string table_csv(const ResultTable& table, const std::string& config_json) {
  std::string out;
  if (!config_json.empty()) {
    out += "# config: ";
    out += config_json;
    out += "\n";
  }
  for (size_t c = 0; c < table.columns.size(); ++c) {
    if (c) out += ",";
    out += table.columns[c];
  }
  out += "\n";
  char buf[64];
  for (const auto& row : table.rows) {
    if (row.size() != table.columns.size())
      throw InvalidInput("table row width mismatch");
    for (size_t c = 0; c < row.size(); ++c) {
      if (c) out += ",";
      std::snprintf(buf, sizeof(buf), "%.12g", row[c]);
      out += buf;
    }
    out += "\n";
  }
  return out;
}

}  // namespace kfp
