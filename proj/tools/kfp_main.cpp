// kfp: command-line front end for the degenerate-diffusion semigroup library.
// Thin orchestration only: parse flags and config, call the library, emit
// CSV/JSON artifacts with the resolved configuration embedded. All file
// writes happen here; everything below is pure.
//
// Exit codes: 0 ok, 2 invalid input or failed validation, 3 verification
// breach, 64 usage error, 66 unreadable or malformed config, 70 internal.

#include <cmath>
#include <cstdio>
#include <fstream>
#include <sstream>
#include <string>
#include <vector>

#include "CLI11.hpp"
#include "json.hpp"
#include "kfp/besov.hpp"
#include "kfp/errors.hpp"
#include "kfp/fractional.hpp"
#include "kfp/io.hpp"
#include "kfp/operator_model.hpp"
#include "kfp/perimeter.hpp"
#include "kfp/region.hpp"
#include "kfp/semigroup.hpp"
#include "kfp/verify.hpp"

using nlohmann::json;

namespace {

constexpr uint64_t kDefaultSeed = 0xB5EED;

// Everything shared by the subcommands after flag/config merging, plus the
// resolved-config object each artifact embeds.
struct Common {
  uint64_t seed = kDefaultSeed;
  uint64_t samples = 200000;
  int workers = kfp::default_workers();
  double tol = 5e-4;
  std::string out;
  std::string format;  // "", "csv", "json"; empty = task default
  std::string config_path;
  json config;  // parsed --config file, object or null
  json rc;      // resolved config under construction
};

std::string slurp(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw kfp::ConfigError("cannot read " + path);
  std::stringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

bool looks_like_json(const std::string& s) {
  for (char ch : s) {
    if (ch == ' ' || ch == '\t' || ch == '\n' || ch == '\r') continue;
    return ch == '{' || ch == '[' || ch == '"';
  }
  return false;
}

json parse_json_or_die(const std::string& text, const char* what) {
  json j = json::parse(text, nullptr, /*allow_exceptions=*/false);
  if (j.is_discarded())
    throw kfp::ConfigError(std::string("malformed JSON in ") + what);
  return j;
}

// Argument that may be inline JSON, a shorthand tag:value, or a file path.
json json_source(const std::string& arg, const char* what) {
  if (looks_like_json(arg)) return parse_json_or_die(arg, what);
  return parse_json_or_die(slurp(arg), what);
}

std::vector<double> split_doubles(const std::string& s, const char* what) {
  std::vector<double> vals;
  size_t pos = 0;
  while (pos <= s.size()) {
    size_t comma = s.find(',', pos);
    std::string tok = s.substr(pos, comma == std::string::npos ? comma : comma - pos);
    size_t used = 0;
    double v = 0.0;
    try {
      v = std::stod(tok, &used);
    } catch (const std::exception&) {
      throw kfp::ConfigError(std::string(what) + ": '" + tok + "' is not a number");
    }
    if (used != tok.size())
      throw kfp::ConfigError(std::string(what) + ": '" + tok + "' is not a number");
    vals.push_back(v);
    if (comma == std::string::npos) break;
    pos = comma + 1;
  }
  if (vals.empty()) throw kfp::ConfigError(std::string(what) + ": empty list");
  return vals;
}

kfp::Vector to_vector(const std::vector<double>& vals) {
  kfp::Vector v(static_cast<Eigen::Index>(vals.size()));
  for (size_t i = 0; i < vals.size(); ++i) v[static_cast<Eigen::Index>(i)] = vals[i];
  return v;
}

// Point flag: comma list on the command line, array under `key` in the
// config file. Required unless a default center is acceptable.
kfp::Vector resolve_point(const Common& c, const std::string& flag,
                          const char* key, int dim, bool required) {
  std::vector<double> vals;
  if (!flag.empty()) {
    vals = split_doubles(flag, key);
  } else if (c.config.is_object() && c.config.contains(key)) {
    for (const auto& e : c.config[key]) {
      if (!e.is_number())
        throw kfp::ConfigError(std::string(key) + " entries must be numbers");
      vals.push_back(e.get<double>());
    }
  } else if (required) {
    throw kfp::ConfigError(std::string("missing point --") + key);
  } else {
    return kfp::Vector::Zero(dim);
  }
  if (static_cast<int>(vals.size()) != dim)
    throw kfp::ConfigError(std::string(key) + " has " +
                           std::to_string(vals.size()) + " entries, operator dim is " +
                           std::to_string(dim));
  return to_vector(vals);
}

// Operator from --catalog/--param, --operator (file or inline JSON), or the
// config file's "operator" entry.
kfp::OperatorSpec resolve_operator(Common& c, const std::string& cat, int param,
                                   const std::string& arg) {
  json src;
  if (!cat.empty()) {
    src = json{{"catalog", cat}, {"param", param}};
  } else if (!arg.empty()) {
    src = json_source(arg, "operator");
  } else if (c.config.is_object() && c.config.contains("operator")) {
    src = c.config["operator"];
  } else {
    throw kfp::ConfigError("no operator given (--catalog, --operator, or config)");
  }
  kfp::OperatorSpec spec = kfp::parse_operator_json(src.dump());
  c.rc["operator"] = parse_json_or_die(kfp::operator_to_json(spec), "operator");
  return spec;
}

// Region from shorthand ("ball:R", "box:L" = cube [0,L]^N), JSON, file, or
// config. Shorthands are centered on the operator's origin.
kfp::RegionPtr resolve_region(Common& c, const std::string& arg, int dim) {
  json src;
  if (arg.rfind("ball:", 0) == 0) {
    double r = split_doubles(arg.substr(5), "ball radius").at(0);
    src = json{{"shape", "ball"},
               {"center", std::vector<double>(dim, 0.0)},
               {"radius", r}};
  } else if (arg.rfind("box:", 0) == 0) {
    double l = split_doubles(arg.substr(4), "box side").at(0);
    src = json{{"shape", "box"},
               {"lo", std::vector<double>(dim, 0.0)},
               {"hi", std::vector<double>(dim, l)}};
  } else if (!arg.empty()) {
    src = json_source(arg, "region");
  } else if (c.config.is_object() && c.config.contains("region")) {
    src = c.config["region"];
  } else {
    throw kfp::ConfigError("no region given (--region or config)");
  }
  c.rc["region"] = src;
  return kfp::parse_region_json(src.dump());
}

// Field from shorthand ("gaussian:sigma", "bump:R"), JSON, file, or config.
kfp::ScalarField resolve_field(Common& c, const std::string& arg, int dim) {
  json src;
  if (arg.rfind("gaussian:", 0) == 0) {
    double s = split_doubles(arg.substr(9), "gaussian sigma").at(0);
    src = json{{"kind", "gaussian"},
               {"mean", std::vector<double>(dim, 0.0)},
               {"sigma", s},
               {"amp", 1.0}};
  } else if (arg.rfind("bump:", 0) == 0) {
    double r = split_doubles(arg.substr(5), "bump radius").at(0);
    src = json{{"kind", "bump"},
               {"center", std::vector<double>(dim, 0.0)},
               {"radius", r},
               {"amp", 1.0},
               {"power", 2}};
  } else if (!arg.empty()) {
    src = json_source(arg, "field");
  } else if (c.config.is_object() && c.config.contains("field")) {
    src = c.config["field"];
  } else {
    throw kfp::ConfigError("no field given (--field or config)");
  }
  c.rc["field"] = src;
  kfp::ScalarField f = kfp::parse_field_json(src.dump());
  if (f.dim() != dim)
    throw kfp::InvalidInput("field dimension " + std::to_string(f.dim()) +
                            " does not match operator dim " + std::to_string(dim));
  return f;
}

// Scalar task parameter: flag wins, then config key, then default; NaN marks
// a required parameter that was never supplied.
double resolve_num(const Common& c, const CLI::Option* opt, double flagval,
                   const char* key, double defval) {
  if (opt->count()) return flagval;
  if (c.config.is_object() && c.config.contains(key)) {
    if (!c.config[key].is_number())
      throw kfp::ConfigError(std::string(key) + " must be a number");
    return c.config[key].get<double>();
  }
  if (std::isnan(defval)) throw kfp::ConfigError(std::string("missing --") + key);
  return defval;
}

void write_artifact(const Common& c, const std::string& text) {
  if (c.out.empty()) {
    std::fwrite(text.data(), 1, text.size(), stdout);
  } else {
    std::ofstream o(c.out, std::ios::binary);
    if (!o) throw kfp::ConfigError("cannot write " + c.out);
    o << text;
  }
}

// csv for tables, json for single objects, unless --format says otherwise.
std::string pick_format(const Common& c, const char* task_default) {
  return c.format.empty() ? task_default : c.format;
}

void emit_json(const Common& c, json body) {
  body["config"] = c.rc;
  write_artifact(c, body.dump(2) + "\n");
}

void emit_table(const Common& c, const kfp::ResultTable& table) {
  write_artifact(c, kfp::table_csv(table, c.rc.dump()));
}

void stamp_run_params(Common& c, const char* task) {
  c.rc["task"] = task;
  c.rc["seed"] = c.seed;
  c.rc["samples"] = c.samples;
  c.rc["workers"] = c.workers;
  c.rc["tol"] = c.tol;
}

// ---------------------------------------------------------------------------
// Subcommand bodies. Each returns the process exit code.

int run_operator_info(Common& c, const kfp::OperatorSpec& spec) {
  stamp_run_params(c, "operator info");
  kfp::HypoellipticityReport hr = kfp::check_hypoelliptic(spec);
  kfp::DimensionReport dr = kfp::intrinsic_dimensions(spec);
  if (pick_format(c, "json") == "json") {
    json j;
    j["name"] = spec.name;
    j["dim"] = spec.dim;
    j["trace_B"] = spec.trace_B();
    j["trace_ok"] = spec.trace_ok();
    j["hypoelliptic"] = {{"ok", hr.ok},
                         {"min_eig", hr.min_eig},
                         {"argmin_t", hr.argmin_t},
                         {"warnings", hr.warnings}};
    j["dimensions"] = {{"D0", dr.D0},
                       {"Dinf", dr.Dinf},
                       {"regime", dr.regime},
                       {"power_law0", dr.power_law0},
                       {"power_law_inf", dr.power_law_inf}};
    json vols = json::array();
    for (double t : {0.1, 1.0, 10.0})
      vols.push_back({{"t", t}, {"V", kfp::volume(spec, t)}});
    j["volume"] = vols;
    emit_json(c, j);
  } else {
    kfp::ResultTable t;
    t.columns = {"dim", "trace_B", "D0", "Dinf", "hypo_ok", "min_eig_K"};
    t.rows = {{static_cast<double>(spec.dim), spec.trace_B(), dr.D0, dr.Dinf,
               hr.ok ? 1.0 : 0.0, hr.min_eig}};
    emit_table(c, t);
  }
  return 0;
}

int run_operator_validate(Common& c, const kfp::OperatorSpec& spec) {
  stamp_run_params(c, "operator validate");
  spec.validate();
  kfp::HypoellipticityReport hr = kfp::check_hypoelliptic(spec);
  json j;
  j["name"] = spec.name;
  j["ok"] = hr.ok;
  j["min_eig"] = hr.min_eig;
  j["argmin_t"] = hr.argmin_t;
  j["trace_ok"] = spec.trace_ok();
  j["warnings"] = hr.warnings;
  emit_json(c, j);
  return hr.ok ? 0 : 2;
}

int run_kernel_eval(Common& c, const kfp::OperatorSpec& spec, double t,
                    const kfp::Vector& X, const kfp::Vector& Y) {
  stamp_run_params(c, "kernel eval");
  c.rc["t"] = t;
  c.rc["x"] = std::vector<double>(X.data(), X.data() + X.size());
  c.rc["y"] = std::vector<double>(Y.data(), Y.data() + Y.size());
  kfp::CovarianceBundle cb = kfp::covariance(spec, t);
  double density = kfp::kernel_density(cb, spec.dim, X, Y);
  double m = kfp::pseudo_distance(cb, X, Y);
  if (pick_format(c, "json") == "json") {
    json j;
    j["t"] = t;
    j["density"] = density;
    j["pseudo_distance"] = m;
    j["volume"] = cb.volume;
    j["log_det_tK"] = cb.log_det_gram;
    j["min_eig_K"] = cb.min_eig_K;
    emit_json(c, j);
  } else {
    kfp::ResultTable tab;
    tab.columns = {"t", "density", "pseudo_distance", "volume", "log_det_tK",
                   "min_eig_K"};
    tab.rows = {{t, density, m, cb.volume, cb.log_det_gram, cb.min_eig_K}};
    emit_table(c, tab);
  }
  return 0;
}

int run_semigroup_apply(Common& c, const kfp::OperatorSpec& spec,
                        const kfp::ScalarField& f, const kfp::Vector& X,
                        double t, bool adjoint) {
  stamp_run_params(c, "semigroup apply");
  c.rc["t"] = t;
  c.rc["x"] = std::vector<double>(X.data(), X.data() + X.size());
  c.rc["adjoint"] = adjoint;
  kfp::MCEstimate e =
      adjoint ? kfp::apply_adjoint(spec, f, X, t, c.samples, c.seed, c.workers)
              : kfp::apply_semigroup(spec, f, X, t, c.samples, c.seed, c.workers);
  if (pick_format(c, "json") == "json") {
    json j;
    j["t"] = t;
    j["value"] = e.value;
    j["std_error"] = e.std_error;
    j["n"] = e.n;
    j["seed"] = e.seed;
    emit_json(c, j);
  } else {
    kfp::ResultTable tab;
    tab.columns = {"t", "value", "std_error", "n"};
    tab.rows = {{t, e.value, e.std_error, static_cast<double>(e.n)}};
    emit_table(c, tab);
  }
  return 0;
}

int run_frac_apply(Common& c, const kfp::OperatorSpec& spec,
                   const kfp::ScalarField& f, const kfp::Vector& X, double s) {
  stamp_run_params(c, "frac apply");
  c.rc["s"] = s;
  c.rc["x"] = std::vector<double>(X.data(), X.data() + X.size());
  kfp::FracQuadSpec q;
  q.tail_budget = c.tol;
  kfp::FracResult r =
      kfp::balakrishnan_apply(spec, f, X, s, q, c.samples, c.seed, c.workers);
  if (pick_format(c, "json") == "json") {
    json j;
    j["s"] = s;
    j["value"] = r.value;
    j["std_error"] = r.std_error;
    j["quad_error"] = r.quad_error;
    j["tail_bound"] = r.tail_bound;
    j["n"] = r.n;
    j["seed"] = r.seed;
    emit_json(c, j);
  } else {
    kfp::ResultTable tab;
    tab.columns = {"s", "value", "std_error", "quad_error", "tail_bound", "n"};
    tab.rows = {{s, r.value, r.std_error, r.quad_error, r.tail_bound,
                 static_cast<double>(r.n)}};
    emit_table(c, tab);
  }
  return 0;
}

int run_frac_invert(Common& c, const kfp::OperatorSpec& spec,
                    const kfp::ScalarField& f, const kfp::Vector& X, double s) {
  stamp_run_params(c, "frac invert");
  c.rc["s"] = s;
  c.rc["x"] = std::vector<double>(X.data(), X.data() + X.size());
  kfp::FracQuadSpec q;
  q.tail_budget = c.tol;
  kfp::InversionReport r =
      kfp::inversion_residual(spec, f, X, s, q, c.samples, c.seed, c.workers);
  if (pick_format(c, "json") == "json") {
    json j;
    j["s"] = s;
    j["riesz_of_frac"] = r.riesz_of_frac;
    j["frac_of_riesz"] = r.frac_of_riesz;
    j["f_at_x"] = r.f_at_X;
    j["residual_rf"] = r.residual_rf;
    j["residual_fr"] = r.residual_fr;
    j["std_error"] = r.std_error;
    j["quad_error"] = r.quad_error;
    j["tail_bound"] = r.tail_bound;
    emit_json(c, j);
  } else {
    kfp::ResultTable tab;
    tab.columns = {"s", "riesz_of_frac", "frac_of_riesz", "f_at_x",
                   "residual_rf", "residual_fr"};
    tab.rows = {{s, r.riesz_of_frac, r.frac_of_riesz, r.f_at_X, r.residual_rf,
                 r.residual_fr}};
    emit_table(c, tab);
  }
  return 0;
}

kfp::ResultTable iso_table(const kfp::IsoSweep& sweep) {
  kfp::ResultTable tab;
  tab.columns = {"measure", "s", "per_value", "quad_err", "mc_err", "ratio"};
  for (const kfp::IsoRow& r : sweep.rows)
    tab.rows.push_back({r.measure, r.s, r.per_value, r.quad_err, r.mc_err, r.ratio});
  return tab;
}

int run_perimeter(Common& c, const kfp::OperatorSpec& spec, kfp::RegionPtr E,
                  double s) {
  stamp_run_params(c, "perimeter");
  c.rc["s"] = s;
  kfp::FracQuadSpec q;
  q.tail_budget = c.tol;
  kfp::IsoSweep sweep =
      kfp::iso_ratio_sweep(spec, {E}, s, q, c.samples, c.seed, c.workers);
  if (pick_format(c, "csv") == "csv") {
    emit_table(c, iso_table(sweep));
  } else {
    const kfp::IsoRow& r = sweep.rows.at(0);
    json j;
    j["measure"] = r.measure;
    j["s"] = r.s;
    j["per_value"] = r.per_value;
    j["quad_err"] = r.quad_err;
    j["mc_err"] = r.mc_err;
    j["ratio"] = r.ratio;
    emit_json(c, j);
  }
  return 0;
}

int run_sweep_iso(Common& c, const kfp::OperatorSpec& spec, double s,
                  const std::string& family, const std::string& dilations,
                  double radius, const std::vector<std::string>& regions) {
  stamp_run_params(c, "sweep iso");
  c.rc["s"] = s;

  std::vector<kfp::RegionPtr> fam;
  if (!regions.empty()) {
    json list = json::array();
    for (const std::string& r : regions) {
      json src = json_source(r, "region");
      list.push_back(src);
      fam.push_back(kfp::parse_region_json(src.dump()));
    }
    c.rc["regions"] = list;
  } else {
    std::string kind = family;
    if (kind == "auto")
      kind = spec.name.rfind("kolmogorov", 0) == 0 ? "kinetic" : "ball";
    std::vector<double> lams = split_doubles(dilations, "dilations");
    kfp::Vector center = kfp::Vector::Zero(spec.dim);
    for (double lam : lams) {
      if (kind == "kinetic")
        fam.push_back(kfp::dilate_kinetic(center, radius, lam));
      else if (kind == "ball")
        fam.push_back(kfp::dilate_ball(center, radius, lam));
      else if (kind == "box")
        fam.push_back(kfp::make_box(center, kfp::Vector::Constant(spec.dim, lam)));
      else
        throw kfp::ConfigError("unknown family '" + family + "'");
    }
    c.rc["family"] = kind;
    c.rc["dilations"] = lams;
    c.rc["radius"] = radius;
  }

  kfp::FracQuadSpec q;
  q.tail_budget = c.tol;
  kfp::IsoSweep sweep =
      kfp::iso_ratio_sweep(spec, fam, s, q, c.samples, c.seed, c.workers);
  if (pick_format(c, "csv") == "csv") {
    emit_table(c, iso_table(sweep));
    if (!c.out.empty())
      std::printf("min_ratio %.6g  max_rel_spread %.6g  rows %zu\n",
                  sweep.min_ratio, sweep.max_rel_spread, sweep.rows.size());
  } else {
    json rows = json::array();
    for (const kfp::IsoRow& r : sweep.rows)
      rows.push_back({{"measure", r.measure},
                      {"s", r.s},
                      {"per_value", r.per_value},
                      {"quad_err", r.quad_err},
                      {"mc_err", r.mc_err},
                      {"ratio", r.ratio}});
    json j;
    j["rows"] = rows;
    j["min_ratio"] = sweep.min_ratio;
    j["max_rel_spread"] = sweep.max_rel_spread;
    j["homogeneous"] = sweep.homogeneous;
    emit_json(c, j);
  }
  return 0;
}

int run_besov_seminorm(Common& c, const kfp::OperatorSpec& spec,
                       const kfp::ScalarField& f, double alpha) {
  stamp_run_params(c, "besov seminorm");
  c.rc["alpha"] = alpha;
  kfp::BesovReport r =
      kfp::besov_seminorm_detail(spec, f, alpha, 1, c.samples, c.seed, c.workers);
  if (pick_format(c, "json") == "json") {
    json j;
    j["alpha"] = alpha;
    j["value"] = r.value;
    j["quad_error"] = r.quad_error;
    j["mc_error"] = r.mc_error;
    j["small_time_exponent"] = r.beta;
    j["divergence_warning"] = r.divergence_warning;
    emit_json(c, j);
  } else {
    kfp::ResultTable tab;
    tab.columns = {"alpha", "value", "quad_err", "mc_err", "beta"};
    tab.rows = {{alpha, r.value, r.quad_error, r.mc_error, r.beta}};
    emit_table(c, tab);
  }
  return 0;
}

int run_besov_coarea(Common& c, const kfp::OperatorSpec& spec,
                     const kfp::ScalarField& f, double s, int levels) {
  stamp_run_params(c, "besov coarea");
  c.rc["s"] = s;
  c.rc["levels"] = levels;
  kfp::LevelSetProfile prof(f);
  kfp::CoareaReport r =
      kfp::coarea_residual(spec, prof, s, levels, c.samples, c.seed, c.workers);
  if (pick_format(c, "csv") == "csv") {
    kfp::ResultTable tab;
    tab.columns = {"sigma", "measure", "per_value"};
    for (size_t j = 0; j < r.sigma.size(); ++j)
      tab.rows.push_back({r.sigma[j], r.level_meas[j], r.per_value[j]});
    emit_table(c, tab);
    if (!c.out.empty())
      std::printf("lhs %.6g  rhs %.6g  residual %.6g\n", r.lhs, r.rhs, r.residual);
  } else {
    json j;
    j["lhs"] = r.lhs;
    j["lhs_err"] = r.lhs_err;
    j["rhs"] = r.rhs;
    j["rhs_err"] = r.rhs_err;
    j["residual"] = r.residual;
    j["sigma"] = r.sigma;
    j["level_measure"] = r.level_meas;
    j["per_value"] = r.per_value;
    emit_json(c, j);
  }
  return 0;
}

int run_besov_sobolev(Common& c, const kfp::OperatorSpec& spec,
                      const kfp::ScalarField& f, double s) {
  stamp_run_params(c, "besov sobolev");
  c.rc["s"] = s;
  kfp::LevelSetProfile prof(f);
  kfp::SobolevReport r =
      kfp::sobolev_ratio(spec, prof, s, c.samples, c.seed, c.workers);
  if (pick_format(c, "json") == "json") {
    json j;
    j["regime"] = r.regime;
    j["D0"] = r.D0;
    j["Dinf"] = r.Dinf;
    j["q0"] = r.q0;
    j["qinf"] = r.qinf;
    j["sigma_f"] = r.sigma_f;
    j["lhs"] = r.lhs;
    j["lhs_err"] = r.lhs_err;
    j["seminorm"] = r.seminorm;
    j["seminorm_err"] = r.seminorm_err;
    j["i_s"] = r.i_s;
    j["rhs"] = r.rhs;
    j["rhs_err"] = r.rhs_err;
    j["ok"] = r.ok;
    emit_json(c, j);
  } else {
    kfp::ResultTable tab;
    tab.columns = {"s", "lhs", "lhs_err", "rhs", "rhs_err", "seminorm", "i_s",
                   "D0", "Dinf", "ok"};
    tab.rows = {{s, r.lhs, r.lhs_err, r.rhs, r.rhs_err, r.seminorm, r.i_s,
                 r.D0, r.Dinf, r.ok ? 1.0 : 0.0}};
    emit_table(c, tab);
  }
  return r.ok ? 0 : 2;
}

std::string csv_quote(const std::string& s) {
  std::string out = "\"";
  for (char ch : s) {
    if (ch == '"') out += "\"\"";
    out += ch;
  }
  out += "\"";
  return out;
}

int run_verify(Common& c, const std::string& suite, const std::string& filter,
               double cn_scale) {
  stamp_run_params(c, "verify");
  c.rc["suite"] = suite;
  if (!filter.empty()) c.rc["filter"] = filter;
  if (cn_scale != 1.0) c.rc["cn_scale"] = cn_scale;

  kfp::VerifyOptions vo;
  vo.level = suite;
  vo.seed = c.seed;
  vo.workers = c.workers;
  vo.cn_scale = cn_scale;
  vo.filter = filter;
  kfp::VerifyReport rep = kfp::run_verify(vo);

  std::printf("# verify suite=%s seed=%llu workers=%d\n", suite.c_str(),
              static_cast<unsigned long long>(c.seed), c.workers);
  for (const kfp::CheckResult& r : rep.checks) {
    std::printf("%-34s %s  measured=%-10.4g tol=%-8.4g %6.2fs  %s\n",
                r.name.c_str(), r.pass ? "PASS" : "FAIL", r.measured,
                r.tolerance, r.seconds, r.detail.c_str());
  }
  std::printf("# failed %d of %zu, %.1fs\n", rep.failed, rep.checks.size(),
              rep.seconds);

  if (!c.out.empty()) {
    if (pick_format(c, "csv") == "csv") {
      // Hand-rolled: the report mixes strings and numbers. No timings, so
      // repeated runs are byte-identical.
      std::string text = "# config: " + c.rc.dump() + "\n";
      text += "name,criterion,pass,measured,tolerance,detail\n";
      char buf[64];
      for (const kfp::CheckResult& r : rep.checks) {
        text += r.name + "," + std::to_string(r.criterion) + ",";
        text += r.pass ? "1," : "0,";
        std::snprintf(buf, sizeof(buf), "%.12g,", r.measured);
        text += buf;
        std::snprintf(buf, sizeof(buf), "%.12g,", r.tolerance);
        text += buf;
        text += csv_quote(r.detail) + "\n";
      }
      write_artifact(c, text);
    } else {
      json checks = json::array();
      for (const kfp::CheckResult& r : rep.checks)
        checks.push_back({{"name", r.name},
                          {"statement", r.statement},
                          {"criterion", r.criterion},
                          {"pass", r.pass},
                          {"measured", r.measured},
                          {"tolerance", r.tolerance},
                          {"detail", r.detail}});
      json j;
      j["checks"] = checks;
      j["failed"] = rep.failed;
      emit_json(c, j);
    }
  }
  return rep.failed ? 3 : 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"semigroup calculus for degenerate Kolmogorov-Fokker-Planck operators"};
  app.require_subcommand(1);
  app.fallthrough();

  Common c;
  auto* seed_opt = app.add_option("--seed", c.seed, "master RNG seed");
  auto* samples_opt = app.add_option("--samples", c.samples, "Monte Carlo budget");
  auto* workers_opt = app.add_option("--workers", c.workers, "worker threads")
                          ->check(CLI::PositiveNumber);
  auto* tol_opt = app.add_option("--tol", c.tol, "quadrature tail budget");
  app.add_option("--out", c.out, "output file (default stdout)");
  app.add_option("--format", c.format, "artifact format")
      ->check(CLI::IsMember({"csv", "json"}));
  app.add_option("--config", c.config_path, "JSON config file");

  // Runs first in every subcommand callback: load the config file and fill
  // in whatever the command line left unset. Flags beat config beats default.
  auto finalize = [&] {
    if (!c.config_path.empty()) {
      c.config = parse_json_or_die(slurp(c.config_path), "config");
      if (!c.config.is_object())
        throw kfp::ConfigError("config must be a JSON object");
      try {
        if (!seed_opt->count() && c.config.contains("seed"))
          c.seed = c.config["seed"].get<uint64_t>();
        if (!samples_opt->count() && c.config.contains("samples"))
          c.samples = c.config["samples"].get<uint64_t>();
        if (!workers_opt->count() && c.config.contains("workers"))
          c.workers = c.config["workers"].get<int>();
        if (!tol_opt->count() && c.config.contains("tol"))
          c.tol = c.config["tol"].get<double>();
        if (c.format.empty() && c.config.contains("format"))
          c.format = c.config["format"].get<std::string>();
      } catch (const json::exception& e) {
        throw kfp::ConfigError(std::string("config: ") + e.what());
      }
      if (!c.format.empty() && c.format != "csv" && c.format != "json")
        throw kfp::ConfigError("format must be csv or json");
    }
    if (c.workers < 1) throw kfp::ConfigError("workers must be >= 1");
  };

  // Operator source flags shared by every subcommand that needs one.
  std::string cat, op_arg, region_arg, field_arg, x_arg, y_arg;
  int param = 0;
  auto add_operator_flags = [&](CLI::App* sub) {
    sub->add_option("--catalog", cat, "catalog operator name");
    sub->add_option("--param", param, "catalog parameter (dimension/blocks)");
    sub->add_option("--operator", op_arg, "operator JSON (inline or file)");
  };

  double t = 0.0, s = 0.0, alpha = 0.0, radius = 1.0, cn_scale = 1.0;
  int levels = 8;
  bool adjoint = false;
  std::string family = "auto", dilations = "0.5,1,2", suite = "core", filter;
  std::vector<std::string> sweep_regions;

  int rc = 0;

  CLI::App* op = app.add_subcommand("operator", "inspect and validate operators");
  op->require_subcommand(1);
  op->fallthrough();
  CLI::App* op_info = op->add_subcommand("info", "dimensions, volumes, trace");
  add_operator_flags(op_info);
  op_info->fallthrough();
  op_info->callback([&] {
    finalize();
    rc = run_operator_info(c, resolve_operator(c, cat, param, op_arg));
  });
  CLI::App* op_val = op->add_subcommand("validate", "PSD and hypoellipticity gates");
  add_operator_flags(op_val);
  op_val->fallthrough();
  op_val->callback([&] {
    finalize();
    rc = run_operator_validate(c, resolve_operator(c, cat, param, op_arg));
  });

  CLI::App* kernel = app.add_subcommand("kernel", "transition kernel");
  kernel->require_subcommand(1);
  kernel->fallthrough();
  CLI::App* keval = kernel->add_subcommand("eval", "p(X,Y,t) and the pseudo-distance");
  add_operator_flags(keval);
  keval->fallthrough();
  auto* keval_t = keval->add_option("--t", t, "time");
  keval->add_option("--x", x_arg, "start point, comma separated");
  keval->add_option("--y", y_arg, "end point, comma separated");
  keval->callback([&] {
    finalize();
    kfp::OperatorSpec spec = resolve_operator(c, cat, param, op_arg);
    double tt = resolve_num(c, keval_t, t, "t", std::nan(""));
    kfp::Vector X = resolve_point(c, x_arg, "x", spec.dim, true);
    kfp::Vector Y = resolve_point(c, y_arg, "y", spec.dim, true);
    rc = run_kernel_eval(c, spec, tt, X, Y);
  });

  CLI::App* semi = app.add_subcommand("semigroup", "semigroup action");
  semi->require_subcommand(1);
  semi->fallthrough();
  CLI::App* sapply = semi->add_subcommand("apply", "P_t f(X) by exact sampling");
  add_operator_flags(sapply);
  sapply->fallthrough();
  auto* sapply_t = sapply->add_option("--t", t, "time");
  sapply->add_option("--x", x_arg, "evaluation point");
  sapply->add_option("--field", field_arg, "field JSON, file, gaussian:s, bump:R");
  sapply->add_flag("--adjoint", adjoint, "apply the adjoint semigroup");
  sapply->callback([&] {
    finalize();
    kfp::OperatorSpec spec = resolve_operator(c, cat, param, op_arg);
    double tt = resolve_num(c, sapply_t, t, "t", std::nan(""));
    kfp::ScalarField f = resolve_field(c, field_arg, spec.dim);
    kfp::Vector X = resolve_point(c, x_arg, "x", spec.dim, false);
    rc = run_semigroup_apply(c, spec, f, X, tt, adjoint);
  });

  CLI::App* frac = app.add_subcommand("frac", "fractional powers and potentials");
  frac->require_subcommand(1);
  frac->fallthrough();
  CLI::App* fapply = frac->add_subcommand("apply", "(-A)^s f(X)");
  add_operator_flags(fapply);
  fapply->fallthrough();
  auto* fapply_s = fapply->add_option("--s", s, "fractional order in (0,1)");
  fapply->add_option("--x", x_arg, "evaluation point");
  fapply->add_option("--field", field_arg, "field JSON, file, gaussian:s, bump:R");
  fapply->callback([&] {
    finalize();
    kfp::OperatorSpec spec = resolve_operator(c, cat, param, op_arg);
    double ss = resolve_num(c, fapply_s, s, "s", std::nan(""));
    kfp::ScalarField f = resolve_field(c, field_arg, spec.dim);
    kfp::Vector X = resolve_point(c, x_arg, "x", spec.dim, false);
    rc = run_frac_apply(c, spec, f, X, ss);
  });
  CLI::App* finv = frac->add_subcommand("invert", "I_2s((-A)^s f) and the reverse order");
  add_operator_flags(finv);
  finv->fallthrough();
  auto* finv_s = finv->add_option("--s", s, "fractional order in (0,1/2)");
  finv->add_option("--x", x_arg, "evaluation point");
  finv->add_option("--field", field_arg, "field JSON, file, gaussian:s, bump:R");
  finv->callback([&] {
    finalize();
    kfp::OperatorSpec spec = resolve_operator(c, cat, param, op_arg);
    double ss = resolve_num(c, finv_s, s, "s", std::nan(""));
    kfp::ScalarField f = resolve_field(c, field_arg, spec.dim);
    kfp::Vector X = resolve_point(c, x_arg, "x", spec.dim, false);
    rc = run_frac_invert(c, spec, f, X, ss);
  });

  CLI::App* per = app.add_subcommand("perimeter", "fractional perimeter of a region");
  add_operator_flags(per);
  per->fallthrough();
  auto* per_s = per->add_option("--s", s, "perimeter order in (0,1/2)");
  per->add_option("--region", region_arg, "region JSON, file, ball:R, box:L");
  per->callback([&] {
    finalize();
    kfp::OperatorSpec spec = resolve_operator(c, cat, param, op_arg);
    double ss = resolve_num(c, per_s, s, "s", std::nan(""));
    kfp::RegionPtr E = resolve_region(c, region_arg, spec.dim);
    rc = run_perimeter(c, spec, E, ss);
  });

  CLI::App* sweep = app.add_subcommand("sweep", "parameter sweeps");
  sweep->require_subcommand(1);
  sweep->fallthrough();
  CLI::App* siso = sweep->add_subcommand("iso", "isoperimetric ratio across dilates");
  add_operator_flags(siso);
  siso->fallthrough();
  auto* siso_s = siso->add_option("--s", s, "perimeter order in (0,1/2)");
  siso->add_option("--family", family, "kinetic | ball | box | auto")
      ->check(CLI::IsMember({"auto", "kinetic", "ball", "box"}));
  siso->add_option("--dilations", dilations, "comma list of scale factors");
  siso->add_option("--radius", radius, "base radius of the dilated ball");
  siso->add_option("--regions", sweep_regions, "explicit region JSONs/files");
  siso->callback([&] {
    finalize();
    kfp::OperatorSpec spec = resolve_operator(c, cat, param, op_arg);
    double ss = resolve_num(c, siso_s, s, "s", std::nan(""));
    rc = run_sweep_iso(c, spec, ss, family, dilations, radius, sweep_regions);
  });

  CLI::App* besov = app.add_subcommand("besov", "seminorms, coarea, embeddings");
  besov->require_subcommand(1);
  besov->fallthrough();
  CLI::App* bsem = besov->add_subcommand("seminorm", "heat seminorm of a field");
  add_operator_flags(bsem);
  bsem->fallthrough();
  auto* bsem_alpha = bsem->add_option("--alpha", alpha, "order in (0,1)");
  auto* bsem_s = bsem->add_option("--s", s, "half order: alpha = 2s");
  bsem_alpha->excludes(bsem_s);
  bsem->add_option("--field", field_arg, "field JSON, file, gaussian:s, bump:R");
  bsem->callback([&] {
    finalize();
    kfp::OperatorSpec spec = resolve_operator(c, cat, param, op_arg);
    double a;
    if (bsem_alpha->count())
      a = alpha;
    else
      a = 2.0 * resolve_num(c, bsem_s, s, "s", std::nan(""));
    kfp::ScalarField f = resolve_field(c, field_arg, spec.dim);
    rc = run_besov_seminorm(c, spec, f, a);
  });
  CLI::App* bco = besov->add_subcommand("coarea", "level-set decomposition of the seminorm");
  add_operator_flags(bco);
  bco->fallthrough();
  auto* bco_s = bco->add_option("--s", s, "perimeter order in (0,1/2)");
  bco->add_option("--levels", levels, "level quadrature nodes")
      ->check(CLI::PositiveNumber);
  bco->add_option("--field", field_arg, "quasi-concave profile (gaussian/bump)");
  bco->callback([&] {
    finalize();
    kfp::OperatorSpec spec = resolve_operator(c, cat, param, op_arg);
    double ss = resolve_num(c, bco_s, s, "s", std::nan(""));
    kfp::ScalarField f = resolve_field(c, field_arg, spec.dim);
    rc = run_besov_coarea(c, spec, f, ss, levels);
  });
  CLI::App* bsob = besov->add_subcommand("sobolev", "embedding check for a profile");
  add_operator_flags(bsob);
  bsob->fallthrough();
  auto* bsob_s = bsob->add_option("--s", s, "order in (0,1/2)");
  bsob->add_option("--field", field_arg, "quasi-concave profile (gaussian/bump)");
  bsob->callback([&] {
    finalize();
    kfp::OperatorSpec spec = resolve_operator(c, cat, param, op_arg);
    double ss = resolve_num(c, bsob_s, s, "s", std::nan(""));
    kfp::ScalarField f = resolve_field(c, field_arg, spec.dim);
    rc = run_besov_sobolev(c, spec, f, ss);
  });

  CLI::App* verify = app.add_subcommand("verify", "run the verification suite");
  verify->fallthrough();
  verify->add_option("--suite", suite, "core | full")
      ->check(CLI::IsMember({"core", "full"}));
  verify->add_option("--filter", filter, "run only checks whose name contains this");
  verify->add_option("--cn-scale", cn_scale,
                     "kernel constant mutation for self-tests (honest runs use 1)");
  verify->callback([&] {
    finalize(); rc = run_verify(c, suite, filter, cn_scale); });

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    int code = app.exit(e);
    return code == 0 ? 0 : 64;
  } catch (const kfp::ConfigError& e) {
    std::fprintf(stderr, "kfp: config error: %s\n", e.what());
    return 66;
  } catch (const kfp::Error& e) {
    std::fprintf(stderr, "kfp: %s\n", e.what());
    return 2;
  } catch (const std::exception& e) {
    std::fprintf(stderr, "kfp: internal error: %s\n", e.what());
    return 70;
  }
  return rc;
}
