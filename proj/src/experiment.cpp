#include "zrec/experiment.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <numbers>
#include <set>

#include "zrec/parallel.hpp"
#include "zrec/recurrence.hpp"
#include "zrec/stats.hpp"

#ifndef ZREC_VERSION
#define ZREC_VERSION "0.0.0"
#endif
#ifndef ZREC_GIT_DESCRIBE
#define ZREC_GIT_DESCRIBE "v" ZREC_VERSION
#endif

namespace zrec {

std::string version_string() { return ZREC_GIT_DESCRIBE; }

std::string csv_number(double v) {
    char buf[40];
    std::snprintf(buf, sizeof buf, "%.17g", v);
    return buf;
}

std::string csv_field(const std::string& s) {
    if (s.find_first_of(",\"\r\n") == std::string::npos) return s;
    std::string out = "\"";
    for (char c : s) {
        if (c == '"') out += '"';
        out += c;
    }
    return out + "\"";
}

namespace {

[[noreturn]] void invalid(const std::string& what) { throw Error(ErrorCode::ConfigInvalid, what); }

void check_keys(const Json& obj, const std::string& where, std::initializer_list<const char*> allowed) {
    if (!obj.is_object()) invalid(where + " must be an object");
    for (const auto& [key, value] : obj.items()) {
        (void)value;
        if (std::none_of(allowed.begin(), allowed.end(), [&](const char* a) { return key == a; }))
            invalid("unknown key '" + key + "' in " + where);
    }
}

const Json& require(const Json& obj, const char* key, const std::string& where) {
    if (!obj.contains(key)) invalid("missing key '" + std::string(key) + "' in " + where);
    return obj.at(key);
}

double as_number(const Json& v, const std::string& where) {
    if (!v.is_number()) invalid(where + " must be a number");
    return v.get<double>();
}

long long as_integer(const Json& v, const std::string& where) {
    if (v.is_number_integer()) return v.get<long long>();
    if (v.is_number_float()) {
        const double d = v.get<double>();
        if (d == std::floor(d) && std::abs(d) < 9e15) return static_cast<long long>(d);
    }
    invalid(where + " must be an integer");
}

std::vector<double> as_number_list(const Json& v, const std::string& where) {
    if (!v.is_array() || v.empty()) invalid(where + " must be a nonempty array of numbers");
    std::vector<double> out;
    for (const auto& x : v) out.push_back(as_number(x, where));
    return out;
}

std::vector<int> as_int_list(const Json& v, const std::string& where) {
    if (!v.is_array() || v.empty()) invalid(where + " must be a nonempty array of integers");
    std::vector<int> out;
    for (const auto& x : v) out.push_back(static_cast<int>(as_integer(x, where)));
    return out;
}

ShiftSpace parse_shift(const Json& spec) {
    check_keys(spec, "model.shift", {"alphabet", "transitions"});
    const long long n = as_integer(require(spec, "alphabet", "model.shift"), "model.shift.alphabet");
    const Json& rows = require(spec, "transitions", "model.shift");
    if (!rows.is_array()) invalid("model.shift.transitions must be an array of rows");
    std::vector<std::vector<int>> matrix;
    for (const auto& row : rows) {
        if (!row.is_array()) invalid("model.shift.transitions must be an array of rows");
        std::vector<int> r;
        for (const auto& x : row) r.push_back(static_cast<int>(as_integer(x, "model.shift.transitions entry")));
        matrix.push_back(std::move(r));
    }
    return validate_shift(static_cast<int>(n), matrix);
}

}  // namespace

LocallyConstantFunction parse_function(const ShiftSpace& shift, const Json& spec, const std::string& where) {
    check_keys(spec, where, {"depth", "values", "constant", "symmetrize"});
    const int depth = spec.contains("depth") ? static_cast<int>(as_integer(spec.at("depth"), where + ".depth")) : 1;
    if (depth < 1) invalid(where + ".depth must be positive");
    LocallyConstantFunction f;
    if (spec.contains("constant") == spec.contains("values")) invalid(where + " needs exactly one of 'values' or 'constant'");
    try {
        if (spec.contains("constant")) {
            const double c = as_number(spec.at("constant"), where + ".constant");
            f = LocallyConstantFunction(shift, depth, std::vector<double>(shift.code_space(depth), c));
        } else {
            const Json& values = spec.at("values");
            if (!values.is_object()) invalid(where + ".values must be an object");
            std::map<std::string, double> table;
            for (const auto& [word, v] : values.items()) table[word] = as_number(v, where + ".values." + word);
            f = LocallyConstantFunction::from_words(shift, depth, table);
        }
        if (spec.contains("symmetrize")) {
            if (!spec.at("symmetrize").is_boolean()) invalid(where + ".symmetrize must be a boolean");
            if (spec.at("symmetrize").get<bool>()) f = symmetrize(shift, f);
        }
    } catch (const Error& e) {
        if (e.code() == ErrorCode::InvalidArgument) invalid(where + ": " + e.what());
        throw;
    }
    return f;
}

Json function_to_json(const LocallyConstantFunction& f) {
    Json values = Json::object();
    for (const auto& [word, v] : f.to_words()) values[word] = v;
    return Json{{"depth", f.depth()}, {"values", values}};
}

namespace {

Json default_params(const std::string& kind) {
    if (kind == "gibbs") return Json{{"q_max", 6}};
    if (kind == "llt") return Json{{"n_list", {4, 100, 1000, 10000}}, {"aperiodicity_grid", 64}};
    if (kind == "return-dist")
        return Json{{"cylinders", Json::array({Json{{"q", 0}, {"q_prime", 0}, {"word", "a"}}})},
                    {"trials", 10000},
                    {"cap", 10000000}};
    if (kind == "as-exponent")
        return Json{{"q_list", {1, 2, 3}}, {"trials", 500}, {"cap", 100000000}, {"bootstrap", 200},
                    {"max_capped_fraction", 0.2}};
    if (kind == "flow-clt")
        return Json{{"t", 10000.0},
                    {"trials", 1000},
                    {"ratio_q", 0},
                    {"ratio_q_prime", 0},
                    {"ratio_word", "a"},
                    {"ratio_trials", 10000},
                    {"ratio_cap", 10000000},
                    {"ratio_w_thresholds", {1000, 10000, 100000}},
                    {"lyapunov_t", 100000.0},
                    {"lyapunov_trials", 20},
                    {"roof_scale", 2.0}};
    if (kind == "dvoretzky") return Json{{"n_max", 12}, {"max_length", 2}, {"cap", 50000000}};
    if (kind == "quadrature-check")
        return Json{{"eps_list", {0.1, 0.01}},
                    {"quad_points", 512},
                    {"t_grid", {0.5, 1.0, 2.0, 5.0}},
                    {"sigma_list", {0.5, 1.0, 2.0}}};
    invalid("unknown experiment kind '" + kind + "'");
}

Json default_thresholds(const std::string& kind) {
    auto below = [](double v) { return Json{{"max", v}}; };
    if (kind == "gibbs")
        return Json{{"variational_residual", below(1e-10)},
                    {"stationary_residual", below(1e-12)},
                    {"row_sum_residual", below(1e-12)}};
    if (kind == "llt") return Json{{"llt_ratio_last", Json{{"min", 0.98}, {"max", 1.02}}}};
    if (kind == "return-dist") return Json{{"ks_first", below(0.05)}, {"ks_trend", below(0.02)}};
    if (kind == "as-exponent")
        return Json{{"slope_rel_error", below(0.15)}, {"dimension_identity_residual", below(1e-12)}};
    if (kind == "flow-clt")
        return Json{{"variance_rel_error", below(0.1)}, {"ratio_mean_abs_dev_10000", below(0.02)}};
    if (kind == "dvoretzky") return Json{{"max_relative_residual", below(1e-12)}, {"max_nested_no_visit", below(0.0)}};
    if (kind == "quadrature-check")
        return Json{{"semicircle_max_error", below(1e-6)}, {"integral_equation_max_residual", below(1e-8)}};
    return Json::object();
}

bool kind_needs_system(const std::string& kind) {
    return kind == "llt" || kind == "return-dist" || kind == "as-exponent" || kind == "flow-clt" || kind == "dvoretzky";
}

void validate_params(const std::string& kind, const Json& params) {
    const Json defaults = default_params(kind);
    for (const auto& [key, value] : params.items()) {
        if (!defaults.contains(key)) invalid("unknown key '" + key + "' in params for kind " + kind);
        const Json& d = defaults.at(key);
        const bool ok = (d.is_number() && value.is_number()) || (d.is_string() && (value.is_string() || value.is_null())) ||
                        (d.is_array() && value.is_array());
        if (!ok) invalid("params." + key + " has the wrong type");
    }
}

void validate_thresholds(const Json& thresholds) {
    if (!thresholds.is_object()) invalid("thresholds must be an object");
    for (const auto& [name, spec] : thresholds.items()) {
        check_keys(spec, "thresholds." + name, {"min", "max", "expected", "tol"});
        for (const auto& [k, v] : spec.items()) as_number(v, "thresholds." + name + "." + k);
        if (spec.contains("expected") != spec.contains("tol"))
            invalid("thresholds." + name + " needs both 'expected' and 'tol'");
    }
}

}  // namespace

ExperimentConfig parse_config(const Json& document) {
    check_keys(document, "config", {"kind", "seed", "output", "model", "system", "params", "thresholds"});
    ExperimentConfig cfg;
    const Json& kind = require(document, "kind", "config");
    if (!kind.is_string() ||
        std::find(kExperimentKinds.begin(), kExperimentKinds.end(), kind.get<std::string>()) == kExperimentKinds.end())
        invalid("config.kind must be one of gibbs, llt, return-dist, as-exponent, flow-clt, dvoretzky, quadrature-check");
    cfg.kind = kind.get<std::string>();

    const Json& seed = require(document, "seed", "config");
    if (!seed.is_number_unsigned() && !(seed.is_number_integer() && seed.get<long long>() >= 0))
        invalid("config.seed must be a nonnegative 64-bit integer");
    cfg.seed = seed.get<std::uint64_t>();

    if (document.contains("output")) {
        if (!document.at("output").is_string()) invalid("config.output must be a string");
        cfg.output = document.at("output").get<std::string>();
    }

    if (document.contains("params")) {
        if (!document.at("params").is_object()) invalid("config.params must be an object");
        validate_params(cfg.kind, document.at("params"));
    }
    cfg.params = default_params(cfg.kind);
    if (document.contains("params"))
        for (const auto& [k, v] : document.at("params").items()) cfg.params[k] = v;

    cfg.thresholds = default_thresholds(cfg.kind);
    if (document.contains("thresholds")) {
        validate_thresholds(document.at("thresholds"));
        for (const auto& [k, v] : document.at("thresholds").items()) cfg.thresholds[k] = v;
    }

    const bool needs_model = cfg.kind != "quadrature-check";
    if (document.contains("model")) {
        const Json& m = document.at("model");
        check_keys(m, "model", {"shift", "potential"});
        const ShiftSpace shift = parse_shift(require(m, "shift", "model"));
        const LocallyConstantFunction potential = parse_function(shift, require(m, "potential", "model"), "model.potential");
        cfg.model = build_gibbs(shift, potential);
    } else if (needs_model) {
        invalid("config.model is required for kind " + cfg.kind);
    }

    if (document.contains("system")) {
        if (!cfg.model) invalid("config.system needs config.model");
        const Json& s = document.at("system");
        check_keys(s, "system", {"roof", "expansion_u", "expansion_s", "cocycle"});
        const ShiftSpace& shift = cfg.model->shift;
        const auto fn = [&](const char* key, double fallback) {
            return s.contains(key) ? parse_function(shift, s.at(key), std::string("system.") + key)
                                   : LocallyConstantFunction::constant(shift, fallback);
        };
        auto cocycle = parse_function(shift, require(s, "cocycle", "system"), "system.cocycle");
        if (!cocycle.integer_valued()) invalid("system.cocycle must be integer valued");
        cfg.system = make_suspension(*cfg.model, fn("roof", 1.0), fn("expansion_u", std::numbers::ln2),
                                     fn("expansion_s", -std::numbers::ln2), std::move(cocycle));
    } else if (kind_needs_system(cfg.kind)) {
        invalid("config.system is required for kind " + cfg.kind);
    }

    cfg.source = document;
    return cfg;
}

// ---------------------------------------------------------------------------
// Presets

namespace {

Json full_shift(int n) {
    Json rows = Json::array();
    for (int i = 0; i < n; ++i) rows.push_back(std::vector<int>(static_cast<std::size_t>(n), 1));
    return Json{{"alphabet", n}, {"transitions", rows}};
}

Json golden_shift() { return Json{{"alphabet", 2}, {"transitions", {{1, 1}, {1, 0}}}}; }

Json constant_fn(double v) { return Json{{"depth", 1}, {"constant", v}}; }

Json values_fn(int depth, Json values) { return Json{{"depth", depth}, {"values", std::move(values)}}; }

Json expect(double v, double tol) { return Json{{"expected", v}, {"tol", tol}}; }

Json trinomial_system(Json roof) {
    return Json{{"roof", std::move(roof)},
                {"expansion_u", values_fn(1, {{"a", std::log(2.0)}, {"b", std::log(3.0)}, {"c", std::log(2.0)}})},
                {"expansion_s", values_fn(1, {{"a", -std::log(3.0)}, {"b", -std::log(2.0)}, {"c", -std::log(3.0)}})},
                {"cocycle", values_fn(1, {{"a", -1}, {"b", 0}, {"c", 1}})}};
}

}  // namespace

Json preset(const std::string& name) {
    const double g = (1.0 + std::sqrt(5.0)) / 2.0;
    if (name == "bernoulli2") {
        return Json{{"kind", "gibbs"},
                    {"seed", 1},
                    {"model", {{"shift", full_shift(2)}, {"potential", constant_fn(-std::log(2.0))}}},
                    {"system", {{"roof", constant_fn(1.0)}, {"cocycle", values_fn(1, {{"a", 1}, {"b", -1}})}}},
                    {"params", {{"q_max", 8}}},
                    {"thresholds",
                     {{"pressure", expect(0.0, 1e-12)},
                      {"entropy", expect(std::log(2.0), 1e-12)},
                      {"gibbs_ratio_min", expect(1.0, 1e-12)},
                      {"gibbs_ratio_max", expect(1.0, 1e-12)}}}};
    }
    if (name == "trinomial3" || name == "varroof-trinomial") {
        const bool var = name == "varroof-trinomial";
        Json roof = var ? values_fn(1, {{"a", 1.0}, {"b", 2.0}, {"c", 1.5}}) : constant_fn(1.0);
        Json cfg{{"kind", var ? "flow-clt" : "llt"},
                 {"seed", 20240607},
                 {"model", {{"shift", full_shift(3)}, {"potential", constant_fn(-std::log(3.0))}}},
                 {"system", trinomial_system(std::move(roof))}};
        if (var) {
            cfg["params"] = {{"t", 10000.0}, {"trials", 1000}, {"ratio_q", 0}, {"ratio_q_prime", 0},
                             {"ratio_word", "b"}, {"ratio_trials", 10000}, {"ratio_cap", 10000000}};
            cfg["thresholds"] = {{"variance_rel_error", {{"max", 0.1}}}, {"ratio_mean_abs_dev_10000", {{"max", 0.02}}}};
        } else {
            cfg["params"] = {{"n_list", {4, 100, 1000, 10000}}};
            cfg["thresholds"] = {{"sigma2", expect(2.0 / 3.0, 1e-12)},
                                 {"dp_var_over_n_64", expect(2.0 / 3.0, 1e-12)},
                                 {"dp_var_over_n_256", expect(2.0 / 3.0, 1e-12)},
                                 {"llt_ratio_4", expect(std::sqrt(16.0 * std::numbers::pi / 3.0) * 19.0 / 81.0, 1e-12)},
                                 {"llt_ratio_last", {{"min", 0.98}, {"max", 1.02}}}};
        }
        return cfg;
    }
    if (name == "golden-mme" || name == "golden-coboundary") {
        const bool cob = name == "golden-coboundary";
        Json cfg{{"kind", cob ? "llt" : "gibbs"},
                 {"seed", 7},
                 {"model", {{"shift", golden_shift()}, {"potential", constant_fn(0.0)}}}};
        if (cob) {
            cfg["system"] = {{"cocycle", values_fn(2, {{"aa", 0}, {"ab", 1}, {"ba", -1}})}};
            cfg["params"] = {{"n_list", {4, 100}}};
        } else {
            cfg["params"] = {{"q_max", 8}};
            cfg["thresholds"] = {{"pressure", expect(std::log(g), 1e-10)},
                                 {"entropy_pressure_gap", expect(0.0, 1e-10)},
                                 {"gibbs_constant_empirical", {{"max", 2.62}}}};
        }
        return cfg;
    }
    throw Error(ErrorCode::UnknownPreset, "unknown preset '" + name + "'");
}

const std::string& config_schema() {
    static const std::string schema = R"json({
  "$schema": "http://json-schema.org/draft-07/schema#",
  "title": "zrec experiment config",
  "type": "object",
  "additionalProperties": false,
  "required": ["kind", "seed"],
  "properties": {
    "kind": {"enum": ["gibbs", "llt", "return-dist", "as-exponent", "flow-clt", "dvoretzky", "quadrature-check"]},
    "seed": {"type": "integer", "minimum": 0, "maximum": 18446744073709551615},
    "output": {"type": "string"},
    "model": {
      "type": "object",
      "additionalProperties": false,
      "required": ["shift", "potential"],
      "properties": {
        "shift": {
          "type": "object",
          "additionalProperties": false,
          "required": ["alphabet", "transitions"],
          "properties": {
            "alphabet": {"type": "integer", "minimum": 1, "maximum": 26},
            "transitions": {"type": "array", "items": {"type": "array", "items": {"enum": [0, 1]}}}
          }
        },
        "potential": {"$ref": "#/definitions/fn"}
      }
    },
    "system": {
      "type": "object",
      "additionalProperties": false,
      "required": ["cocycle"],
      "properties": {
        "roof": {"$ref": "#/definitions/fn", "description": "default: constant 1"},
        "expansion_u": {"$ref": "#/definitions/fn", "description": "log a^u > 0; default: constant log 2"},
        "expansion_s": {"$ref": "#/definitions/fn", "description": "log a^s < 0; default: constant -log 2"},
        "cocycle": {"$ref": "#/definitions/fn", "description": "integer valued, exactly centered"}
      }
    },
    "params": {
      "type": "object",
      "description": "kind-specific; unknown keys are rejected",
      "properties": {
        "q_max": {"type": "integer", "description": "gibbs: longest cylinder word (default 6)"},
        "n_list": {"type": "array", "items": {"type": "integer"}, "description": "llt: sizes n (default [4,100,1000,10000])"},
        "aperiodicity_grid": {"type": "integer", "description": "llt: theta grid size (default 64)"},
        "cylinders": {
          "type": "array",
          "description": "return-dist: cylinders; word null means a nu-random window",
          "items": {
            "type": "object",
            "additionalProperties": false,
            "required": ["q", "q_prime"],
            "properties": {"q": {"type": "integer"}, "q_prime": {"type": "integer"}, "word": {"type": ["string", "null"]}}
          }
        },
        "trials": {"type": "integer"},
        "cap": {"type": "integer"},
        "q_list": {"type": "array", "items": {"type": "integer"}, "description": "as-exponent (default [1,2,3])"},
        "bootstrap": {"type": "integer", "description": "as-exponent: bootstrap resamples (default 200)"},
        "max_capped_fraction": {"type": "number", "description": "as-exponent (default 0.2)"},
        "t": {"type": "number", "description": "flow-clt: horizon (default 1e4)"},
        "ratio_q": {"type": "integer"},
        "ratio_q_prime": {"type": "integer"},
        "ratio_word": {"type": ["string", "null"]},
        "ratio_trials": {"type": "integer"},
        "ratio_cap": {"type": "integer"},
        "ratio_w_thresholds": {"type": "array", "items": {"type": "integer"}},
        "lyapunov_t": {"type": "number"},
        "lyapunov_trials": {"type": "integer"},
        "roof_scale": {"type": "number"},
        "n_max": {"type": "integer", "description": "dvoretzky: n = 0..n_max (default 12)"},
        "max_length": {"type": "integer", "description": "dvoretzky: longest cylinder word (default 2)"},
        "eps_list": {"type": "array", "items": {"type": "number"}},
        "quad_points": {"type": "integer"},
        "t_grid": {"type": "array", "items": {"type": "number"}},
        "sigma_list": {"type": "array", "items": {"type": "number"}}
      }
    },
    "thresholds": {
      "type": "object",
      "description": "metric name -> bounds; merged over the kind defaults",
      "additionalProperties": {
        "type": "object",
        "additionalProperties": false,
        "properties": {"min": {"type": "number"}, "max": {"type": "number"}, "expected": {"type": "number"}, "tol": {"type": "number"}}
      }
    }
  },
  "definitions": {
    "fn": {
      "type": "object",
      "additionalProperties": false,
      "properties": {
        "depth": {"type": "integer", "minimum": 1},
        "values": {"type": "object", "additionalProperties": {"type": "number"}, "description": "every admissible depth-word, letters a, b, c, ..."},
        "constant": {"type": "number"},
        "symmetrize": {"type": "boolean", "description": "replace f(w) by f(w) - f(reverse w)"}
      }
    }
  }
}
)json";
    return schema;
}

// ---------------------------------------------------------------------------
// Runner

namespace {

using Metrics = Json;  // flat name -> number

struct Context {
    const ExperimentConfig& cfg;
    std::uint64_t seed;
    unsigned threads;
    std::filesystem::path out_dir;
    bool write_files;
    std::vector<std::string> files;
    Metrics metrics = Json::object();
    Json details = Json::object();

    const Json& param(const char* key) const { return cfg.params.at(key); }
    long long int_param(const char* key) const { return as_integer(param(key), std::string("params.") + key); }
    double num_param(const char* key) const { return as_number(param(key), std::string("params.") + key); }

    void write_csv(const std::string& name, const std::string& header, const std::vector<std::string>& rows) {
        if (!write_files) return;
        std::filesystem::create_directories(out_dir);
        const auto path = out_dir / name;
        std::ofstream os(path, std::ios::binary);
        if (!os) throw Error(ErrorCode::Io, "cannot write " + path.string());
        os << header << "\r\n";
        for (const auto& r : rows) os << r << "\r\n";
        if (!os) throw Error(ErrorCode::Io, "failed writing " + path.string());
        files.push_back(path.string());
    }
};

const SuspensionSystem& need_system(const Context& ctx) { return *ctx.cfg.system; }

// Variance first, then the lattice check, so coboundaries report Degenerate.
VarianceReport checked_variance(Context& ctx, const SuspensionSystem& sys) {
    VarianceReport var = green_kubo_variance(sys.model, sys.cocycle);
    ctx.metrics["sigma2"] = var.sigma2;
    for (const auto& [n, v] : var.dp_check) ctx.metrics["dp_var_over_n_" + std::to_string(n)] = v;
    if (var.degenerate)
        throw Error(ErrorCode::Degenerate, "cocycle variance " + csv_number(var.sigma2) + " is below 1e-10");
    const int grid = ctx.cfg.params.contains("aperiodicity_grid")
                         ? static_cast<int>(ctx.int_param("aperiodicity_grid"))
                         : 64;
    const AperiodicityReport ap = cocycle_aperiodicity(sys.model, sys.cocycle, grid);
    ctx.metrics["aperiodicity_max_radius"] = ap.max_radius;
    if (ap.periodic)
        throw Error(ErrorCode::Periodic, "twisted transfer matrix has spectral radius 1 at theta = " +
                                             csv_number(ap.theta_at_max));
    return var;
}

void run_gibbs(Context& ctx) {
    const GibbsModel& m = *ctx.cfg.model;
    const double integral = m.integral(m.potential);
    ctx.metrics["pressure"] = m.pressure;
    ctx.metrics["entropy"] = m.entropy;
    ctx.metrics["integral_potential"] = integral;
    ctx.metrics["variational_residual"] = std::abs(m.entropy - (m.pressure - integral));
    ctx.metrics["entropy_pressure_gap"] = m.entropy - m.pressure;
    const Eigen::VectorXd& pi = m.stationary();
    ctx.metrics["stationary_residual"] = (pi.transpose() * m.transition() - pi.transpose()).cwiseAbs().maxCoeff();
    ctx.metrics["row_sum_residual"] = (m.transition().rowwise().sum().array() - 1.0).abs().maxCoeff();
    const GibbsBoundReport g = gibbs_bound_report(m, static_cast<int>(ctx.int_param("q_max")));
    ctx.metrics["gibbs_ratio_min"] = g.ratio_min;
    ctx.metrics["gibbs_ratio_max"] = g.ratio_max;
    ctx.metrics["gibbs_constant_empirical"] = g.empirical_constant;
    ctx.metrics["gibbs_constant_analytic"] = g.analytic_constant;
    ctx.metrics["gibbs_bound_slack"] = g.analytic_constant - g.empirical_constant;

    Json states = Json::array();
    std::vector<std::string> rows;
    for (int s = 0; s < m.chain.size(); ++s) {
        const std::string w = word_to_string(m.chain.states[static_cast<std::size_t>(s)]);
        Json row = Json::array();
        for (int t = 0; t < m.chain.size(); ++t) row.push_back(m.transition()(s, t));
        states.push_back({{"state", w}, {"stationary", pi(s)}, {"transition", row}});
        rows.push_back(csv_field(w) + "," + csv_number(pi(s)));
    }
    ctx.details["states"] = states;
    ctx.details["gibbs_bounds"] = {{"q_max", g.q_max}, {"cylinders", g.cylinders}};
    ctx.write_csv("gibbs_states.csv", "state,stationary", rows);
}

void run_llt(Context& ctx) {
    const SuspensionSystem& sys = need_system(ctx);
    const VarianceReport var = checked_variance(ctx, sys);
    const std::vector<int> ns = as_int_list(ctx.param("n_list"), "params.n_list");
    std::vector<std::string> rows;
    double last = 0.0;
    for (int n : ns) {
        const SumDistribution d = exact_sum_distribution(sys.model, sys.cocycle, n);
        const double ratio = std::sqrt(2.0 * std::numbers::pi * n * var.sigma2) * d.at(0);
        ctx.metrics["llt_ratio_" + std::to_string(n)] = ratio;
        rows.push_back(std::to_string(n) + "," + csv_number(d.at(0)) + "," + csv_number(ratio));
        last = ratio;
    }
    ctx.metrics["llt_ratio_last"] = last;
    ctx.write_csv("llt.csv", "n,p_zero,llt_ratio", rows);
}

std::vector<std::string> batch_rows(const ReturnBatch& batch) {
    std::vector<std::string> rows;
    rows.reserve(batch.samples.size());
    for (std::size_t i = 0; i < batch.samples.size(); ++i) {
        const auto& s = batch.samples[i];
        rows.push_back(std::to_string(i) + "," + std::to_string(s.w) + "," + csv_number(s.roof_time) + "," +
                       (s.capped ? "1" : "0"));
    }
    return rows;
}

void run_return_dist(Context& ctx) {
    const SuspensionSystem& sys = need_system(ctx);
    const VarianceReport var = checked_variance(ctx, sys);
    const double sigma = std::sqrt(var.sigma2);
    const int trials = static_cast<int>(ctx.int_param("trials"));
    const std::int64_t cap = ctx.int_param("cap");
    const Json& cylinders = ctx.param("cylinders");
    if (cylinders.empty()) invalid("params.cylinders must not be empty");

    Json ks_reports = Json::array();
    double first = 0.0, last = 0.0;
    for (std::size_t i = 0; i < cylinders.size(); ++i) {
        const Json& c = cylinders[i];
        check_keys(c, "params.cylinders[]", {"q", "q_prime", "word"});
        const int q = static_cast<int>(as_integer(require(c, "q", "params.cylinders[]"), "q"));
        const int qp = static_cast<int>(as_integer(require(c, "q_prime", "params.cylinders[]"), "q_prime"));
        const bool random = !c.contains("word") || c.at("word").is_null();
        const std::string label = "q" + std::to_string(q) + "_" + std::to_string(qp);

        ReturnBatch batch;
        std::vector<double> measures;
        if (random) {
            batch = random_window_batch(sys, q, qp, trials, cap, ctx.seed, ctx.threads);
            for (const Word& w : batch.windows) measures.push_back(sys.model.chain.word_measure(w));
        } else {
            const Cylinder cyl = make_cylinder(sys.model.shift, q, qp,
                                               word_from_string(c.at("word").get<std::string>(), sys.model.shift.alphabet_size()));
            batch = return_time_batch(sys, cyl, trials, cap, ctx.seed, ctx.threads);
            measures.assign(static_cast<std::size_t>(trials), cylinder_measure(sys.model, cyl));
        }

        // Symbolic normalization nu(C) sqrt(w) against sigma_phi E/|N|, and the flow
        // normalization nu(C) sqrt(S_w r) against sigma_phi sqrt(int R) E/|N|.
        std::vector<double> sym, flow;
        std::size_t censored = 0;
        for (std::size_t k = 0; k < batch.samples.size(); ++k) {
            const auto& s = batch.samples[k];
            const double nu = measures[k];
            if (s.capped) {
                ++censored;
                sym.push_back(std::numeric_limits<double>::infinity());
                flow.push_back(std::numeric_limits<double>::infinity());
            } else {
                sym.push_back(nu * std::sqrt(static_cast<double>(s.w)));
                flow.push_back(nu * std::sqrt(s.roof_time));
            }
        }
        // Censor bound: the smallest normalized cap over windows.
        const double nu_min = *std::min_element(measures.begin(), measures.end());
        const double bound = nu_min * std::sqrt(static_cast<double>(cap));
        const double bound_flow = nu_min * std::sqrt(static_cast<double>(cap) * sys.roof_min());
        const double ks = ks_distance(make_empirical(sym, bound), LimitLaw(sigma));
        const double ks_flow = ks_distance(make_empirical(flow, bound_flow), LimitLaw(sigma * std::sqrt(sys.mean_roof)));

        ctx.metrics["ks_" + label] = ks;
        ctx.metrics["ks_flow_" + label] = ks_flow;
        ctx.metrics["capped_fraction_" + label] = batch.capped_fraction;
        ctx.metrics["nu_C_" + label] = nu_min;
        std::vector<double> ws;
        for (const auto& s : batch.samples) ws.push_back(static_cast<double>(s.w));
        ctx.metrics["median_w_" + label] = median(ws);
        ks_reports.push_back({{"cylinder", label},
                              {"word", random ? Json(nullptr) : c.at("word")},
                              {"sigma", sigma},
                              {"n", batch.samples.size()},
                              {"n_censored", censored},
                              {"ks", ks},
                              {"pass_threshold", ctx.cfg.thresholds.contains("ks_first") && i == 0
                                                     ? ctx.cfg.thresholds["ks_first"].value("max", 1.0)
                                                     : 1.0}});
        if (i == 0) first = ks;
        last = ks;
        ctx.write_csv("return_dist_" + label + ".csv", "trial,w,roof_time,capped", batch_rows(batch));
    }
    ctx.metrics["ks_first"] = first;
    ctx.metrics["ks_last"] = last;
    ctx.metrics["ks_trend"] = last - first;
    ctx.details["ks_reports"] = ks_reports;
}

void run_as_exponent(Context& ctx) {
    const SuspensionSystem& sys = need_system(ctx);
    checked_variance(ctx, sys);
    SweepOptions options;
    options.bootstrap_resamples = static_cast<int>(ctx.int_param("bootstrap"));
    options.max_capped_fraction = ctx.num_param("max_capped_fraction");
    const SweepReport r = exponent_sweep(sys, as_int_list(ctx.param("q_list"), "params.q_list"),
                                         static_cast<int>(ctx.int_param("trials")), ctx.int_param("cap"), ctx.seed,
                                         ctx.threads, options);
    ctx.metrics["slope"] = r.fit.slope;
    ctx.metrics["intercept"] = r.fit.intercept;
    ctx.metrics["r2"] = r.fit.r2;
    ctx.metrics["slope_ci_low"] = r.slope_ci_low;
    ctx.metrics["slope_ci_high"] = r.slope_ci_high;
    ctx.metrics["entropy"] = r.entropy;
    ctx.metrics["slope_rel_error"] = std::abs(r.fit.slope - r.entropy) / r.entropy;
    double capped = 0.0;
    for (const auto& row : r.rows) capped = std::max(capped, row.capped_fraction);
    ctx.metrics["max_capped_fraction"] = capped;
    const LyapunovReport& ly = r.lyapunov;
    ctx.metrics["lambda_u"] = ly.lambda_u;
    ctx.metrics["lambda_s"] = ly.lambda_s;
    ctx.metrics["entropy_flow"] = ly.entropy_flow;
    ctx.metrics["dimension_prediction"] = r.dimension_prediction;
    // Closed-form chain: dimension - 1 = h_flow (1/lambda_u - 1/lambda_s) with lambda = L / int R;
    // the roof cancels, so it also equals h (1/L_u - 1/L_s).
    const double via_section = sys.model.entropy * (1.0 / ly.L_u - 1.0 / ly.L_s);
    ctx.metrics["dimension_identity_residual"] =
        std::max({std::abs(ly.lambda_u - ly.L_u / ly.mean_roof), std::abs(ly.lambda_s - ly.L_s / ly.mean_roof),
                  std::abs(r.dimension_prediction - via_section)});

    std::vector<std::string> rows;
    for (const auto& row : r.rows)
        rows.push_back(std::to_string(row.q) + "," + std::to_string(row.trials) + "," +
                       csv_number(row.median_log_sqrt_tau) + "," + std::to_string(row.q_width) + "," +
                       csv_number(row.capped_fraction));
    ctx.write_csv("sweep.csv", "q,trials,median_log_sqrt_tau,q_width,capped_fraction", rows);
}

double normal_cdf(double x, double sd) { return 0.5 * std::erfc(-x / (sd * std::numbers::sqrt2)); }

void run_flow_clt(Context& ctx) {
    const SuspensionSystem& sys = need_system(ctx);
    const VarianceReport var = checked_variance(ctx, sys);
    const double s2flow = var.sigma2 / sys.mean_roof;
    ctx.metrics["sigma2_phi"] = var.sigma2;
    ctx.metrics["sigma2_flow"] = s2flow;
    ctx.metrics["mean_roof"] = sys.mean_roof;

    const int trials = static_cast<int>(ctx.int_param("trials"));
    const std::vector<double> xs = clt_flow_samples(sys, ctx.num_param("t"), trials, ctx.seed, ctx.threads);
    double mean = 0.0;
    for (double x : xs) mean += x;
    mean /= static_cast<double>(xs.size());
    double ss = 0.0;
    for (double x : xs) ss += (x - mean) * (x - mean);
    const double sample_var = ss / static_cast<double>(xs.size() - 1);
    ctx.metrics["sample_mean"] = mean;
    ctx.metrics["sample_mean_z"] = mean / std::sqrt(s2flow / static_cast<double>(xs.size()));
    ctx.metrics["sample_variance"] = sample_var;
    ctx.metrics["variance_rel_error"] = std::abs(sample_var - s2flow) / s2flow;
    std::vector<double> sorted = xs;
    std::sort(sorted.begin(), sorted.end());
    double ks = 0.0;
    const double inv = 1.0 / static_cast<double>(sorted.size());
    for (std::size_t i = 0; i < sorted.size(); ++i) {
        const double f = normal_cdf(sorted[i], std::sqrt(s2flow));
        ks = std::max({ks, static_cast<double>(i + 1) * inv - f, f - static_cast<double>(i) * inv});
    }
    ctx.metrics["ks_normal"] = ks;
    std::vector<std::string> rows;
    for (std::size_t i = 0; i < xs.size(); ++i) rows.push_back(std::to_string(i) + "," + csv_number(xs[i]));
    ctx.write_csv("flow_clt.csv", "trial,scaled_displacement", rows);

    // Section/flow return-time correspondence.
    const int q = static_cast<int>(ctx.int_param("ratio_q"));
    const int qp = static_cast<int>(ctx.int_param("ratio_q_prime"));
    ReturnBatch batch;
    const Json& word = ctx.param("ratio_word");
    if (word.is_null()) {
        batch = random_window_batch(sys, q, qp, static_cast<int>(ctx.int_param("ratio_trials")),
                                    ctx.int_param("ratio_cap"), ctx.seed, ctx.threads);
    } else {
        const Cylinder cyl =
            make_cylinder(sys.model.shift, q, qp, word_from_string(word.get<std::string>(), sys.model.shift.alphabet_size()));
        batch = return_time_batch(sys, cyl, static_cast<int>(ctx.int_param("ratio_trials")), ctx.int_param("ratio_cap"),
                                  ctx.seed, ctx.threads);
    }
    for (int thr : as_int_list(ctx.param("ratio_w_thresholds"), "params.ratio_w_thresholds")) {
        const RatioStats st = flow_return_ratio(sys, batch.samples, thr);
        ctx.metrics["ratio_count_" + std::to_string(thr)] = st.count;
        ctx.metrics["ratio_mean_abs_dev_" + std::to_string(thr)] = st.mean_abs_deviation;
        ctx.metrics["ratio_max_abs_dev_" + std::to_string(thr)] = st.max_abs_deviation;
    }
    ctx.write_csv("flow_return.csv", "trial,w,roof_time,capped", batch_rows(batch));

    // Exponents, Abramov and roof covariance.
    const LyapunovReport ly = lyapunov_exact(sys);
    ctx.metrics["lambda_u"] = ly.lambda_u;
    ctx.metrics["lambda_s"] = ly.lambda_s;
    ctx.metrics["entropy_flow"] = ly.entropy_flow;
    ctx.metrics["dimension"] = ly.dimension;
    const double c = ctx.num_param("roof_scale");
    const SuspensionSystem scaled = rescale_roof(sys, c);
    const LyapunovReport ls = lyapunov_exact(scaled);
    ctx.metrics["roof_scale_dimension_change"] = std::abs(ls.dimension - ly.dimension);
    ctx.metrics["roof_scale_entropy_flow_ratio"] = ls.entropy_flow / ly.entropy_flow;
    ctx.metrics["roof_scale_lambda_u_ratio"] = ls.lambda_u / ly.lambda_u;
    ctx.metrics["roof_scale_lambda_s_ratio"] = ls.lambda_s / ly.lambda_s;
    ctx.metrics["roof_scale_sigma2_flow_ratio"] = sigma_flow_squared(scaled) / s2flow;
    const int ltrials = static_cast<int>(ctx.int_param("lyapunov_trials"));
    if (ltrials > 0) {
        const BirkhoffEstimate b = lyapunov_birkhoff(sys, ctx.num_param("lyapunov_t"), ltrials, ctx.seed, ctx.threads);
        ctx.metrics["birkhoff_lambda_u"] = b.lambda_u;
        ctx.metrics["birkhoff_lambda_s"] = b.lambda_s;
        ctx.metrics["birkhoff_stderr_u"] = b.stderr_u;
        ctx.metrics["birkhoff_stderr_s"] = b.stderr_s;
    }
}

void run_dvoretzky(Context& ctx) {
    const SuspensionSystem& sys = need_system(ctx);
    const int n_max = static_cast<int>(ctx.int_param("n_max"));
    const int max_length = static_cast<int>(ctx.int_param("max_length"));
    const auto cap = static_cast<std::size_t>(ctx.int_param("cap"));
    std::vector<Cylinder> cylinders;
    for (int len = 1; len <= max_length; ++len)
        for (int q = 0; q < len; ++q)
            for (auto& c : enumerate_cylinders(sys.model.shift, q, len - 1 - q)) cylinders.push_back(std::move(c));

    // D sits inside A when A's coordinates are a subset of D's and agree there.
    auto nested = [](const Cylinder& d, const Cylinder& a) {
        if (a.left > d.left || a.right > d.right) return false;
        for (int j = -a.left; j <= a.right; ++j)
            if (a.at(j) != d.at(j)) return false;
        return true;
    };

    double worst = 0.0, worst_nested_no_visit = 0.0;
    std::size_t pairs = 0;
    std::vector<std::string> rows;
    for (int n = 0; n <= n_max; ++n) {
        for (const Cylinder& a : cylinders) {
            const auto results = dvoretzky_sweep(sys.model, sys.cocycle, cylinders, a, n, cap);
            for (std::size_t i = 0; i < results.size(); ++i) {
                const auto& r = results[i];
                const Cylinder& d = cylinders[i];
                worst = std::max(worst, r.residual / r.lhs);
                if (nested(d, a)) worst_nested_no_visit = std::max(worst_nested_no_visit, r.no_visit);
                ++pairs;
                rows.push_back(std::to_string(n) + "," + word_to_string(d.word) + "," + std::to_string(d.left) + "," +
                               std::to_string(d.right) + "," + word_to_string(a.word) + "," + std::to_string(a.left) +
                               "," + std::to_string(a.right) + "," + csv_number(r.lhs) + "," + csv_number(r.rhs) + "," +
                               csv_number(r.no_visit) + "," + csv_number(r.residual));
            }
        }
    }
    ctx.metrics["max_relative_residual"] = worst;
    ctx.metrics["max_nested_no_visit"] = worst_nested_no_visit;
    ctx.metrics["pairs"] = pairs;
    ctx.write_csv("dvoretzky.csv", "n,d_word,d_q,d_q_prime,a_word,a_q,a_q_prime,lhs,rhs,no_visit,residual", rows);
}

void run_quadrature(Context& ctx) {
    const int points = static_cast<int>(ctx.int_param("quad_points"));
    std::vector<double> x, w;
    gauss_legendre(points, x, w);
    // int_{-eps}^{eps} sqrt(eps^2 - a^2) da with a = eps sin(theta).
    double worst = 0.0;
    for (double eps : as_number_list(ctx.param("eps_list"), "params.eps_list")) {
        double integral = 0.0;
        for (std::size_t i = 0; i < x.size(); ++i) {
            const double theta = 0.5 * std::numbers::pi * x[i];
            const double c = std::cos(theta);
            integral += w[i] * eps * c * eps * c;
        }
        integral *= 0.5 * std::numbers::pi;
        const double ratio = integral / (eps * eps);
        char label[32];
        std::snprintf(label, sizeof label, "semicircle_ratio_%g", eps);
        ctx.metrics[label] = ratio;
        worst = std::max(worst, std::abs(ratio - std::numbers::pi / 2.0));
    }
    ctx.metrics["semicircle_max_error"] = worst;

    double residual = 0.0;
    const auto grid = as_number_list(ctx.param("t_grid"), "params.t_grid");
    for (double sigma : as_number_list(ctx.param("sigma_list"), "params.sigma_list"))
        residual = std::max(residual, verify_integral_equation(LimitLaw(sigma), grid, points).max_residual);
    ctx.metrics["integral_equation_max_residual"] = residual;
}

std::vector<ThresholdCheck> evaluate_thresholds(const Json& thresholds, const Json& metrics) {
    std::vector<ThresholdCheck> checks;
    for (const auto& [name, spec] : thresholds.items()) {
        ThresholdCheck c;
        c.metric = name;
        c.min = -std::numeric_limits<double>::infinity();
        c.max = std::numeric_limits<double>::infinity();
        if (spec.contains("expected")) {
            c.min = spec.at("expected").get<double>() - spec.at("tol").get<double>();
            c.max = spec.at("expected").get<double>() + spec.at("tol").get<double>();
        }
        if (spec.contains("min")) c.min = std::max(c.min, spec.at("min").get<double>());
        if (spec.contains("max")) c.max = std::min(c.max, spec.at("max").get<double>());
        if (!metrics.contains(name)) {
            c.value = std::numeric_limits<double>::quiet_NaN();
            c.pass = false;
        } else {
            c.value = metrics.at(name).get<double>();
            c.pass = c.value >= c.min && c.value <= c.max;
        }
        checks.push_back(c);
    }
    return checks;
}

Json bound_json(double v) {
    if (std::isinf(v)) return nullptr;
    return v;
}

}  // namespace

RunReport run(const Json& config, const RunOptions& options) {
    const auto started = std::chrono::steady_clock::now();
    Json document = config;
    if (options.seed) document["seed"] = *options.seed;
    if (options.output) document["output"] = *options.output;
    const ExperimentConfig cfg = parse_config(document);

    Context ctx{cfg, cfg.seed, options.threads,
                cfg.output.empty() ? std::filesystem::path("zrec-out") : std::filesystem::path(cfg.output),
                options.write_files, {}};

    if (cfg.kind == "gibbs") run_gibbs(ctx);
    else if (cfg.kind == "llt") run_llt(ctx);
    else if (cfg.kind == "return-dist") run_return_dist(ctx);
    else if (cfg.kind == "as-exponent") run_as_exponent(ctx);
    else if (cfg.kind == "flow-clt") run_flow_clt(ctx);
    else if (cfg.kind == "dvoretzky") run_dvoretzky(ctx);
    else run_quadrature(ctx);

    RunReport out;
    out.checks = evaluate_thresholds(cfg.thresholds, ctx.metrics);
    out.pass = std::all_of(out.checks.begin(), out.checks.end(), [](const ThresholdCheck& c) { return c.pass; });

    Json checks = Json::array();
    for (const auto& c : out.checks)
        checks.push_back({{"metric", c.metric},
                          {"value", std::isnan(c.value) ? Json(nullptr) : Json(c.value)},
                          {"min", bound_json(c.min)},
                          {"max", bound_json(c.max)},
                          {"pass", c.pass}});
    const double wall = std::chrono::duration<double>(std::chrono::steady_clock::now() - started).count();
    out.report = Json{{"version", version_string()},
                      {"rng", std::string(Philox4x32::algorithm)},
                      {"kind", cfg.kind},
                      {"seed", cfg.seed},
                      {"threads", resolve_threads(options.threads)},
                      {"config", cfg.source},
                      {"results", ctx.metrics},
                      {"details", ctx.details},
                      {"thresholds", checks},
                      {"pass", out.pass},
                      {"wall_time_seconds", wall}};
    if (options.write_files) {
        std::filesystem::create_directories(ctx.out_dir);
        const auto path = ctx.out_dir / "report.json";
        ctx.files.push_back(path.string());
        out.report["files"] = ctx.files;
        std::ofstream os(path);
        if (!os) throw Error(ErrorCode::Io, "cannot write " + path.string());
        os << out.report.dump(2) << "\n";
    }
    out.files = ctx.files;
    return out;
}

}  // namespace zrec
