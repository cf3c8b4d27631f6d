#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "json.hpp"

#include "zrec/suspension.hpp"

namespace zrec {

using Json = nlohmann::ordered_json;

inline const std::vector<std::string> kExperimentKinds = {"gibbs",     "llt",       "return-dist",     "as-exponent",
                                                          "flow-clt",  "dvoretzky", "quadrature-check"};
inline const std::vector<std::string> kPresetNames = {"bernoulli2", "trinomial3", "golden-mme", "golden-coboundary",
                                                      "varroof-trinomial"};

// Parsed and validated experiment configuration. Parsing rejects unknown keys.
struct ExperimentConfig {
    std::string kind;
    std::uint64_t seed = 0;
    std::string output;
    std::optional<GibbsModel> model;
    std::optional<SuspensionSystem> system;
    Json params = Json::object();
    Json thresholds = Json::object();
    Json source;  // the validated document, echoed into reports
};

ExperimentConfig parse_config(const Json& document);

// fn-spec: {"depth": d, "values": {"word": v, ...}} or {"depth": 1, "constant": v},
// optionally with "symmetrize": true.
LocallyConstantFunction parse_function(const ShiftSpace& shift, const Json& spec, const std::string& where);
Json function_to_json(const LocallyConstantFunction& f);

Json preset(const std::string& name);
const std::string& config_schema();

struct RunOptions {
    std::optional<std::uint64_t> seed;
    std::optional<std::string> output;
    unsigned threads = 0;
    bool write_files = true;
};

struct ThresholdCheck {
    std::string metric;
    double value = 0.0;
    double min = 0.0;
    double max = 0.0;
    bool pass = false;
};

struct RunReport {
    Json report;  // full JSON report
    std::vector<ThresholdCheck> checks;
    bool pass = false;
    std::vector<std::string> files;
};

// Runs one experiment; domain failures propagate as zrec::Error.
RunReport run(const Json& config, const RunOptions& options = {});

std::string version_string();

// RFC 4180 field; numbers at 17 significant digits.
std::string csv_number(double v);
std::string csv_field(const std::string& s);

}  // namespace zrec
