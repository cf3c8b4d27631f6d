// zrec command line front end over the C API.
#include <cstdio>
#include <string>

#include <CLI11.hpp>
#include <json.hpp>

#include "zrec/zrec.h"

namespace {

constexpr int kExitPass = 0;
constexpr int kExitError = 1;
constexpr int kExitThreshold = 2;

int report_error(int status) {
    const nlohmann::json err{{"error", zrec_status_name(status)}, {"code", status}, {"message", zrec_last_error()}};
    std::fprintf(stderr, "%s\n", err.dump().c_str());
    return kExitError;
}

std::string read_file(const std::string& path, bool& ok) {
    std::FILE* f = std::fopen(path.c_str(), "rb");
    ok = f != nullptr;
    std::string text;
    if (!f) return text;
    char buf[65536];
    std::size_t n;
    while ((n = std::fread(buf, 1, sizeof buf, f)) > 0) text.append(buf, n);
    std::fclose(f);
    return text;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"Recurrence experiments for Z-extensions of suspension flows over shifts of finite type"};
    app.set_version_flag("--version", std::string(zrec_version()));
    app.require_subcommand(1);

    std::string config_path, out_dir;
    std::uint64_t seed = 0;
    unsigned threads = 0;
    auto* run = app.add_subcommand("run", "Run an experiment config and write CSV files plus report.json");
    run->add_option("config", config_path, "Experiment config (JSON)")->required();
    auto* seed_opt = run->add_option("--seed", seed, "Override the config seed");
    auto* out_opt = run->add_option("--out", out_dir, "Output directory (default: config output or ./zrec-out)");
    run->add_option("--threads", threads, "Worker threads (default: available parallelism)");

    std::string preset_name;
    auto* preset = app.add_subcommand("preset", "Print a built-in config");
    preset->add_option("name", preset_name, "bernoulli2, trinomial3, golden-mme, golden-coboundary, varroof-trinomial")
        ->required();

    auto* schema = app.add_subcommand("schema", "Print the config JSON schema");

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        const int code = app.exit(e);
        return code == 0 ? kExitPass : kExitError;
    }

    if (schema->parsed()) {
        std::fputs(zrec_schema(), stdout);
        return kExitPass;
    }
    if (preset->parsed()) {
        char* json = nullptr;
        const int status = zrec_preset(preset_name.c_str(), &json);
        if (status != ZREC_OK) return report_error(status);
        std::printf("%s\n", json);
        zrec_free_string(json);
        return kExitPass;
    }

    bool ok = false;
    const std::string text = read_file(config_path, ok);
    if (!ok) {
        const nlohmann::json err{{"error", "Io"}, {"code", ZREC_IO}, {"message", "cannot read " + config_path}};
        std::fprintf(stderr, "%s\n", err.dump().c_str());
        return kExitError;
    }
    zrec_run_options options{};
    options.has_seed = seed_opt->count() > 0;
    options.seed = seed;
    options.output = out_opt->count() > 0 ? out_dir.c_str() : nullptr;
    options.threads = threads;
    options.write_files = 1;
    char* report = nullptr;
    int verdict = ZREC_VERDICT_FAIL;
    const int status = zrec_run_config(text.c_str(), &options, &report, &verdict);
    if (status != ZREC_OK) return report_error(status);
    std::printf("%s\n", report);
    zrec_free_string(report);
    return verdict == ZREC_VERDICT_PASS ? kExitPass : kExitThreshold;
}
