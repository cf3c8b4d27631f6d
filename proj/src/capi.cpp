#include "zrec/zrec.h"

#include <cstdlib>
#include <cstring>
#include <new>
#include <string>

#include "zrec/experiment.hpp"
#include "zrec/stats.hpp"

struct zrec_model {
    zrec::GibbsModel model;
};

struct zrec_system {
    zrec::SuspensionSystem system;
};

namespace {

thread_local std::string last_error;

int fail(int status, const std::string& what) {
    last_error = what;
    return status;
}

// Runs body, mapping exceptions to status codes.
template <class F>
int guarded(F&& body) {
    try {
        body();
        last_error.clear();
        return ZREC_OK;
    } catch (const zrec::Error& e) {
        return fail(static_cast<int>(e.code()), e.what());
    } catch (const nlohmann::json::exception& e) {
        return fail(ZREC_CONFIG_INVALID, std::string("ConfigInvalid: ") + e.what());
    } catch (const std::bad_alloc&) {
        return fail(ZREC_SIZE_OVERFLOW, "SizeOverflow: out of memory");
    } catch (const std::exception& e) {
        return fail(ZREC_INTERNAL, std::string("Internal: ") + e.what());
    }
}

char* copy_string(const std::string& s) {
    char* out = static_cast<char*>(std::malloc(s.size() + 1));
    if (!out) throw std::bad_alloc();
    std::memcpy(out, s.c_str(), s.size() + 1);
    return out;
}

int null_argument() { return fail(ZREC_INVALID_ARGUMENT, "InvalidArgument: null pointer argument"); }

zrec::Json parse_document(const char* json) {
    try {
        return zrec::Json::parse(json);
    } catch (const nlohmann::json::parse_error& e) {
        throw zrec::Error(zrec::ErrorCode::ConfigInvalid, std::string("malformed JSON: ") + e.what());
    }
}

}  // namespace

extern "C" {

const char* zrec_version(void) {
    static const std::string v = zrec::version_string();
    return v.c_str();
}

const char* zrec_status_name(int status) {
    if (status < 0 || status > ZREC_INTERNAL) return "Unknown";
    return zrec::error_name(static_cast<zrec::ErrorCode>(status)).data();
}

const char* zrec_last_error(void) { return last_error.c_str(); }

void zrec_free_string(char* s) { std::free(s); }

int zrec_model_create(int alphabet, const int* transitions, int depth, const double* potential, zrec_model** out) {
    if (!transitions || !potential || !out) return null_argument();
    return guarded([&] {
        if (alphabet < 1 || alphabet > static_cast<int>(zrec::kMaxAlphabet))
            throw zrec::Error(zrec::ErrorCode::InvalidArgument, "alphabet size out of range");
        std::vector<std::vector<int>> rows(static_cast<std::size_t>(alphabet));
        for (int i = 0; i < alphabet; ++i) rows[i].assign(transitions + i * alphabet, transitions + (i + 1) * alphabet);
        const zrec::ShiftSpace shift = zrec::validate_shift(alphabet, rows);
        const std::size_t size = shift.code_space(depth);
        zrec::LocallyConstantFunction f(shift, depth, std::vector<double>(potential, potential + size));
        *out = new zrec_model{zrec::build_gibbs(shift, f)};
    });
}

int zrec_model_from_json(const char* json, zrec_model** out) {
    if (!json || !out) return null_argument();
    return guarded([&] {
        zrec::Json doc{{"kind", "gibbs"}, {"seed", 0}, {"model", parse_document(json)}};
        zrec::ExperimentConfig cfg = zrec::parse_config(doc);
        *out = new zrec_model{std::move(*cfg.model)};
    });
}

void zrec_model_free(zrec_model* model) { delete model; }

int zrec_model_pressure(const zrec_model* model, double* out) {
    if (!model || !out) return null_argument();
    *out = model->model.pressure;
    return ZREC_OK;
}

int zrec_model_entropy(const zrec_model* model, double* out) {
    if (!model || !out) return null_argument();
    *out = model->model.entropy;
    return ZREC_OK;
}

int zrec_model_state_count(const zrec_model* model, size_t* out) {
    if (!model || !out) return null_argument();
    *out = static_cast<size_t>(model->model.chain.size());
    return ZREC_OK;
}

int zrec_model_stationary(const zrec_model* model, double* out, size_t capacity) {
    if (!model || !out) return null_argument();
    const auto& pi = model->model.stationary();
    if (capacity < static_cast<size_t>(pi.size()))
        return fail(ZREC_INVALID_ARGUMENT, "InvalidArgument: output buffer too small");
    for (Eigen::Index i = 0; i < pi.size(); ++i) out[i] = pi(i);
    return ZREC_OK;
}

int zrec_cylinder_measure(const zrec_model* model, int q, int q_prime, const int* word, double* out) {
    if (!model || !word || !out) return null_argument();
    return guarded([&] {
        if (q < 0 || q_prime < 0) throw zrec::Error(zrec::ErrorCode::InvalidArgument, "cylinder extents must be nonnegative");
        zrec::Word w;
        for (int i = 0; i < q + q_prime + 1; ++i) {
            if (word[i] < 0 || word[i] >= model->model.shift.alphabet_size())
                throw zrec::Error(zrec::ErrorCode::InvalidArgument, "symbol out of range");
            w.push_back(static_cast<zrec::Symbol>(word[i]));
        }
        *out = zrec::cylinder_measure(model->model, zrec::make_cylinder(model->model.shift, q, q_prime, w));
    });
}

int zrec_system_from_json(const char* json, zrec_system** out) {
    if (!json || !out) return null_argument();
    return guarded([&] {
        const zrec::Json src = parse_document(json);
        if (!src.is_object()) throw zrec::Error(zrec::ErrorCode::ConfigInvalid, "system document must be an object");
        zrec::Json doc{{"kind", "llt"}, {"seed", 0}};
        for (const auto& [k, v] : src.items()) {
            if (k != "model" && k != "system")
                throw zrec::Error(zrec::ErrorCode::ConfigInvalid, "unknown key '" + k + "' in system document");
            doc[k] = v;
        }
        zrec::ExperimentConfig cfg = zrec::parse_config(doc);
        *out = new zrec_system{std::move(*cfg.system)};
    });
}

void zrec_system_free(zrec_system* system) { delete system; }

int zrec_system_sigma2(const zrec_system* system, double* sigma2_phi, double* sigma2_flow) {
    if (!system || !sigma2_phi || !sigma2_flow) return null_argument();
    return guarded([&] {
        const auto& s = system->system;
        *sigma2_phi = zrec::green_kubo_variance(s.model, s.cocycle).sigma2;
        *sigma2_flow = *sigma2_phi / s.mean_roof;
    });
}

int zrec_system_lyapunov(const zrec_system* system, double out[5]) {
    if (!system || !out) return null_argument();
    return guarded([&] {
        const zrec::LyapunovReport r = zrec::lyapunov_exact(system->system);
        out[0] = r.lambda_u;
        out[1] = r.lambda_s;
        out[2] = r.entropy_flow;
        out[3] = r.mean_roof;
        out[4] = r.dimension;
    });
}

int zrec_limit_survival(double sigma, double t, double* out) {
    if (!out) return null_argument();
    return guarded([&] { *out = zrec::limit_survival(zrec::LimitLaw(sigma), t); });
}

int zrec_run_config(const char* json, const zrec_run_options* options, char** report, int* verdict) {
    if (!json || !report || !verdict) return null_argument();
    *report = nullptr;
    return guarded([&] {
        zrec::RunOptions opts;
        if (options) {
            if (options->has_seed) opts.seed = options->seed;
            if (options->output) opts.output = std::string(options->output);
            opts.threads = options->threads;
            opts.write_files = options->write_files != 0;
        }
        const zrec::RunReport r = zrec::run(parse_document(json), opts);
        *report = copy_string(r.report.dump(2));
        *verdict = r.pass ? ZREC_VERDICT_PASS : ZREC_VERDICT_FAIL;
    });
}

int zrec_preset(const char* name, char** json) {
    if (!name || !json) return null_argument();
    return guarded([&] { *json = copy_string(zrec::preset(name).dump(2)); });
}

const char* zrec_schema(void) { return zrec::config_schema().c_str(); }

}  // extern "C"
