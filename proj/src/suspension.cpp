#include "zrec/suspension.hpp"

#include <cmath>

#include "zrec/parallel.hpp"

namespace zrec {

namespace {

double evaluate(const LocallyConstantFunction& f, SymbolPath& path, std::int64_t at, Word& buffer) {
    buffer.resize(static_cast<std::size_t>(f.depth()));
    for (int k = 0; k < f.depth(); ++k) buffer[static_cast<std::size_t>(k)] = path.at(at + k);
    return f(buffer);
}

void require_same_alphabet(const GibbsModel& model, const LocallyConstantFunction& f, const char* name) {
    if (f.dense().size() != model.shift.code_space(f.depth()))
        throw Error(ErrorCode::InvalidArgument, std::string(name) + " is defined on a different alphabet");
}

}  // namespace

SuspensionSystem make_suspension(GibbsModel model, LocallyConstantFunction roof, LocallyConstantFunction expansion_u,
                                 LocallyConstantFunction expansion_s, LocallyConstantFunction cocycle) {
    require_same_alphabet(model, roof, "roof");
    require_same_alphabet(model, expansion_u, "expansion_u");
    require_same_alphabet(model, expansion_s, "expansion_s");
    require_same_alphabet(model, cocycle, "cocycle");
    if (!(roof.min() > 0.0)) throw Error(ErrorCode::InvalidArgument, "roof must be strictly positive");
    if (!(expansion_u.min() > 0.0)) throw Error(ErrorCode::InvalidArgument, "log a^u must be positive");
    if (!(expansion_s.max() < 0.0)) throw Error(ErrorCode::InvalidArgument, "log a^s must be negative");
    require_centered_cocycle(model, cocycle);

    SuspensionSystem s{std::move(model), std::move(roof), std::move(expansion_u), std::move(expansion_s),
                       std::move(cocycle), 0.0, nullptr};
    s.mean_roof = s.model.integral(s.roof);
    s.generator = std::make_shared<MarkovPathGenerator>(s.model);
    return s;
}

SuspensionSystem rescale_roof(const SuspensionSystem& system, double factor) {
    if (!(factor > 0.0)) throw Error(ErrorCode::InvalidArgument, "roof factor must be positive");
    SuspensionSystem s = system;
    s.roof = system.roof.scaled(factor);
    s.mean_roof = s.model.integral(s.roof);
    return s;
}

FlowStep advance_in_place(const SuspensionSystem& system, FlowState& state, double t) {
    if (!(t >= 0.0)) throw Error(ErrorCode::InvalidArgument, "flow time must be nonnegative");
    FlowStep step;
    Word buffer;
    double remaining = t;
    for (;;) {
        const double r = evaluate(system.roof, state.path, state.base_index, buffer);
        if (state.height + remaining < r) {
            state.height += remaining;
            return step;
        }
        remaining -= r - state.height;
        step.displacement += std::lround(evaluate(system.cocycle, state.path, state.base_index, buffer));
        step.log_expansion_u += evaluate(system.expansion_u, state.path, state.base_index, buffer);
        step.log_expansion_s += evaluate(system.expansion_s, state.path, state.base_index, buffer);
        ++step.crossings;
        ++state.base_index;
        state.height = 0.0;
    }
}

FlowState flow_advance(const SuspensionSystem& system, FlowState state, double t, std::int64_t* crossings) {
    const FlowStep step = advance_in_place(system, state, t);
    if (crossings) *crossings = step.crossings;
    return state;
}

long flow_displacement(const SuspensionSystem& system, FlowState state, double t) {
    return advance_in_place(system, state, t).displacement;
}

FlowState sample_flow_start(const SuspensionSystem& system, std::uint64_t seed, std::uint64_t trial) {
    const int depth = system.roof.depth();
    const std::vector<Word> words = enumerate_words(system.model.shift, depth);
    std::vector<double> weights(words.size());
    double total = 0.0;
    for (std::size_t i = 0; i < words.size(); ++i) {
        weights[i] = system.model.chain.word_measure(words[i]) * system.roof(words[i]);
        total += weights[i];
    }
    Philox4x32 start = make_stream(seed, trial, StreamDomain::Start);
    double u = uniform01(start) * total;
    std::size_t pick = 0;
    while (pick + 1 < words.size() && (weights[pick] == 0.0 || u >= weights[pick])) {
        u -= weights[pick];
        ++pick;
    }
    const double height = uniform01(start) * system.roof(words[pick]);
    SymbolPath path(system.generator, make_stream(seed, trial, StreamDomain::Forward),
                    make_stream(seed, trial, StreamDomain::Backward), 0, words[pick]);
    return FlowState{std::move(path), 0, height};
}

LyapunovReport lyapunov_exact(const SuspensionSystem& system) {
    LyapunovReport r;
    r.L_u = system.model.integral(system.expansion_u);
    r.L_s = system.model.integral(system.expansion_s);
    r.mean_roof = system.mean_roof;
    r.lambda_u = r.L_u / r.mean_roof;
    r.lambda_s = r.L_s / r.mean_roof;
    r.entropy_flow = system.model.entropy / r.mean_roof;
    r.dimension = r.entropy_flow * (1.0 / r.lambda_u - 1.0 / r.lambda_s);
    return r;
}

namespace {

void mean_and_stderr(const std::vector<double>& xs, double& mean, double& err) {
    mean = 0.0;
    for (double x : xs) mean += x;
    mean /= static_cast<double>(xs.size());
    if (xs.size() < 2) {
        err = 0.0;
        return;
    }
    double ss = 0.0;
    for (double x : xs) ss += (x - mean) * (x - mean);
    err = std::sqrt(ss / static_cast<double>(xs.size() - 1) / static_cast<double>(xs.size()));
}

}  // namespace

BirkhoffEstimate lyapunov_birkhoff(const SuspensionSystem& system, double horizon_t, int trials, std::uint64_t seed,
                                   unsigned threads) {
    if (!(horizon_t >= 10.0 * system.roof_max()))
        throw Error(ErrorCode::InvalidArgument, "horizon must be at least 10 * max roof");
    if (trials < 1) throw Error(ErrorCode::InvalidArgument, "trials must be positive");
    BirkhoffEstimate est;
    est.trials_u.resize(static_cast<std::size_t>(trials));
    est.trials_s.resize(static_cast<std::size_t>(trials));
    parallel_for(static_cast<std::size_t>(trials), threads, [&](std::size_t i) {
        FlowState state = sample_flow_start(system, seed, i);
        const FlowStep step = advance_in_place(system, state, horizon_t);
        est.trials_u[i] = step.log_expansion_u / horizon_t;
        est.trials_s[i] = step.log_expansion_s / horizon_t;
    });
    mean_and_stderr(est.trials_u, est.lambda_u, est.stderr_u);
    mean_and_stderr(est.trials_s, est.lambda_s, est.stderr_s);
    return est;
}

double sigma_flow_squared(const SuspensionSystem& system) {
    const VarianceReport var = green_kubo_variance(system.model, system.cocycle, {});
    if (var.degenerate) throw Error(ErrorCode::Degenerate, "cocycle variance vanishes");
    return var.sigma2 / system.mean_roof;
}

std::vector<double> clt_flow_samples(const SuspensionSystem& system, double t, int trials, std::uint64_t seed,
                                     unsigned threads) {
    if (!(t >= 100.0 * system.roof_max())) throw Error(ErrorCode::InvalidArgument, "t must be at least 100 * max roof");
    if (trials < 1) throw Error(ErrorCode::InvalidArgument, "trials must be positive");
    std::vector<double> out(static_cast<std::size_t>(trials));
    const double scale = 1.0 / std::sqrt(t);
    parallel_for(out.size(), threads, [&](std::size_t i) {
        FlowState state = sample_flow_start(system, seed, i);
        out[i] = static_cast<double>(advance_in_place(system, state, t).displacement) * scale;
    });
    return out;
}

}  // namespace zrec
