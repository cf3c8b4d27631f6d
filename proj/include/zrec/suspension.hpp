#pragma once

#include <cstdint>
#include <memory>
#include <vector>

#include "zrec/thermo.hpp"

namespace zrec {

// Suspension over (Sigma_A, sigma, nu) under a locally constant roof, with
// section expansion rates and the integer displacement cocycle of the
// Z-extension. Immutable after construction.
struct SuspensionSystem {
    GibbsModel model;
    LocallyConstantFunction roof;
    LocallyConstantFunction expansion_u;  // log a^u > 0
    LocallyConstantFunction expansion_s;  // log a^s < 0
    LocallyConstantFunction cocycle;
    double mean_roof = 0.0;
    std::shared_ptr<const MarkovPathGenerator> generator;

    double roof_min() const noexcept { return roof.min(); }
    double roof_max() const noexcept { return roof.max(); }
};

SuspensionSystem make_suspension(GibbsModel model, LocallyConstantFunction roof, LocallyConstantFunction expansion_u,
                                 LocallyConstantFunction expansion_s, LocallyConstantFunction cocycle);

// Same system with the roof multiplied by `factor`.
SuspensionSystem rescale_roof(const SuspensionSystem& system, double factor);

// Point (omega, s) of the suspension, with the base point shifted base_index times.
struct FlowState {
    SymbolPath path;
    std::int64_t base_index = 0;
    double height = 0.0;
};

struct FlowStep {
    std::int64_t crossings = 0;
    long displacement = 0;        // sum of the cocycle over the crossed section points
    double log_expansion_u = 0.0;  // sum of log a^u over the crossed section points
    double log_expansion_s = 0.0;
};

// Moves `state` forward by time t >= 0 in place.
FlowStep advance_in_place(const SuspensionSystem& system, FlowState& state, double t);

FlowState flow_advance(const SuspensionSystem& system, FlowState state, double t, std::int64_t* crossings = nullptr);
long flow_displacement(const SuspensionSystem& system, FlowState state, double t);

// Point distributed by nu x Leb normalized (roof-weighted base word, uniform height).
FlowState sample_flow_start(const SuspensionSystem& system, std::uint64_t seed, std::uint64_t trial);

struct LyapunovReport {
    double L_u = 0.0;
    double L_s = 0.0;
    double lambda_u = 0.0;
    double lambda_s = 0.0;
    double mean_roof = 0.0;
    double entropy_flow = 0.0;
    double dimension = 0.0;  // dim_H mu - 1
};

LyapunovReport lyapunov_exact(const SuspensionSystem& system);

struct BirkhoffEstimate {
    double lambda_u = 0.0;
    double lambda_s = 0.0;
    double stderr_u = 0.0;
    double stderr_s = 0.0;
    std::vector<double> trials_u;
    std::vector<double> trials_s;
};

BirkhoffEstimate lyapunov_birkhoff(const SuspensionSystem& system, double horizon_t, int trials, std::uint64_t seed,
                                   unsigned threads = 0);

// sigma_phi^2 / int R dnu.
double sigma_flow_squared(const SuspensionSystem& system);

// phi_t / sqrt(t) from independent stationary starts.
std::vector<double> clt_flow_samples(const SuspensionSystem& system, double t, int trials, std::uint64_t seed,
                                     unsigned threads = 0);

}  // namespace zrec
