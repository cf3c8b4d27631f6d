#pragma once

#include <cstdint>
#include <memory>
#include <vector>

#include "zrec/stats.hpp"
#include "zrec/suspension.hpp"

namespace zrec {

inline constexpr std::int64_t kDefaultReturnCap = 100'000'000;

struct ReturnSample {
    std::int64_t w = 0;           // first m >= 1 with S_m phi = 0 and sigma^m omega in the window cylinder
    double roof_time = 0.0;       // S_w r
    std::int64_t zero_count = 0;  // m <= w with S_m phi = 0
    bool capped = false;          // no return up to the cap; w == cap
};

// Path with coordinates -q..q' equal to the cylinder word, distributed as nu( . | C).
SymbolPath sample_conditioned(const GibbsModel& model, std::shared_ptr<const PathGenerator> generator,
                              const Cylinder& cylinder, std::uint64_t seed, std::uint64_t trial);

// Return time to C_{-q,q'}(omega) x {0} under the Z-extension.
ReturnSample cylinder_return_time(const SuspensionSystem& system, SymbolPath& path, int q, int q_prime,
                                  std::int64_t cap);

struct ReturnBatch {
    std::vector<ReturnSample> samples;
    std::vector<Word> windows;  // window symbols at coordinates -q..q'
    double capped_fraction = 0.0;
};

// Independent conditioned trials; trial i uses substreams (seed, i).
ReturnBatch return_time_batch(const SuspensionSystem& system, const Cylinder& cylinder, int trials, std::int64_t cap,
                              std::uint64_t seed, unsigned threads = 0);

// Like return_time_batch, but omega ~ nu and the cylinder is C_{-q,q'}(omega).
ReturnBatch random_window_batch(const SuspensionSystem& system, int q, int q_prime, int trials, std::int64_t cap,
                                std::uint64_t seed, unsigned threads = 0);

struct RatioStats {
    std::size_t count = 0;
    double mean_ratio = 0.0;
    double mean_abs_deviation = 0.0;
    double max_abs_deviation = 0.0;
};

// roof_time / (w * int R dnu) over uncapped samples with w >= min_w.
RatioStats flow_return_ratio(const SuspensionSystem& system, const std::vector<ReturnSample>& samples,
                             std::int64_t min_w = 1);

struct DvoretzkyResidual {
    int n = 0;
    double lhs = 0.0;       // nu(D), from the cylinder measure
    double rhs = 0.0;       // sum of the last-passage terms plus no_visit
    double no_visit = 0.0;  // nu(D and no passage in 0..n); zero whenever D is inside A
    double residual = 0.0;
    std::vector<double> terms;  // r = 0..n
    std::size_t words = 0;      // enumerated words
};

inline constexpr std::size_t kDefaultDvoretzkyCap = 50'000'000;

DvoretzkyResidual dvoretzky_check(const GibbsModel& model, const LocallyConstantFunction& cocycle, const Cylinder& d,
                                  const Cylinder& a, int n, std::size_t cap = kDefaultDvoretzkyCap);

// Same identity for several D against one A, sharing one enumeration.
std::vector<DvoretzkyResidual> dvoretzky_sweep(const GibbsModel& model, const LocallyConstantFunction& cocycle,
                                               const std::vector<Cylinder>& ds, const Cylinder& a, int n,
                                               std::size_t cap = kDefaultDvoretzkyCap);

struct SweepRow {
    int q = 0;
    int trials = 0;
    double median_log_sqrt_tau = 0.0;
    int q_width = 0;  // 2q + 1
    double capped_fraction = 0.0;
    std::vector<double> log_sqrt_tau;  // per trial; capped trials at log sqrt(cap)
};

struct SweepReport {
    std::vector<SweepRow> rows;
    Regression fit;
    double slope_ci_low = 0.0;
    double slope_ci_high = 0.0;
    double entropy = 0.0;
    LyapunovReport lyapunov;
    double dimension_prediction = 0.0;  // entropy_flow (1/lambda_u - 1/lambda_s)
};

struct SweepOptions {
    double max_capped_fraction = 0.2;
    int bootstrap_resamples = 200;
};

SweepReport exponent_sweep(const SuspensionSystem& system, const std::vector<int>& q_list, int trials, std::int64_t cap,
                           std::uint64_t seed, unsigned threads = 0, SweepOptions options = {});

}  // namespace zrec
