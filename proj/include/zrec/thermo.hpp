#pragma once

#include <complex>
#include <cstdint>
#include <limits>
#include <map>
#include <memory>
#include <span>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "zrec/sft.hpp"

namespace zrec {

// f(omega) = table[omega_0 .. omega_{depth-1}], defined on admissible words only.
class LocallyConstantFunction {
public:
    LocallyConstantFunction() = default;

    // `dense` is indexed by ShiftSpace::encode of a depth-word; entries for
    // inadmissible words are ignored.
    LocallyConstantFunction(const ShiftSpace& shift, int depth, std::vector<double> dense);

    // Table must list every admissible depth-word and nothing else.
    static LocallyConstantFunction from_words(const ShiftSpace& shift, int depth,
                                              const std::map<std::string, double>& values);
    static LocallyConstantFunction constant(const ShiftSpace& shift, double value);

    int depth() const noexcept { return depth_; }
    double operator()(std::span<const Symbol> word) const;  // uses the first depth() symbols
    double at_code(std::size_t code) const noexcept { return dense_[code]; }
    const std::vector<double>& dense() const noexcept { return dense_; }

    double min() const noexcept { return min_; }
    double max() const noexcept { return max_; }
    double sup_norm() const noexcept;
    bool integer_valued() const noexcept;

    // Admissible words with their values, lexicographic.
    std::map<std::string, double> to_words() const;

    LocallyConstantFunction scaled(double factor) const;
    LocallyConstantFunction mapped(double (*op)(double)) const;

private:
    int alphabet_ = 0;
    int depth_ = 0;
    std::vector<double> dense_;
    std::vector<std::uint8_t> admissible_;
    double min_ = 0.0;
    double max_ = 0.0;
};

// Markov chain on admissible L-words (states), a recoding of the shift on
// which depth <= L functions become functions of the current state.
struct MarkovChain {
    ShiftSpace shift;
    int word_length = 1;
    std::vector<Word> states;                 // lexicographic
    std::vector<std::int32_t> code_to_state;  // dense L-code -> state or -1
    Eigen::MatrixXd transition;
    Eigen::VectorXd stationary;

    int size() const noexcept { return static_cast<int>(states.size()); }
    int state_of(std::span<const Symbol> word) const;  // first L symbols
    int successor(int state, Symbol x) const;          // -1 when not allowed

    MarkovChain lifted(int new_length) const;

    // f evaluated on each state; requires f.depth() <= word_length.
    Eigen::VectorXd state_values(const LocallyConstantFunction& f) const;
    double expectation(const LocallyConstantFunction& f) const;

    // nu of the cylinder [word] anchored anywhere (shift invariant).
    double word_measure(std::span<const Symbol> word) const;
};

struct GibbsOptions {
    double tolerance = 1e-14;
    int max_iterations = 100'000;
};

struct GibbsModel {
    ShiftSpace shift;
    LocallyConstantFunction potential;
    double pressure = 0.0;
    MarkovChain chain;  // on max(1, depth - 1)-words
    double entropy = 0.0;
    double gibbs_constant = 1.0;
    Eigen::VectorXd left_eigenvector;
    Eigen::VectorXd right_eigenvector;

    const Eigen::VectorXd& stationary() const noexcept { return chain.stationary; }
    const Eigen::MatrixXd& transition() const noexcept { return chain.transition; }

    // The chain recoded to at least `depth`-words, so depth-`depth` functions are state functions.
    MarkovChain chain_for_depth(int depth) const;
    double integral(const LocallyConstantFunction& f) const;
};

GibbsModel build_gibbs(const ShiftSpace& shift, const LocallyConstantFunction& potential, GibbsOptions options = {});

double cylinder_measure(const GibbsModel& model, const Cylinder& cylinder);

struct GibbsBoundReport {
    double ratio_min = 0.0;
    double ratio_max = 0.0;
    double empirical_constant = 1.0;  // max(ratio_max, 1 / ratio_min)
    double analytic_constant = 1.0;   // GibbsModel::gibbs_constant
    std::size_t cylinders = 0;
    int q_max = 0;
};

// Ratios nu(C) / exp(S h - n P) over all words of length 1..q_max.
GibbsBoundReport gibbs_bound_report(const GibbsModel& model, int q_max, std::size_t cap = kDefaultCylinderCap);

enum class VarianceMethod { FundamentalMatrix, TruncatedGreenKubo, DpGrowth };
std::string to_string(VarianceMethod m);

struct VarianceReport {
    double sigma2 = 0.0;
    VarianceMethod method = VarianceMethod::FundamentalMatrix;
    bool degenerate = false;
    // Var(S_n)/n from the exact law of S_n, for the cross-check sizes.
    std::vector<std::pair<int, double>> dp_check;
};

inline constexpr double kDegenerateTolerance = 1e-10;
inline constexpr double kCenteringTolerance = 1e-12;

// Variance via Z = (I - P + 1 pi)^-1: sigma^2 = 2 <f, Z f>_pi - <f, f>_pi.
// `dp_sizes` lists the n for the Var(S_n)/n cross-check (empty to skip).
VarianceReport green_kubo_variance(const GibbsModel& model, const LocallyConstantFunction& cocycle,
                                   std::vector<int> dp_sizes = {64, 256});

// sum_{k=-K}^{K} of the autocovariances; the direct series for comparison.
double truncated_green_kubo(const GibbsModel& model, const LocallyConstantFunction& cocycle, int lags);

struct SumDistribution {
    int n = 0;
    long min_value = 0;
    std::vector<double> probabilities;  // value min_value + i

    long max_value() const noexcept { return min_value + static_cast<long>(probabilities.size()) - 1; }
    double at(long value) const noexcept;
    double mean() const;
    double variance() const;
};

inline constexpr long kDefaultSumRange = 50'000'000;

SumDistribution exact_sum_distribution(const GibbsModel& model, const LocallyConstantFunction& cocycle, int n,
                                       long range_cap = kDefaultSumRange);

// Joint law of (state_n, S_n) for the chain started from `initial`;
// row = state, column = S_n - offset.
struct JointSumLaw {
    int n = 0;
    long offset = 0;
    Eigen::MatrixXd table;
};

JointSumLaw joint_sum_law(const MarkovChain& chain, std::span<const long> values, int n,
                          const Eigen::VectorXd& initial);

// sqrt(2 pi n) sigma P(S_n = 0).
double llt_ratio(const GibbsModel& model, const LocallyConstantFunction& cocycle, int n);

struct AperiodicityReport {
    int grid_size = 0;
    double max_radius = 0.0;
    double theta_at_max = 0.0;
    bool periodic = false;
};

AperiodicityReport cocycle_aperiodicity(const GibbsModel& model, const LocallyConstantFunction& cocycle,
                                        int grid_size = 64);

// phi'(w) = phi(w) - phi(reverse w); needs a symmetric transition matrix.
LocallyConstantFunction symmetrize(const ShiftSpace& shift, const LocallyConstantFunction& phi);

// Throws NotCentered unless |integral| <= kCenteringTolerance; integer values required.
void require_centered_cocycle(const GibbsModel& model, const LocallyConstantFunction& cocycle);

// Sampling law of nu: forward by the chain, backward by its time reversal,
// short histories by the stationary conditionals nu(hx)/nu(h).
class MarkovPathGenerator final : public PathGenerator {
public:
    explicit MarkovPathGenerator(const GibbsModel& model);

    int memory() const noexcept override { return memory_; }
    Symbol next(std::span<const Symbol> history, Philox4x32& rng) const override;
    Symbol previous(std::span<const Symbol> future, Philox4x32& rng) const override;

    int alphabet_size() const noexcept { return alphabet_; }
    // Forward draw given the code of the last memory() symbols.
    Symbol next_from_code(std::size_t code, std::uint64_t u) const noexcept {
        return draw(&forward_[memory_][code * static_cast<std::size_t>(alphabet_)], u);
    }

private:
    Symbol draw(const std::uint64_t* thresholds, std::uint64_t u) const noexcept {
        for (int x = 0; x + 1 < alphabet_; ++x) {
            const std::uint64_t t = thresholds[x];
            if (u < t || t == std::numeric_limits<std::uint64_t>::max()) return static_cast<Symbol>(x);
        }
        return static_cast<Symbol>(alphabet_ - 1);
    }
    std::vector<std::uint64_t> thresholds_for(const std::vector<double>& probs) const;

    int alphabet_;
    int memory_;
    ShiftSpace shift_;
    // [history length][code * alphabet + symbol]; UINT64_MAX marks the last reachable symbol.
    std::vector<std::vector<std::uint64_t>> forward_;
    std::vector<std::vector<std::uint64_t>> backward_;
};

}  // namespace zrec
