#pragma once

#include <cmath>
#include <cstddef>
#include <optional>
#include <vector>

#include "zrec/error.hpp"
#include "zrec/rng.hpp"

namespace zrec {

// Law of sigma * E / |N|, E ~ Exp(1) and N ~ Normal(0, 1) independent.
struct LimitLaw {
    double sigma = 1.0;

    explicit LimitLaw(double s);
};

// Scaled complementary error function e^{x^2} erfc(x).
double erfcx(double x);

// P(sigma E / |N| > t) = 2 e^{u^2/2} (1 - Phi(u)) = erfcx(u / sqrt 2), u = t / sigma.
double limit_survival(const LimitLaw& law, double t);
double limit_cdf(const LimitLaw& law, double t);
double limit_quantile(const LimitLaw& law, double p);

template <class Engine>
double sample_limit_law(const LimitLaw& law, Engine& rng) {
    const double e = standard_exponential(rng);
    const double n = standard_normal(rng);
    return law.sigma * e / std::abs(n);
}

// |F(t) + t / (sqrt(2 pi) sigma) int_0^1 F(t sqrt(1-u)) / sqrt(u) du - 1|, F the
// survival function, by `points`-node Gauss-Legendre after u = sin^2(theta).
double integral_equation_residual(const LimitLaw& law, double t, int points);

struct IntegralEquationReport {
    std::vector<double> t_grid;
    std::vector<double> residuals;
    double max_residual = 0.0;
};

IntegralEquationReport verify_integral_equation(const LimitLaw& law, const std::vector<double>& t_grid,
                                                int quad_points = 512);

// Nodes and weights on [-1, 1].
void gauss_legendre(int points, std::vector<double>& nodes, std::vector<double>& weights);

// Sorted observations; `censored` more observations are known only to be >= censor_bound.
struct EmpiricalDistribution {
    std::vector<double> values;
    std::size_t censored = 0;
    std::optional<double> censor_bound;

    std::size_t size() const noexcept { return values.size() + censored; }
};

EmpiricalDistribution make_empirical(std::vector<double> values, std::optional<double> censor_bound = std::nullopt);

// One-sample Kolmogorov-Smirnov statistic against 1 - limit_survival, taking
// the sup over x below the censor bound when one is set.
double ks_distance(const EmpiricalDistribution& empirical, const LimitLaw& law);

struct KsReport {
    double sigma = 0.0;
    std::size_t n = 0;
    std::size_t n_censored = 0;
    double ks = 0.0;
    double pass_threshold = 0.0;
    bool pass() const noexcept { return ks <= pass_threshold; }
};

struct Regression {
    double slope = 0.0;
    double intercept = 0.0;
    double r2 = 0.0;
    double slope_stderr = 0.0;
};

Regression regression_slope(const std::vector<double>& xs, const std::vector<double>& ys);

double median(std::vector<double> xs);

}  // namespace zrec
