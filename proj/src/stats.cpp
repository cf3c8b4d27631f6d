#include "zrec/stats.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>

namespace zrec {

LimitLaw::LimitLaw(double s) : sigma(s) {
    if (!(s > 0.0) || !std::isfinite(s)) throw Error(ErrorCode::InvalidArgument, "limit law sigma must be positive");
}

double erfcx(double x) {
    if (x < 5.0) return std::exp(x * x) * std::erfc(x);
    // Continued fraction erfcx(x) = (1/sqrt(pi)) / (x + (1/2)/(x + 1/(x + (3/2)/(x + ...)))),
    // evaluated bottom-up; 60 levels are far past convergence for x >= 5.
    double tail = x;
    for (int k = 60; k >= 1; --k) tail = x + 0.5 * k / tail;
    return 1.0 / (std::sqrt(std::numbers::pi) * tail);
}

double limit_survival(const LimitLaw& law, double t) {
    if (!(t >= 0.0)) throw Error(ErrorCode::InvalidArgument, "t must be nonnegative");
    return erfcx(t / law.sigma / std::numbers::sqrt2);
}

double limit_cdf(const LimitLaw& law, double t) { return t <= 0.0 ? 0.0 : 1.0 - limit_survival(law, t); }

double limit_quantile(const LimitLaw& law, double p) {
    if (!(p > 0.0 && p < 1.0)) throw Error(ErrorCode::InvalidArgument, "quantile level must be in (0, 1)");
    double lo = 0.0, hi = law.sigma;
    while (limit_cdf(law, hi) < p) hi *= 2.0;
    for (int it = 0; it < 200 && hi - lo > 1e-15 * hi; ++it) {
        const double mid = 0.5 * (lo + hi);
        (limit_cdf(law, mid) < p ? lo : hi) = mid;
    }
    return 0.5 * (lo + hi);
}

void gauss_legendre(int points, std::vector<double>& nodes, std::vector<double>& weights) {
    if (points < 1) throw Error(ErrorCode::InvalidArgument, "quadrature needs at least one point");
    nodes.assign(static_cast<std::size_t>(points), 0.0);
    weights.assign(static_cast<std::size_t>(points), 0.0);
    const int half = (points + 1) / 2;
    for (int i = 0; i < half; ++i) {
        double x = std::cos(std::numbers::pi * (i + 0.75) / (points + 0.5));
        double dp = 0.0;
        for (int it = 0; it < 100; ++it) {
            double p0 = 1.0, p1 = x;
            for (int k = 2; k <= points; ++k) {
                const double p2 = ((2.0 * k - 1.0) * x * p1 - (k - 1.0) * p0) / k;
                p0 = p1;
                p1 = p2;
            }
            if (points == 1) p0 = 1.0;
            dp = points * (x * p1 - p0) / (x * x - 1.0);
            const double dx = p1 / dp;
            x -= dx;
            if (std::abs(dx) < 1e-16) break;
        }
        // Recompute the derivative at the converged node.
        double p0 = 1.0, p1 = x;
        for (int k = 2; k <= points; ++k) {
            const double p2 = ((2.0 * k - 1.0) * x * p1 - (k - 1.0) * p0) / k;
            p0 = p1;
            p1 = p2;
        }
        dp = points == 1 ? 1.0 : points * (x * p1 - p0) / (x * x - 1.0);
        const double w = 2.0 / ((1.0 - x * x) * dp * dp);
        nodes[static_cast<std::size_t>(i)] = -x;
        nodes[static_cast<std::size_t>(points - 1 - i)] = x;
        weights[static_cast<std::size_t>(i)] = w;
        weights[static_cast<std::size_t>(points - 1 - i)] = w;
    }
}

double integral_equation_residual(const LimitLaw& law, double t, int points) {
    if (!(t >= 0.0)) throw Error(ErrorCode::InvalidArgument, "t must be nonnegative");
    if (t == 0.0) return std::abs(limit_survival(law, 0.0) - 1.0);
    // With u = sin^2(theta): int_0^1 F(t sqrt(1-u))/sqrt(u) du = 2 int_0^{pi/2} F(t cos theta) cos theta dtheta.
    std::vector<double> x, w;
    gauss_legendre(points, x, w);
    const double half = 0.25 * std::numbers::pi;
    double integral = 0.0;
    for (std::size_t i = 0; i < x.size(); ++i) {
        const double theta = half * (x[i] + 1.0);
        integral += w[i] * limit_survival(law, t * std::cos(theta)) * std::cos(theta);
    }
    integral *= 2.0 * half;
    const double lhs = limit_survival(law, t) + t / (std::sqrt(2.0 * std::numbers::pi) * law.sigma) * integral;
    return std::abs(lhs - 1.0);
}

IntegralEquationReport verify_integral_equation(const LimitLaw& law, const std::vector<double>& t_grid, int quad_points) {
    if (quad_points < 64) throw Error(ErrorCode::InvalidArgument, "at least 64 quadrature points required");
    IntegralEquationReport report;
    report.t_grid = t_grid;
    for (double t : t_grid) {
        const double r = integral_equation_residual(law, t, quad_points);
        report.residuals.push_back(r);
        report.max_residual = std::max(report.max_residual, r);
    }
    return report;
}

EmpiricalDistribution make_empirical(std::vector<double> values, std::optional<double> censor_bound) {
    EmpiricalDistribution e;
    e.censor_bound = censor_bound;
    for (double v : values) {
        if (!(v >= 0.0)) throw Error(ErrorCode::InvalidArgument, "empirical values must be nonnegative");
        if (censor_bound && v >= *censor_bound)
            ++e.censored;
        else
            e.values.push_back(v);
    }
    std::sort(e.values.begin(), e.values.end());
    return e;
}

double ks_distance(const EmpiricalDistribution& empirical, const LimitLaw& law) {
    const std::size_t n = empirical.size();
    if (n == 0) throw Error(ErrorCode::EmptySample, "KS distance of an empty sample");
    const double inv = 1.0 / static_cast<double>(n);
    double d = 0.0;
    const auto& v = empirical.values;
    for (std::size_t i = 0; i < v.size(); ++i) {
        const double f = limit_cdf(law, v[i]);
        d = std::max({d, static_cast<double>(i + 1) * inv - f, f - static_cast<double>(i) * inv});
    }
    // Flat stretch of the empirical CDF between the last value and the censor bound.
    if (empirical.censor_bound) {
        const double f = limit_cdf(law, *empirical.censor_bound);
        d = std::max(d, std::abs(f - static_cast<double>(v.size()) * inv));
    }
    return d;
}

Regression regression_slope(const std::vector<double>& xs, const std::vector<double>& ys) {
    if (xs.size() != ys.size()) throw Error(ErrorCode::InvalidArgument, "xs and ys differ in length");
    const auto n = static_cast<double>(xs.size());
    if (xs.size() < 2) throw Error(ErrorCode::DegenerateX, "regression needs at least two points");
    double mx = 0.0, my = 0.0;
    for (std::size_t i = 0; i < xs.size(); ++i) {
        mx += xs[i];
        my += ys[i];
    }
    mx /= n;
    my /= n;
    double sxx = 0.0, sxy = 0.0, syy = 0.0;
    for (std::size_t i = 0; i < xs.size(); ++i) {
        sxx += (xs[i] - mx) * (xs[i] - mx);
        sxy += (xs[i] - mx) * (ys[i] - my);
        syy += (ys[i] - my) * (ys[i] - my);
    }
    if (!(sxx > 0.0)) throw Error(ErrorCode::DegenerateX, "regression needs two distinct x values");
    Regression r;
    r.slope = sxy / sxx;
    r.intercept = my - r.slope * mx;
    const double sse = std::max(0.0, syy - r.slope * sxy);
    r.r2 = syy > 0.0 ? 1.0 - sse / syy : 1.0;
    r.slope_stderr = xs.size() > 2 ? std::sqrt(sse / (n - 2.0) / sxx) : 0.0;
    return r;
}

double median(std::vector<double> xs) {
    if (xs.empty()) throw Error(ErrorCode::EmptySample, "median of an empty sample");
    const auto mid = xs.size() / 2;
    std::nth_element(xs.begin(), xs.begin() + static_cast<long>(mid), xs.end());
    const double upper = xs[mid];
    if (xs.size() % 2 == 1) return upper;
    const double lower = *std::max_element(xs.begin(), xs.begin() + static_cast<long>(mid));
    return 0.5 * (lower + upper);
}

}  // namespace zrec
