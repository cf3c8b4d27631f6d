#include <doctest.h>

#include <cmath>
#include <numbers>

#include "zrec/rng.hpp"
#include "zrec/stats.hpp"

using namespace zrec;
using doctest::Approx;

namespace {

ErrorCode code_of(auto&& f) {
    try {
        f();
    } catch (const Error& e) {
        return e.code();
    }
    return ErrorCode::Ok;
}

}  // namespace

TEST_CASE("limit law survival against direct integration") {
    CHECK(limit_survival(LimitLaw(1.0), 1.0) == Approx(0.5231565837302468).epsilon(1e-14));
    CHECK(limit_survival(LimitLaw(0.5), 2.0) == Approx(0.1888212826039379).epsilon(1e-14));
    CHECK(limit_survival(LimitLaw(2.0), 0.1) == Approx(0.9613232917169126).epsilon(1e-14));
    CHECK(limit_survival(LimitLaw(1.0), 30.0) == Approx(0.02656669870796759).epsilon(1e-13));
    CHECK(limit_survival(LimitLaw(1.0), 0.0) == 1.0);
    CHECK(limit_quantile(LimitLaw(1.0), 0.5) == Approx(1.0876430427817059).epsilon(1e-12));
    CHECK(limit_quantile(LimitLaw(2.0), 0.9) == Approx(15.710741405195858).epsilon(1e-10));
    CHECK(code_of([] { LimitLaw(0.0); }) == ErrorCode::InvalidArgument);
    CHECK(code_of([] { limit_quantile(LimitLaw(1.0), 1.0); }) == ErrorCode::InvalidArgument);
}

TEST_CASE("erfcx is continuous across branches") {
    for (double x : {0.0, 0.5, 4.999999, 5.0, 5.000001, 12.0, 1e3}) {
        const double y = erfcx(x);
        CHECK(y > 0.0);
        // erfcx(x) ~ 1 / (x sqrt(pi)) for large x
        if (x >= 12.0) CHECK(y * x * std::sqrt(std::numbers::pi) == Approx(1.0).epsilon(1.0 / (x * x)));
    }
    CHECK(erfcx(4.999999999) == Approx(erfcx(5.0)).epsilon(1e-9));
    CHECK(erfcx(0.0) == 1.0);
}

TEST_CASE("survival is monotone and scales with sigma") {
    double prev = 1.0;
    for (double t = 0.01; t < 1000.0; t *= 1.3) {
        const double s = limit_survival(LimitLaw(1.0), t);
        CHECK(s < prev);
        CHECK(limit_survival(LimitLaw(3.0), 3.0 * t) == Approx(s).epsilon(1e-13));
        CHECK(limit_cdf(LimitLaw(1.0), t) == Approx(1.0 - s).epsilon(1e-13));
        prev = s;
    }
}

TEST_CASE("integral equation") {
    for (double sigma : {0.5, 1.0, 2.0})
        for (double t : {0.5, 1.0, 2.0, 5.0}) CHECK(integral_equation_residual(LimitLaw(sigma), t, 512) <= 1e-12);
    // The sine substitution converges geometrically.
    const double coarse = integral_equation_residual(LimitLaw(1.0), 2.0, 8);
    const double fine = integral_equation_residual(LimitLaw(1.0), 2.0, 32);
    CHECK(fine < coarse);
    const auto rep = verify_integral_equation(LimitLaw(1.0), {0.5, 1.0, 2.0, 5.0});
    CHECK(rep.residuals.size() == 4);
    CHECK(rep.max_residual <= 1e-8);
    CHECK(code_of([] { verify_integral_equation(LimitLaw(1.0), {1.0}, 32); }) == ErrorCode::InvalidArgument);
}

TEST_CASE("gauss-legendre") {
    std::vector<double> x, w;
    gauss_legendre(6, x, w);
    double poly = 0.0, total = 0.0;
    for (std::size_t i = 0; i < x.size(); ++i) {
        poly += w[i] * std::pow(x[i], 10);
        total += w[i];
    }
    CHECK(poly == Approx(2.0 / 11.0).epsilon(1e-14));
    CHECK(total == Approx(2.0).epsilon(1e-15));
}

TEST_CASE("KS distance") {
    const LimitLaw law(1.0);
    CHECK(ks_distance(make_empirical({1.0}), law) == Approx(0.5231565837302468).epsilon(1e-13));
    CHECK(ks_distance(make_empirical({2.0, 1.0}), law) == Approx(0.47684341626975324).epsilon(1e-13));
    // One observation censored at 2: the empirical CDF stays at 1/2 up to the bound.
    const auto cens = make_empirical({1.0, 3.0}, 2.0);
    CHECK(cens.censored == 1);
    CHECK(cens.size() == 2);
    CHECK(ks_distance(cens, law) == Approx(0.47684341626975324).epsilon(1e-13));
    // Everything censored: the sup is F at the bound.
    CHECK(ks_distance(make_empirical({5.0}, 2.0), law) == Approx(0.6637959975536587).epsilon(1e-12));
    CHECK(code_of([] { ks_distance(make_empirical({}), LimitLaw(1.0)); }) == ErrorCode::EmptySample);
    CHECK(code_of([] { make_empirical({-1.0}); }) == ErrorCode::InvalidArgument);

    // Samples from the law itself.
    Philox4x32 rng(1, 0);
    std::vector<double> xs(20000);
    for (auto& v : xs) v = sample_limit_law(LimitLaw(0.8), rng);
    CHECK(ks_distance(make_empirical(xs), LimitLaw(0.8)) < 1.63 / std::sqrt(20000.0));
    CHECK(ks_distance(make_empirical(xs, 50.0), LimitLaw(0.8)) < 1.63 / std::sqrt(20000.0));
    CHECK(ks_distance(make_empirical(xs), LimitLaw(1.2)) > 0.05);
}

TEST_CASE("regression and median") {
    const Regression r = regression_slope({1, 2, 3, 4}, {1.1, 1.9, 3.2, 3.9});
    CHECK(r.slope == Approx(0.97).epsilon(1e-14));
    CHECK(r.intercept == Approx(0.1).epsilon(1e-13));
    CHECK(r.r2 == Approx(0.986785527005768).epsilon(1e-13));
    CHECK(r.slope_stderr == Approx(0.07937253933193825).epsilon(1e-12));
    CHECK(code_of([] { regression_slope({1, 1, 1}, {1, 2, 3}); }) == ErrorCode::DegenerateX);
    CHECK(code_of([] { regression_slope({1}, {1}); }) == ErrorCode::DegenerateX);
    CHECK(median({3, 1, 2}) == 2);
    CHECK(median({4, 1, 3, 2}) == 2.5);
    CHECK(code_of([] { median({}); }) == ErrorCode::EmptySample);
}
