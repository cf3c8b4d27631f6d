#include <doctest.h>

#include <cmath>
#include <numbers>

#include <Eigen/Eigenvalues>

#include "models.hpp"
#include "zrec/thermo.hpp"

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

// Random primitive SFT with alphabet 2..5 and a depth-1 potential in [-2, 2].
std::pair<ShiftSpace, LocallyConstantFunction> random_model(Philox4x32& rng, int depth = 1) {
    for (;;) {
        const int n = 2 + static_cast<int>(rng() % 4);
        std::vector<std::vector<int>> t(n, std::vector<int>(n));
        for (auto& row : t)
            for (auto& x : row) x = uniform01(rng) < 0.7 ? 1 : 0;
        try {
            ShiftSpace s = validate_shift(n, t);
            std::vector<double> dense(s.code_space(depth));
            for (auto& v : dense) v = 4.0 * uniform01(rng) - 2.0;
            LocallyConstantFunction h(s, depth, dense);
            return {s, h};
        } catch (const Error&) {
        }
    }
}

double log_spectral_radius(const ShiftSpace& s, const LocallyConstantFunction& h) {
    const int n = s.alphabet_size();
    Eigen::MatrixXd m = Eigen::MatrixXd::Zero(n, n);
    for (int i = 0; i < n; ++i)
        for (int j = 0; j < n; ++j)
            if (s.allowed(static_cast<Symbol>(i), static_cast<Symbol>(j)))
                m(i, j) = std::exp(h.at_code(static_cast<std::size_t>(h.depth() == 1 ? i : i * n + j)));
    return std::log(Eigen::EigenSolver<Eigen::MatrixXd>(m).eigenvalues().cwiseAbs().maxCoeff());
}

}  // namespace

TEST_CASE("locally constant functions") {
    const ShiftSpace g = test::golden_shift();
    const auto f = test::fn(g, 2, {{"aa", 1.5}, {"ab", -2}, {"ba", 3}});
    CHECK(f(word_from_string("ba", 2)) == 3);
    CHECK(f.min() == -2);
    CHECK(f.max() == 3);
    CHECK(f.sup_norm() == 3);
    CHECK_FALSE(f.integer_valued());
    CHECK(f.to_words().size() == 3);
    CHECK(f.scaled(2.0).max() == 6);
    CHECK(code_of([&] { test::fn(g, 2, {{"aa", 1}, {"ab", 1}}); }) == ErrorCode::InvalidArgument);
    CHECK(code_of([&] { test::fn(g, 2, {{"aa", 1}, {"ab", 1}, {"ba", 1}, {"bb", 1}}); }) == ErrorCode::InvalidArgument);
    CHECK(code_of([&] { test::fn(g, 1, {{"a", 1}, {"b", NAN}}); }) == ErrorCode::InvalidArgument);
}

TEST_CASE("gibbs model oracles") {
    SUBCASE("golden mean, maximal entropy") {
        const ShiftSpace g = test::golden_shift();
        const GibbsModel m = build_gibbs(g, LocallyConstantFunction::constant(g, 0.0));
        CHECK(m.pressure == Approx(0.48121182505960347).epsilon(1e-14));
        CHECK(m.entropy == Approx(m.pressure).epsilon(1e-14));
        CHECK(m.stationary()(0) == Approx(0.7236067977499789).epsilon(1e-14));
        CHECK(m.stationary()(1) == Approx(0.27639320225002095).epsilon(1e-14));
        CHECK(m.gibbs_constant == Approx(std::sqrt(5.0)).epsilon(1e-12));
    }
    SUBCASE("full 2-shift with h = (0, -1)") {
        const ShiftSpace s = test::full_shift(2);
        const GibbsModel m = build_gibbs(s, test::fn(s, 1, {{"a", 0}, {"b", -1}}));
        CHECK(m.pressure == Approx(0.31326168751822286).epsilon(1e-14));
        CHECK(m.entropy == Approx(0.5822031088882179).epsilon(1e-13));
        CHECK(m.stationary()(0) == Approx(0.7310585786300049).epsilon(1e-14));
    }
    SUBCASE("three-symbol SFT with a depth-2 potential") {
        const ShiftSpace s = validate_shift(3, {{1, 1, 0}, {1, 0, 1}, {1, 1, 1}});
        const auto h = test::fn(s, 2, {{"aa", 0.3}, {"ab", -0.2}, {"ba", 0.5}, {"bc", -0.7},
                                       {"ca", 0.1}, {"cb", 0.25}, {"cc", -0.4}});
        const GibbsModel m = build_gibbs(s, h);
        CHECK(m.pressure == Approx(0.8070144669923704).epsilon(1e-13));
        CHECK(m.entropy == Approx(0.7151966795662792).epsilon(1e-13));
        const MarkovChain c = m.chain_for_depth(1);
        CHECK(c.stationary(0) == Approx(0.5846678553116845).epsilon(1e-13));
        CHECK(c.stationary(2) == Approx(0.13137773424700253).epsilon(1e-13));
        const Cylinder cyl = make_cylinder(s, 2, 2, word_from_string("abcca", 3));
        CHECK(cylinder_measure(m, cyl) == Approx(0.006979561198981383).epsilon(1e-12));
        CHECK(code_of([&] { make_cylinder(s, 0, 1, word_from_string("ac", 3)); }) == ErrorCode::InvalidArgument);
    }
}

TEST_CASE("variational identity and pressure on random models") {
    Philox4x32 rng(2024, 0);
    for (int trial = 0; trial < 100; ++trial) {
        const auto [s, h] = random_model(rng);
        const GibbsModel m = build_gibbs(s, h);
        CAPTURE(trial);
        CHECK(std::abs(m.entropy - (m.pressure - m.integral(h))) <= 1e-10);
        CHECK(m.pressure == Approx(log_spectral_radius(s, h)).epsilon(1e-11));
        const Eigen::VectorXd& pi = m.stationary();
        CHECK(std::abs(pi.sum() - 1.0) <= 1e-12);
        CHECK((pi.transpose() * m.transition() - pi.transpose()).cwiseAbs().maxCoeff() <= 1e-12);
    }
}

TEST_CASE("depth-2 random models: lifting preserves the measure") {
    Philox4x32 rng(77, 0);
    for (int trial = 0; trial < 20; ++trial) {
        const auto [s, h] = random_model(rng, 2);
        const GibbsModel m = build_gibbs(s, h);
        CHECK(m.pressure == Approx(log_spectral_radius(s, h)).epsilon(1e-11));
        const MarkovChain lifted = m.chain.lifted(3);
        for (const Word& w : enumerate_words(s, 4))
            CHECK(lifted.word_measure(w) == Approx(m.chain.word_measure(w)).epsilon(1e-12));
        CHECK(lifted.expectation(h) == Approx(m.integral(h)).epsilon(1e-12));
    }
}

TEST_CASE("gibbs bounds") {
    const ShiftSpace b = test::full_shift(2);
    const auto bern = gibbs_bound_report(build_gibbs(b, LocallyConstantFunction::constant(b, -std::log(2.0))), 8);
    CHECK(bern.ratio_min == Approx(1.0).epsilon(1e-12));
    CHECK(bern.ratio_max == Approx(1.0).epsilon(1e-12));

    const ShiftSpace g = test::golden_shift();
    const GibbsModel m = build_gibbs(g, LocallyConstantFunction::constant(g, 0.0));
    const auto r = gibbs_bound_report(m, 8);
    CHECK(r.empirical_constant <= 2.62);
    CHECK(r.empirical_constant <= r.analytic_constant * (1 + 1e-12));
    CHECK(r.ratio_min >= 1.0 / r.analytic_constant * (1 - 1e-12));
    CHECK(code_of([&] { gibbs_bound_report(m, 0); }) == ErrorCode::InvalidArgument);

    Philox4x32 rng(5, 0);
    for (int trial = 0; trial < 10; ++trial) {
        const auto [s, h] = random_model(rng, 2);
        const GibbsModel rm = build_gibbs(s, h);
        const auto rr = gibbs_bound_report(rm, 6);
        CHECK(rr.empirical_constant <= rr.analytic_constant * (1 + 1e-12));
    }
}

TEST_CASE("variance") {
    const SuspensionSystem tri = test::trinomial();
    const VarianceReport v = green_kubo_variance(tri.model, tri.cocycle);
    CHECK(v.sigma2 == Approx(2.0 / 3.0).epsilon(1e-12));
    CHECK_FALSE(v.degenerate);
    REQUIRE(v.dp_check.size() == 2);
    for (const auto& [n, ratio] : v.dp_check) CHECK(std::abs(ratio - 2.0 / 3.0) <= 1e-12);

    // Reversible chain with a circulating current: centered but not a coboundary.
    const ShiftSpace s = test::full_shift(3);
    const GibbsModel m = build_gibbs(s, test::fn(s, 2, {{"aa", 0.2}, {"ab", -0.3}, {"ac", 0.4}, {"ba", -0.3}, {"bb", 0.0},
                                                        {"bc", 0.1}, {"ca", 0.4}, {"cb", 0.1}, {"cc", -0.5}}));
    const auto current = test::fn(s, 2, {{"aa", 0}, {"ab", 1}, {"ac", -1}, {"ba", -1}, {"bb", 0},
                                         {"bc", 1}, {"ca", 1}, {"cb", -1}, {"cc", 0}});
    const VarianceReport cv = green_kubo_variance(m, current);
    CHECK(cv.sigma2 == Approx(0.6230964651547026).epsilon(1e-10));
    CHECK(truncated_green_kubo(m, current, 60) == Approx(cv.sigma2).epsilon(1e-10));

    const ShiftSpace g = test::golden_shift();
    const GibbsModel gm = build_gibbs(g, LocallyConstantFunction::constant(g, 0.0));
    const auto cob = test::fn(g, 2, {{"aa", 0}, {"ab", 1}, {"ba", -1}});
    CHECK(green_kubo_variance(gm, cob).degenerate);
    CHECK(green_kubo_variance(gm, cob).sigma2 < 1e-10);
    CHECK(code_of([&] { llt_ratio(gm, cob, 10); }) == ErrorCode::Degenerate);

    const ShiftSpace b = test::full_shift(2);
    const GibbsModel bm = build_gibbs(b, LocallyConstantFunction::constant(b, -std::log(2.0)));
    CHECK(code_of([&] { green_kubo_variance(bm, test::fn(b, 1, {{"a", 1}, {"b", 0}})); }) == ErrorCode::NotCentered);
    CHECK(code_of([&] { require_centered_cocycle(bm, test::fn(b, 1, {{"a", 0.5}, {"b", -0.5}})); }) ==
          ErrorCode::InvalidArgument);
}

TEST_CASE("exact law of the Birkhoff sum") {
    const SuspensionSystem tri = test::trinomial();
    const SumDistribution d4 = exact_sum_distribution(tri.model, tri.cocycle, 4);
    CHECK(d4.min_value == -4);
    CHECK(d4.max_value() == 4);
    CHECK(d4.at(0) * 81 == Approx(19.0).epsilon(1e-13));
    CHECK(d4.at(9) == 0.0);
    CHECK(llt_ratio(tri.model, tri.cocycle, 4) == Approx(std::sqrt(16.0 * std::numbers::pi / 3.0) * 19.0 / 81.0).epsilon(1e-13));
    CHECK(llt_ratio(tri.model, tri.cocycle, 100) == Approx(0.9981252119194165).epsilon(1e-12));
    CHECK(llt_ratio(tri.model, tri.cocycle, 1000) == Approx(0.9998125019695593).epsilon(1e-11));

    const SumDistribution d = exact_sum_distribution(tri.model, tri.cocycle, 50);
    double total = 0.0;
    for (double p : d.probabilities) total += p;
    CHECK(total == Approx(1.0).epsilon(1e-13));
    CHECK(std::abs(d.mean()) <= 1e-13);
    CHECK(d.variance() == Approx(100.0 / 3.0).epsilon(1e-12));
    CHECK(code_of([&] { exact_sum_distribution(tri.model, tri.cocycle, 100, 50); }) == ErrorCode::RangeOverflow);
}

TEST_CASE("joint law satisfies Chapman-Kolmogorov") {
    Philox4x32 rng(9, 0);
    for (int trial = 0; trial < 5; ++trial) {
        const auto [s, h] = random_model(rng, 2);
        const GibbsModel m = build_gibbs(s, h);
        const MarkovChain& c = m.chain;
        std::vector<long> values(static_cast<std::size_t>(c.size()));
        for (auto& v : values) v = static_cast<long>(rng() % 5) - 2;
        const int n = 4, k = 3;
        const JointSumLaw whole = joint_sum_law(c, values, n + k, c.stationary);
        const JointSumLaw first = joint_sum_law(c, values, n, c.stationary);
        Eigen::MatrixXd composed = Eigen::MatrixXd::Zero(whole.table.rows(), whole.table.cols());
        for (int st = 0; st < c.size(); ++st) {
            Eigen::VectorXd e = Eigen::VectorXd::Zero(c.size());
            e(st) = 1.0;
            const JointSumLaw rest = joint_sum_law(c, values, k, e);
            for (Eigen::Index u = 0; u < first.table.cols(); ++u) {
                const double pu = first.table(st, u);
                if (pu == 0.0) continue;
                for (Eigen::Index v = 0; v < rest.table.cols(); ++v) {
                    const long sum = first.offset + u + rest.offset + v;
                    composed.col(sum - whole.offset) += pu * rest.table.col(v);
                }
            }
        }
        CHECK((composed - whole.table).cwiseAbs().maxCoeff() <= 1e-14);
    }
}

TEST_CASE("lattice and symmetrization") {
    const SuspensionSystem tri = test::trinomial();
    const auto ap = cocycle_aperiodicity(tri.model, tri.cocycle);
    CHECK_FALSE(ap.periodic);
    CHECK(ap.max_radius < 1.0);

    const ShiftSpace b = test::full_shift(2);
    const GibbsModel bm = build_gibbs(b, LocallyConstantFunction::constant(b, -std::log(2.0)));
    const auto parity = cocycle_aperiodicity(bm, test::fn(b, 1, {{"a", 1}, {"b", -1}}));
    CHECK(parity.periodic);
    CHECK(parity.theta_at_max == Approx(std::numbers::pi));
    CHECK(code_of([&] { cocycle_aperiodicity(bm, test::fn(b, 1, {{"a", 1}, {"b", -1}}), 8); }) ==
          ErrorCode::InvalidArgument);

    const ShiftSpace g = test::golden_shift();
    const auto sym = symmetrize(g, test::fn(g, 2, {{"aa", 0}, {"ab", 1}, {"ba", 0}}));
    CHECK(sym.to_words() == test::fn(g, 2, {{"aa", 0}, {"ab", 1}, {"ba", -1}}).to_words());
    const ShiftSpace asym = validate_shift(3, {{0, 1, 0}, {0, 0, 1}, {1, 1, 0}});
    CHECK(code_of([&] { symmetrize(asym, LocallyConstantFunction::constant(asym, 1.0)); }) == ErrorCode::InvalidArgument);
}

TEST_CASE("path generator reproduces the Gibbs measure") {
    const ShiftSpace s = validate_shift(3, {{1, 1, 0}, {1, 0, 1}, {1, 1, 1}});
    const auto h = test::fn(s, 2, {{"aa", 0.3}, {"ab", -0.2}, {"ba", 0.5}, {"bc", -0.7},
                                   {"ca", 0.1}, {"cb", 0.25}, {"cc", -0.4}});
    const GibbsModel m = build_gibbs(s, h);
    auto gen = std::make_shared<MarkovPathGenerator>(m);
    SymbolPath p(gen, make_stream(3, 0, StreamDomain::Forward), make_stream(3, 0, StreamDomain::Backward));
    const int n = 200000;
    const Word fwd = p.window(0, n);
    const Word bwd = p.window(-n, 0);
    CHECK(s.admissible(fwd));
    CHECK(s.admissible(bwd));
    for (const Word& w : enumerate_words(s, 2)) {
        const double nu = m.chain.word_measure(w);
        double cf = 0, cb = 0;
        for (int i = 0; i < n; ++i) {
            cf += fwd[i] == w[0] && fwd[i + 1] == w[1];
            cb += bwd[i] == w[0] && bwd[i + 1] == w[1];
        }
        // Loose: the samples are correlated.
        CHECK(std::abs(cf / n - nu) < 0.01);
        CHECK(std::abs(cb / n - nu) < 0.01);
    }
}
