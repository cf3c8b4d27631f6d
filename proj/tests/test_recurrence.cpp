#include <doctest.h>

#include <cmath>

#include "models.hpp"
#include "zrec/recurrence.hpp"

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

// Golden mean shift, maximal entropy, antisymmetric depth-3 cocycle.
SuspensionSystem golden_system() {
    const ShiftSpace g = test::golden_shift();
    const GibbsModel m = build_gibbs(g, LocallyConstantFunction::constant(g, 0.0));
    const auto phi = symmetrize(g, test::fn(g, 3, {{"aaa", 0}, {"aab", 1}, {"aba", 0}, {"baa", 0}, {"bab", 0}}));
    const auto roof = test::fn(g, 2, {{"aa", 1.0}, {"ab", 0.5}, {"ba", 2.0}});
    return make_suspension(m, roof, LocallyConstantFunction::constant(g, 1.0), LocallyConstantFunction::constant(g, -1.0),
                           phi);
}

}  // namespace

TEST_CASE("return time on a fixed path") {
    const SuspensionSystem sys = test::trinomial({{"a", 1.0}, {"b", 2.0}, {"c", 1.5}});
    SymbolPath p = SymbolPath::fixed(0, word_from_string("bacbaaaa", 3));
    // S_1 = 0 but omega_1 = a; S_2 = -1; S_3 = 0 with omega_3 = b.
    const ReturnSample r = cylinder_return_time(sys, p, 0, 0, 100);
    CHECK(r.w == 3);
    CHECK(r.zero_count == 2);
    CHECK(r.roof_time == Approx(4.5));
    CHECK_FALSE(r.capped);

    SymbolPath p2 = SymbolPath::fixed(0, word_from_string("bacbaaaa", 3));
    const ReturnSample c = cylinder_return_time(sys, p2, 0, 0, 2);
    CHECK(c.capped);
    CHECK(c.w == 2);

    // Window -1..1 = "bac": S_2 = 0 lands on "cba", S_3 = 0 on "bac".
    SymbolPath p3 = SymbolPath::fixed(-1, word_from_string("bacbacbac", 3));
    const ReturnSample r3 = cylinder_return_time(sys, p3, 1, 1, 6);
    CHECK(r3.w == 3);
    CHECK(code_of([&] { cylinder_return_time(sys, p3, -1, 0, 5); }) == ErrorCode::InvalidArgument);
}

TEST_CASE("streaming scanner agrees with stored paths") {
    for (const SuspensionSystem& sys : {test::trinomial({{"a", 1.0}, {"b", 2.0}, {"c", 1.5}}), golden_system()}) {
        const int n = sys.model.shift.alphabet_size();
        for (auto [q, qp] : {std::pair{0, 0}, std::pair{1, 1}, std::pair{2, 0}}) {
            const ReturnBatch batch = random_window_batch(sys, q, qp, 60, 20000, 4242, 1);
            for (std::size_t i = 0; i < batch.samples.size(); ++i) {
                const Cylinder cyl = make_cylinder(sys.model.shift, q, qp, batch.windows[i]);
                SymbolPath path = sample_conditioned(sys.model, sys.generator, cyl, 4242, i);
                const ReturnSample ref = cylinder_return_time(sys, path, q, qp, 20000);
                CAPTURE(n);
                CAPTURE(i);
                CHECK(batch.samples[i].w == ref.w);
                CHECK(batch.samples[i].zero_count == ref.zero_count);
                CHECK(batch.samples[i].capped == ref.capped);
                CHECK(batch.samples[i].roof_time == Approx(ref.roof_time).epsilon(1e-12));
            }
        }
    }
}

TEST_CASE("batches are reproducible across thread counts") {
    const SuspensionSystem sys = test::trinomial();
    const Cylinder cyl = make_cylinder(sys.model.shift, 0, 1, word_from_string("bc", 3));
    const ReturnBatch a = return_time_batch(sys, cyl, 200, 100000, 7, 1);
    const ReturnBatch b = return_time_batch(sys, cyl, 200, 100000, 7, 4);
    for (std::size_t i = 0; i < a.samples.size(); ++i) CHECK(a.samples[i].w == b.samples[i].w);
    CHECK(a.capped_fraction == b.capped_fraction);
    for (const auto& s : a.samples) CHECK((s.w >= 1 && s.w <= 100000));

    const ShiftSpace g = test::golden_shift();
    const SuspensionSystem gs = golden_system();
    CHECK(code_of([&] { return_time_batch(gs, Cylinder{0, 1, word_from_string("bb", 2)}, 10, 10, 1, 1); }) ==
          ErrorCode::ZeroMeasure);
    CHECK(code_of([&] { return_time_batch(sys, cyl, 0, 10, 1, 1); }) == ErrorCode::InvalidArgument);
}

TEST_CASE("flow return ratio") {
    const SuspensionSystem sys = test::trinomial({{"a", 1.0}, {"b", 2.0}, {"c", 1.5}});
    std::vector<ReturnSample> samples{{10, 15.0, 1, false}, {20, 33.0, 1, false}, {5, 100.0, 1, false}, {50, 0.0, 0, true}};
    const RatioStats st = flow_return_ratio(sys, samples, 10);
    CHECK(st.count == 2);
    CHECK(st.mean_ratio == Approx((1.0 + 1.1) / 2));
    CHECK(st.mean_abs_deviation == Approx(0.05));
    CHECK(st.max_abs_deviation == Approx(0.1));
}

TEST_CASE("last-passage identity") {
    const ShiftSpace b = test::full_shift(2);
    const GibbsModel m = build_gibbs(b, test::fn(b, 1, {{"a", std::log(0.3)}, {"b", std::log(0.7)}}));
    const auto phi = test::fn(b, 1, {{"a", 1}, {"b", -1}});
    const Cylinder d = make_cylinder(b, 0, 0, word_from_string("a", 2));
    const Cylinder a = make_cylinder(b, 0, 0, word_from_string("b", 2));
    const DvoretzkyResidual r = dvoretzky_check(m, phi, d, a, 3);
    REQUIRE(r.terms.size() == 4);
    CHECK(r.terms[0] == Approx(0.0));
    CHECK(r.terms[1] == Approx(0.0));
    CHECK(r.terms[2] == Approx(0.147).epsilon(1e-13));
    CHECK(r.terms[3] == Approx(0.0));
    CHECK(r.no_visit == Approx(0.153).epsilon(1e-13));
    CHECK(r.lhs == Approx(0.3).epsilon(1e-14));
    CHECK(r.residual <= 1e-15);

    // D inside A: every path in D visits A at time 0.
    const Cylinder nested = make_cylinder(b, 0, 1, word_from_string("ba", 2));
    for (int n = 0; n <= 8; ++n) {
        const DvoretzkyResidual rn = dvoretzky_check(m, phi, nested, a, n);
        CHECK(rn.no_visit == 0.0);
        CHECK(rn.residual <= 1e-14);
    }

    // Sweep on a non-full shift with a depth-3 cocycle.
    const SuspensionSystem gs = golden_system();
    std::vector<Cylinder> ds;
    for (int q = 0; q <= 1; ++q)
        for (auto& c : enumerate_cylinders(gs.model.shift, q, 1 - q)) ds.push_back(c);
    for (const Cylinder& target : ds)
        for (const auto& res : dvoretzky_sweep(gs.model, gs.cocycle, ds, target, 9)) CHECK(res.residual <= 1e-14);

    CHECK(code_of([&] { dvoretzky_check(m, phi, d, a, 63); }) == ErrorCode::InvalidArgument);
    CHECK(code_of([&] { dvoretzky_check(m, phi, d, a, 20, 1000); }) == ErrorCode::SizeOverflow);
}

TEST_CASE("exponent sweep plumbing") {
    const SuspensionSystem sys = test::trinomial();
    SweepOptions opts;
    opts.bootstrap_resamples = 20;
    const SweepReport r = exponent_sweep(sys, {0, 1}, 40, 1000000, 12, 1, opts);
    REQUIRE(r.rows.size() == 2);
    CHECK(r.rows[1].q_width == 3);
    CHECK(r.rows[0].log_sqrt_tau.size() == 40);
    CHECK(r.slope_ci_low <= r.slope_ci_high);
    CHECK(r.entropy == Approx(std::log(3.0)));
    CHECK(code_of([&] { exponent_sweep(sys, {1, 2}, 30, 5, 1, 1); }) == ErrorCode::CapTooSmall);
    CHECK(code_of([&] { exponent_sweep(sys, {2, 1}, 30, 5, 1, 1); }) == ErrorCode::InvalidArgument);
    CHECK(code_of([&] { exponent_sweep(sys, {1}, 30, 5, 1, 1); }) == ErrorCode::InvalidArgument);
}
