#include <doctest.h>

#include <cmath>
#include <set>

#include "zrec/rng.hpp"

using zrec::Philox4x32;

TEST_CASE("philox4x32-10 known-answer vectors") {
    using B = Philox4x32::Block;
    using K = Philox4x32::Key;
    CHECK(Philox4x32::bijection(B{0, 0, 0, 0}, K{0, 0}) == B{0x6627e8d5, 0xe169c58d, 0xbc57ac4c, 0x9b00dbd8});
    CHECK(Philox4x32::bijection(B{0xffffffff, 0xffffffff, 0xffffffff, 0xffffffff}, K{0xffffffff, 0xffffffff}) ==
          B{0x408f276d, 0x41c83b0e, 0xa20bc7c6, 0x6d5451fd});
    CHECK(Philox4x32::bijection(B{0x243f6a88, 0x85a308d3, 0x13198a2e, 0x03707344}, K{0xa4093822, 0x299f31d0}) ==
          B{0xd16cfe09, 0x94fdcceb, 0x5001e420, 0x24126ea1});
}

TEST_CASE("engine output is the bijection of the block counter") {
    Philox4x32 eng(0x0123456789abcdefULL, 0x42, 3);
    const auto b0 = Philox4x32::bijection({0, 0, 0x42, 3u << 24}, {0x89abcdef, 0x01234567});
    const auto b1 = Philox4x32::bijection({1, 0, 0x42, 3u << 24}, {0x89abcdef, 0x01234567});
    CHECK(eng() == ((std::uint64_t{b0[1]} << 32) | b0[0]));
    CHECK(eng() == ((std::uint64_t{b0[3]} << 32) | b0[2]));
    CHECK(eng() == ((std::uint64_t{b1[1]} << 32) | b1[0]));
}

TEST_CASE("seek and substreams") {
    Philox4x32 a(7, 1), b(7, 1);
    for (int i = 0; i < 10; ++i) a();
    b.seek(5);
    CHECK(a() == b());

    std::set<std::uint64_t> firsts;
    for (std::uint64_t trial = 0; trial < 4; ++trial)
        for (auto d : {zrec::StreamDomain::Forward, zrec::StreamDomain::Backward, zrec::StreamDomain::Start,
                       zrec::StreamDomain::Auxiliary})
            firsts.insert(zrec::make_stream(7, trial, d)());
    CHECK(firsts.size() == 16);
}

TEST_CASE("variate helpers") {
    Philox4x32 eng(11, 0);
    double sum = 0.0, sum_exp = 0.0, sum_sq = 0.0;
    const int n = 200000;
    for (int i = 0; i < n; ++i) {
        const double u = zrec::uniform01(eng);
        REQUIRE(u >= 0.0);
        REQUIRE(u < 1.0);
        sum += u;
        sum_exp += zrec::standard_exponential(eng);
        const double z = zrec::standard_normal(eng);
        sum_sq += z * z;
    }
    // 5 standard errors.
    CHECK(std::abs(sum / n - 0.5) < 5 * std::sqrt(1.0 / 12 / n));
    CHECK(std::abs(sum_exp / n - 1.0) < 5 * std::sqrt(1.0 / n));
    CHECK(std::abs(sum_sq / n - 1.0) < 5 * std::sqrt(2.0 / n));
}
