#pragma once

#include <array>
#include <cmath>
#include <cstdint>
#include <limits>
#include <numbers>

namespace zrec {

// Philox4x32-10 (Salmon et al., SC'11). Counter-based: a stream is fully
// determined by (key, stream id), so per-trial substreams are reproducible
// regardless of how trials are scheduled across threads.
class Philox4x32 {
public:
    using result_type = std::uint64_t;
    using Block = std::array<std::uint32_t, 4>;
    using Key = std::array<std::uint32_t, 2>;

    static constexpr const char* algorithm = "philox4x32-10";

    Philox4x32() : Philox4x32(0, 0, 0) {}

    // seed -> key; (stream, domain) select the substream, the low two
    // counter words enumerate blocks inside it.
    Philox4x32(std::uint64_t seed, std::uint64_t stream, std::uint32_t domain = 0)
        : key_{static_cast<std::uint32_t>(seed), static_cast<std::uint32_t>(seed >> 32)},
          stream_lo_(static_cast<std::uint32_t>(stream)),
          stream_hi_(static_cast<std::uint32_t>(stream >> 32) ^ (domain << 24)) {}

    static constexpr result_type min() { return 0; }
    static constexpr result_type max() { return std::numeric_limits<result_type>::max(); }

    result_type operator()() {
        if (cached_ == 0) {
            Block ctr{static_cast<std::uint32_t>(block_), static_cast<std::uint32_t>(block_ >> 32),
                      stream_lo_, stream_hi_};
            out_ = bijection(ctr, key_);
            ++block_;
            cached_ = 2;
        }
        --cached_;
        const std::size_t i = cached_ == 1 ? 0 : 2;
        return (static_cast<std::uint64_t>(out_[i + 1]) << 32) | out_[i];
    }

    // Jump to block `block` of the current substream.
    void seek(std::uint64_t block) {
        block_ = block;
        cached_ = 0;
    }

    static constexpr Block bijection(Block ctr, Key key) {
        for (int round = 0; round < 10; ++round) {
            if (round > 0) {
                key[0] += 0x9E3779B9u;
                key[1] += 0xBB67AE85u;
            }
            const std::uint64_t p0 = std::uint64_t{0xD2511F53u} * ctr[0];
            const std::uint64_t p1 = std::uint64_t{0xCD9E8D57u} * ctr[2];
            ctr = {static_cast<std::uint32_t>(p1 >> 32) ^ ctr[1] ^ key[0], static_cast<std::uint32_t>(p1),
                   static_cast<std::uint32_t>(p0 >> 32) ^ ctr[3] ^ key[1], static_cast<std::uint32_t>(p0)};
        }
        return ctr;
    }

private:
    Key key_;
    std::uint32_t stream_lo_;
    std::uint32_t stream_hi_;
    std::uint64_t block_ = 0;
    Block out_{};
    int cached_ = 0;
};

// Substream domains used throughout the library.
enum class StreamDomain : std::uint32_t {
    Forward = 0,
    Backward = 1,
    Start = 2,
    Auxiliary = 3,
};

inline Philox4x32 make_stream(std::uint64_t seed, std::uint64_t trial, StreamDomain domain) {
    return Philox4x32(seed, trial, static_cast<std::uint32_t>(domain));
}

// Uniform on [0, 1) with 53 random bits.
template <class Engine>
double uniform01(Engine& eng) {
    return static_cast<double>(eng() >> 11) * 0x1.0p-53;
}

// Uniform on (0, 1].
template <class Engine>
double uniform_open0(Engine& eng) {
    return (static_cast<double>(eng() >> 11) + 1.0) * 0x1.0p-53;
}

template <class Engine>
double standard_exponential(Engine& eng) {
    return -std::log(uniform_open0(eng));
}

// Box-Muller, one variate per call; explicit so runs are toolchain-independent.
template <class Engine>
double standard_normal(Engine& eng) {
    const double r = std::sqrt(-2.0 * std::log(uniform_open0(eng)));
    return r * std::cos(2.0 * std::numbers::pi * uniform01(eng));
}

}  // namespace zrec
