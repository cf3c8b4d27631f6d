#pragma once

#include <cstddef>
#include <cstdint>
#include <memory>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "zrec/error.hpp"
#include "zrec/rng.hpp"

namespace zrec {

using Symbol = std::uint8_t;
using Word = std::vector<Symbol>;

inline constexpr int kMaxAlphabet = 26;
inline constexpr std::size_t kDefaultCylinderCap = 1'000'000;

// Words are written with letters: symbol 0 is 'a', 1 is 'b', ...
std::string word_to_string(std::span<const Symbol> word);
Word word_from_string(std::string_view text, int alphabet_size);

// Transition matrix of a primitive subshift of finite type. Immutable.
class ShiftSpace {
public:
    int alphabet_size() const noexcept { return n_; }
    int primitivity_power() const noexcept { return primitivity_power_; }
    bool allowed(Symbol from, Symbol to) const noexcept { return transitions_[from * n_ + to] != 0; }
    bool admissible(std::span<const Symbol> word) const noexcept;
    const std::vector<std::uint8_t>& transitions() const noexcept { return transitions_; }
    bool is_full_shift() const noexcept;

    // Number of dense codes for words of `length` symbols (n^length);
    // throws SizeOverflow above `cap`.
    std::size_t code_space(int length, std::size_t cap = std::size_t{1} << 26) const;
    std::size_t encode(std::span<const Symbol> word) const noexcept;
    Word decode(std::size_t code, int length) const;

    friend ShiftSpace validate_shift(int alphabet_size, const std::vector<std::vector<int>>& transitions);

private:
    ShiftSpace() = default;
    int n_ = 0;
    std::vector<std::uint8_t> transitions_;
    int primitivity_power_ = 0;
};

ShiftSpace validate_shift(int alphabet_size, const std::vector<std::vector<int>>& transitions);

// Words of exactly `length` admissible symbols in lexicographic order.
std::vector<Word> enumerate_words(const ShiftSpace& shift, int length, std::size_t cap = kDefaultCylinderCap);

// (-q, q')-cylinder: word[k] is the symbol at coordinate k - q.
struct Cylinder {
    int left = 0;   // q
    int right = 0;  // q'
    Word word;

    int length() const noexcept { return left + right + 1; }
    Symbol at(int coordinate) const { return word.at(static_cast<std::size_t>(coordinate + left)); }
};

Cylinder make_cylinder(const ShiftSpace& shift, int q, int q_prime, Word word);
std::vector<Cylinder> enumerate_cylinders(const ShiftSpace& shift, int q, int q_prime,
                                          std::size_t cap = kDefaultCylinderCap);

// Law used to extend a path one symbol at a time. `history` holds the
// symbols immediately before (forward) or after (backward) the new one,
// nearest last for forward and nearest first for backward. Each call
// consumes exactly one draw from `rng`.
class PathGenerator {
public:
    virtual ~PathGenerator() = default;
    virtual int memory() const noexcept = 0;
    virtual Symbol next(std::span<const Symbol> history, Philox4x32& rng) const = 0;
    virtual Symbol previous(std::span<const Symbol> future, Philox4x32& rng) const = 0;
};

// Lazily realized bi-infinite sequence. Coordinates, once produced, never change.
class SymbolPath {
public:
    // `window` is placed at coordinates window_start .. window_start + size - 1.
    SymbolPath(std::shared_ptr<const PathGenerator> generator, Philox4x32 forward, Philox4x32 backward,
               std::int64_t window_start = 0, Word window = {});

    // Deterministic path from a fixed window; reaching outside the window throws.
    static SymbolPath fixed(std::int64_t window_start, Word window);

    Symbol at(std::int64_t i);
    std::int64_t lowest() const noexcept { return origin_ - static_cast<std::int64_t>(backward_.size()); }
    std::int64_t highest() const noexcept { return origin_ + static_cast<std::int64_t>(forward_.size()) - 1; }

    // Copies coordinates lo..hi (inclusive), generating as needed.
    Word window(std::int64_t lo, std::int64_t hi);

    const std::shared_ptr<const PathGenerator>& generator() const noexcept { return generator_; }
    Philox4x32& forward_stream() noexcept { return forward_rng_; }

private:
    void extend_forward(std::int64_t target);
    void extend_backward(std::int64_t target);

    std::shared_ptr<const PathGenerator> generator_;
    Philox4x32 forward_rng_;
    Philox4x32 backward_rng_;
    std::int64_t origin_;
    std::vector<Symbol> forward_;   // coordinates origin_, origin_ + 1, ...
    std::vector<Symbol> backward_;  // coordinates origin_ - 1, origin_ - 2, ...
    std::vector<Symbol> scratch_;
};

inline Symbol path_coordinate(SymbolPath& path, std::int64_t i) { return path.at(i); }

// e^{-m}, m the largest integer <= horizon with agreement on |i| < m.
double shift_metric(SymbolPath& p1, SymbolPath& p2, int horizon);

// True iff coordinates m - q .. m + q' equal the cylinder word.
bool cylinder_contains(SymbolPath& path, std::int64_t m, const Cylinder& cylinder);

}  // namespace zrec
