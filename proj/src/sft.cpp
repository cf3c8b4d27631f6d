#include "zrec/sft.hpp"

#include <algorithm>
#include <cmath>

namespace zrec {

std::string word_to_string(std::span<const Symbol> word) {
    std::string s;
    s.reserve(word.size());
    for (Symbol x : word) s.push_back(static_cast<char>('a' + x));
    return s;
}

Word word_from_string(std::string_view text, int alphabet_size) {
    Word w;
    w.reserve(text.size());
    for (char c : text) {
        const int x = c - 'a';
        if (x < 0 || x >= alphabet_size)
            throw Error(ErrorCode::InvalidArgument,
                        "symbol '" + std::string(1, c) + "' outside alphabet of size " + std::to_string(alphabet_size));
        w.push_back(static_cast<Symbol>(x));
    }
    return w;
}

bool ShiftSpace::admissible(std::span<const Symbol> word) const noexcept {
    for (Symbol x : word)
        if (x >= n_) return false;
    for (std::size_t i = 1; i < word.size(); ++i)
        if (!allowed(word[i - 1], word[i])) return false;
    return true;
}

bool ShiftSpace::is_full_shift() const noexcept {
    return std::all_of(transitions_.begin(), transitions_.end(), [](auto v) { return v != 0; });
}

std::size_t ShiftSpace::code_space(int length, std::size_t cap) const {
    std::size_t size = 1;
    for (int i = 0; i < length; ++i) {
        size *= static_cast<std::size_t>(n_);
        if (size > cap)
            throw Error(ErrorCode::SizeOverflow, "dense table for words of length " + std::to_string(length) +
                                                     " exceeds " + std::to_string(cap) + " entries");
    }
    return size;
}

std::size_t ShiftSpace::encode(std::span<const Symbol> word) const noexcept {
    std::size_t code = 0;
    for (Symbol x : word) code = code * static_cast<std::size_t>(n_) + x;
    return code;
}

Word ShiftSpace::decode(std::size_t code, int length) const {
    Word w(static_cast<std::size_t>(length));
    for (int i = length - 1; i >= 0; --i) {
        w[static_cast<std::size_t>(i)] = static_cast<Symbol>(code % static_cast<std::size_t>(n_));
        code /= static_cast<std::size_t>(n_);
    }
    return w;
}

ShiftSpace validate_shift(int alphabet_size, const std::vector<std::vector<int>>& transitions) {
    const int n = alphabet_size;
    if (n < 1 || n > kMaxAlphabet)
        throw Error(ErrorCode::InvalidArgument, "alphabet size must be in 1.." + std::to_string(kMaxAlphabet));
    if (transitions.size() != static_cast<std::size_t>(n))
        throw Error(ErrorCode::InvalidArgument, "transition matrix must be square of size alphabet");

    ShiftSpace s;
    s.n_ = n;
    s.transitions_.assign(static_cast<std::size_t>(n * n), 0);
    for (int i = 0; i < n; ++i) {
        if (transitions[i].size() != static_cast<std::size_t>(n))
            throw Error(ErrorCode::InvalidArgument, "transition matrix must be square of size alphabet");
        for (int j = 0; j < n; ++j) {
            const int v = transitions[i][j];
            if (v != 0 && v != 1) throw Error(ErrorCode::InvalidArgument, "transition entries must be 0 or 1");
            s.transitions_[i * n + j] = static_cast<std::uint8_t>(v);
        }
    }
    for (int i = 0; i < n; ++i) {
        bool row = false, col = false;
        for (int j = 0; j < n; ++j) {
            row = row || s.transitions_[i * n + j];
            col = col || s.transitions_[j * n + i];
        }
        if (!row || !col) throw Error(ErrorCode::DeadSymbol, "symbol " + std::to_string(i) + " has an empty row or column");
    }

    // Wielandt: a primitive n x n matrix has A^k > 0 for some k <= n^2 - 2n + 2.
    const int bound = n * n - 2 * n + 2;
    std::vector<std::uint8_t> power = s.transitions_;
    for (int k = 1; k <= bound; ++k) {
        if (std::all_of(power.begin(), power.end(), [](auto v) { return v != 0; })) {
            s.primitivity_power_ = k;
            return s;
        }
        std::vector<std::uint8_t> next(power.size(), 0);
        for (int i = 0; i < n; ++i)
            for (int m = 0; m < n; ++m)
                if (power[i * n + m])
                    for (int j = 0; j < n; ++j) next[i * n + j] |= s.transitions_[m * n + j];
        power.swap(next);
    }
    throw Error(ErrorCode::NotPrimitive, "no power up to the Wielandt bound " + std::to_string(bound) + " is positive");
}

std::vector<Word> enumerate_words(const ShiftSpace& shift, int length, std::size_t cap) {
    if (length < 1) throw Error(ErrorCode::InvalidArgument, "word length must be positive");
    const int n = shift.alphabet_size();
    std::vector<Word> out;
    Word w(static_cast<std::size_t>(length), 0);
    // Depth-first in lexicographic order; `depth` is the next position to fill.
    std::vector<int> next_symbol(static_cast<std::size_t>(length), 0);
    int depth = 0;
    while (depth >= 0) {
        if (depth == length) {
            if (out.size() >= cap)
                throw Error(ErrorCode::SizeOverflow, "more than " + std::to_string(cap) + " admissible words");
            out.push_back(w);
            --depth;
            continue;
        }
        int& x = next_symbol[static_cast<std::size_t>(depth)];
        while (x < n && depth > 0 && !shift.allowed(w[depth - 1], static_cast<Symbol>(x))) ++x;
        if (x == n) {
            x = 0;
            --depth;
            continue;
        }
        w[static_cast<std::size_t>(depth)] = static_cast<Symbol>(x);
        ++x;
        ++depth;
    }
    return out;
}

Cylinder make_cylinder(const ShiftSpace& shift, int q, int q_prime, Word word) {
    if (q < 0 || q_prime < 0) throw Error(ErrorCode::InvalidArgument, "cylinder extents must be nonnegative");
    if (word.size() != static_cast<std::size_t>(q + q_prime + 1))
        throw Error(ErrorCode::InvalidArgument, "cylinder word length must be q + q' + 1");
    if (!shift.admissible(word))
        throw Error(ErrorCode::InvalidArgument, "cylinder word '" + word_to_string(word) + "' is not admissible");
    return Cylinder{q, q_prime, std::move(word)};
}

std::vector<Cylinder> enumerate_cylinders(const ShiftSpace& shift, int q, int q_prime, std::size_t cap) {
    if (q < 0 || q_prime < 0) throw Error(ErrorCode::InvalidArgument, "cylinder extents must be nonnegative");
    std::vector<Cylinder> out;
    for (auto& w : enumerate_words(shift, q + q_prime + 1, cap)) out.push_back(Cylinder{q, q_prime, std::move(w)});
    return out;
}

namespace {

class NoGenerator final : public PathGenerator {
public:
    int memory() const noexcept override { return 0; }
    Symbol next(std::span<const Symbol>, Philox4x32&) const override {
        throw Error(ErrorCode::InvalidArgument, "fixed path has no coordinates beyond its window");
    }
    Symbol previous(std::span<const Symbol>, Philox4x32&) const override {
        throw Error(ErrorCode::InvalidArgument, "fixed path has no coordinates beyond its window");
    }
};

}  // namespace

SymbolPath::SymbolPath(std::shared_ptr<const PathGenerator> generator, Philox4x32 forward, Philox4x32 backward,
                       std::int64_t window_start, Word window)
    : generator_(std::move(generator)),
      forward_rng_(forward),
      backward_rng_(backward),
      origin_(window_start),
      forward_(std::move(window)) {
    if (!generator_) throw Error(ErrorCode::InvalidArgument, "path needs a generator");
}

SymbolPath SymbolPath::fixed(std::int64_t window_start, Word window) {
    return SymbolPath(std::make_shared<NoGenerator>(), Philox4x32(), Philox4x32(), window_start, std::move(window));
}

void SymbolPath::extend_forward(std::int64_t target) {
    const auto mem = static_cast<std::size_t>(generator_->memory());
    while (highest() < target) {
        // History: the last `mem` coordinates, reaching into the backward buffer if needed.
        scratch_.clear();
        const std::int64_t hi = highest();
        const std::int64_t lo = std::max(lowest(), hi - static_cast<std::int64_t>(mem) + 1);
        for (std::int64_t i = lo; i <= hi; ++i) scratch_.push_back(at(i));
        forward_.push_back(generator_->next(scratch_, forward_rng_));
    }
}

void SymbolPath::extend_backward(std::int64_t target) {
    const auto mem = static_cast<std::size_t>(generator_->memory());
    while (lowest() > target) {
        scratch_.clear();
        const std::int64_t lo = lowest();
        const std::int64_t hi = std::min(highest(), lo + static_cast<std::int64_t>(mem) - 1);
        for (std::int64_t i = lo; i <= hi; ++i) scratch_.push_back(at(i));
        backward_.push_back(generator_->previous(scratch_, backward_rng_));
    }
}

Symbol SymbolPath::at(std::int64_t i) {
    if (i >= origin_) {
        if (i > highest()) extend_forward(i);
        return forward_[static_cast<std::size_t>(i - origin_)];
    }
    if (i < lowest()) extend_backward(i);
    return backward_[static_cast<std::size_t>(origin_ - 1 - i)];
}

Word SymbolPath::window(std::int64_t lo, std::int64_t hi) {
    Word w;
    if (hi < lo) return w;
    at(hi);
    at(lo);
    w.reserve(static_cast<std::size_t>(hi - lo + 1));
    for (std::int64_t i = lo; i <= hi; ++i) w.push_back(at(i));
    return w;
}

double shift_metric(SymbolPath& p1, SymbolPath& p2, int horizon) {
    if (horizon < 0) throw Error(ErrorCode::InvalidArgument, "horizon must be nonnegative");
    // Agreement on |i| < m for m = 0..horizon; stop at the first m that fails.
    int m = 0;
    while (m < horizon) {
        if (p1.at(m) != p2.at(m) || p1.at(-m) != p2.at(-m)) break;
        ++m;
    }
    return std::exp(-static_cast<double>(m));
}

bool cylinder_contains(SymbolPath& path, std::int64_t m, const Cylinder& cylinder) {
    for (int k = -cylinder.left; k <= cylinder.right; ++k)
        if (path.at(m + k) != cylinder.at(k)) return false;
    return true;
}

}  // namespace zrec
