#include "zrec/recurrence.hpp"

#include <algorithm>
#include <bit>
#include <cmath>

#include "zrec/parallel.hpp"

namespace zrec {

SymbolPath sample_conditioned(const GibbsModel& model, std::shared_ptr<const PathGenerator> generator,
                              const Cylinder& cylinder, std::uint64_t seed, std::uint64_t trial) {
    if (!model.shift.admissible(cylinder.word))
        throw Error(ErrorCode::ZeroMeasure, "cylinder word is not admissible");
    if (!(cylinder_measure(model, cylinder) > 0.0)) throw Error(ErrorCode::ZeroMeasure, "cylinder has zero measure");
    return SymbolPath(std::move(generator), make_stream(seed, trial, StreamDomain::Forward),
                      make_stream(seed, trial, StreamDomain::Backward), -cylinder.left, cylinder.word);
}

namespace {

// Scan over any source with random access to coordinates; used for stored paths.
ReturnSample scan_path(const SuspensionSystem& system, SymbolPath& path, const Word& window, int q, int q_prime,
                       std::int64_t cap) {
    const LocallyConstantFunction& phi = system.cocycle;
    const LocallyConstantFunction& roof = system.roof;
    Word buffer;
    auto eval = [&](const LocallyConstantFunction& f, std::int64_t k) {
        buffer.resize(static_cast<std::size_t>(f.depth()));
        for (int j = 0; j < f.depth(); ++j) buffer[static_cast<std::size_t>(j)] = path.at(k + j);
        return f(buffer);
    };
    ReturnSample out;
    long sum = 0;
    for (std::int64_t m = 1; m <= cap; ++m) {
        sum += std::lround(eval(phi, m - 1));
        out.roof_time += eval(roof, m - 1);
        if (sum != 0) continue;
        ++out.zero_count;
        bool match = true;
        for (int j = -q; j <= q_prime && match; ++j) match = path.at(m + j) == window[static_cast<std::size_t>(j + q)];
        if (match) {
            out.w = m;
            return out;
        }
    }
    out.w = cap;
    out.capped = true;
    return out;
}

// Streaming scan: symbols live only in a packed shift register, so the
// memory cost is independent of the return time. Draws from the forward
// stream exactly as SymbolPath::at would, so both scans agree sample by sample.
class StreamingScanner {
public:
    StreamingScanner(const SuspensionSystem& system, int q, int q_prime)
        : system_(system), generator_(*system.generator), q_(q), q_prime_(q_prime) {
        const int n = system.model.shift.alphabet_size();
        bits_ = std::max(1, static_cast<int>(std::bit_width(static_cast<unsigned>(n - 1))));
        phi_depth_ = system.cocycle.depth();
        roof_depth_ = system.roof.depth();
        memory_ = generator_.memory();
        lead_ = std::max({q_prime, phi_depth_ - 2, roof_depth_ - 2});
        const int span = std::max({lead_ + std::max(q, 1) + 1, memory_, phi_depth_, roof_depth_});
        usable_ = span * bits_ <= 64 && q + q_prime + 1 <= 64 / bits_ && phi_depth_ * bits_ <= 24 &&
                  roof_depth_ * bits_ <= 24 && memory_ * bits_ <= 24;
        if (!usable_) return;

        const ShiftSpace& shift = system.model.shift;
        auto packed_table = [&](const LocallyConstantFunction& f, auto& out) {
            const int d = f.depth();
            out.assign(std::size_t{1} << (bits_ * d), {});
            for (std::size_t code = 0; code < shift.code_space(d); ++code) {
                const Word w = shift.decode(code, d);
                if (!shift.admissible(w)) continue;
                out[pack(w)] = static_cast<typename std::decay_t<decltype(out)>::value_type>(f.at_code(code));
            }
        };
        packed_table(system.cocycle, phi_);
        packed_table(system.roof, roof_);
        dense_of_packed_.assign(std::size_t{1} << (bits_ * memory_), 0);
        for (std::size_t code = 0; code < shift.code_space(memory_); ++code)
            dense_of_packed_[pack(shift.decode(code, memory_))] = code;
        window_mask_ = mask(q + q_prime + 1);
        phi_mask_ = mask(phi_depth_);
        roof_mask_ = mask(roof_depth_);
        memory_mask_ = mask(memory_);
    }

    bool usable() const noexcept { return usable_; }

    ReturnSample scan(const Word& window, Philox4x32 rng, std::int64_t cap) const {
        std::uint64_t reg = 0;
        for (Symbol x : window) reg = (reg << bits_) | x;
        const std::uint64_t target = reg & window_mask_;
        std::int64_t known = static_cast<std::int64_t>(window.size());
        Word early(window.begin(), window.end());  // only while fewer than memory_ symbols exist

        auto push = [&]() {
            Symbol x;
            if (known < memory_) {
                x = generator_.next(early, rng);
                early.push_back(x);
            } else {
                x = generator_.next_from_code(dense_of_packed_[reg & memory_mask_], rng());
            }
            reg = (reg << bits_) | x;
            ++known;
        };

        // head = last generated coordinate; it starts at q' and tracks m + lead.
        for (std::int64_t head = q_prime_; head < 1 + lead_; ++head) push();
        const int phi_shift = bits_ * (lead_ - (phi_depth_ - 2));
        const int roof_shift = bits_ * (lead_ - (roof_depth_ - 2));
        const int window_shift = bits_ * (lead_ - q_prime_);

        ReturnSample out;
        long sum = 0;
        std::int64_t m = 1;
        auto visit = [&] {
            sum += phi_[(reg >> phi_shift) & phi_mask_];
            out.roof_time += roof_[(reg >> roof_shift) & roof_mask_];
            if (sum != 0) return false;
            ++out.zero_count;
            return ((reg >> window_shift) & window_mask_) == target;
        };
        for (; known < memory_; ++m) {
            if (visit()) {
                out.w = m;
                return out;
            }
            if (m == cap) break;
            push();
        }
        if (known >= memory_) {
            for (;; ++m) {
                if (visit()) {
                    out.w = m;
                    return out;
                }
                if (m == cap) break;
                reg = (reg << bits_) | generator_.next_from_code(dense_of_packed_[reg & memory_mask_], rng());
            }
        }
        out.w = cap;
        out.capped = true;
        return out;
    }

private:
    std::uint64_t mask(int symbols) const noexcept {
        const int b = bits_ * symbols;
        return b >= 64 ? ~std::uint64_t{0} : (std::uint64_t{1} << b) - 1;
    }
    std::size_t pack(const Word& w) const noexcept {
        std::size_t code = 0;
        for (Symbol x : w) code = (code << bits_) | x;
        return code;
    }

    const SuspensionSystem& system_;
    const MarkovPathGenerator& generator_;
    int q_, q_prime_;
    int bits_ = 1;
    int phi_depth_ = 1, roof_depth_ = 1, memory_ = 1, lead_ = 0;
    bool usable_ = false;
    std::vector<long> phi_;
    std::vector<double> roof_;
    std::vector<std::size_t> dense_of_packed_;
    std::uint64_t window_mask_ = 0, phi_mask_ = 0, roof_mask_ = 0, memory_mask_ = 0;
};

ReturnSample scan_window(const SuspensionSystem& system, const StreamingScanner& scanner, const Word& window, int q,
                         int q_prime, std::int64_t cap, std::uint64_t seed, std::uint64_t trial) {
    if (scanner.usable()) return scanner.scan(window, make_stream(seed, trial, StreamDomain::Forward), cap);
    SymbolPath path(system.generator, make_stream(seed, trial, StreamDomain::Forward),
                    make_stream(seed, trial, StreamDomain::Backward), -q, window);
    return scan_path(system, path, window, q, q_prime, cap);
}

ReturnBatch finish(std::vector<ReturnSample> samples) {
    ReturnBatch batch;
    const auto capped = std::count_if(samples.begin(), samples.end(), [](const ReturnSample& s) { return s.capped; });
    batch.capped_fraction = samples.empty() ? 0.0 : static_cast<double>(capped) / static_cast<double>(samples.size());
    batch.samples = std::move(samples);
    return batch;
}

ReturnBatch window_batch(const SuspensionSystem& system, const Cylinder* fixed, int q, int q_prime, int trials,
                         std::int64_t cap, std::uint64_t seed, unsigned threads, std::uint64_t stream_offset) {
    if (trials < 1) throw Error(ErrorCode::InvalidArgument, "trials must be positive");
    if (cap < 1) throw Error(ErrorCode::InvalidArgument, "cap must be positive");
    if (fixed && !(cylinder_measure(system.model, *fixed) > 0.0))
        throw Error(ErrorCode::ZeroMeasure, "cylinder has zero measure");
    const StreamingScanner scanner(system, q, q_prime);
    std::vector<ReturnSample> samples(static_cast<std::size_t>(trials));
    std::vector<Word> windows(samples.size());
    parallel_for(samples.size(), threads, [&](std::size_t i) {
        const std::uint64_t trial = stream_offset + i;
        Word window;
        if (fixed) {
            window = fixed->word;
        } else {
            Philox4x32 start = make_stream(seed, trial, StreamDomain::Start);
            for (int k = 0; k < q + q_prime + 1; ++k) window.push_back(system.generator->next(window, start));
        }
        samples[i] = scan_window(system, scanner, window, q, q_prime, cap, seed, trial);
        windows[i] = std::move(window);
    });
    ReturnBatch batch = finish(std::move(samples));
    batch.windows = std::move(windows);
    return batch;
}

}  // namespace

ReturnSample cylinder_return_time(const SuspensionSystem& system, SymbolPath& path, int q, int q_prime, std::int64_t cap) {
    if (cap < 1) throw Error(ErrorCode::InvalidArgument, "cap must be positive");
    if (q < 0 || q_prime < 0) throw Error(ErrorCode::InvalidArgument, "cylinder extents must be nonnegative");
    const Word window = path.window(-q, q_prime);
    return scan_path(system, path, window, q, q_prime, cap);
}

ReturnBatch return_time_batch(const SuspensionSystem& system, const Cylinder& cylinder, int trials, std::int64_t cap,
                              std::uint64_t seed, unsigned threads) {
    return window_batch(system, &cylinder, cylinder.left, cylinder.right, trials, cap, seed, threads, 0);
}

ReturnBatch random_window_batch(const SuspensionSystem& system, int q, int q_prime, int trials, std::int64_t cap,
                                std::uint64_t seed, unsigned threads) {
    if (q < 0 || q_prime < 0) throw Error(ErrorCode::InvalidArgument, "cylinder extents must be nonnegative");
    return window_batch(system, nullptr, q, q_prime, trials, cap, seed, threads, 0);
}

RatioStats flow_return_ratio(const SuspensionSystem& system, const std::vector<ReturnSample>& samples,
                             std::int64_t min_w) {
    RatioStats stats;
    double sum = 0.0, dev = 0.0;
    for (const auto& s : samples) {
        if (s.capped || s.w < min_w) continue;
        const double ratio = s.roof_time / (static_cast<double>(s.w) * system.mean_roof);
        ++stats.count;
        sum += ratio;
        dev += std::abs(ratio - 1.0);
        stats.max_abs_deviation = std::max(stats.max_abs_deviation, std::abs(ratio - 1.0));
    }
    if (stats.count > 0) {
        stats.mean_ratio = sum / static_cast<double>(stats.count);
        stats.mean_abs_deviation = dev / static_cast<double>(stats.count);
    }
    return stats;
}

// ---------------------------------------------------------------------------
// Last-passage identity by exhaustive enumeration

namespace {

// Neumaier compensated sum; millions of tiny cylinder weights otherwise drift by ~1e-11.
struct CompensatedSum {
    double sum = 0.0;
    double carry = 0.0;
    void add(double v) {
        const double t = sum + v;
        carry += std::abs(sum) >= std::abs(v) ? (sum - t) + v : (v - t) + sum;
        sum = t;
    }
    double value() const { return sum + carry; }
};

std::size_t count_words(const ShiftSpace& shift, int length) {
    const int n = shift.alphabet_size();
    std::vector<double> ends(static_cast<std::size_t>(n), 1.0);
    for (int k = 1; k < length; ++k) {
        std::vector<double> next(static_cast<std::size_t>(n), 0.0);
        for (int i = 0; i < n; ++i)
            for (int j = 0; j < n; ++j)
                if (shift.allowed(static_cast<Symbol>(i), static_cast<Symbol>(j))) next[j] += ends[i];
        ends.swap(next);
    }
    double total = 0.0;
    for (double e : ends) total += e;
    return total > 1e18 ? static_cast<std::size_t>(-1) : static_cast<std::size_t>(total);
}

}  // namespace

std::vector<DvoretzkyResidual> dvoretzky_sweep(const GibbsModel& model, const LocallyConstantFunction& cocycle,
                                               const std::vector<Cylinder>& ds, const Cylinder& a, int n,
                                               std::size_t cap) {
    if (n < 0 || n > 62) throw Error(ErrorCode::InvalidArgument, "n must be in 0..62");
    if (!cocycle.integer_valued()) throw Error(ErrorCode::InvalidArgument, "cocycle must be integer valued");
    const ShiftSpace& shift = model.shift;
    const int e = cocycle.depth();
    int left = a.left, right = std::max({n + a.right, n + e - 2, 0});
    for (const auto& d : ds) {
        left = std::max(left, d.left);
        right = std::max(right, d.right);
    }
    const int lo = -left;
    const int length = right - lo + 1;
    const std::size_t words = count_words(shift, length);
    if (words > cap)
        throw Error(ErrorCode::SizeOverflow, std::to_string(words) + " words of length " + std::to_string(length) +
                                                 " exceed the enumeration cap");

    const MarkovChain& chain = model.chain;
    const int mem = chain.word_length;
    const int settle = std::max(a.right, e - 2);  // visit r is decided once coordinate r + settle is placed
    const int alphabet = shift.alphabet_size();

    std::vector<Symbol> x(static_cast<std::size_t>(length));
    std::vector<double> weight(static_cast<std::size_t>(length), 1.0);
    std::vector<int> state(static_cast<std::size_t>(length), -1);
    std::vector<long> sum(static_cast<std::size_t>(n) + 1, 0);
    std::vector<std::uint64_t> visits(static_cast<std::size_t>(length), 0);
    std::vector<int> next_symbol(static_cast<std::size_t>(length), 0);

    std::vector<DvoretzkyResidual> out(ds.size());
    for (auto& r : out) {
        r.n = n;
        r.terms.assign(static_cast<std::size_t>(n) + 1, 0.0);
    }
    std::vector<CompensatedSum> no_visit(ds.size());
    std::vector<std::vector<CompensatedSum>> terms(ds.size(), std::vector<CompensatedSum>(static_cast<std::size_t>(n) + 1));
    std::size_t leaves = 0;

    auto coordinate = [&](int c) { return x[static_cast<std::size_t>(c - lo)]; };
    auto in_cylinder = [&](const Cylinder& cyl, int at) {
        for (int j = -cyl.left; j <= cyl.right; ++j)
            if (coordinate(at + j) != cyl.at(j)) return false;
        return true;
    };

    int depth = 0;
    while (depth >= 0) {
        if (depth == length) {
            ++leaves;
            const double w = length < mem ? chain.word_measure(x) : weight.back();
            const std::uint64_t mask = visits.back();
            for (std::size_t i = 0; i < ds.size(); ++i) {
                if (!in_cylinder(ds[i], 0)) continue;
                if (mask == 0) {
                    no_visit[i].add(w);
                    continue;
                }
                // Terms of the decomposition: a passage at r with no passage at r + k, k = 1..n - r.
                for (int r = 0; r <= n; ++r) {
                    if (!((mask >> r) & 1u)) continue;
                    bool later = false;
                    for (int k = 1; k <= n - r && !later; ++k) later = (mask >> (r + k)) & 1u;
                    if (!later) terms[i][static_cast<std::size_t>(r)].add(w);
                }
            }
            --depth;
            continue;
        }
        int& sym = next_symbol[static_cast<std::size_t>(depth)];
        while (sym < alphabet && depth > 0 &&
               !shift.allowed(x[static_cast<std::size_t>(depth - 1)], static_cast<Symbol>(sym)))
            ++sym;
        if (sym == alphabet) {
            sym = 0;
            --depth;
            continue;
        }
        const auto d = static_cast<std::size_t>(depth);
        x[d] = static_cast<Symbol>(sym++);

        // Measure of the prefix.
        if (depth + 1 == mem) {
            state[d] = chain.state_of(std::span<const Symbol>(x).first(static_cast<std::size_t>(mem)));
            weight[d] = chain.stationary(state[d]);
        } else if (depth + 1 > mem) {
            state[d] = chain.successor(state[d - 1], x[d]);
            weight[d] = weight[d - 1] * chain.transition(state[d - 1], state[d]);
        }

        // Birkhoff sum: S_{k+1} is complete once coordinate k + e - 1 is placed.
        const int c = lo + depth;
        const int k = c - (e - 1);
        if (k >= 0 && k < n) sum[static_cast<std::size_t>(k) + 1] = sum[static_cast<std::size_t>(k)] +
                                                                  std::lround(cocycle(std::span<const Symbol>(x).subspan(static_cast<std::size_t>(k - lo))));
        std::uint64_t mask = depth > 0 ? visits[d - 1] : 0;
        const int r = c - settle;
        if (r >= 0 && r <= n && sum[static_cast<std::size_t>(r)] == 0 && in_cylinder(a, r)) mask |= std::uint64_t{1} << r;
        visits[d] = mask;
        ++depth;
    }

    for (std::size_t i = 0; i < ds.size(); ++i) {
        auto& res = out[i];
        res.words = leaves;
        res.lhs = cylinder_measure(model, ds[i]);
        res.no_visit = no_visit[i].value();
        CompensatedSum rhs;
        rhs.add(res.no_visit);
        for (std::size_t r = 0; r < terms[i].size(); ++r) {
            res.terms[r] = terms[i][r].value();
            rhs.add(terms[i][r].sum);
            rhs.add(terms[i][r].carry);
        }
        res.rhs = rhs.value();
        res.residual = std::abs(res.lhs - res.rhs);
    }
    return out;
}

DvoretzkyResidual dvoretzky_check(const GibbsModel& model, const LocallyConstantFunction& cocycle, const Cylinder& d,
                                  const Cylinder& a, int n, std::size_t cap) {
    return dvoretzky_sweep(model, cocycle, {d}, a, n, cap).front();
}

// ---------------------------------------------------------------------------
// Almost-sure exponent

SweepReport exponent_sweep(const SuspensionSystem& system, const std::vector<int>& q_list, int trials, std::int64_t cap,
                           std::uint64_t seed, unsigned threads, SweepOptions options) {
    if (q_list.size() < 2) throw Error(ErrorCode::InvalidArgument, "sweep needs at least two q values");
    for (std::size_t i = 1; i < q_list.size(); ++i)
        if (q_list[i] <= q_list[i - 1]) throw Error(ErrorCode::InvalidArgument, "q_list must be increasing");

    SweepReport report;
    report.entropy = system.model.entropy;
    report.lyapunov = lyapunov_exact(system);
    report.dimension_prediction = report.lyapunov.dimension;

    std::vector<double> xs, ys;
    for (int q : q_list) {
        const ReturnBatch batch = window_batch(system, nullptr, q, q, trials, cap, seed, threads,
                                               static_cast<std::uint64_t>(q) << 32);
        SweepRow row;
        row.q = q;
        row.trials = trials;
        row.q_width = 2 * q + 1;
        row.capped_fraction = batch.capped_fraction;
        for (const auto& s : batch.samples) row.log_sqrt_tau.push_back(0.5 * std::log(static_cast<double>(s.w)));
        row.median_log_sqrt_tau = median(row.log_sqrt_tau);
        if (row.capped_fraction > options.max_capped_fraction)
            throw Error(ErrorCode::CapTooSmall, "capped fraction " + std::to_string(row.capped_fraction) + " at q=" +
                                                    std::to_string(q) + " exceeds " +
                                                    std::to_string(options.max_capped_fraction));
        xs.push_back(row.q_width);
        ys.push_back(row.median_log_sqrt_tau);
        report.rows.push_back(std::move(row));
    }
    report.fit = regression_slope(xs, ys);

    if (options.bootstrap_resamples > 0) {
        std::vector<double> slopes;
        for (int b = 0; b < options.bootstrap_resamples; ++b) {
            Philox4x32 rng = make_stream(seed, static_cast<std::uint64_t>(b), StreamDomain::Auxiliary);
            std::vector<double> yb;
            for (const auto& row : report.rows) {
                std::vector<double> resample(row.log_sqrt_tau.size());
                for (auto& v : resample) v = row.log_sqrt_tau[rng() % row.log_sqrt_tau.size()];
                yb.push_back(median(std::move(resample)));
            }
            slopes.push_back(regression_slope(xs, yb).slope);
        }
        std::sort(slopes.begin(), slopes.end());
        const auto at = [&](double p) {
            return slopes[std::min(slopes.size() - 1, static_cast<std::size_t>(p * static_cast<double>(slopes.size())))];
        };
        report.slope_ci_low = at(0.025);
        report.slope_ci_high = at(0.975);
    }
    return report;
}

}  // namespace zrec
