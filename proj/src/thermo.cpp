#include "zrec/thermo.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <deque>
#include <limits>
#include <numbers>

#include <Eigen/Eigenvalues>

namespace zrec {

// ---------------------------------------------------------------------------
// LocallyConstantFunction

LocallyConstantFunction::LocallyConstantFunction(const ShiftSpace& shift, int depth, std::vector<double> dense)
    : alphabet_(shift.alphabet_size()), depth_(depth), dense_(std::move(dense)) {
    if (depth < 1) throw Error(ErrorCode::InvalidArgument, "function depth must be positive");
    const std::size_t size = shift.code_space(depth);
    if (dense_.size() != size) throw Error(ErrorCode::InvalidArgument, "dense table has the wrong size");
    admissible_.assign(size, 0);
    min_ = std::numeric_limits<double>::infinity();
    max_ = -std::numeric_limits<double>::infinity();
    for (std::size_t code = 0; code < size; ++code) {
        if (!shift.admissible(shift.decode(code, depth))) {
            dense_[code] = 0.0;
            continue;
        }
        admissible_[code] = 1;
        const double v = dense_[code];
        if (!std::isfinite(v)) throw Error(ErrorCode::InvalidArgument, "function values must be finite");
        min_ = std::min(min_, v);
        max_ = std::max(max_, v);
    }
}

LocallyConstantFunction LocallyConstantFunction::from_words(const ShiftSpace& shift, int depth,
                                                            const std::map<std::string, double>& values) {
    const std::size_t size = shift.code_space(depth);
    std::vector<double> dense(size, 0.0);
    std::vector<std::uint8_t> seen(size, 0);
    for (const auto& [key, value] : values) {
        const Word w = word_from_string(key, shift.alphabet_size());
        if (static_cast<int>(w.size()) != depth)
            throw Error(ErrorCode::InvalidArgument, "word '" + key + "' does not have length " + std::to_string(depth));
        if (!shift.admissible(w)) throw Error(ErrorCode::InvalidArgument, "word '" + key + "' is not admissible");
        const auto code = shift.encode(w);
        dense[code] = value;
        seen[code] = 1;
    }
    for (std::size_t code = 0; code < size; ++code) {
        const Word w = shift.decode(code, depth);
        if (shift.admissible(w) && !seen[code])
            throw Error(ErrorCode::InvalidArgument, "missing value for admissible word '" + word_to_string(w) + "'");
    }
    return LocallyConstantFunction(shift, depth, std::move(dense));
}

LocallyConstantFunction LocallyConstantFunction::constant(const ShiftSpace& shift, double value) {
    return LocallyConstantFunction(shift, 1, std::vector<double>(static_cast<std::size_t>(shift.alphabet_size()), value));
}

double LocallyConstantFunction::operator()(std::span<const Symbol> word) const {
    if (static_cast<int>(word.size()) < depth_)
        throw Error(ErrorCode::InvalidArgument, "word shorter than function depth");
    std::size_t code = 0;
    for (int i = 0; i < depth_; ++i) code = code * static_cast<std::size_t>(alphabet_) + word[i];
    return dense_[code];
}

double LocallyConstantFunction::sup_norm() const noexcept { return std::max(std::abs(min_), std::abs(max_)); }

bool LocallyConstantFunction::integer_valued() const noexcept {
    for (std::size_t c = 0; c < dense_.size(); ++c)
        if (admissible_[c] && dense_[c] != std::round(dense_[c])) return false;
    return true;
}

std::map<std::string, double> LocallyConstantFunction::to_words() const {
    std::map<std::string, double> out;
    for (std::size_t code = 0; code < dense_.size(); ++code) {
        if (!admissible_[code]) continue;
        std::string key(static_cast<std::size_t>(depth_), 'a');
        std::size_t c = code;
        for (int i = depth_ - 1; i >= 0; --i) {
            key[static_cast<std::size_t>(i)] = static_cast<char>('a' + c % static_cast<std::size_t>(alphabet_));
            c /= static_cast<std::size_t>(alphabet_);
        }
        out.emplace(std::move(key), dense_[code]);
    }
    return out;
}

LocallyConstantFunction LocallyConstantFunction::scaled(double factor) const {
    LocallyConstantFunction f = *this;
    for (double& v : f.dense_) v *= factor;
    f.min_ = std::min(min_ * factor, max_ * factor);
    f.max_ = std::max(min_ * factor, max_ * factor);
    return f;
}

LocallyConstantFunction LocallyConstantFunction::mapped(double (*op)(double)) const {
    LocallyConstantFunction f = *this;
    f.min_ = std::numeric_limits<double>::infinity();
    f.max_ = -std::numeric_limits<double>::infinity();
    for (std::size_t c = 0; c < f.dense_.size(); ++c) {
        if (!f.admissible_[c]) continue;
        f.dense_[c] = op(f.dense_[c]);
        f.min_ = std::min(f.min_, f.dense_[c]);
        f.max_ = std::max(f.max_, f.dense_[c]);
    }
    return f;
}

// ---------------------------------------------------------------------------
// MarkovChain

namespace {

MarkovChain chain_skeleton(const ShiftSpace& shift, int length) {
    MarkovChain c{shift, length, enumerate_words(shift, length), {}, {}, {}};
    c.code_to_state.assign(shift.code_space(length), -1);
    for (std::size_t s = 0; s < c.states.size(); ++s)
        c.code_to_state[shift.encode(c.states[s])] = static_cast<std::int32_t>(s);
    c.transition = Eigen::MatrixXd::Zero(c.size(), c.size());
    c.stationary = Eigen::VectorXd::Zero(c.size());
    return c;
}

}  // namespace

int MarkovChain::state_of(std::span<const Symbol> word) const {
    if (static_cast<int>(word.size()) < word_length)
        throw Error(ErrorCode::InvalidArgument, "word shorter than chain state length");
    return code_to_state[shift.encode(word.first(static_cast<std::size_t>(word_length)))];
}

int MarkovChain::successor(int state, Symbol x) const {
    const Word& w = states[static_cast<std::size_t>(state)];
    if (!shift.allowed(w.back(), x)) return -1;
    std::size_t code = 0;
    for (std::size_t i = 1; i < w.size(); ++i) code = code * static_cast<std::size_t>(shift.alphabet_size()) + w[i];
    code = code * static_cast<std::size_t>(shift.alphabet_size()) + x;
    return code_to_state[code];
}

MarkovChain MarkovChain::lifted(int new_length) const {
    if (new_length < word_length) throw Error(ErrorCode::InvalidArgument, "cannot lift to shorter words");
    if (new_length == word_length) return *this;
    MarkovChain c = chain_skeleton(shift, new_length);
    const auto tail = static_cast<std::size_t>(new_length - word_length);
    for (int s = 0; s < c.size(); ++s) {
        const Word& w = c.states[static_cast<std::size_t>(s)];
        c.stationary(s) = word_measure(w);
        const int base = state_of(std::span<const Symbol>(w).subspan(tail));
        for (int x = 0; x < shift.alphabet_size(); ++x) {
            const int next = c.successor(s, static_cast<Symbol>(x));
            if (next < 0) continue;
            const int base_next = successor(base, static_cast<Symbol>(x));
            c.transition(s, next) = transition(base, base_next);
        }
    }
    return c;
}

Eigen::VectorXd MarkovChain::state_values(const LocallyConstantFunction& f) const {
    if (f.depth() > word_length) throw Error(ErrorCode::InvalidArgument, "function deeper than chain states");
    Eigen::VectorXd v(size());
    for (int s = 0; s < size(); ++s) v(s) = f(states[static_cast<std::size_t>(s)]);
    return v;
}

double MarkovChain::expectation(const LocallyConstantFunction& f) const { return stationary.dot(state_values(f)); }

double MarkovChain::word_measure(std::span<const Symbol> word) const {
    if (!shift.admissible(word)) return 0.0;
    if (static_cast<int>(word.size()) < word_length) {
        double total = 0.0;
        for (int s = 0; s < size(); ++s)
            if (std::equal(word.begin(), word.end(), states[static_cast<std::size_t>(s)].begin()))
                total += stationary(s);
        return total;
    }
    int s = state_of(word);
    double p = stationary(s);
    for (std::size_t k = static_cast<std::size_t>(word_length); k < word.size(); ++k) {
        const int next = successor(s, word[k]);
        p *= transition(s, next);
        s = next;
    }
    return p;
}

// ---------------------------------------------------------------------------
// Gibbs model

namespace {

Eigen::VectorXd perron_vector(const Eigen::MatrixXd& m, const GibbsOptions& options, double& eigenvalue) {
    Eigen::VectorXd v = Eigen::VectorXd::Constant(m.rows(), 1.0 / static_cast<double>(m.rows()));
    for (int it = 0; it < options.max_iterations; ++it) {
        Eigen::VectorXd w = m * v;
        const double norm = w.sum();
        w /= norm;
        const double change = (w - v).cwiseAbs().maxCoeff();
        v = std::move(w);
        if (change <= options.tolerance) {
            eigenvalue = (m * v).sum() / v.sum();
            return v;
        }
    }
    throw Error(ErrorCode::EigenFailure,
                "power iteration did not converge in " + std::to_string(options.max_iterations) + " iterations");
}

}  // namespace

GibbsModel build_gibbs(const ShiftSpace& shift, const LocallyConstantFunction& potential, GibbsOptions options) {
    const int d = potential.depth();
    const int length = std::max(1, d - 1);
    GibbsModel model{shift, potential, 0.0, chain_skeleton(shift, length), 0.0, 1.0, {}, {}};
    MarkovChain& chain = model.chain;
    const int states = chain.size();
    const int n = shift.alphabet_size();

    // Edge s -> s' reads the (L+1)-word s.x; its potential is on the first d symbols.
    Eigen::MatrixXd edge_potential = Eigen::MatrixXd::Zero(states, states);
    Eigen::MatrixXd weights = Eigen::MatrixXd::Zero(states, states);
    const double shift_by = potential.max();
    for (int s = 0; s < states; ++s) {
        Word edge = chain.states[static_cast<std::size_t>(s)];
        edge.push_back(0);
        for (int x = 0; x < n; ++x) {
            const int next = chain.successor(s, static_cast<Symbol>(x));
            if (next < 0) continue;
            edge.back() = static_cast<Symbol>(x);
            edge_potential(s, next) = potential(edge);
            weights(s, next) = std::exp(edge_potential(s, next) - shift_by);
        }
    }

    double rho = 0.0, rho_left = 0.0;
    const Eigen::VectorXd right = perron_vector(weights, options, rho);
    const Eigen::VectorXd left = perron_vector(weights.transpose(), options, rho_left);
    if (!(right.minCoeff() > 0.0) || !(left.minCoeff() > 0.0))
        throw Error(ErrorCode::NotPrimitive, "Perron vector is not strictly positive");
    model.pressure = std::log(rho) + shift_by;
    model.right_eigenvector = right;
    model.left_eigenvector = left;

    for (int s = 0; s < states; ++s) {
        double row = 0.0;
        for (int t = 0; t < states; ++t) {
            chain.transition(s, t) = weights(s, t) * right(t) / (rho * right(s));
            row += chain.transition(s, t);
        }
        chain.transition.row(s) /= row;
    }
    chain.stationary = left.cwiseProduct(right);
    chain.stationary /= chain.stationary.sum();

    double entropy = 0.0;
    for (int s = 0; s < states; ++s)
        for (int t = 0; t < states; ++t) {
            const double p = chain.transition(s, t);
            if (p > 0.0) entropy -= chain.stationary(s) * p * std::log(p);
        }
    model.entropy = entropy;

    const double z = left.dot(right);
    const double stretch = static_cast<double>(length);
    const double hi = left.maxCoeff() * right.maxCoeff() / z * std::exp(stretch * (model.pressure - potential.min()));
    const double lo = left.minCoeff() * right.minCoeff() / z * std::exp(stretch * (model.pressure - potential.max()));
    model.gibbs_constant = std::max({1.0, hi, 1.0 / lo});
    return model;
}

MarkovChain GibbsModel::chain_for_depth(int depth) const { return chain.lifted(std::max(depth, chain.word_length)); }

double GibbsModel::integral(const LocallyConstantFunction& f) const {
    return chain_for_depth(f.depth()).expectation(f);
}

double cylinder_measure(const GibbsModel& model, const Cylinder& cylinder) {
    return model.chain.word_measure(cylinder.word);
}

GibbsBoundReport gibbs_bound_report(const GibbsModel& model, int q_max, std::size_t cap) {
    if (q_max < 1) throw Error(ErrorCode::InvalidArgument, "q_max must be positive");
    const ShiftSpace& shift = model.shift;
    const int d = model.potential.depth();
    GibbsBoundReport report;
    report.q_max = q_max;
    report.analytic_constant = model.gibbs_constant;
    report.ratio_min = std::numeric_limits<double>::infinity();
    report.ratio_max = 0.0;

    // Shortest admissible bridge from `from` to `to` (intermediate symbols only).
    const int n = shift.alphabet_size();
    auto connector = [&](Symbol from, Symbol to) {
        if (shift.allowed(from, to)) return Word{};
        std::vector<int> parent(static_cast<std::size_t>(n), -2);
        std::deque<int> queue;
        for (int y = 0; y < n; ++y)
            if (shift.allowed(from, static_cast<Symbol>(y))) {
                parent[static_cast<std::size_t>(y)] = -1;
                queue.push_back(y);
            }
        while (!queue.empty()) {
            const int y = queue.front();
            queue.pop_front();
            if (shift.allowed(static_cast<Symbol>(y), to)) {
                Word path;
                for (int v = y; v >= 0; v = parent[static_cast<std::size_t>(v)]) path.push_back(static_cast<Symbol>(v));
                std::reverse(path.begin(), path.end());
                return path;
            }
            for (int z = 0; z < n; ++z)
                if (shift.allowed(static_cast<Symbol>(y), static_cast<Symbol>(z)) && parent[static_cast<std::size_t>(z)] == -2) {
                    parent[static_cast<std::size_t>(z)] = y;
                    queue.push_back(z);
                }
        }
        throw Error(ErrorCode::NotPrimitive, "no admissible bridge between symbols");
    };

    std::size_t total = 0;
    for (int length = 1; length <= q_max; ++length) {
        for (const Word& w : enumerate_words(shift, length, cap)) {
            if (++total > cap) throw Error(ErrorCode::SizeOverflow, "gibbs bound enumeration exceeds the cylinder cap");
            // Periodic point (w c)^infinity; only d - 1 symbols beyond w are read.
            Word period = w;
            const Word link = connector(w.back(), w.front());
            period.insert(period.end(), link.begin(), link.end());
            Word orbit;
            while (static_cast<int>(orbit.size()) < length + d) orbit.insert(orbit.end(), period.begin(), period.end());
            double birkhoff = 0.0;
            for (int k = 0; k < length; ++k)
                birkhoff += model.potential(std::span<const Symbol>(orbit).subspan(static_cast<std::size_t>(k)));
            const double ratio = model.chain.word_measure(w) / std::exp(birkhoff - length * model.pressure);
            report.ratio_min = std::min(report.ratio_min, ratio);
            report.ratio_max = std::max(report.ratio_max, ratio);
        }
    }
    report.cylinders = total;
    report.empirical_constant = std::max(report.ratio_max, 1.0 / report.ratio_min);
    return report;
}

// ---------------------------------------------------------------------------
// Cocycle statistics

std::string to_string(VarianceMethod m) {
    switch (m) {
        case VarianceMethod::FundamentalMatrix: return "fundamental-matrix";
        case VarianceMethod::TruncatedGreenKubo: return "truncated-green-kubo";
        case VarianceMethod::DpGrowth: return "dp-growth";
    }
    return "unknown";
}

namespace {

void require_centered(double mean) {
    if (std::abs(mean) > kCenteringTolerance) {
        char buf[64];
        std::snprintf(buf, sizeof buf, "cocycle mean %.6g is not zero", mean);
        throw Error(ErrorCode::NotCentered, buf);
    }
}

std::vector<long> integer_values(const Eigen::VectorXd& v) {
    std::vector<long> out(static_cast<std::size_t>(v.size()));
    for (Eigen::Index i = 0; i < v.size(); ++i) {
        if (v(i) != std::round(v(i))) throw Error(ErrorCode::InvalidArgument, "cocycle must be integer valued");
        out[static_cast<std::size_t>(i)] = std::lround(v(i));
    }
    return out;
}

}  // namespace

void require_centered_cocycle(const GibbsModel& model, const LocallyConstantFunction& cocycle) {
    if (!cocycle.integer_valued()) throw Error(ErrorCode::InvalidArgument, "cocycle must be integer valued");
    require_centered(model.integral(cocycle));
}

VarianceReport green_kubo_variance(const GibbsModel& model, const LocallyConstantFunction& cocycle,
                                   std::vector<int> dp_sizes) {
    const MarkovChain chain = model.chain_for_depth(cocycle.depth());
    const Eigen::VectorXd f = chain.state_values(cocycle);
    const Eigen::VectorXd& pi = chain.stationary;
    require_centered(pi.dot(f));

    const Eigen::Index s = chain.size();
    const Eigen::MatrixXd system =
        Eigen::MatrixXd::Identity(s, s) - chain.transition + Eigen::VectorXd::Ones(s) * pi.transpose();
    Eigen::FullPivLU<Eigen::MatrixXd> lu(system);
    if (!lu.isInvertible()) throw Error(ErrorCode::SingularSolve, "I - P + 1 pi is singular");
    const Eigen::VectorXd zf = lu.solve(f);

    VarianceReport report;
    report.method = VarianceMethod::FundamentalMatrix;
    const double sigma2 = 2.0 * pi.dot(f.cwiseProduct(zf)) - pi.dot(f.cwiseProduct(f));
    report.sigma2 = std::max(0.0, sigma2);
    report.degenerate = report.sigma2 < kDegenerateTolerance;
    for (int n : dp_sizes) {
        const SumDistribution dist = exact_sum_distribution(model, cocycle, n);
        report.dp_check.emplace_back(n, dist.variance() / n);
    }
    return report;
}

double truncated_green_kubo(const GibbsModel& model, const LocallyConstantFunction& cocycle, int lags) {
    const MarkovChain chain = model.chain_for_depth(cocycle.depth());
    const Eigen::VectorXd f = chain.state_values(cocycle);
    const Eigen::VectorXd& pi = chain.stationary;
    const double mean = pi.dot(f);
    const Eigen::VectorXd g = f.array() - mean;
    double total = pi.dot(g.cwiseProduct(g));
    Eigen::VectorXd pk = g;
    for (int k = 1; k <= lags; ++k) {
        pk = chain.transition * pk;
        total += 2.0 * pi.dot(g.cwiseProduct(pk));
    }
    return total;
}

double SumDistribution::at(long value) const noexcept {
    if (value < min_value || value > max_value()) return 0.0;
    return probabilities[static_cast<std::size_t>(value - min_value)];
}

double SumDistribution::mean() const {
    double m = 0.0;
    for (std::size_t i = 0; i < probabilities.size(); ++i) m += probabilities[i] * static_cast<double>(min_value + static_cast<long>(i));
    return m;
}

double SumDistribution::variance() const {
    const double m = mean();
    double v = 0.0;
    for (std::size_t i = 0; i < probabilities.size(); ++i) {
        const double x = static_cast<double>(min_value + static_cast<long>(i)) - m;
        v += probabilities[i] * x * x;
    }
    return v;
}

JointSumLaw joint_sum_law(const MarkovChain& chain, std::span<const long> values, int n, const Eigen::VectorXd& initial) {
    if (n < 0) throw Error(ErrorCode::InvalidArgument, "n must be nonnegative");
    const int states = chain.size();
    long reach = 0;
    for (long v : values) reach = std::max(reach, std::abs(v));
    const long width = 2 * reach * n + 1;
    const long offset = -reach * n;

    // Sparse successor lists.
    std::vector<std::vector<std::pair<int, double>>> next(static_cast<std::size_t>(states));
    for (int s = 0; s < states; ++s)
        for (int t = 0; t < states; ++t)
            if (chain.transition(s, t) > 0.0) next[static_cast<std::size_t>(s)].emplace_back(t, chain.transition(s, t));

    std::vector<std::vector<double>> cur(static_cast<std::size_t>(states), std::vector<double>(static_cast<std::size_t>(width), 0.0));
    auto nxt = cur;
    const auto zero = static_cast<std::size_t>(-offset);
    for (int s = 0; s < states; ++s) cur[static_cast<std::size_t>(s)][zero] = initial(s);

    for (int k = 0; k < n; ++k) {
        // Sums after k steps lie in [-k reach, k reach].
        const std::size_t lo = zero - static_cast<std::size_t>(k * reach);
        const std::size_t hi = zero + static_cast<std::size_t>(k * reach);
        const std::size_t lo_next = lo - static_cast<std::size_t>(reach);
        const std::size_t hi_next = hi + static_cast<std::size_t>(reach);
        for (auto& row : nxt) std::fill(row.begin() + static_cast<long>(lo_next), row.begin() + static_cast<long>(hi_next) + 1, 0.0);
        for (int s = 0; s < states; ++s) {
            const double* src = cur[static_cast<std::size_t>(s)].data();
            const long shift = values[static_cast<std::size_t>(s)];
            for (const auto& [t, p] : next[static_cast<std::size_t>(s)]) {
                double* dst = nxt[static_cast<std::size_t>(t)].data() + shift;
                for (std::size_t x = lo; x <= hi; ++x) dst[x] += p * src[x];
            }
        }
        cur.swap(nxt);
    }

    JointSumLaw law{n, offset, Eigen::MatrixXd(states, width)};
    for (int s = 0; s < states; ++s)
        for (long x = 0; x < width; ++x) law.table(s, x) = cur[static_cast<std::size_t>(s)][static_cast<std::size_t>(x)];
    return law;
}

SumDistribution exact_sum_distribution(const GibbsModel& model, const LocallyConstantFunction& cocycle, int n,
                                       long range_cap) {
    if (n < 1) throw Error(ErrorCode::InvalidArgument, "n must be at least 1");
    if (static_cast<double>(n) * cocycle.sup_norm() > static_cast<double>(range_cap))
        throw Error(ErrorCode::RangeOverflow, "n * max|phi| exceeds the range cap " + std::to_string(range_cap));
    const MarkovChain chain = model.chain_for_depth(cocycle.depth());
    const std::vector<long> values = integer_values(chain.state_values(cocycle));
    const JointSumLaw joint = joint_sum_law(chain, values, n, chain.stationary);

    // Trim to the reachable support.
    const Eigen::RowVectorXd marginal = joint.table.colwise().sum();
    Eigen::Index first = 0, last = marginal.size() - 1;
    while (first < last && marginal(first) == 0.0) ++first;
    while (last > first && marginal(last) == 0.0) --last;
    SumDistribution dist;
    dist.n = n;
    dist.min_value = joint.offset + static_cast<long>(first);
    dist.probabilities.assign(marginal.data() + first, marginal.data() + last + 1);
    return dist;
}

double llt_ratio(const GibbsModel& model, const LocallyConstantFunction& cocycle, int n) {
    const VarianceReport var = green_kubo_variance(model, cocycle, {});
    if (var.degenerate) throw Error(ErrorCode::Degenerate, "cocycle variance vanishes");
    const SumDistribution dist = exact_sum_distribution(model, cocycle, n);
    return std::sqrt(2.0 * std::numbers::pi * n * var.sigma2) * dist.at(0);
}

AperiodicityReport cocycle_aperiodicity(const GibbsModel& model, const LocallyConstantFunction& cocycle, int grid_size) {
    if (grid_size < 16) throw Error(ErrorCode::InvalidArgument, "grid size must be at least 16");
    const MarkovChain chain = model.chain_for_depth(cocycle.depth());
    const Eigen::VectorXd f = chain.state_values(cocycle);
    AperiodicityReport report;
    report.grid_size = grid_size;
    for (int k = 1; k < grid_size; ++k) {
        const double theta = 2.0 * std::numbers::pi * k / grid_size;
        Eigen::MatrixXcd twisted(chain.size(), chain.size());
        for (int i = 0; i < chain.size(); ++i) {
            const std::complex<double> phase = std::polar(1.0, theta * f(i));
            for (int j = 0; j < chain.size(); ++j) twisted(i, j) = chain.transition(i, j) * phase;
        }
        Eigen::ComplexEigenSolver<Eigen::MatrixXcd> solver(twisted, false);
        if (solver.info() != Eigen::Success) throw Error(ErrorCode::EigenFailure, "twisted spectrum failed");
        const double radius = solver.eigenvalues().cwiseAbs().maxCoeff();
        if (radius > report.max_radius) {
            report.max_radius = radius;
            report.theta_at_max = theta;
        }
    }
    report.periodic = report.max_radius >= 1.0 - 1e-9;
    return report;
}

LocallyConstantFunction symmetrize(const ShiftSpace& shift, const LocallyConstantFunction& phi) {
    const int n = shift.alphabet_size();
    for (int i = 0; i < n; ++i)
        for (int j = 0; j < n; ++j)
            if (shift.allowed(static_cast<Symbol>(i), static_cast<Symbol>(j)) !=
                shift.allowed(static_cast<Symbol>(j), static_cast<Symbol>(i)))
                throw Error(ErrorCode::InvalidArgument, "symmetrize needs a symmetric transition matrix");
    std::vector<double> dense(phi.dense().size(), 0.0);
    for (std::size_t code = 0; code < dense.size(); ++code) {
        Word w = shift.decode(code, phi.depth());
        if (!shift.admissible(w)) continue;
        const double forward = phi(w);
        std::reverse(w.begin(), w.end());
        dense[code] = forward - phi(w);
    }
    return LocallyConstantFunction(shift, phi.depth(), std::move(dense));
}

// ---------------------------------------------------------------------------
// Path sampling

MarkovPathGenerator::MarkovPathGenerator(const GibbsModel& model)
    : alphabet_(model.shift.alphabet_size()), memory_(model.chain.word_length), shift_(model.shift) {
    const MarkovChain& chain = model.chain;
    const auto n = static_cast<std::size_t>(alphabet_);
    forward_.resize(static_cast<std::size_t>(memory_) + 1);
    backward_.resize(static_cast<std::size_t>(memory_) + 1);
    for (int k = 0; k <= memory_; ++k) {
        const std::size_t codes = shift_.code_space(k);
        auto& fwd = forward_[static_cast<std::size_t>(k)];
        auto& bwd = backward_[static_cast<std::size_t>(k)];
        fwd.assign(codes * n, 0);
        bwd.assign(codes * n, 0);
        for (std::size_t code = 0; code < codes; ++code) {
            const Word h = shift_.decode(code, k);
            const double base = k == 0 ? 1.0 : chain.word_measure(h);
            if (base <= 0.0) continue;
            std::vector<double> pf(n), pb(n);
            Word ext(h.size() + 1);
            for (std::size_t x = 0; x < n; ++x) {
                std::copy(h.begin(), h.end(), ext.begin());
                ext.back() = static_cast<Symbol>(x);
                pf[x] = chain.word_measure(ext) / base;
                ext.front() = static_cast<Symbol>(x);
                std::copy(h.begin(), h.end(), ext.begin() + 1);
                pb[x] = chain.word_measure(ext) / base;
            }
            const auto tf = thresholds_for(pf);
            const auto tb = thresholds_for(pb);
            std::copy(tf.begin(), tf.end(), fwd.begin() + static_cast<long>(code * n));
            std::copy(tb.begin(), tb.end(), bwd.begin() + static_cast<long>(code * n));
        }
    }
}

std::vector<std::uint64_t> MarkovPathGenerator::thresholds_for(const std::vector<double>& probs) const {
    std::vector<std::uint64_t> t(probs.size(), 0);
    double total = 0.0;
    for (double p : probs) total += p;
    int last = -1;
    for (std::size_t x = 0; x < probs.size(); ++x)
        if (probs[x] > 0.0) last = static_cast<int>(x);
    double cum = 0.0;
    for (std::size_t x = 0; x < probs.size(); ++x) {
        cum += probs[x] / total;
        if (static_cast<int>(x) >= last) {
            t[x] = std::numeric_limits<std::uint64_t>::max();
        } else {
            const double scaled = cum * 0x1.0p64;
            t[x] = scaled >= 0x1.0p64 ? std::numeric_limits<std::uint64_t>::max() - 1 : static_cast<std::uint64_t>(scaled);
        }
    }
    return t;
}

Symbol MarkovPathGenerator::next(std::span<const Symbol> history, Philox4x32& rng) const {
    const std::size_t k = std::min(history.size(), static_cast<std::size_t>(memory_));
    const auto recent = history.subspan(history.size() - k);
    const std::size_t code = shift_.encode(recent);
    return draw(&forward_[k][code * static_cast<std::size_t>(alphabet_)], rng());
}

Symbol MarkovPathGenerator::previous(std::span<const Symbol> future, Philox4x32& rng) const {
    const std::size_t k = std::min(future.size(), static_cast<std::size_t>(memory_));
    const std::size_t code = shift_.encode(future.first(k));
    return draw(&backward_[k][code * static_cast<std::size_t>(alphabet_)], rng());
}

}  // namespace zrec
