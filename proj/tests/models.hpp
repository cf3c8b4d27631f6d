// Small models shared by the test suites.
#pragma once

#include <cmath>
#include <map>
#include <string>
#include <vector>

#include "zrec/suspension.hpp"

namespace zrec::test {

inline ShiftSpace full_shift(int n) {
    return validate_shift(n, std::vector<std::vector<int>>(static_cast<std::size_t>(n), std::vector<int>(n, 1)));
}

inline ShiftSpace golden_shift() { return validate_shift(2, {{1, 1}, {1, 0}}); }

inline LocallyConstantFunction fn(const ShiftSpace& s, int depth, std::map<std::string, double> values) {
    return LocallyConstantFunction::from_words(s, depth, values);
}

inline GibbsModel uniform_model(int n) {
    const ShiftSpace s = full_shift(n);
    return build_gibbs(s, LocallyConstantFunction::constant(s, -std::log(static_cast<double>(n))));
}

// Full 3-shift, uniform measure, phi = (-1, 0, +1).
inline SuspensionSystem trinomial(std::map<std::string, double> roof = {{"a", 1}, {"b", 1}, {"c", 1}}) {
    const GibbsModel m = uniform_model(3);
    const ShiftSpace& s = m.shift;
    return make_suspension(m, fn(s, 1, roof), fn(s, 1, {{"a", std::log(2.0)}, {"b", std::log(3.0)}, {"c", std::log(2.0)}}),
                           fn(s, 1, {{"a", -std::log(3.0)}, {"b", -std::log(2.0)}, {"c", -std::log(3.0)}}),
                           fn(s, 1, {{"a", -1}, {"b", 0}, {"c", 1}}));
}

}  // namespace zrec::test
