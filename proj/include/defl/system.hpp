#pragma once

#include <stdexcept>
#include <string>
#include <vector>

#include "defl/polynomial.hpp"

namespace defl {

/// A list of polynomials over one shared ordered variable list.
struct PolySystem {
    std::vector<std::string> vars;
    std::vector<Polynomial> polys;

    PolySystem() = default;
    PolySystem(std::vector<std::string> v, std::vector<Polynomial> p)
        : vars(std::move(v)), polys(std::move(p)) {
        if (polys.empty()) throw std::invalid_argument("empty polynomial system");
        for (const auto& f : polys)
            if (f.nvars() != vars.size())
                throw std::invalid_argument("system member has wrong variable count");
    }

    std::size_t nvars() const { return vars.size(); }
    std::size_t size() const { return polys.size(); }
};

inline std::vector<double> evaluate_system(const PolySystem& s, const Point& p) {
    std::vector<double> r(s.size());
    for (std::size_t i = 0; i < s.size(); ++i) r[i] = evaluate(s.polys[i], p);
    return r;
}

inline double max_residual(const PolySystem& s, const Point& p) {
    double m = 0.0;
    for (const auto& f : s.polys) m = std::max(m, std::abs(evaluate(f, p)));
    return m;
}

inline std::string to_string(const PolySystem& s) {
    std::string out = "vars:";
    for (const auto& v : s.vars) out += " " + v;
    out += "\n";
    for (const auto& f : s.polys) out += to_string(f, s.vars) + "\n";
    return out;
}

}  // namespace defl
