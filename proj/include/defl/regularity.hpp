#pragma once

#include <cmath>
#include <cstddef>
#include <vector>

#include "defl/linalg.hpp"
#include "defl/polynomial.hpp"

namespace defl {

enum class Regularity { ThetaRegular, ThetaSingular, NonVanishing };

struct RegularityVerdict {
    Regularity kind = Regularity::NonVanishing;
    std::size_t witness = 0;  // gradient index attaining the maximum magnitude
    double value = 0.0;       // |f(p)|
};

/// Tolerance-based regularity at an approximate zero: the value and all first
/// partials are compared against theta. NonVanishing means |f(p)| >= theta,
/// i.e. the polynomial is not even approximately zero there.
inline RegularityVerdict classify(const Polynomial& f, const Point& p, double theta) {
    if (theta <= 0.0) throw std::invalid_argument("theta must be positive");
    RegularityVerdict v;
    v.value = std::abs(evaluate(f, p));
    double best = -1.0;
    for (std::size_t i = 0; i < f.nvars(); ++i) {
        double g = std::abs(evaluate(partial(f, i), p));
        if (g > best) {
            best = g;
            v.witness = i;
        }
    }
    if (v.value >= theta)
        v.kind = Regularity::NonVanishing;
    else if (best >= theta)
        v.kind = Regularity::ThetaRegular;
    else
        v.kind = Regularity::ThetaSingular;
    return v;
}

struct HarvestItem {
    Monomial gamma;
    Polynomial poly;  // the gamma differential functional of the input
};

struct HarvestResult {
    std::vector<HarvestItem> items;
    bool exhausted = false;       // theta exceeded every Taylor coefficient
    bool value_too_large = false; // |f(p)| >= theta, nothing to harvest
};

/// Collect theta-regular derivatives of f at p. A polynomial that is already
/// theta-regular harvests as itself. Otherwise let d be the lowest total
/// order with a Taylor coefficient of magnitude >= theta; the candidates are
/// the order d-1 differential functionals reached by dropping one exponent
/// from such a coefficient, each verified by classify before inclusion.
inline HarvestResult harvest_regular_derivatives(const Polynomial& f, const Point& p,
                                                 double theta) {
    if (f.is_zero()) throw std::invalid_argument("cannot harvest the zero polynomial");
    HarvestResult out;
    RegularityVerdict base = classify(f, p, theta);
    if (base.kind == Regularity::ThetaRegular) {
        out.items.push_back({Monomial(f.nvars()), f});
        return out;
    }
    auto coeffs = taylor_coefficients(f, p, total_degree(f));
    unsigned d = 0;
    bool found = false;
    for (const auto& [m, c] : coeffs) {  // ascending graded order
        if (std::abs(c) >= theta) {
            d = m.degree();
            found = true;
            break;
        }
    }
    if (!found) {
        out.exhausted = true;
        return out;
    }
    if (d == 0) {
        out.value_too_large = true;
        return out;
    }
    for (const auto& [m, c] : coeffs) {
        if (m.degree() != d || std::abs(c) < theta) continue;
        for (std::size_t i = 0; i < f.nvars(); ++i) {
            if (m.exp[i] == 0) continue;
            Monomial gamma = m;
            gamma.exp[i] -= 1;
            Polynomial der = diff_functional(f, gamma);
            if (der.is_zero()) continue;
            bool dup = false;
            for (const auto& it : out.items)
                if (it.poly == der) { dup = true; break; }
            if (dup) continue;
            if (classify(der, p, theta).kind == Regularity::ThetaRegular)
                out.items.push_back({gamma, der});
        }
    }
    return out;
}

/// Coefficient-fluctuation heuristic for choosing theta, driven by the number
/// of significant digits `a` of the approximate zero: with M and m the
/// largest/smallest absolute coefficients, heavy fluctuation (m/M <= 10^-a)
/// yields (m+M)/(2M), otherwise (m+M)/(2M*10^a).
inline double theta_heuristic(const Polynomial& f, unsigned a) {
    if (f.is_zero()) throw std::invalid_argument("theta_heuristic of zero polynomial");
    double m = std::numeric_limits<double>::infinity(), M = 0.0;
    for (const auto& [mon, c] : f.terms()) {
        double v = std::abs(c);
        m = std::min(m, v);
        M = std::max(M, v);
    }
    double scale = std::pow(10.0, double(a));
    if (m / M <= 1.0 / scale) return (m + M) / (2.0 * M);
    return (m + M) / (2.0 * M * scale);
}

}  // namespace defl
