#pragma once

#include <cstddef>
#include <cstdio>
#include <optional>
#include <string>
#include <vector>

#include "defl/interval.hpp"
#include "defl/linalg.hpp"
#include "defl/system.hpp"

namespace defl {

struct VerifiedInclusion {
    IntervalVector box;        // contains a unique zero of the square system
    bool unique = true;
    IntervalVector candidate;  // the inflated box X the contraction ran on
    IntervalVector image;      // K(X), verified inside the interior of X
    double breadth = 0.0;      // max component width
};

struct KrawczykResult {
    std::optional<VerifiedInclusion> inclusion;
    std::string failure;  // cause when verification did not succeed
    unsigned inflations = 0;

    bool ok() const { return inclusion.has_value(); }
};

struct VerifyOptions {
    unsigned max_inflations = 15;
    double inflate_factor = 1.1;
    double eta = 1e-300;  // additive seed so zero-radius components inflate
};

/// Verified inclusion of a zero of a square system near an approximate zero,
/// via the Krawczyk operator with epsilon inflation. Works on the error term
/// E around p: K = -R*S(p) + (I - R*J(p+E))*E must land in the interior of E.
inline KrawczykResult krawczyk_verify(const PolySystem& s, const Point& p,
                                      const VerifyOptions& opts = VerifyOptions{}) {
    KrawczykResult out;
    if (s.size() != s.nvars() || p.size() != s.nvars()) {
        out.failure = "system is not square at the given point";
        return out;
    }
    const std::size_t n = s.nvars();

    Matrix jmid = jacobian_at(s, p);
    auto inv = try_inverse(jmid);
    if (!inv) {
        out.failure = "singular midpoint Jacobian";
        return out;
    }
    const Matrix& r = *inv;

    // Z = -R * S(p), with S(p) evaluated in interval arithmetic
    IntervalVector fp = interval_eval_system(s, degenerate_box(p));
    IntervalVector z(n);
    for (std::size_t i = 0; i < n; ++i) {
        Interval acc(0.0);
        for (std::size_t j = 0; j < n; ++j) acc = acc + Interval(r(i, j)) * fp[j];
        z[i] = -acc;
    }

    IntervalVector y = z;
    for (unsigned round = 0; round < opts.max_inflations; ++round) {
        out.inflations = round + 1;
        IntervalVector e(n);
        for (std::size_t i = 0; i < n; ++i) {
            double m = y[i].mid();
            double span = opts.inflate_factor * y[i].rad() + opts.eta;
            e[i] = Interval(rnd::add_down(m, -span), rnd::add_up(m, span));
        }
        IntervalVector box(n);
        for (std::size_t i = 0; i < n; ++i) box[i] = Interval(p[i]) + e[i];
        IntervalMatrix jx = interval_jacobian(s, box);

        // Y' = Z + (I - R*J(X)) * E
        IntervalVector y2(n);
        for (std::size_t i = 0; i < n; ++i) {
            Interval acc = z[i];
            for (std::size_t k = 0; k < n; ++k) {
                Interval c(0.0);
                for (std::size_t j = 0; j < n; ++j) c = c + Interval(r(i, j)) * jx(j, k);
                if (i == k) c = Interval(1.0) - c;
                else c = -c;
                acc = acc + c * e[k];
            }
            y2[i] = acc;
        }

        bool contracted = true;
        for (std::size_t i = 0; i < n; ++i)
            if (!(e[i].lo < y2[i].lo && y2[i].hi < e[i].hi)) {
                contracted = false;
                break;
            }
        if (contracted) {
            VerifiedInclusion vi;
            vi.box.resize(n);
            vi.candidate.resize(n);
            vi.image.resize(n);
            for (std::size_t i = 0; i < n; ++i) {
                vi.box[i] = Interval(p[i]) + y2[i];
                vi.candidate[i] = Interval(p[i]) + e[i];
                vi.image[i] = vi.box[i];
                vi.breadth = std::max(vi.breadth, vi.box[i].width());
            }
            out.inclusion = std::move(vi);
            return out;
        }
        y = y2;
    }
    out.failure = "no contraction after " + std::to_string(opts.max_inflations) +
                  " inflation rounds";
    return out;
}

/// Bracket display with 14 significant digits per endpoint; collapses to the
/// plain value when both endpoints print identically.
inline std::string format_interval(const Interval& iv) {
    char lo[40], hi[40];
    std::snprintf(lo, sizeof lo, "%.14g", iv.lo);
    std::snprintf(hi, sizeof hi, "%.14g", iv.hi);
    if (std::string(lo) == hi) return std::string(lo);
    return "[" + std::string(lo) + ", " + hi + "]";
}

inline std::string format_breadth(double breadth) {
    if (breadth == 0.0) return "true";
    int ex = static_cast<int>(std::floor(std::log10(breadth)));
    return "e" + std::to_string(ex);
}

}  // namespace defl
