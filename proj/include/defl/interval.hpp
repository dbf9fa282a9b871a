#pragma once

#include <cmath>
#include <cstddef>
#include <limits>
#include <stdexcept>
#include <vector>

#include "defl/polynomial.hpp"
#include "defl/system.hpp"

namespace defl {

namespace rnd {

// Directed-rounded scalar ops. The rounding error of +,-,* is recovered
// exactly (TwoSum / FMA), so a bound is widened by one ulp only when the
// rounded result actually moved in the unsafe direction. Exact integer
// arithmetic therefore stays exact.

inline double next_down(double x) {
    return std::nextafter(x, -std::numeric_limits<double>::infinity());
}
inline double next_up(double x) {
    return std::nextafter(x, std::numeric_limits<double>::infinity());
}

inline double add_err(double a, double b, double s) {
    double bb = s - a;
    return (a - (s - bb)) + (b - bb);
}

inline double add_down(double a, double b) {
    double s = a + b;
    if (std::isinf(s)) return s < 0 ? s : std::numeric_limits<double>::max();
    return add_err(a, b, s) < 0.0 ? next_down(s) : s;
}
inline double add_up(double a, double b) {
    double s = a + b;
    if (std::isinf(s)) return s > 0 ? s : -std::numeric_limits<double>::max();
    return add_err(a, b, s) > 0.0 ? next_up(s) : s;
}
inline double mul_down(double a, double b) {
    double p = a * b;
    if (std::isinf(p)) return p < 0 ? p : std::numeric_limits<double>::max();
    return std::fma(a, b, -p) < 0.0 ? next_down(p) : p;
}
inline double mul_up(double a, double b) {
    double p = a * b;
    if (std::isinf(p)) return p > 0 ? p : -std::numeric_limits<double>::max();
    return std::fma(a, b, -p) > 0.0 ? next_up(p) : p;
}

}  // namespace rnd

/// Closed real interval with outward-rounded arithmetic: every operation
/// returns an interval containing the exact real result.
struct Interval {
    double lo = 0.0, hi = 0.0;

    Interval() = default;
    Interval(double v) : lo(v), hi(v) {}
    Interval(double l, double h) : lo(l), hi(h) {
        if (!(l <= h)) throw std::invalid_argument("interval bounds out of order");
    }

    double mid() const { return lo + 0.5 * (hi - lo); }
    double rad() const { return std::max(hi - mid(), mid() - lo); }
    double width() const { return hi - lo; }
    double mag() const { return std::max(std::abs(lo), std::abs(hi)); }
    bool contains(double v) const { return lo <= v && v <= hi; }
    bool contains(const Interval& o) const { return lo <= o.lo && o.hi <= hi; }
    bool inside_interior(const Interval& o) const { return o.lo < lo && hi < o.hi; }
};

inline Interval operator+(const Interval& a, const Interval& b) {
    Interval r;
    r.lo = rnd::add_down(a.lo, b.lo);
    r.hi = rnd::add_up(a.hi, b.hi);
    return r;
}

inline Interval operator-(const Interval& a) { return Interval(-a.hi, -a.lo); }

inline Interval operator-(const Interval& a, const Interval& b) { return a + (-b); }

inline Interval operator*(const Interval& a, const Interval& b) {
    double lo = std::min(std::min(rnd::mul_down(a.lo, b.lo), rnd::mul_down(a.lo, b.hi)),
                         std::min(rnd::mul_down(a.hi, b.lo), rnd::mul_down(a.hi, b.hi)));
    double hi = std::max(std::max(rnd::mul_up(a.lo, b.lo), rnd::mul_up(a.lo, b.hi)),
                         std::max(rnd::mul_up(a.hi, b.lo), rnd::mul_up(a.hi, b.hi)));
    Interval r;
    r.lo = lo;
    r.hi = hi;
    return r;
}

inline Interval operator*(double s, const Interval& a) { return Interval(s) * a; }

/// Integer power with the even-power tightening: [-1,1]^2 is [0,1].
inline Interval pow(const Interval& a, unsigned n) {
    if (n == 0) return Interval(1.0);
    if (n == 1) return a;
    auto pow_mag_up = [](double x, unsigned k) {
        double r = 1.0;
        for (unsigned i = 0; i < k; ++i) r = rnd::mul_up(r, x);
        return r;
    };
    auto pow_mag_down = [](double x, unsigned k) {
        double r = 1.0;
        for (unsigned i = 0; i < k; ++i) r = rnd::mul_down(r, x);
        return r;
    };
    if (n % 2 == 1) {
        double lo = a.lo < 0 ? -pow_mag_up(-a.lo, n) : pow_mag_down(a.lo, n);
        double hi = a.hi < 0 ? -pow_mag_down(-a.hi, n) : pow_mag_up(a.hi, n);
        Interval r;
        r.lo = lo;
        r.hi = hi;
        return r;
    }
    double m1 = std::abs(a.lo), m2 = std::abs(a.hi);
    double big = std::max(m1, m2), small = std::min(m1, m2);
    Interval r;
    r.hi = pow_mag_up(big, n);
    r.lo = a.contains(0.0) ? 0.0 : pow_mag_down(small, n);
    return r;
}

using IntervalVector = std::vector<Interval>;

struct IntervalMatrix {
    std::size_t rows = 0, cols = 0;
    std::vector<Interval> a;
    IntervalMatrix() = default;
    IntervalMatrix(std::size_t r, std::size_t c) : rows(r), cols(c), a(r * c) {}
    Interval& operator()(std::size_t r, std::size_t c) { return a[r * cols + c]; }
    const Interval& operator()(std::size_t r, std::size_t c) const { return a[r * cols + c]; }
};

/// Natural interval extension of a polynomial over a box.
inline Interval interval_eval(const Polynomial& f, const IntervalVector& box) {
    if (box.size() != f.nvars()) throw std::invalid_argument("box dimension mismatch");
    Interval s(0.0);
    for (const auto& [m, c] : f.terms()) {
        Interval t(c);
        for (std::size_t i = 0; i < m.exp.size(); ++i)
            if (m.exp[i]) t = t * pow(box[i], m.exp[i]);
        s = s + t;
    }
    return s;
}

inline IntervalVector interval_eval_system(const PolySystem& s, const IntervalVector& box) {
    IntervalVector out;
    out.reserve(s.size());
    for (const auto& f : s.polys) out.push_back(interval_eval(f, box));
    return out;
}

inline IntervalMatrix interval_jacobian(const PolySystem& s, const IntervalVector& box) {
    IntervalMatrix j(s.size(), s.nvars());
    for (std::size_t r = 0; r < s.size(); ++r)
        for (std::size_t c = 0; c < s.nvars(); ++c)
            j(r, c) = interval_eval(partial(s.polys[r], c), box);
    return j;
}

inline IntervalVector degenerate_box(const Point& p) {
    IntervalVector b;
    b.reserve(p.size());
    for (double v : p) b.emplace_back(v);
    return b;
}

}  // namespace defl
