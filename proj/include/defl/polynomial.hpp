#pragma once

#include <algorithm>
#include <charconv>
#include <cmath>
#include <cstddef>
#include <map>
#include <numeric>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

namespace defl {

using Point = std::vector<double>;

/// Exponent vector of a single term; length equals the ambient variable count.
struct Monomial {
    std::vector<unsigned> exp;

    Monomial() = default;
    explicit Monomial(std::size_t nvars) : exp(nvars, 0u) {}
    Monomial(std::initializer_list<unsigned> e) : exp(e) {}

    std::size_t nvars() const { return exp.size(); }
    unsigned degree() const { return std::accumulate(exp.begin(), exp.end(), 0u); }

    bool operator==(const Monomial& o) const { return exp == o.exp; }
};

/// Graded-lexicographic term order: total degree first, then lex on exponents.
struct GrlexLess {
    bool operator()(const Monomial& a, const Monomial& b) const {
        unsigned da = a.degree(), db = b.degree();
        if (da != db) return da < db;
        for (std::size_t i = 0; i < a.exp.size() && i < b.exp.size(); ++i)
            if (a.exp[i] != b.exp[i]) return a.exp[i] < b.exp[i];
        return a.exp.size() < b.exp.size();
    }
};

inline double powi(double x, unsigned n) {
    double r = 1.0;
    while (n) {
        if (n & 1u) r *= x;
        x *= x;
        n >>= 1u;
    }
    return r;
}

inline double binomial(unsigned n, unsigned k) {
    if (k > n) return 0.0;
    k = std::min(k, n - k);
    double r = 1.0;
    for (unsigned i = 1; i <= k; ++i) r = r * double(n - k + i) / double(i);
    return std::round(r);
}

/// Sparse real-coefficient multivariate polynomial over a fixed number of
/// variables. Terms are kept in canonical graded-lex order with no stored
/// zero coefficients, so iteration order and printed form are deterministic.
class Polynomial {
public:
    using TermMap = std::map<Monomial, double, GrlexLess>;

    Polynomial() = default;
    explicit Polynomial(std::size_t nvars) : nvars_(nvars) {}

    static Polynomial constant(std::size_t nvars, double c) {
        Polynomial p(nvars);
        p.add_term(Monomial(nvars), c);
        return p;
    }
    static Polynomial variable(std::size_t nvars, std::size_t i) {
        Polynomial p(nvars);
        Monomial m(nvars);
        m.exp.at(i) = 1;
        p.add_term(m, 1.0);
        return p;
    }

    std::size_t nvars() const { return nvars_; }
    const TermMap& terms() const { return terms_; }
    bool is_zero() const { return terms_.empty(); }
    std::size_t term_count() const { return terms_.size(); }

    void add_term(const Monomial& m, double c) {
        if (m.nvars() != nvars_) throw std::invalid_argument("monomial dimension mismatch");
        if (c == 0.0) return;
        auto [it, inserted] = terms_.emplace(m, c);
        if (!inserted) {
            it->second += c;
            if (it->second == 0.0) terms_.erase(it);
        }
    }

    double coeff(const Monomial& m) const {
        auto it = terms_.find(m);
        return it == terms_.end() ? 0.0 : it->second;
    }

    bool operator==(const Polynomial& o) const {
        return nvars_ == o.nvars_ && terms_ == o.terms_;
    }

private:
    std::size_t nvars_ = 0;
    TermMap terms_;
};

inline Polynomial operator+(const Polynomial& a, const Polynomial& b) {
    if (a.nvars() != b.nvars()) throw std::invalid_argument("polynomial dimension mismatch");
    Polynomial r = a;
    for (const auto& [m, c] : b.terms()) r.add_term(m, c);
    return r;
}

inline Polynomial operator*(double s, const Polynomial& a) {
    Polynomial r(a.nvars());
    if (s == 0.0) return r;
    for (const auto& [m, c] : a.terms()) r.add_term(m, s * c);
    return r;
}

inline Polynomial operator-(const Polynomial& a) { return -1.0 * a; }

inline Polynomial operator-(const Polynomial& a, const Polynomial& b) {
    return a + (-1.0 * b);
}

inline Polynomial operator*(const Polynomial& a, const Polynomial& b) {
    if (a.nvars() != b.nvars()) throw std::invalid_argument("polynomial dimension mismatch");
    Polynomial r(a.nvars());
    for (const auto& [ma, ca] : a.terms())
        for (const auto& [mb, cb] : b.terms()) {
            Monomial m(a.nvars());
            for (std::size_t i = 0; i < a.nvars(); ++i) m.exp[i] = ma.exp[i] + mb.exp[i];
            r.add_term(m, ca * cb);
        }
    return r;
}

inline Polynomial pow(const Polynomial& a, unsigned n) {
    Polynomial r = Polynomial::constant(a.nvars(), 1.0);
    Polynomial base = a;
    while (n) {
        if (n & 1u) r = r * base;
        if (n >>= 1u) base = base * base;
    }
    return r;
}

inline double evaluate(const Polynomial& f, const Point& p) {
    if (p.size() != f.nvars()) throw std::invalid_argument("point dimension mismatch");
    double s = 0.0;
    for (const auto& [m, c] : f.terms()) {
        double t = c;
        for (std::size_t i = 0; i < m.exp.size(); ++i)
            if (m.exp[i]) t *= powi(p[i], m.exp[i]);
        s += t;
    }
    return s;
}

/// Formal partial derivative with respect to variable i.
inline Polynomial partial(const Polynomial& f, std::size_t i) {
    if (i >= f.nvars()) throw std::invalid_argument("variable index out of range");
    Polynomial r(f.nvars());
    for (const auto& [m, c] : f.terms()) {
        if (m.exp[i] == 0) continue;
        Monomial d = m;
        d.exp[i] -= 1;
        r.add_term(d, c * double(m.exp[i]));
    }
    return r;
}

/// Factorial-normalized mixed derivative: the gamma-indexed differential
/// functional, i.e. iterated partials divided by the product of gamma_i!.
inline Polynomial diff_functional(const Polynomial& f, const Monomial& gamma) {
    if (gamma.nvars() != f.nvars()) throw std::invalid_argument("gamma dimension mismatch");
    Polynomial r(f.nvars());
    for (const auto& [m, c] : f.terms()) {
        double factor = 1.0;
        bool ok = true;
        Monomial d(f.nvars());
        for (std::size_t i = 0; i < f.nvars(); ++i) {
            if (m.exp[i] < gamma.exp[i]) { ok = false; break; }
            d.exp[i] = m.exp[i] - gamma.exp[i];
            factor *= binomial(m.exp[i], gamma.exp[i]);
        }
        if (ok) r.add_term(d, c * factor);
    }
    return r;
}

inline unsigned total_degree(const Polynomial& f) {
    unsigned d = 0;
    for (const auto& [m, c] : f.terms()) d = std::max(d, m.degree());
    return d;
}

/// Degree counting only the exponents of the given variable subset.
inline unsigned x_degree(const Polynomial& f, std::span<const std::size_t> subset) {
    unsigned d = 0;
    for (const auto& [m, c] : f.terms()) {
        unsigned t = 0;
        for (std::size_t i : subset) t += m.exp.at(i);
        d = std::max(d, t);
    }
    return d;
}

inline unsigned x_degree_prefix(const Polynomial& f, std::size_t k) {
    std::vector<std::size_t> idx(k);
    std::iota(idx.begin(), idx.end(), std::size_t{0});
    return x_degree(f, idx);
}

/// Shifted copy: returns g with g(y) = f(y + p), computed by per-variable
/// synthetic (Ruffini-Horner) shifts. The terms of g are the Taylor
/// coefficients of f about p.
inline Polynomial taylor_shift(const Polynomial& f, const Point& p) {
    if (p.size() != f.nvars()) throw std::invalid_argument("point dimension mismatch");
    Polynomial g = f;
    for (std::size_t v = 0; v < f.nvars(); ++v) {
        if (p[v] == 0.0) continue;
        // group by the exponents of the other variables
        std::map<Monomial, std::vector<double>, GrlexLess> groups;
        for (const auto& [m, c] : g.terms()) {
            Monomial key = m;
            unsigned e = key.exp[v];
            key.exp[v] = 0;
            auto& dense = groups[key];
            if (dense.size() <= e) dense.resize(e + 1, 0.0);
            dense[e] += c;
        }
        Polynomial shifted(f.nvars());
        for (auto& [key, a] : groups) {
            const std::size_t d = a.size() - 1;
            for (std::size_t j = 0; j < d; ++j)
                for (std::size_t k = d; k-- > j;)
                    a[k] += p[v] * a[k + 1];
            for (std::size_t e = 0; e <= d; ++e) {
                if (a[e] == 0.0) continue;
                Monomial m = key;
                m.exp[v] = static_cast<unsigned>(e);
                shifted.add_term(m, a[e]);
            }
        }
        g = std::move(shifted);
    }
    return g;
}

/// Taylor coefficients of f about p up to the given total order. The
/// coefficient of (x-p)^gamma equals the gamma differential functional of f
/// evaluated at p; with max_order = deg(f) the map reconstructs f exactly.
inline Polynomial::TermMap taylor_coefficients(const Polynomial& f, const Point& p,
                                               unsigned max_order) {
    Polynomial g = taylor_shift(f, p);
    Polynomial::TermMap out;
    for (const auto& [m, c] : g.terms())
        if (m.degree() <= max_order) out.emplace(m, c);
    return out;
}

// -- printing -----------------------------------------------------------

inline std::string format_double(double v) {
    char buf[64];
    auto res = std::to_chars(buf, buf + sizeof buf, v);
    return std::string(buf, res.ptr);
}

inline std::string to_string(const Polynomial& f, std::span<const std::string> names) {
    if (names.size() < f.nvars()) throw std::invalid_argument("not enough variable names");
    if (f.is_zero()) return "0";
    std::string out;
    bool first = true;
    // highest-degree terms first
    for (auto it = f.terms().rbegin(); it != f.terms().rend(); ++it) {
        const auto& [m, c] = *it;
        double mag = std::abs(c);
        if (first) {
            if (c < 0.0) out += "-";
        } else {
            out += c < 0.0 ? " - " : " + ";
        }
        first = false;
        std::string vars;
        for (std::size_t i = 0; i < m.exp.size(); ++i) {
            if (m.exp[i] == 0) continue;
            if (!vars.empty()) vars += "*";
            vars += names[i];
            if (m.exp[i] > 1) vars += "^" + std::to_string(m.exp[i]);
        }
        if (vars.empty()) {
            out += format_double(mag);
        } else if (mag == 1.0) {
            out += vars;
        } else {
            out += format_double(mag) + "*" + vars;
        }
    }
    return out;
}

}  // namespace defl
