#pragma once

#include <cmath>
#include <cstdint>
#include <optional>
#include <random>
#include <stdexcept>
#include <string>
#include <vector>

#include "defl/linalg.hpp"
#include "defl/parser.hpp"
#include "defl/polynomial.hpp"
#include "defl/system.hpp"

namespace defl {

/// Named benchmark system with its documented approximate zero and the
/// reference expectations used by the bench harness.
struct BenchmarkCase {
    std::string name;
    PolySystem system;
    Point approx_zero;
    std::optional<Point> exact_zero;
    unsigned multiplicity = 0;  // 0 = not documented
    bool mult_is_lower_bound = false;
    std::optional<std::size_t> expected_final_size;
    std::optional<std::size_t> expected_new_vars;
    std::optional<double> theta_hint, eps_hint;
    bool prefer_rank_guess = false;
    std::string notes;
};

namespace corpus_detail {

inline Point perturbed(const Point& exact, std::uint64_t seed, double magnitude = 1e-4) {
    std::mt19937_64 rng(seed);
    std::uniform_real_distribution<double> u(-magnitude, magnitude);
    Point p = exact;
    for (double& v : p) v += u(rng);
    return p;
}

inline BenchmarkCase make_dz1() {
    BenchmarkCase c;
    c.name = "dz1";
    c.system = parse_system(
        "vars: x1 x2 x3 x4\n"
        "x1^4 - x2*x3*x4\n"
        "x2^4 - x1*x3*x4\n"
        "x3^4 - x1*x2*x4\n"
        "x4^4 - x1*x2*x3\n");
    c.exact_zero = Point{0, 0, 0, 0};
    c.approx_zero = perturbed(*c.exact_zero, 41);
    c.multiplicity = 131;
    c.expected_final_size = 4;
    c.expected_new_vars = 0;
    c.theta_hint = 0.005;
    c.eps_hint = 0.005;
    c.notes = "4-var quartic family; the working set reaches 8 distinct polynomials";
    return c;
}

inline BenchmarkCase make_dz2() {
    BenchmarkCase c;
    c.name = "dz2";
    c.system = parse_system(
        "vars: x1 x2 x3\n"
        "x1^4\n"
        "x1^2*x2 + x2^4\n"
        "x3 + x3^2 - 7*x1^3 - 8*x1^2\n");
    c.exact_zero = Point{0, 0, -1};
    c.approx_zero = Point{0.00006787, 0.00007577, -0.9999};
    c.multiplicity = 16;
    c.expected_final_size = 3;
    c.expected_new_vars = 0;
    c.theta_hint = 0.005;
    c.eps_hint = 0.005;
    return c;
}

inline BenchmarkCase make_ex3() {
    BenchmarkCase c;
    c.name = "ex3";
    c.system = parse_system("x - y + x^2\nx - y + y^2\n");
    c.exact_zero = Point{0, 0};
    c.approx_zero = Point{0.0006721, 0.0008381};
    c.multiplicity = 3;
    c.expected_final_size = 5;
    c.expected_new_vars = 3;
    c.theta_hint = 0.05;
    c.eps_hint = 0.05;
    return c;
}

inline BenchmarkCase make_ex6() {
    BenchmarkCase c;
    c.name = "ex6";
    c.system = parse_system(
        "vars: x1 x2 x3 x4\n"
        "-9/4 + 3/2*x1 + 2*x2 + 3*x3 + 4*x4 - 1/4*x1^2\n"
        "x1 - 2*x2 - 2*x3 - 4*x4 + 2*x1*x2 + 3*x1*x3 + 4*x1*x4\n"
        "8 - 4*x1 - 8*x4 + 2*x4^2 + 4*x1*x4 - x1*x4^2\n"
        "-3 + 3*x1 + 2*x2 + 4*x3 + 4*x4\n");
    c.exact_zero = Point{1, -2, -1, 2};
    c.approx_zero = Point{1.00004659, -1.99995813, -0.99991547, 2.00005261};
    c.expected_final_size = 7;
    c.expected_new_vars = 3;
    c.theta_hint = 0.05;
    c.eps_hint = 0.005;
    return c;
}

inline BenchmarkCase make_ex8a() {
    BenchmarkCase c;
    c.name = "ex8a";
    c.system = parse_system("x + x^2 + 10000*y^2\nx^2 + 10000*y^2\n");
    c.exact_zero = Point{0, 0};
    c.approx_zero = Point{0.0006851, -0.0004368};
    c.multiplicity = 2;
    c.theta_hint = 0.5;
    c.eps_hint = 0.05;
    c.notes = "large coefficient fluctuation; the initial theta judgement misfires";
    return c;
}

inline BenchmarkCase make_ex8b() {
    BenchmarkCase c;
    c.name = "ex8b";
    c.system = parse_system(
        "x + x^2 + 2*x*y + 10000*y^2\n"
        "1/20*x + x^2 + 2*x*y + 10000*y^2\n");
    c.exact_zero = Point{0, 0};
    c.approx_zero = Point{0.000006851, -0.000004368};
    c.multiplicity = 2;
    c.expected_final_size = 3;
    c.expected_new_vars = 1;
    c.theta_hint = 0.5;
    c.eps_hint = 0.05;
    c.notes = "theta = 0.5 produces a perturbed run; the adaptive retry recovers";
    return c;
}

inline BenchmarkCase make_ex10() {
    BenchmarkCase c = make_ex8b();
    c.name = "ex10";
    c.prefer_rank_guess = true;
    c.notes = "same system as ex8b, driven through the rank-guess fallback";
    return c;
}

inline BenchmarkCase make_sec5_sys3() {
    const double s5 = std::sqrt(5.0), s7 = std::sqrt(7.0);
    Polynomial f1(2), f2(2);
    // f1 = 14x + 33y - 3*sqrt5*x^2 - 12*sqrt5*xy - 12*sqrt5*y^2 - 6*sqrt5
    //      + x^3 + 6x^2y + 12xy^2 + 8y^3 + sqrt7
    f1.add_term({1, 0}, 14);
    f1.add_term({0, 1}, 33);
    f1.add_term({2, 0}, -3 * s5);
    f1.add_term({1, 1}, -12 * s5);
    f1.add_term({0, 2}, -12 * s5);
    f1.add_term({0, 0}, -6 * s5 + s7);
    f1.add_term({3, 0}, 1);
    f1.add_term({2, 1}, 6);
    f1.add_term({1, 2}, 12);
    f1.add_term({0, 3}, 8);
    // f2 = 41x - 18y - sqrt5 + 8x^3 - 12x^2y + 6xy^2 - y^3
    //      + 12*sqrt7*xy - 12*sqrt7*x^2 - 3*sqrt7*y^2 - 6*sqrt7
    f2.add_term({1, 0}, 41);
    f2.add_term({0, 1}, -18);
    f2.add_term({0, 0}, -s5 - 6 * s7);
    f2.add_term({3, 0}, 8);
    f2.add_term({2, 1}, -12);
    f2.add_term({1, 2}, 6);
    f2.add_term({0, 3}, -1);
    f2.add_term({1, 1}, 12 * s7);
    f2.add_term({2, 0}, -12 * s7);
    f2.add_term({0, 2}, -3 * s7);

    BenchmarkCase c;
    c.name = "sec5_sys3";
    c.system = PolySystem({"x", "y"}, {f1, f2});
    c.exact_zero = Point{(s5 + 2 * s7) / 5.0, (2 * s5 - s7) / 5.0};
    c.approx_zero = Point{1.5055, 0.36528};
    c.multiplicity = 5;
    c.expected_final_size = 3;
    c.expected_new_vars = 1;
    c.theta_hint = 0.05;
    c.eps_hint = 0.05;
    c.notes = "radical coefficients stored as doubles; exactness is relative to the "
              "floating-point system";
    return c;
}

inline BenchmarkCase make_sec5_sys4() {
    Polynomial x1 = Polynomial::variable(3, 0);
    Polynomial x2 = Polynomial::variable(3, 1);
    Polynomial x3 = Polynomial::variable(3, 2);
    auto cst = [](double v) { return Polynomial::constant(3, v); };
    Polynomial f1 = 2.0 * x1 + 2.0 * (x1 * x1) + 2.0 * x2 + 2.0 * (x2 * x2) + x3 * x3 +
                    cst(-1);
    Polynomial f2 = pow(x1 + x2 - x3 - cst(1), 3) - pow(x1, 3);
    Polynomial inner = 2.0 * pow(x1, 3) + 5.0 * (x2 * x2) + 10.0 * x3 + 5.0 * (x3 * x3) +
                       cst(5);
    Polynomial f3 = pow(inner, 3) - 1000.0 * pow(x1, 5);

    BenchmarkCase c;
    c.name = "sec5_sys4";
    c.system = PolySystem({"x1", "x2", "x3"}, {f1, f2, f3});
    c.exact_zero = Point{0, 0, -1};
    c.approx_zero = perturbed(*c.exact_zero, 57);
    c.multiplicity = 18;
    c.theta_hint = 0.5;
    c.eps_hint = 0.05;
    c.notes = "degree-9 member with coefficients up to 1000";
    return c;
}

}  // namespace corpus_detail

inline std::vector<std::string> list_cases() {
    return {"dz1", "dz2", "ex3", "ex6", "ex8a", "ex8b", "ex10", "sec5_sys3", "sec5_sys4"};
}

inline BenchmarkCase load_case(const std::string& name) {
    using namespace corpus_detail;
    if (name == "dz1") return make_dz1();
    if (name == "dz2") return make_dz2();
    if (name == "ex3") return make_ex3();
    if (name == "ex6") return make_ex6();
    if (name == "ex8a") return make_ex8a();
    if (name == "ex8b") return make_ex8b();
    if (name == "ex10") return make_ex10();
    if (name == "sec5_sys3") return make_sec5_sys3();
    if (name == "sec5_sys4") return make_sec5_sys4();
    throw std::invalid_argument("unknown benchmark case '" + name + "'");
}

/// The chain family: {x1^3 - x1^2 - x2^2, x2^3 + x2^2 - x3, ...,
/// x_{n-1}^3 + x_{n-1}^2 - x_n, x_n^2} with its 2^n-fold zero at the origin.
inline BenchmarkCase generate_breadth_system(std::size_t n) {
    if (n < 2) throw std::invalid_argument("breadth family needs n >= 2");
    std::vector<std::string> vars;
    for (std::size_t i = 1; i <= n; ++i) vars.push_back("x" + std::to_string(i));
    std::vector<Polynomial> polys;
    {
        Polynomial f(n);
        Monomial m(n);
        m.exp[0] = 3;
        f.add_term(m, 1);
        m.exp[0] = 2;
        f.add_term(m, -1);
        m.exp[0] = 0;
        m.exp[1] = 2;
        f.add_term(m, -1);
        polys.push_back(f);
    }
    for (std::size_t i = 1; i + 1 < n; ++i) {
        Polynomial f(n);
        Monomial m(n);
        m.exp[i] = 3;
        f.add_term(m, 1);
        m.exp[i] = 2;
        f.add_term(m, 1);
        m.exp[i] = 0;
        m.exp[i + 1] = 1;
        f.add_term(m, -1);
        polys.push_back(f);
    }
    {
        Polynomial f(n);
        Monomial m(n);
        m.exp[n - 1] = 2;
        f.add_term(m, 1);
        polys.push_back(f);
    }
    BenchmarkCase c;
    c.name = "breadth" + std::to_string(n);
    c.system = PolySystem(vars, polys);
    c.exact_zero = Point(n, 0.0);
    c.approx_zero = corpus_detail::perturbed(*c.exact_zero, 1000 + n);
    c.multiplicity = n < 31 ? (1u << n) : 0;
    c.expected_final_size = n;
    c.expected_new_vars = 0;
    c.theta_hint = 0.005;
    c.eps_hint = 0.005;
    return c;
}

/// Random power construction: a random base system with a known simple zero,
/// raised componentwise to the given degrees, optionally mixed with another
/// member (mix[i] = k adds f_k to equation i; 0 adds nothing). Coefficients
/// are normalized to unit max magnitude per equation. Deterministic per seed.
inline BenchmarkCase generate_random_power_system(std::size_t n,
                                                  const std::vector<unsigned>& degrees,
                                                  const std::vector<unsigned>& mix,
                                                  std::uint64_t seed) {
    if (degrees.size() != n || mix.size() != n)
        throw std::invalid_argument("degrees and mix must have length n");
    std::mt19937_64 rng(seed);
    std::uniform_int_distribution<int> coef(-3, 3);
    std::uniform_int_distribution<int> coord(-1, 1);
    std::uniform_int_distribution<std::size_t> pick_var(0, n - 1);

    for (unsigned attempt = 0; attempt < 64; ++attempt) {
        Point p(n);
        for (double& v : p) v = coord(rng);
        std::vector<Polynomial> base;
        for (std::size_t i = 0; i < n; ++i) {
            Polynomial f(n);
            // guaranteed quadratic in a random variable, plus linear terms
            Monomial q(n);
            q.exp[pick_var(rng)] = 2;
            int cq = coef(rng);
            f.add_term(q, cq == 0 ? 1 : cq);
            Monomial cross(n);
            cross.exp[pick_var(rng)] += 1;
            cross.exp[pick_var(rng)] += 1;
            f.add_term(cross, coef(rng));
            for (std::size_t j = 0; j < n; ++j) {
                Monomial lin(n);
                lin.exp[j] = 1;
                int cl = coef(rng);
                if (i == j && cl == 0) cl = 2;  // keep the Jacobian well fed
                f.add_term(lin, cl);
            }
            f.add_term(Monomial(n), -evaluate(f, p));  // force f(p) = 0
            base.push_back(f);
        }
        auto s = svd(jacobian_at(base, p)).sigma;
        if (s.back() < 0.2) continue;  // degenerate draw, try again

        std::vector<Polynomial> polys;
        unsigned mult = 1;
        bool lower_bound = false;
        for (std::size_t i = 0; i < n; ++i) {
            Polynomial f = pow(base[i], degrees[i]);
            if (mix[i] != 0) {
                if (mix[i] > n) throw std::invalid_argument("mix index out of range");
                f = f + base[mix[i] - 1];
                lower_bound = true;
            }
            double m = 0.0;
            for (const auto& [mon, c] : f.terms()) m = std::max(m, std::abs(c));
            polys.push_back((1.0 / m) * f);
            mult *= degrees[i];
        }
        std::vector<std::string> vars;
        for (std::size_t i = 1; i <= n; ++i) vars.push_back("x" + std::to_string(i));

        BenchmarkCase c;
        c.name = "power_s" + std::to_string(seed);
        c.system = PolySystem(vars, polys);
        c.exact_zero = p;
        c.approx_zero = corpus_detail::perturbed(p, seed ^ 0x9e3779b97f4a7c15ull);
        c.multiplicity = mult;
        c.mult_is_lower_bound = lower_bound;
        c.theta_hint = 0.005;
        c.eps_hint = 0.005;
        return c;
    }
    throw std::runtime_error("could not draw a nonsingular base system");
}

}  // namespace defl
