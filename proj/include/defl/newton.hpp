#pragma once

#include <cmath>
#include <cstddef>
#include <vector>

#include "defl/linalg.hpp"
#include "defl/system.hpp"

namespace defl {

enum class Convergence { Quadratic, Linear, Stalled, Diverged };

inline const char* to_string(Convergence c) {
    switch (c) {
        case Convergence::Quadratic: return "quadratic";
        case Convergence::Linear: return "linear";
        case Convergence::Stalled: return "stalled";
        case Convergence::Diverged: return "diverged";
    }
    return "?";
}

struct IterationTrace {
    std::vector<Point> iterates;
    std::vector<double> residual_norms;  // ||S(p_k)||_inf, one per iterate
    std::vector<double> step_norms;      // ||p_{k+1} - p_k||_2, one per step
    double tol = 0.0;
    bool converged = false;
    bool singular_stall = false;  // Jacobian became singular at an iterate
    bool too_short = false;       // set by classify_convergence
};

struct NewtonResult {
    Point point;
    IterationTrace trace;
};

/// Plain Newton iteration on a square system. A singular Jacobian ends the
/// run with a stalled trace rather than an exception.
inline NewtonResult newton_refine(const PolySystem& s, const Point& p0, double tol = 0.0,
                                  unsigned max_iter = 50) {
    if (s.size() != p0.size())
        throw std::invalid_argument("newton_refine expects a square system");
    if (tol <= 0.0) tol = 1e-14 * (1.0 + norm2(p0));
    // cache partials once
    std::vector<std::vector<Polynomial>> parts(s.size());
    for (std::size_t i = 0; i < s.size(); ++i) {
        parts[i].reserve(s.nvars());
        for (std::size_t j = 0; j < s.nvars(); ++j) parts[i].push_back(partial(s.polys[i], j));
    }
    NewtonResult out;
    out.trace.tol = tol;
    Point p = p0;
    out.trace.iterates.push_back(p);
    out.trace.residual_norms.push_back(max_residual(s, p));
    for (unsigned it = 0; it < max_iter; ++it) {
        Matrix j(s.size(), s.nvars());
        for (std::size_t r = 0; r < s.size(); ++r)
            for (std::size_t c = 0; c < s.nvars(); ++c) j(r, c) = evaluate(parts[r][c], p);
        std::vector<double> rhs = evaluate_system(s, p);
        for (double& v : rhs) v = -v;
        auto step = solve_linear(j, rhs);
        if (!step) {
            out.trace.singular_stall = true;
            break;
        }
        for (std::size_t i = 0; i < p.size(); ++i) p[i] += (*step)[i];
        out.trace.iterates.push_back(p);
        out.trace.residual_norms.push_back(max_residual(s, p));
        double sn = norm2(*step);
        out.trace.step_norms.push_back(sn);
        if (sn < tol) {
            out.trace.converged = true;
            break;
        }
    }
    out.point = p;
    return out;
}

/// Convergence-rate classification from step norms. True errors are unknown,
/// so steps stand in for them: quadratic behaviour is detected either by the
/// bounded s_{k+1}/s_k^2 ratio test with a superlinear tail, or by an
/// order estimate log(s_k+1/s_k)/log(s_k/s_k-1) >= 1.5 on the last effective
/// steps; linear behaviour by a geometric fit with ratio in (0.1, 0.95).
inline Convergence classify_convergence(const IterationTrace& trace) {
    if (trace.singular_stall && trace.step_norms.empty()) return Convergence::Stalled;
    const auto& s = trace.step_norms;
    const auto& r = trace.residual_norms;
    if (trace.iterates.empty()) return Convergence::Stalled;

    double scale = 1.0 + norm2(trace.iterates.back());
    double floor_val = std::max(trace.tol, 1e-15 * scale);
    std::vector<double> eff;
    for (double v : s)
        if (v > floor_val) eff.push_back(v);

    // divergence: steps or residuals growing by orders of magnitude
    if (!eff.empty() && eff.back() > 100.0 * eff.front() && eff.back() > 1.0)
        return Convergence::Diverged;
    if (r.size() >= 2 && r.back() > 100.0 * r.front() && r.back() > 1e-6)
        return Convergence::Diverged;

    if (trace.converged && eff.size() <= 2) return Convergence::Quadratic;
    if (eff.size() < 3) {
        const_cast<IterationTrace&>(trace).too_short = true;
        return Convergence::Stalled;
    }

    bool near_done = trace.converged || eff.back() < 1e-8 * scale;

    // ratio test per step pair, on the trailing window
    std::size_t m = eff.size();
    std::size_t win = std::min<std::size_t>(3, m - 1);
    bool ratio_ok = true, superlinear = true;
    double q0 = -1.0;
    for (std::size_t k = m - 1 - win; k + 1 < m; ++k) {
        double q = eff[k + 1] / (eff[k] * eff[k]);
        if (q0 < 0.0) q0 = q;
        if (q > 10.0 * q0) ratio_ok = false;
        if (eff[k + 1] >= std::pow(eff[k], 1.5)) superlinear = false;
    }
    if (near_done && ratio_ok && superlinear) return Convergence::Quadratic;

    // order estimate on the last three effective steps
    if (near_done && m >= 3) {
        double s0 = eff[m - 3], s1 = eff[m - 2], s2 = eff[m - 1];
        if (s1 < s0 && s2 < s1) {
            double nu = std::log(s2 / s1) / std::log(s1 / s0);
            if (nu >= 1.5) return Convergence::Quadratic;
        }
    }

    // geometric fit over the trailing effective steps
    std::size_t tail = std::min<std::size_t>(8, m);
    std::size_t off = m - tail;
    double sx = 0, sy = 0, sxx = 0, sxy = 0, syy = 0;
    for (std::size_t k = 0; k < tail; ++k) {
        double x = double(k), y = std::log(eff[off + k]);
        sx += x; sy += y; sxx += x * x; sxy += x * y; syy += y * y;
    }
    double n = double(tail);
    double den = n * sxx - sx * sx;
    if (den > 0.0) {
        double slope = (n * sxy - sx * sy) / den;
        double rho = std::exp(slope);
        double ybar = sy / n;
        double ss_tot = syy - n * ybar * ybar;
        double ss_res = 0.0;
        double intercept = ybar - slope * (sx / n);
        for (std::size_t k = 0; k < tail; ++k) {
            double pred = intercept + slope * double(k);
            double res = std::log(eff[off + k]) - pred;
            ss_res += res * res;
        }
        double r2 = ss_tot > 0.0 ? 1.0 - ss_res / ss_tot : 1.0;
        if (rho > 0.1 && rho < 0.95 && r2 > 0.9) return Convergence::Linear;
    }
    return Convergence::Stalled;
}

}  // namespace defl
