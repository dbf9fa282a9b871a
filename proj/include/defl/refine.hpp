#pragma once

#include <cmath>
#include <cstddef>
#include <optional>
#include <string>
#include <vector>

#include "defl/deflation.hpp"
#include "defl/newton.hpp"

namespace defl {

enum class Verdict { Exact, Perturbed };

inline const char* to_string(Verdict v) {
    return v == Verdict::Exact ? "exact" : "perturbed";
}

struct Diagnosis {
    Convergence convergence = Convergence::Stalled;
    double delta = 0.0;    // max input residual at the refined projected zero
    double max_err = 0.0;  // largest offending Taylor coefficient (theta_2)
    Verdict verdict = Verdict::Perturbed;
};

/// Max absolute residual of the original system at the x-projection of a
/// refined (possibly augmented) point.
inline double residual_delta(const PolySystem& f, const Point& x) {
    if (x.size() < f.nvars()) throw std::invalid_argument("point too short for system");
    return max_residual(f, project_to_x(x, f.nvars()));
}

/// The theta_2 check: evaluate each judged polynomial at the refined zero and
/// take the largest coefficient that should have vanished. Polynomials judged
/// theta-singular contribute their value and gradient terms, theta-regular
/// ones their value term, and combination polynomials their whole degree-one
/// jet (it vanishes at the exact augmented zero by construction).
inline double max_err(const std::vector<JudgedPoly>& judged, const Point& p_refined) {
    double worst = 0.0;
    for (const auto& jp : judged) {
        if (jp.kind == JudgedPoly::Kind::NonVanishing) continue;
        Point pt = project_to_x(p_refined, jp.poly.nvars());
        if (pt.size() < jp.poly.nvars())
            throw std::invalid_argument("refined point too short for judged polynomial");
        worst = std::max(worst, std::abs(evaluate(jp.poly, pt)));
        if (jp.kind == JudgedPoly::Kind::Singular || jp.kind == JudgedPoly::Kind::Combination)
            for (std::size_t i = 0; i < jp.poly.nvars(); ++i)
                worst = std::max(worst, std::abs(evaluate(partial(jp.poly, i), pt)));
    }
    return worst;
}

/// Paper-style display convention: magnitudes at machine-precision level
/// print as "0" even though they are not exactly zero.
inline bool is_machine_zero(double v, double scale = 1.0) {
    return std::abs(v) < 2.3e-16 * std::max(1.0, scale);
}

struct AdaptiveOptions {
    std::optional<double> theta;  // unset: fluctuation heuristic over the system
    double eps = 0.005;
    double theta_prime = 1e-12;
    unsigned max_retries = 3;
    unsigned zero_digits = 4;  // significant digits of the approximate zero
    RankMode rank_mode = RankMode::Absolute;
    unsigned max_rounds = 32;
    unsigned mu_hint = 0;
    double newton_tol = 0.0;
    unsigned newton_max_iter = 50;
    bool allow_rank_guess = true;
};

struct Attempt {
    double theta = 0.0;
    Point start;
    std::optional<DeflatedSystem> ds;
    Point refined;
    Diagnosis diagnosis;
    std::string error;  // deflation failure, when set
};

struct AdaptiveResult {
    DeflatedSystem ds;
    Point refined;
    IterationTrace trace;
    Diagnosis diagnosis;
    std::vector<Attempt> attempts;
    bool used_rank_guess = false;
    std::vector<RankGuessBranch> branches;  // populated when the fallback ran
};

inline Diagnosis diagnose(const PolySystem& f, const DeflatedSystem& ds, const Point& refined,
                          const IterationTrace& trace, double theta_prime) {
    Diagnosis d;
    d.convergence = classify_convergence(trace);
    d.delta = residual_delta(f, refined);
    d.max_err = max_err(ds.judgments, refined);
    d.verdict = d.convergence == Convergence::Quadratic && d.delta < theta_prime
                    ? Verdict::Exact
                    : Verdict::Perturbed;
    return d;
}

/// Deflate, refine, and diagnose; on a perturbed verdict whose Max err points
/// at a theta misjudgement, retry with theta := min(theta1, theta2)/10 from
/// the refined point, and fall back to the rank-guess pipeline once retries
/// are exhausted. The result always carries a diagnosis.
inline AdaptiveResult adaptive_refine(const PolySystem& f, const Point& p0,
                                      const AdaptiveOptions& opts) {
    if (opts.max_retries < 1) throw std::invalid_argument("max_retries must be >= 1");
    AdaptiveResult out;

    double theta;
    if (opts.theta) {
        theta = *opts.theta;
    } else {
        theta = std::numeric_limits<double>::infinity();
        for (const auto& fi : f.polys)
            theta = std::min(theta, theta_heuristic(fi, opts.zero_digits));
    }

    DeflateOptions dopt;
    dopt.eps = opts.eps;
    dopt.rank_mode = opts.rank_mode;
    dopt.max_rounds = opts.max_rounds;
    dopt.mu_hint = opts.mu_hint;
    dopt.newton_tol = opts.newton_tol;
    dopt.newton_max_iter = opts.newton_max_iter;

    Point point = p0;
    bool have_result = false;
    for (unsigned pass = 0; pass <= opts.max_retries; ++pass) {
        Attempt at;
        at.theta = theta;
        at.start = point;
        dopt.theta = theta;
        try {
            DeflatedSystem ds = deflate_system(f, point, dopt);
            auto nr = newton_refine(ds.system, ds.point, opts.newton_tol, opts.newton_max_iter);
            at.ds = ds;
            at.refined = nr.point;
            at.diagnosis = diagnose(f, ds, nr.point, nr.trace, opts.theta_prime);
            out.attempts.push_back(at);
            if (!have_result || at.diagnosis.verdict == Verdict::Exact) {
                out.ds = ds;
                out.refined = nr.point;
                out.trace = nr.trace;
                out.diagnosis = at.diagnosis;
                have_result = true;
            }
            if (at.diagnosis.verdict == Verdict::Exact) return out;

            double theta1 = theta, theta2 = at.diagnosis.max_err;
            bool misjudged = theta2 > theta1 || theta2 >= theta1 / 100.0;
            if (!misjudged || pass == opts.max_retries) break;
            theta = std::min(theta1, theta2) / 10.0;
            Point cand = project_to_x(nr.point, f.nvars());
            if (max_residual(f, cand) <= max_residual(f, point)) point = cand;
        } catch (const DeflationError& e) {
            at.error = e.what();
            out.attempts.push_back(at);
            if (e.suggest_smaller_theta && pass < opts.max_retries) {
                theta /= 10.0;
                continue;
            }
            break;
        }
    }

    if (opts.allow_rank_guess) {
        try {
            auto rg = rank_guess_pipeline(f, p0, opts.eps, opts.theta_prime, dopt);
            out.used_rank_guess = true;
            out.branches = rg.branches;
            out.ds = rg.ds;
            out.refined = rg.refined;
            out.trace = rg.trace;
            out.diagnosis.convergence = rg.conv;
            out.diagnosis.delta = rg.delta;
            out.diagnosis.max_err = max_err(rg.ds.judgments, rg.refined);
            out.diagnosis.verdict = Verdict::Exact;
            return out;
        } catch (const DeflationError&) {
            // fall through with the best perturbed attempt
        }
    }
    if (!have_result) {
        std::vector<std::string> log;
        for (const auto& a : out.attempts)
            if (!a.error.empty()) log.push_back(a.error);
        throw DeflationError("every deflation strategy failed", log);
    }
    return out;
}

}  // namespace defl
