#pragma once

#include <cstddef>
#include <optional>
#include <sstream>
#include <stdexcept>
#include <string>
#include <vector>

#include "defl/linalg.hpp"
#include "defl/newton.hpp"
#include "defl/polynomial.hpp"
#include "defl/regularity.hpp"
#include "defl/system.hpp"

namespace defl {

// ---------------------------------------------------------------------------
// Provenance-tracked growing system
// ---------------------------------------------------------------------------

struct Provenance {
    enum class Kind { Input, Derivative, Combination, CombinationDerivative };
    Kind kind = Kind::Input;
    int input_index = -1;          // Input
    Monomial gamma;                // Derivative: which differential functional
    int parent = -1;               // Derivative/CombinationDerivative/Combination source
    std::vector<int> combined;     // Combination: trace indices of the H1 members
    int alpha_first = -1;          // Combination: first fresh variable index
    int alpha_count = 0;
    int diff_var = -1;             // CombinationDerivative: variable differentiated
    unsigned round = 0;            // combination round that created this node (0 = setup)
};

struct TracedPoly {
    Polynomial poly;  // kept at the current variable width of its state
    Provenance prov;
};

struct JudgedPoly {
    enum class Kind { Regular, Singular, NonVanishing, Combination };
    Polynomial poly;
    Kind kind;
    std::size_t nvars;  // width the polynomial lives in
};

struct RoundInfo {
    std::vector<std::size_t> h1;   // trace indices of the combined basis
    std::size_t candidate = 0;     // trace index of the combined-in polynomial
    std::size_t g_node = 0;        // trace index of the combination g
    std::vector<std::size_t> gs;   // trace indices of the committed derivatives
    std::size_t alpha_first = 0;
    std::size_t alpha_count = 0;
};

struct DeflationState {
    std::vector<std::string> vars;       // x's first, then alphas in introduction order
    std::size_t n_original = 0;
    Point point;                         // augmented approximate zero
    std::vector<TracedPoly> trace;       // every polynomial ever produced
    std::vector<std::size_t> active;     // trace indices forming the working set H
    std::vector<RoundInfo> round_info;
    std::vector<JudgedPoly> judgments;
    std::vector<std::string> log;
    unsigned round = 0;

    std::vector<Polynomial> active_polys() const {
        std::vector<Polynomial> out;
        out.reserve(active.size());
        for (std::size_t i : active) out.push_back(trace[i].poly);
        return out;
    }

    bool contains_active(const Polynomial& f) const {
        for (std::size_t i : active)
            if (trace[i].poly == f) return true;
        return false;
    }

    void note(std::string s) { log.push_back(std::move(s)); }
};

class DeflationError : public std::runtime_error {
public:
    DeflationError(const std::string& what, std::vector<std::string> log_lines,
                   bool smaller_theta = false)
        : std::runtime_error(what), log(std::move(log_lines)),
          suggest_smaller_theta(smaller_theta) {}
    std::vector<std::string> log;
    bool suggest_smaller_theta;
};

struct DeflateOptions {
    double theta = 0.005;
    double eps = 0.005;
    RankMode rank_mode = RankMode::Absolute;
    unsigned max_rounds = 32;
    double sanity_residual = 1e-2;
    unsigned mu_hint = 0;  // 0 = unknown; bounds the variable count at 2^mu * n
    double newton_tol = 0.0;
    unsigned newton_max_iter = 50;
};

struct DeflatedSystem {
    PolySystem system;  // square system over (x, alpha)
    Point point;        // (p~, alpha~) least-squares initial values
    std::size_t n_original = 0;
    unsigned rounds = 0;
    std::vector<TracedPoly> trace;
    std::vector<std::size_t> selected;  // trace indices of the square members
    std::vector<RoundInfo> round_info;
    std::vector<JudgedPoly> judgments;
    std::vector<std::string> log;
    std::size_t poly_count = 0;  // distinct polynomials incl. inputs missing from the square
    double theta_used = 0.0, eps_used = 0.0;

    std::size_t n_alpha() const { return system.nvars() - n_original; }
};

inline Polynomial embed(const Polynomial& f, std::size_t new_nvars) {
    if (new_nvars < f.nvars()) throw std::invalid_argument("cannot shrink polynomial");
    if (new_nvars == f.nvars()) return f;
    Polynomial r(new_nvars);
    for (const auto& [m, c] : f.terms()) {
        Monomial e(new_nvars);
        std::copy(m.exp.begin(), m.exp.end(), e.exp.begin());
        r.add_term(e, c);
    }
    return r;
}

inline Point project_to_x(const Point& p, std::size_t n) {
    return Point(p.begin(), p.begin() + std::min(p.size(), std::size_t(n)));
}

// ---------------------------------------------------------------------------
// Step 5: choose a rank-r subset of the working set
// ---------------------------------------------------------------------------

namespace detail {

inline std::vector<std::vector<double>> gradient_rows(const std::vector<Polynomial>& polys,
                                                      const Point& p) {
    std::vector<std::vector<double>> rows;
    rows.reserve(polys.size());
    for (const auto& f : polys) rows.push_back(gradient_at(f, p));
    return rows;
}

inline void project_out(std::vector<double>& v, const std::vector<double>& u) {
    double uu = 0.0, uv = 0.0;
    for (std::size_t i = 0; i < v.size(); ++i) {
        uu += u[i] * u[i];
        uv += u[i] * v[i];
    }
    if (uu == 0.0) return;
    double f = uv / uu;
    for (std::size_t i = 0; i < v.size(); ++i) v[i] -= f * u[i];
}

// Greedy selection visiting candidates in `order`; accepts a row when its
// residual after projection onto the selected span exceeds the threshold
// (or unconditionally by max residual when threshold <= 0).
inline std::vector<std::size_t> greedy_select(const std::vector<std::vector<double>>& rows,
                                              const std::vector<std::size_t>& order,
                                              std::size_t want, double threshold) {
    std::vector<std::size_t> picked;
    std::vector<std::vector<double>> basis;
    std::vector<std::vector<double>> resid(rows.size());
    for (std::size_t i : order) resid[i] = rows[i];
    if (threshold > 0.0) {
        for (std::size_t i : order) {
            if (picked.size() == want) break;
            auto v = rows[i];
            for (const auto& u : basis) project_out(v, u);
            if (norm2(v) > threshold) {
                picked.push_back(i);
                basis.push_back(v);
            }
        }
    } else {
        std::vector<std::size_t> remaining = order;
        while (picked.size() < want && !remaining.empty()) {
            double best = -1.0;
            std::size_t best_pos = 0;
            for (std::size_t k = 0; k < remaining.size(); ++k) {
                double r = norm2(resid[remaining[k]]);
                if (r > best + 1e-30) {
                    best = r;
                    best_pos = k;
                }
            }
            std::size_t idx = remaining[best_pos];
            if (best <= 0.0) break;
            picked.push_back(idx);
            auto u = resid[idx];
            remaining.erase(remaining.begin() + best_pos);
            for (std::size_t j : remaining) project_out(resid[j], u);
        }
        std::sort(picked.begin(), picked.end());
    }
    return picked;
}

}  // namespace detail

/// Choose indices H1 of a rank-r subset at tolerance eps. Candidates are
/// visited in list order (inputs and harvested polynomials come before
/// alpha-bearing ones there), which keeps alpha chains shallow; a pivoted
/// max-residual pass is the fallback when the ordered pass misses.
inline std::vector<std::size_t> select_full_rank_subset(const std::vector<Polynomial>& polys,
                                                        const Point& p, double eps,
                                                        std::size_t r,
                                                        RankMode mode = RankMode::Absolute) {
    if (r == 0) return {};
    auto rows = detail::gradient_rows(polys, p);
    std::vector<std::size_t> order(polys.size());
    std::iota(order.begin(), order.end(), std::size_t{0});

    auto rank_of = [&](const std::vector<std::size_t>& sel) {
        std::vector<Polynomial> sub;
        for (std::size_t i : sel) sub.push_back(polys[i]);
        return numerical_rank(jacobian_at(sub, p), eps, mode);
    };

    auto sel = detail::greedy_select(rows, order, r, eps);
    if (sel.size() == r && rank_of(sel) == r) return sel;
    sel = detail::greedy_select(rows, order, r, 0.0);
    return sel;
}

/// Pivoted best-conditioned r-subset, used by the rank-guess path where the
/// guessed rank may exceed the eps-rank.
inline std::vector<std::size_t> select_best_subset(const std::vector<Polynomial>& polys,
                                                   const Point& p, std::size_t r) {
    auto rows = detail::gradient_rows(polys, p);
    std::vector<std::size_t> order(polys.size());
    std::iota(order.begin(), order.end(), std::size_t{0});
    return detail::greedy_select(rows, order, r, 0.0);
}

// ---------------------------------------------------------------------------
// Steps 7-9: linear combination with fresh alpha variables
// ---------------------------------------------------------------------------

struct CombineResult {
    std::vector<double> alpha_init;       // least-squares values for the fresh alphas
    Polynomial g;                         // h + sum alpha_j h_j, over extended width
    std::vector<Polynomial> new_polys;    // dg/dv for every variable of the extended space
    std::vector<std::size_t> diff_vars;   // variable index per entry of new_polys
    std::vector<std::string> alpha_names;
    bool ls_rank_deficient = false;
};

inline std::vector<std::string> fresh_alpha_names(const std::vector<std::string>& vars,
                                                  std::size_t count) {
    std::vector<std::string> names;
    auto taken = [&](const std::string& n) {
        if (std::find(vars.begin(), vars.end(), n) != vars.end()) return true;
        return std::find(names.begin(), names.end(), n) != names.end();
    };
    // continue the numbering from earlier rounds: a1, a2, ...
    std::size_t start = 1;
    for (const auto& v : vars)
        if (v.size() > 1 && v[0] == 'a' && v.find_first_not_of("0123456789", 1) == std::string::npos)
            ++start;
    for (std::size_t k = 0; k < count; ++k) {
        std::string base = "a" + std::to_string(start + k);
        while (taken(base)) base += "_";
        names.push_back(base);
    }
    return names;
}

/// Form g = h + sum_j alpha_j h_j with fresh alpha variables, solve the
/// least-squares problem (J(H1,h)(p))^T (alpha,1)^T = 0 for their initial
/// values, and differentiate g with respect to every variable.
inline CombineResult combine_and_differentiate(const std::vector<Polynomial>& h1,
                                               const Polynomial& h, const Point& point,
                                               const std::vector<std::string>& vars) {
    if (h1.empty()) throw std::invalid_argument("empty combination basis");
    const std::size_t t = vars.size();
    const std::size_t r = h1.size();
    for (const auto& f : h1)
        if (f.nvars() != t) throw std::invalid_argument("basis width mismatch");
    if (h.nvars() != t || point.size() != t)
        throw std::invalid_argument("combination width mismatch");

    CombineResult out;
    Matrix stack(r + 1, t);
    for (std::size_t i = 0; i < r; ++i) {
        auto g = gradient_at(h1[i], point);
        for (std::size_t c = 0; c < t; ++c) stack(i, c) = g[c];
    }
    auto gh = gradient_at(h, point);
    for (std::size_t c = 0; c < t; ++c) stack(r, c) = gh[c];
    auto ls = least_squares_combination(stack);
    out.alpha_init = ls.alpha;
    out.ls_rank_deficient = ls.rank_deficient;
    out.alpha_names = fresh_alpha_names(vars, r);

    const std::size_t tw = t + r;
    Polynomial g = embed(h, tw);
    for (std::size_t j = 0; j < r; ++j) {
        Polynomial alpha = Polynomial::variable(tw, t + j);
        g = g + alpha * embed(h1[j], tw);
    }
    out.g = g;
    for (std::size_t v = 0; v < tw; ++v) {
        Polynomial d = partial(g, v);
        if (d.is_zero()) continue;
        out.new_polys.push_back(d);
        out.diff_vars.push_back(v);
    }
    return out;
}

// ---------------------------------------------------------------------------
// The deflation loop
// ---------------------------------------------------------------------------

namespace detail {

inline std::size_t active_rank(const DeflationState& st, const DeflateOptions& opts) {
    return numerical_rank(jacobian_at(st.active_polys(), st.point), opts.eps, opts.rank_mode);
}

inline void grow_state(DeflationState& st, const std::vector<std::size_t>& h1_idx,
                       std::size_t cand_idx, const CombineResult& cr) {
    const std::size_t t = st.vars.size();
    const std::size_t r = h1_idx.size();
    for (const auto& n : cr.alpha_names) st.vars.push_back(n);
    for (double a : cr.alpha_init) st.point.push_back(a);
    for (auto& tp : st.trace) tp.poly = embed(tp.poly, t + r);

    st.round += 1;
    RoundInfo ri;
    ri.h1 = h1_idx;
    ri.candidate = cand_idx;
    ri.alpha_first = t;
    ri.alpha_count = r;

    Provenance gp;
    gp.kind = Provenance::Kind::Combination;
    gp.parent = static_cast<int>(cand_idx);
    for (std::size_t i : h1_idx) gp.combined.push_back(static_cast<int>(i));
    gp.alpha_first = static_cast<int>(t);
    gp.alpha_count = static_cast<int>(r);
    gp.round = st.round;
    st.trace.push_back({cr.g, gp});
    ri.g_node = st.trace.size() - 1;

    for (std::size_t k = 0; k < cr.new_polys.size(); ++k) {
        if (st.contains_active(cr.new_polys[k])) continue;
        Provenance dp;
        dp.kind = Provenance::Kind::CombinationDerivative;
        dp.parent = static_cast<int>(ri.g_node);
        dp.diff_var = static_cast<int>(cr.diff_vars[k]);
        dp.round = st.round;
        st.trace.push_back({cr.new_polys[k], dp});
        st.active.push_back(st.trace.size() - 1);
        ri.gs.push_back(st.trace.size() - 1);
    }
    st.judgments.push_back({cr.g, JudgedPoly::Kind::Combination, st.vars.size()});
    st.round_info.push_back(ri);
}

/// Grow the working set by combination rounds until the Jacobian reaches full
/// numerical rank over the current variables. Candidates are rotated in
/// provenance order; an augmentation counts as progress when the rank deficit
/// |X| - rank shrinks, and when no candidate makes progress the last one is
/// kept anyway (the multiplicity still drops).
inline void run_deflation_loop(DeflationState& st, const DeflateOptions& opts) {
    while (true) {
        std::size_t t = st.vars.size();
        std::size_t r = active_rank(st, opts);
        if (r >= t) {
            st.note("rank " + std::to_string(r) + " = variable count; done");
            break;
        }
        if (st.round >= opts.max_rounds)
            throw DeflationError("combination round cap (" + std::to_string(opts.max_rounds) +
                                     ") exceeded",
                                 st.log);
        if (opts.mu_hint > 0 && opts.mu_hint < 24) {
            std::size_t cap = (std::size_t{1} << opts.mu_hint) * st.n_original;
            if (t + r > cap)
                throw DeflationError("variable cap 2^mu*n = " + std::to_string(cap) +
                                         " exceeded",
                                     st.log);
        }
        auto polys = st.active_polys();
        auto h1_local = select_full_rank_subset(polys, st.point, opts.eps, r, opts.rank_mode);
        std::vector<std::size_t> h1_idx;
        for (std::size_t k : h1_local) h1_idx.push_back(st.active[k]);
        std::vector<Polynomial> h1;
        for (std::size_t k : h1_local) h1.push_back(polys[k]);

        std::vector<std::size_t> cand_local;
        for (std::size_t k = 0; k < polys.size(); ++k)
            if (std::find(h1_local.begin(), h1_local.end(), k) == h1_local.end())
                cand_local.push_back(k);
        if (cand_local.empty())
            throw DeflationError("no combination candidate available", st.log,
                                 /*smaller_theta=*/true);

        std::size_t deficit = t - r;
        std::optional<DeflationState> kept;
        bool progressed = false;
        for (std::size_t k : cand_local) {
            if (h1.empty()) break;
            auto cr = combine_and_differentiate(h1, polys[k], st.point, st.vars);
            DeflationState trial = st;
            grow_state(trial, h1_idx, st.active[k], cr);
            std::size_t nr = active_rank(trial, opts);
            std::size_t nd = trial.vars.size() - std::min(nr, trial.vars.size());
            std::ostringstream line;
            line << "round " << trial.round << ": rank " << r << "/" << t << ", combined #"
                 << st.active[k] << " over " << h1.size() << " members -> rank " << nr << "/"
                 << trial.vars.size();
            trial.note(line.str());
            kept = std::move(trial);
            if (nd < deficit) {
                progressed = true;
                break;
            }
        }
        if (!kept) throw DeflationError("combination produced no candidates", st.log);
        if (!progressed) kept->note("no deficit progress this round; keeping last candidate");
        st = std::move(*kept);
    }
}

}  // namespace detail

/// Select the square system once full rank is reached: the most recent
/// round's derivatives first, then that round's combined basis, then the
/// rest of the working set in provenance order.
inline DeflatedSystem extract_square_system(const DeflationState& st,
                                            const DeflateOptions& opts) {
    const std::size_t t = st.vars.size();
    std::vector<std::size_t> pref;  // trace indices in preference order
    if (!st.round_info.empty()) {
        const RoundInfo& last = st.round_info.back();
        for (std::size_t i : last.gs) pref.push_back(i);
        for (std::size_t i : last.h1) pref.push_back(i);
    }
    for (std::size_t i : st.active)
        if (std::find(pref.begin(), pref.end(), i) == pref.end()) pref.push_back(i);

    std::vector<Polynomial> polys;
    for (std::size_t i : pref) polys.push_back(st.trace[i].poly);
    auto rows = detail::gradient_rows(polys, st.point);
    std::vector<std::size_t> order(polys.size());
    std::iota(order.begin(), order.end(), std::size_t{0});
    auto sel = detail::greedy_select(rows, order, t, opts.eps);
    auto rank_of = [&](const std::vector<std::size_t>& s) {
        std::vector<Polynomial> sub;
        for (std::size_t i : s) sub.push_back(polys[i]);
        return numerical_rank(jacobian_at(sub, st.point), opts.eps, opts.rank_mode);
    };
    if (sel.size() != t || rank_of(sel) != t) {
        sel = detail::greedy_select(rows, order, t, 0.0);
        if (sel.size() != t)
            throw DeflationError("could not extract a square full-rank subset", st.log);
    }

    std::vector<std::size_t> chosen;  // back to trace indices
    for (std::size_t k : sel) chosen.push_back(pref[k]);
    // display order: combined basis first, then derivatives, then the rest
    std::sort(chosen.begin(), chosen.end(), [&](std::size_t a, std::size_t b) {
        auto key = [&](std::size_t i) {
            const Provenance& pv = st.trace[i].prov;
            bool is_g = pv.kind == Provenance::Kind::CombinationDerivative &&
                        pv.round == st.round;
            return std::pair<int, std::size_t>(is_g ? 1 : 0, i);
        };
        return key(a) < key(b);
    });

    DeflatedSystem ds;
    std::vector<Polynomial> members;
    for (std::size_t i : chosen) members.push_back(st.trace[i].poly);
    ds.system = PolySystem(st.vars, members);
    ds.point = st.point;
    ds.n_original = st.n_original;
    ds.rounds = st.round;
    ds.trace = st.trace;
    ds.selected = chosen;
    ds.round_info = st.round_info;
    ds.judgments = st.judgments;
    ds.log = st.log;
    ds.theta_used = opts.theta;
    ds.eps_used = opts.eps;

    std::size_t missing_inputs = 0;
    for (const auto& tp : st.trace) {
        if (tp.prov.kind != Provenance::Kind::Input) continue;
        bool present = false;
        for (const auto& m : members)
            if (m == tp.poly) { present = true; break; }
        if (!present) ++missing_inputs;
    }
    ds.poly_count = members.size() + missing_inputs;
    return ds;
}

inline DeflationState make_initial_state(const PolySystem& f, const Point& p) {
    DeflationState st;
    st.vars = f.vars;
    st.n_original = f.nvars();
    st.point = p;
    for (std::size_t i = 0; i < f.size(); ++i) {
        Provenance pv;
        pv.kind = Provenance::Kind::Input;
        pv.input_index = static_cast<int>(i);
        st.trace.push_back({f.polys[i], pv});
        st.active.push_back(i);
    }
    return st;
}

/// Compute a deflated square system: harvest theta-regular derivatives of the
/// inputs, then run combination rounds until the augmented Jacobian has full
/// numerical rank, and extract a square subsystem.
inline DeflatedSystem deflate_system(const PolySystem& f, const Point& p,
                                     const DeflateOptions& opts) {
    if (f.size() != f.nvars())
        throw std::invalid_argument("deflation expects a square input system");
    if (p.size() != f.nvars()) throw std::invalid_argument("point dimension mismatch");
    if (max_residual(f, p) > opts.sanity_residual)
        throw std::invalid_argument("point does not approximately zero the system");
    if (opts.theta <= 0.0 || opts.eps <= 0.0)
        throw std::invalid_argument("tolerances must be positive");

    DeflationState st = make_initial_state(f, p);
    bool any_exhausted = false;
    for (std::size_t i = 0; i < f.size(); ++i) {
        const Polynomial& fi = f.polys[i];
        auto verdict = classify(fi, p, opts.theta);
        JudgedPoly::Kind jk = verdict.kind == Regularity::ThetaRegular
                                  ? JudgedPoly::Kind::Regular
                                  : verdict.kind == Regularity::ThetaSingular
                                        ? JudgedPoly::Kind::Singular
                                        : JudgedPoly::Kind::NonVanishing;
        st.judgments.push_back({fi, jk, f.nvars()});
        auto hr = harvest_regular_derivatives(fi, p, opts.theta);
        any_exhausted = any_exhausted || hr.exhausted;
        if (hr.exhausted)
            st.note("harvest of input " + std::to_string(i) +
                    " found no coefficient above theta");
        for (const auto& item : hr.items) {
            if (st.contains_active(item.poly)) continue;
            Provenance pv;
            pv.kind = Provenance::Kind::Derivative;
            pv.gamma = item.gamma;
            pv.parent = static_cast<int>(i);
            st.trace.push_back({item.poly, pv});
            st.active.push_back(st.trace.size() - 1);
            if (!(item.poly == fi))
                st.judgments.push_back({item.poly, JudgedPoly::Kind::Regular, f.nvars()});
        }
    }
    st.note("harvest complete: " + std::to_string(st.active.size()) + " working polynomials");

    try {
        detail::run_deflation_loop(st, opts);
    } catch (DeflationError& e) {
        throw DeflationError(std::string(e.what()) +
                                 (any_exhausted ? "; a smaller theta may harvest more" : ""),
                             e.log, any_exhausted || e.suggest_smaller_theta);
    }
    return extract_square_system(st, opts);
}

// ---------------------------------------------------------------------------
// Rank-guess fallback: no harvest, descending assumed ranks
// ---------------------------------------------------------------------------

struct RankGuessBranch {
    std::size_t guess = 0;
    int candidate = -1;  // input index combined in the forced round, -1 for the full-rank branch
    std::optional<DeflatedSystem> ds;
    Point refined;
    IterationTrace trace;
    Convergence conv = Convergence::Stalled;
    double delta = 0.0;
    bool accepted = false;
    std::string note;
};

struct RankGuessResult {
    DeflatedSystem ds;
    Point refined;
    IterationTrace trace;
    Convergence conv = Convergence::Stalled;
    double delta = 0.0;
    std::vector<RankGuessBranch> branches;
};

inline DeflatedSystem make_trivial_deflated(const PolySystem& f, const Point& p,
                                            const DeflateOptions& opts) {
    DeflationState st = make_initial_state(f, p);
    DeflatedSystem ds;
    ds.system = f;
    ds.point = p;
    ds.n_original = f.nvars();
    ds.rounds = 0;
    ds.trace = st.trace;
    for (std::size_t i = 0; i < f.size(); ++i) ds.selected.push_back(i);
    ds.poly_count = f.size();
    ds.theta_used = opts.theta;
    ds.eps_used = opts.eps;
    return ds;
}

/// Tolerance-free fallback: assume the Jacobian rank, run one forced
/// combination round per assumption (descending from n), finish with the
/// normal rank-driven loop, and accept the first branch whose Newton
/// refinement is quadratic with input residual below theta_prime.
inline RankGuessResult rank_guess_pipeline(const PolySystem& f, const Point& p, double eps,
                                           double theta_prime,
                                           DeflateOptions opts = DeflateOptions{}) {
    if (f.size() != f.nvars())
        throw std::invalid_argument("rank-guess expects a square input system");
    opts.eps = eps;
    RankGuessResult out;
    const std::size_t n = f.nvars();

    auto examine = [&](RankGuessBranch& br, const DeflatedSystem& ds) {
        auto nr = newton_refine(ds.system, ds.point, opts.newton_tol, opts.newton_max_iter);
        br.ds = ds;
        br.refined = nr.point;
        br.trace = nr.trace;
        br.conv = classify_convergence(nr.trace);
        br.delta = max_residual(f, project_to_x(nr.point, n));
        br.accepted = br.conv == Convergence::Quadratic && br.delta < theta_prime;
    };

    for (std::size_t gi = 0; gi < n; ++gi) {
        const std::size_t guess = n - gi;
        if (guess == n) {
            RankGuessBranch br;
            br.guess = n;
            examine(br, make_trivial_deflated(f, p, opts));
            bool ok = br.accepted;
            out.branches.push_back(br);
            if (ok) {
                auto& b = out.branches.back();
                out.ds = *b.ds;
                out.refined = b.refined;
                out.trace = b.trace;
                out.conv = b.conv;
                out.delta = b.delta;
                return out;
            }
            continue;
        }
        DeflationState base = make_initial_state(f, p);
        auto polys = base.active_polys();
        auto h1_local = select_best_subset(polys, p, guess);
        if (h1_local.size() != guess) continue;
        std::vector<Polynomial> h1;
        std::vector<std::size_t> h1_idx;
        for (std::size_t k : h1_local) {
            h1.push_back(polys[k]);
            h1_idx.push_back(base.active[k]);
        }
        for (std::size_t k = 0; k < polys.size(); ++k) {
            if (std::find(h1_local.begin(), h1_local.end(), k) != h1_local.end()) continue;
            RankGuessBranch br;
            br.guess = guess;
            br.candidate = static_cast<int>(k);
            DeflationState st = base;
            try {
                auto cr = combine_and_differentiate(h1, polys[k], st.point, st.vars);
                detail::grow_state(st, h1_idx, base.active[k], cr);
                detail::run_deflation_loop(st, opts);
                examine(br, extract_square_system(st, opts));
            } catch (const DeflationError& e) {
                br.note = e.what();
            } catch (const std::exception& e) {
                br.note = e.what();
            }
            bool ok = br.accepted;
            out.branches.push_back(br);
            if (ok) {
                auto& b = out.branches.back();
                out.ds = *b.ds;
                out.refined = b.refined;
                out.trace = b.trace;
                out.conv = b.conv;
                out.delta = b.delta;
                return out;
            }
        }
    }
    std::vector<std::string> log;
    for (const auto& br : out.branches) {
        std::ostringstream line;
        line << "guess " << br.guess << " cand " << br.candidate << ": "
             << (br.note.empty() ? to_string(br.conv) : br.note) << ", delta " << br.delta;
        log.push_back(line.str());
    }
    throw DeflationError("no rank guess produced a quadratic exact branch", log);
}

}  // namespace defl
