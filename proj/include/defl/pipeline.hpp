#pragma once

#include <chrono>
#include <optional>
#include <string>
#include <vector>

#include <json.hpp>

#include "defl/corpus.hpp"
#include "defl/krawczyk.hpp"
#include "defl/refine.hpp"

namespace defl {

struct PipelineOptions {
    std::optional<double> theta;  // unset: heuristic
    double eps = 0.005;
    double theta_prime = 1e-12;
    unsigned zero_digits = 4;
    unsigned max_retries = 3;
    bool relative_rank = false;
    bool verify = true;
    bool force_rank_guess = false;
    unsigned mu_hint = 0;
};

struct AttemptSummary {
    double theta = 0.0;
    std::string verdict;
    std::string convergence;
    double delta = 0.0;
    double max_err = 0.0;
    std::string error;
};

/// One row of results: everything the bench table and the JSON report need.
struct RunReport {
    std::string name;
    std::size_t n_vars = 0, n_alpha = 0;
    std::size_t final_size = 0, poly_count = 0;
    Verdict verdict = Verdict::Perturbed;
    Convergence convergence = Convergence::Stalled;
    double delta = 0.0, max_err = 0.0;
    bool verify_requested = true;
    bool verified = false;
    double breadth = 0.0;
    std::string verify_failure;
    IntervalVector inclusion;
    Point refined;
    Point alpha;
    double theta_used = 0.0, eps_used = 0.0;
    unsigned rounds = 0;
    bool used_rank_guess = false;
    double time_ms = 0.0;
    unsigned input_degree = 0, output_x_degree = 0;
    std::vector<AttemptSummary> attempts;
    std::vector<std::string> deflation_log;
    std::string error;  // fatal pipeline error

    bool failed() const { return !error.empty(); }

    int exit_code() const {
        if (failed()) return 1;
        if (verdict != Verdict::Exact) return 2;
        if (verify_requested && !verified) return 3;
        return 0;
    }

    /// Coefficient scale used by the machine-zero display rule for Max err.
    std::string max_err_display() const {
        if (is_machine_zero(max_err, max_err_scale)) return "0";
        char buf[32];
        std::snprintf(buf, sizeof buf, "%.6e", max_err);
        return buf;
    }
    double max_err_scale = 1.0;
};

inline RunReport run_pipeline(const PolySystem& f, const Point& p,
                              const PipelineOptions& opts, const std::string& name = "") {
    RunReport rep;
    rep.name = name;
    rep.n_vars = f.nvars();
    rep.verify_requested = opts.verify;
    rep.input_degree = 0;
    for (const auto& fi : f.polys) {
        rep.input_degree = std::max(rep.input_degree, total_degree(fi));
        for (const auto& [m, c] : fi.terms())
            rep.max_err_scale = std::max(rep.max_err_scale, std::abs(c));
    }

    auto t0 = std::chrono::steady_clock::now();
    try {
        DeflatedSystem ds;
        Point refined;
        IterationTrace trace;
        Diagnosis diag;

        if (opts.force_rank_guess) {
            DeflateOptions dopt;
            dopt.eps = opts.eps;
            dopt.rank_mode = opts.relative_rank ? RankMode::Relative : RankMode::Absolute;
            dopt.mu_hint = opts.mu_hint;
            auto rg = rank_guess_pipeline(f, p, opts.eps, opts.theta_prime, dopt);
            ds = rg.ds;
            refined = rg.refined;
            trace = rg.trace;
            diag.convergence = rg.conv;
            diag.delta = rg.delta;
            diag.max_err = max_err(ds.judgments, refined);
            diag.verdict = Verdict::Exact;
            rep.used_rank_guess = true;
        } else {
            AdaptiveOptions aopt;
            aopt.theta = opts.theta;
            aopt.eps = opts.eps;
            aopt.theta_prime = opts.theta_prime;
            aopt.max_retries = opts.max_retries;
            aopt.zero_digits = opts.zero_digits;
            aopt.rank_mode = opts.relative_rank ? RankMode::Relative : RankMode::Absolute;
            aopt.mu_hint = opts.mu_hint;
            auto ar = adaptive_refine(f, p, aopt);
            ds = ar.ds;
            refined = ar.refined;
            trace = ar.trace;
            diag = ar.diagnosis;
            rep.used_rank_guess = ar.used_rank_guess;
            for (const auto& at : ar.attempts) {
                AttemptSummary s;
                s.theta = at.theta;
                s.error = at.error;
                if (at.error.empty()) {
                    s.verdict = to_string(at.diagnosis.verdict);
                    s.convergence = to_string(at.diagnosis.convergence);
                    s.delta = at.diagnosis.delta;
                    s.max_err = at.diagnosis.max_err;
                }
                rep.attempts.push_back(s);
            }
        }

        rep.n_alpha = ds.n_alpha();
        rep.final_size = ds.system.size();
        rep.poly_count = ds.poly_count;
        rep.verdict = diag.verdict;
        rep.convergence = diag.convergence;
        rep.delta = diag.delta;
        rep.max_err = diag.max_err;
        rep.refined = refined;
        rep.alpha.assign(ds.point.begin() + ds.n_original, ds.point.end());
        rep.theta_used = ds.theta_used;
        rep.eps_used = ds.eps_used;
        rep.rounds = ds.rounds;
        rep.deflation_log = ds.log;
        for (const auto& m : ds.system.polys)
            rep.output_x_degree =
                std::max(rep.output_x_degree, x_degree_prefix(m, ds.n_original));

        if (opts.verify) {
            auto kv = krawczyk_verify(ds.system, refined);
            if (kv.ok()) {
                rep.verified = true;
                rep.breadth = kv.inclusion->breadth;
                rep.inclusion = kv.inclusion->box;
            } else {
                rep.verify_failure = kv.failure;
            }
        }
    } catch (const std::exception& e) {
        rep.error = e.what();
    }
    rep.time_ms = std::chrono::duration<double, std::milli>(
                      std::chrono::steady_clock::now() - t0)
                      .count();
    return rep;
}

inline RunReport run_case(const BenchmarkCase& c, PipelineOptions opts,
                          bool theta_from_flag = false, bool eps_from_flag = false) {
    if (!theta_from_flag && c.theta_hint) opts.theta = *c.theta_hint;
    if (!eps_from_flag && c.eps_hint) opts.eps = *c.eps_hint;
    if (c.prefer_rank_guess) opts.force_rank_guess = true;
    if (c.multiplicity > 0) opts.mu_hint = c.multiplicity;
    return run_pipeline(c.system, c.approx_zero, opts, c.name);
}

inline nlohmann::json to_json(const RunReport& r) {
    nlohmann::json j;
    j["case"] = r.name;
    j["n_vars"] = r.n_vars;
    j["n_alpha"] = r.n_alpha;
    j["final_size"] = r.final_size;
    j["poly_count"] = r.poly_count;
    j["verdict"] = r.failed() ? "error" : to_string(r.verdict);
    j["convergence"] = to_string(r.convergence);
    j["delta"] = r.delta;
    j["max_err"] = r.max_err;
    j["max_err_display"] = r.max_err_display();
    j["verified"] = r.verified;
    if (r.verified) {
        j["breadth"] = r.breadth;
        nlohmann::json box = nlohmann::json::array();
        for (const auto& iv : r.inclusion) box.push_back({iv.lo, iv.hi});
        j["inclusion"] = box;
    } else {
        j["breadth"] = nullptr;
        j["inclusion"] = nullptr;
        if (!r.verify_failure.empty()) j["verify_failure"] = r.verify_failure;
    }
    j["refined"] = r.refined;
    j["alpha"] = r.alpha;
    j["theta"] = r.theta_used;
    j["eps"] = r.eps_used;
    j["rounds"] = r.rounds;
    j["rank_guess"] = r.used_rank_guess;
    j["time_ms"] = r.time_ms;
    j["exit_code"] = r.exit_code();
    nlohmann::json at = nlohmann::json::array();
    for (const auto& a : r.attempts)
        at.push_back({{"theta", a.theta},
                      {"verdict", a.verdict},
                      {"convergence", a.convergence},
                      {"delta", a.delta},
                      {"max_err", a.max_err},
                      {"error", a.error}});
    j["attempts"] = at;
    if (r.failed()) j["error"] = r.error;
    return j;
}

}  // namespace defl
