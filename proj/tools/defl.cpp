// Command-line front end: deflate + refine + certify isolated singular zeros
// of square polynomial systems, and reproduce the built-in benchmark table.

#include <cstdio>
#include <fstream>
#include <iostream>
#include <sstream>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "defl/pipeline.hpp"

namespace {

std::string read_file(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw std::runtime_error("cannot open '" + path + "'");
    std::ostringstream ss;
    ss << in.rdbuf();
    return ss.str();
}

struct CommonFlags {
    std::string theta = "0.005";
    double eps = 0.005;
    double theta_prime = 1e-12;
    unsigned zero_digits = 4;
    unsigned max_retries = 3;
    bool no_verify = false;
    bool rank_guess = false;
    bool relative_rank = false;
    bool json = false;
    std::uint64_t seed = 1;
    bool theta_set = false, eps_set = false;
};

void add_common(CLI::App* cmd, CommonFlags& fl) {
    cmd->add_option("--theta", fl.theta,
                    "regularity tolerance, or 'auto' for the fluctuation heuristic")
        ->default_str("0.005");
    cmd->add_option("--eps", fl.eps, "numerical-rank tolerance")->default_str("0.005");
    cmd->add_option("--theta-prime", fl.theta_prime, "exactness threshold on the residual");
    cmd->add_option("--zero-digits", fl.zero_digits,
                    "significant digits of the approximate zero (feeds theta=auto)");
    cmd->add_option("--max-retries", fl.max_retries, "adaptive theta retries");
    cmd->add_flag("--no-verify", fl.no_verify, "skip the verified inclusion step");
    cmd->add_flag("--rank-guess", fl.rank_guess, "force the rank-guess fallback pipeline");
    cmd->add_flag("--relative-rank", fl.relative_rank,
                  "threshold singular values relative to the largest one");
    cmd->add_flag("--json", fl.json, "emit a JSON report");
    cmd->add_option("--seed", fl.seed, "seed for generated systems");
}

defl::PipelineOptions to_options(const CommonFlags& fl) {
    defl::PipelineOptions o;
    if (fl.theta != "auto") o.theta = std::stod(fl.theta);
    o.eps = fl.eps;
    o.theta_prime = fl.theta_prime;
    o.zero_digits = fl.zero_digits;
    o.max_retries = fl.max_retries;
    o.verify = !fl.no_verify;
    o.force_rank_guess = fl.rank_guess;
    o.relative_rank = fl.relative_rank;
    return o;
}

void print_report(const defl::RunReport& r, const defl::PolySystem* printed) {
    if (r.failed()) {
        std::cout << "error: " << r.error << "\n";
        return;
    }
    if (printed) {
        std::cout << "final square system (" << r.final_size << " equations, " << r.n_alpha
                  << " new variables):\n"
                  << defl::to_string(*printed);
    }
    std::cout << "verdict:      " << defl::to_string(r.verdict)
              << (r.used_rank_guess ? " (rank-guess path)" : "") << "\n"
              << "convergence:  " << defl::to_string(r.convergence) << "\n"
              << "delta:        " << defl::format_double(r.delta) << "\n"
              << "max err:      " << r.max_err_display() << "\n"
              << "poly count:   " << r.poly_count << "\n";
    std::cout << "refined zero:";
    for (double v : r.refined) std::cout << " " << defl::format_double(v);
    std::cout << "\n";
    if (r.verified) {
        std::cout << "verified inclusion (breadth " << defl::format_breadth(r.breadth)
                  << "):\n";
        for (const auto& iv : r.inclusion)
            std::cout << "  " << defl::format_interval(iv) << "\n";
    } else if (r.verify_requested) {
        std::cout << "unverified: " << r.verify_failure << "\n";
    }
    std::printf("time: %.1f ms\n", r.time_ms);
}

int cmd_deflate(const std::string& system_file, const std::string& point_arg,
                const std::string& point_file, const CommonFlags& fl) {
    std::vector<std::string> warnings;
    defl::PolySystem sys = defl::parse_system(read_file(system_file), &warnings);
    for (const auto& w : warnings) std::cerr << "warning: " << w << "\n";
    std::string ptext = point_arg;
    if (!point_file.empty()) ptext = read_file(point_file);
    if (ptext.empty()) throw std::runtime_error("supply --point or --point-file");
    defl::Point p = defl::parse_point(ptext);
    if (p.size() != sys.nvars())
        throw std::runtime_error("point has " + std::to_string(p.size()) +
                                 " coordinates, system has " + std::to_string(sys.nvars()) +
                                 " variables");

    auto rep = defl::run_pipeline(sys, p, to_options(fl), system_file);
    if (fl.json) {
        std::cout << defl::to_json(rep).dump(2) << "\n";
    } else {
        if (!rep.failed() && rep.rounds == 0 && rep.n_alpha == 0 &&
            rep.final_size == sys.size() && rep.verdict == defl::Verdict::Exact &&
            rep.poly_count == sys.size())
            std::cout << "no deflation needed\n";
        defl::PolySystem dummy = sys;
        print_report(rep, nullptr);
    }
    return rep.exit_code();
}

std::vector<defl::BenchmarkCase> resolve_cases(const std::vector<std::string>& selectors,
                                               std::uint64_t seed) {
    std::vector<defl::BenchmarkCase> cases;
    if (selectors.empty()) {
        for (const auto& n : defl::list_cases()) cases.push_back(defl::load_case(n));
        return cases;
    }
    for (const auto& sel : selectors) {
        if (sel == "all") {
            for (const auto& n : defl::list_cases()) cases.push_back(defl::load_case(n));
        } else if (sel.rfind("breadth:", 0) == 0) {
            cases.push_back(defl::generate_breadth_system(std::stoul(sel.substr(8))));
        } else if (sel.rfind("power:", 0) == 0) {
            // power:<n>:<d1,d2,...>[:seed]
            std::vector<std::string> parts;
            std::stringstream ss(sel);
            std::string item;
            while (std::getline(ss, item, ':')) parts.push_back(item);
            if (parts.size() < 3) throw std::runtime_error("power:<n>:<d1,..>[:seed]");
            std::size_t n = std::stoul(parts[1]);
            std::vector<unsigned> degs;
            std::stringstream ds(parts[2]);
            while (std::getline(ds, item, ',')) degs.push_back(unsigned(std::stoul(item)));
            std::uint64_t s = parts.size() > 3 ? std::stoull(parts[3]) : seed;
            cases.push_back(defl::generate_random_power_system(
                n, degs, std::vector<unsigned>(n, 0), s));
        } else {
            cases.push_back(defl::load_case(sel));
        }
    }
    return cases;
}

int cmd_bench(const std::vector<std::string>& selectors, bool list_only,
              const CommonFlags& fl) {
    if (list_only) {
        for (const auto& n : defl::list_cases()) std::cout << n << "\n";
        return 0;
    }
    auto cases = resolve_cases(selectors, fl.seed);
    nlohmann::json rows = nlohmann::json::array();
    std::printf("%-12s %5s %8s %14s %14s %10s %11s %5s\n", "System", "var", "mul",
                "Verified acc", "Max err", "time(ms)", "Final size", "Poly");
    for (const auto& c : cases) {
        auto rep = defl::run_case(c, to_options(fl), fl.theta_set, fl.eps_set);
        std::string acc = rep.failed() ? "-"
                          : rep.verified ? defl::format_breadth(rep.breadth)
                                         : "unverified";
        std::string mul = c.multiplicity ? (c.mult_is_lower_bound ? ">=" : "") +
                                               std::to_string(c.multiplicity)
                                         : "?";
        std::string err = rep.failed() ? ("error: " + rep.error) : rep.max_err_display();
        std::printf("%-12s %5zu %8s %14s %14s %10.1f %11zu %5zu\n", c.name.c_str(),
                    c.system.nvars(), mul.c_str(), acc.c_str(), err.c_str(), rep.time_ms,
                    rep.final_size, rep.poly_count);
        if (fl.json) rows.push_back(defl::to_json(rep));
    }
    if (fl.json) std::cout << rows.dump(2) << "\n";
    return 0;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"deflate, refine, and certify isolated singular zeros of polynomial systems"};
    app.require_subcommand(1);

    CommonFlags dfl, bfl;
    std::string system_file, point_arg, point_file;
    std::vector<std::string> selectors;
    bool list_only = false;

    auto* dc = app.add_subcommand("deflate", "run the full pipeline on one system");
    dc->add_option("system", system_file, "system file (one polynomial per line)")
        ->required();
    dc->add_option("--point", point_arg, "approximate zero: \"v1,v2,...\"");
    dc->add_option("--point-file", point_file, "one-line file with the approximate zero");
    add_common(dc, dfl);

    auto* bc = app.add_subcommand("bench", "run benchmark cases and print the result table");
    bc->add_option("cases", selectors,
                   "case names, 'all', 'breadth:<n>', or 'power:<n>:<d1,..>[:seed]'");
    bc->add_flag("--list", list_only, "list built-in case names");
    add_common(bc, bfl);

    try {
        app.parse(argc, argv);
        if (dc->parsed()) {
            dfl.theta_set = dc->count("--theta") > 0;
            dfl.eps_set = dc->count("--eps") > 0;
            return cmd_deflate(system_file, point_arg, point_file, dfl);
        }
        bfl.theta_set = bc->count("--theta") > 0;
        bfl.eps_set = bc->count("--eps") > 0;
        return cmd_bench(selectors, list_only, bfl);
    } catch (const CLI::ParseError& e) {
        return app.exit(e);
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 1;
    }
}
