#pragma once

#include <cctype>
#include <cstddef>
#include <map>
#include <sstream>
#include <stdexcept>
#include <string>
#include <vector>

#include "defl/polynomial.hpp"
#include "defl/system.hpp"

namespace defl {

class ParseError : public std::runtime_error {
public:
    ParseError(std::size_t line, std::size_t col, const std::string& msg)
        : std::runtime_error("line " + std::to_string(line) + ", col " + std::to_string(col) +
                             ": " + msg),
          line(line), col(col) {}
    std::size_t line, col;
};

namespace parse_detail {

struct RawTerm {
    double coeff = 1.0;
    bool coeff_inexact = false;  // rational that does not round-trip
    std::vector<std::pair<std::string, unsigned>> factors;
};

struct RawPoly {
    std::vector<std::pair<int, RawTerm>> terms;  // sign, term
    std::size_t line = 0;
};

class LineScanner {
public:
    LineScanner(const std::string& text, std::size_t line_no)
        : s_(text), line_(line_no), pos_(0) {}

    void skip_ws() {
        while (pos_ < s_.size() && (s_[pos_] == ' ' || s_[pos_] == '\t')) ++pos_;
    }
    bool eof() {
        skip_ws();
        return pos_ >= s_.size();
    }
    char peek() {
        skip_ws();
        return pos_ < s_.size() ? s_[pos_] : '\0';
    }
    char get() {
        skip_ws();
        return s_[pos_++];
    }
    std::size_t col() const { return pos_ + 1; }
    [[noreturn]] void fail(const std::string& msg) { throw ParseError(line_, col(), msg); }

    std::string ident() {
        skip_ws();
        if (pos_ >= s_.size() || !std::isalpha(static_cast<unsigned char>(s_[pos_])))
            fail("expected a variable name");
        std::size_t start = pos_;
        while (pos_ < s_.size() && (std::isalnum(static_cast<unsigned char>(s_[pos_])) ||
                                    s_[pos_] == '_'))
            ++pos_;
        return s_.substr(start, pos_ - start);
    }

    unsigned natural() {
        skip_ws();
        if (pos_ >= s_.size() || !std::isdigit(static_cast<unsigned char>(s_[pos_])))
            fail("expected an exponent");
        unsigned v = 0;
        while (pos_ < s_.size() && std::isdigit(static_cast<unsigned char>(s_[pos_])))
            v = v * 10 + unsigned(s_[pos_++] - '0');
        return v;
    }

    // decimal | integer '/' integer
    std::pair<double, bool> coefficient() {
        skip_ws();
        std::size_t start = pos_;
        while (pos_ < s_.size() && std::isdigit(static_cast<unsigned char>(s_[pos_]))) ++pos_;
        if (pos_ < s_.size() && s_[pos_] == '/') {
            long long num = std::stoll(s_.substr(start, pos_ - start));
            ++pos_;
            std::size_t dstart = pos_;
            while (pos_ < s_.size() && std::isdigit(static_cast<unsigned char>(s_[pos_]))) ++pos_;
            if (dstart == pos_) fail("expected a denominator");
            long long den = std::stoll(s_.substr(dstart, pos_ - dstart));
            if (den == 0) fail("zero denominator");
            double v = double(num) / double(den);
            bool inexact = v * double(den) != double(num);
            return {v, inexact};
        }
        if (pos_ < s_.size() && s_[pos_] == '.') {
            ++pos_;
            while (pos_ < s_.size() && std::isdigit(static_cast<unsigned char>(s_[pos_]))) ++pos_;
        }
        if (pos_ < s_.size() && (s_[pos_] == 'e' || s_[pos_] == 'E')) {
            std::size_t save = pos_;
            ++pos_;
            if (pos_ < s_.size() && (s_[pos_] == '+' || s_[pos_] == '-')) ++pos_;
            if (pos_ < s_.size() && std::isdigit(static_cast<unsigned char>(s_[pos_]))) {
                while (pos_ < s_.size() && std::isdigit(static_cast<unsigned char>(s_[pos_])))
                    ++pos_;
            } else {
                pos_ = save;  // the 'e' belongs to an identifier context, not here
            }
        }
        if (pos_ == start) fail("expected a number");
        return {std::stod(s_.substr(start, pos_ - start)), false};
    }

private:
    const std::string& s_;
    std::size_t line_;
    std::size_t pos_;
};

inline RawTerm parse_term(LineScanner& sc) {
    RawTerm t;
    char c = sc.peek();
    bool saw_coeff = false;
    if (std::isdigit(static_cast<unsigned char>(c)) || c == '.') {
        auto [v, inexact] = sc.coefficient();
        t.coeff = v;
        t.coeff_inexact = inexact;
        saw_coeff = true;
        if (sc.peek() != '*') return t;  // bare constant
        sc.get();
    } else if (!std::isalpha(static_cast<unsigned char>(c))) {
        sc.fail("expected a term");
    }
    (void)saw_coeff;
    while (true) {
        std::string v = sc.ident();
        unsigned e = 1;
        if (sc.peek() == '^') {
            sc.get();
            e = sc.natural();
        }
        t.factors.emplace_back(v, e);
        if (sc.peek() == '*') {
            sc.get();
            continue;
        }
        break;
    }
    return t;
}

inline RawPoly parse_poly_line(const std::string& text, std::size_t line_no) {
    LineScanner sc(text, line_no);
    RawPoly p;
    p.line = line_no;
    int sign = 1;
    if (sc.peek() == '-') {
        sc.get();
        sign = -1;
    }
    p.terms.emplace_back(sign, parse_term(sc));
    while (!sc.eof()) {
        char c = sc.get();
        if (c == '+') sign = 1;
        else if (c == '-') sign = -1;
        else throw ParseError(line_no, sc.col(), std::string("unexpected character '") + c + "'");
        p.terms.emplace_back(sign, parse_term(sc));
    }
    return p;
}

}  // namespace parse_detail

/// Parse the line-oriented system format: one polynomial per line, '#'
/// comment lines, and an optional "vars:" header fixing the variable order
/// (otherwise variables are ordered by first appearance). Rational
/// coefficients are converted to the nearest double with a warning.
inline PolySystem parse_system(const std::string& text,
                               std::vector<std::string>* warnings = nullptr) {
    std::vector<std::string> vars;
    bool have_header = false;
    std::vector<parse_detail::RawPoly> raws;

    std::istringstream in(text);
    std::string line;
    std::size_t line_no = 0;
    while (std::getline(in, line)) {
        ++line_no;
        std::size_t first = line.find_first_not_of(" \t\r");
        if (first == std::string::npos) continue;
        if (line[first] == '#') continue;
        if (line.compare(first, 5, "vars:") == 0) {
            if (have_header) throw ParseError(line_no, first + 1, "duplicate vars header");
            if (!raws.empty())
                throw ParseError(line_no, first + 1, "vars header must precede polynomials");
            have_header = true;
            std::istringstream hs(line.substr(first + 5));
            std::string name;
            while (hs >> name) {
                while (!name.empty() && name.back() == ',') name.pop_back();
                if (name.empty()) continue;
                if (std::find(vars.begin(), vars.end(), name) != vars.end())
                    throw ParseError(line_no, first + 1, "duplicate variable '" + name + "'");
                vars.push_back(name);
            }
            if (vars.empty()) throw ParseError(line_no, first + 1, "empty vars header");
            continue;
        }
        std::string body = line;
        if (!body.empty() && body.back() == '\r') body.pop_back();
        raws.push_back(parse_detail::parse_poly_line(body, line_no));
    }
    if (raws.empty()) throw ParseError(line_no, 1, "no polynomials in input");

    auto var_index = [&](const std::string& name, std::size_t ln) -> std::size_t {
        auto it = std::find(vars.begin(), vars.end(), name);
        if (it != vars.end()) return std::size_t(it - vars.begin());
        if (have_header)
            throw ParseError(ln, 1, "variable '" + name + "' not in vars header");
        vars.push_back(name);
        return vars.size() - 1;
    };
    // first pass assigns indices by appearance order
    for (const auto& rp : raws)
        for (const auto& [sign, term] : rp.terms)
            for (const auto& [name, e] : term.factors) var_index(name, rp.line);

    std::vector<Polynomial> polys;
    for (const auto& rp : raws) {
        Polynomial f(vars.size());
        for (const auto& [sign, term] : rp.terms) {
            if (term.coeff_inexact && warnings)
                warnings->push_back("line " + std::to_string(rp.line) +
                                    ": rational coefficient rounded to nearest double");
            Monomial m(vars.size());
            for (const auto& [name, e] : term.factors)
                m.exp[var_index(name, rp.line)] += e;
            f.add_term(m, double(sign) * term.coeff);
        }
        if (f.is_zero())
            throw ParseError(rp.line, 1, "identically zero equation");
        polys.push_back(std::move(f));
    }
    return PolySystem(vars, polys);
}

/// Parse "v1,v2,..." (commas or whitespace) into a point.
inline Point parse_point(const std::string& text) {
    Point p;
    std::string norm = text;
    for (char& c : norm)
        if (c == ',') c = ' ';
    std::istringstream in(norm);
    double v;
    while (in >> v) p.push_back(v);
    if (p.empty()) throw std::invalid_argument("empty point");
    return p;
}

}  // namespace defl
