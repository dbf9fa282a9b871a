#pragma once

#include <Eigen/Dense>
#include <cmath>
#include <cstddef>
#include <optional>
#include <stdexcept>
#include <vector>

#include "defl/polynomial.hpp"
#include "defl/system.hpp"

namespace defl {

/// Dense row-major real matrix.
struct Matrix {
    std::size_t rows = 0, cols = 0;
    std::vector<double> a;

    Matrix() = default;
    Matrix(std::size_t r, std::size_t c) : rows(r), cols(c), a(r * c, 0.0) {}

    double& operator()(std::size_t r, std::size_t c) { return a[r * cols + c]; }
    double operator()(std::size_t r, std::size_t c) const { return a[r * cols + c]; }

    static Matrix identity(std::size_t n) {
        Matrix m(n, n);
        for (std::size_t i = 0; i < n; ++i) m(i, i) = 1.0;
        return m;
    }
};

namespace detail {

inline Eigen::MatrixXd to_eigen(const Matrix& m) {
    Eigen::MatrixXd e(m.rows, m.cols);
    for (std::size_t r = 0; r < m.rows; ++r)
        for (std::size_t c = 0; c < m.cols; ++c) e(r, c) = m(r, c);
    return e;
}

inline Matrix from_eigen(const Eigen::MatrixXd& e) {
    Matrix m(static_cast<std::size_t>(e.rows()), static_cast<std::size_t>(e.cols()));
    for (Eigen::Index r = 0; r < e.rows(); ++r)
        for (Eigen::Index c = 0; c < e.cols(); ++c)
            m(static_cast<std::size_t>(r), static_cast<std::size_t>(c)) = e(r, c);
    return m;
}

}  // namespace detail

struct SvdResult {
    std::vector<double> sigma;  // descending
    Matrix u, v;                // thin factors, A = U * diag(sigma) * V^T
    bool converged = true;
};

inline SvdResult svd(const Matrix& m) {
    Eigen::JacobiSVD<Eigen::MatrixXd> dec(detail::to_eigen(m),
                                          Eigen::ComputeThinU | Eigen::ComputeThinV);
    SvdResult r;
    r.converged = dec.info() == Eigen::Success;
    if (!r.converged) throw std::runtime_error("svd did not converge");
    r.sigma.assign(dec.singularValues().data(),
                   dec.singularValues().data() + dec.singularValues().size());
    r.u = detail::from_eigen(dec.matrixU());
    r.v = detail::from_eigen(dec.matrixV());
    return r;
}

enum class RankMode { Absolute, Relative };

/// Count of singular values above eps. Absolute thresholding by default;
/// relative mode compares against eps * sigma_1 for badly scaled systems.
inline std::size_t numerical_rank(const Matrix& m, double eps,
                                  RankMode mode = RankMode::Absolute) {
    if (eps <= 0.0) throw std::invalid_argument("eps must be positive");
    if (m.rows == 0 || m.cols == 0) return 0;
    auto s = svd(m).sigma;
    double cut = mode == RankMode::Absolute ? eps : eps * (s.empty() ? 0.0 : s[0]);
    std::size_t r = 0;
    for (double v : s)
        if (v > cut) ++r;
    return r;
}

struct LeastSquaresResult {
    std::vector<double> alpha;
    bool rank_deficient = false;  // minimum-norm solution returned when set
    double residual = 0.0;        // ||stack^T * (alpha;1)||_2
};

/// Solve the combination problem: given a stack of r+1 gradient rows
/// (members h_1..h_r, then h), find alpha minimizing
/// ||alpha_1*row_1 + ... + alpha_r*row_r + row_{r+1}||_2.
inline LeastSquaresResult least_squares_combination(const Matrix& stack) {
    if (stack.rows == 0) throw std::invalid_argument("empty gradient stack");
    const std::size_t r = stack.rows - 1;
    Eigen::MatrixXd e = detail::to_eigen(stack);
    Eigen::MatrixXd at = e.topRows(r).transpose();       // n' x r
    Eigen::VectorXd b = e.row(r).transpose();            // n'
    LeastSquaresResult out;
    if (r == 0) return out;
    Eigen::CompleteOrthogonalDecomposition<Eigen::MatrixXd> cod(at);
    Eigen::VectorXd alpha = cod.solve(-b);
    out.rank_deficient = cod.rank() < static_cast<Eigen::Index>(r);
    out.alpha.assign(alpha.data(), alpha.data() + alpha.size());
    out.residual = (at * alpha + b).norm();
    return out;
}

/// Solve A x = b; empty result when A is singular to working precision.
inline std::optional<std::vector<double>> solve_linear(const Matrix& m,
                                                       const std::vector<double>& b) {
    if (m.rows != m.cols || b.size() != m.rows)
        throw std::invalid_argument("solve_linear expects a square system");
    Eigen::MatrixXd e = detail::to_eigen(m);
    Eigen::FullPivLU<Eigen::MatrixXd> lu(e);
    if (!lu.isInvertible()) return std::nullopt;
    Eigen::VectorXd bv = Eigen::Map<const Eigen::VectorXd>(b.data(), b.size());
    Eigen::VectorXd x = lu.solve(bv);
    return std::vector<double>(x.data(), x.data() + x.size());
}

inline std::optional<Matrix> try_inverse(const Matrix& m) {
    if (m.rows != m.cols) throw std::invalid_argument("inverse expects a square matrix");
    Eigen::FullPivLU<Eigen::MatrixXd> lu(detail::to_eigen(m));
    if (!lu.isInvertible()) return std::nullopt;
    return detail::from_eigen(lu.inverse());
}

/// Jacobian of a polynomial list evaluated at a point; one row per polynomial.
inline Matrix jacobian_at(const std::vector<Polynomial>& polys, const Point& p) {
    const std::size_t n = p.size();
    Matrix j(polys.size(), n);
    for (std::size_t r = 0; r < polys.size(); ++r)
        for (std::size_t c = 0; c < n; ++c) j(r, c) = evaluate(partial(polys[r], c), p);
    return j;
}

inline Matrix jacobian_at(const PolySystem& s, const Point& p) {
    return jacobian_at(s.polys, p);
}

inline std::vector<double> gradient_at(const Polynomial& f, const Point& p) {
    std::vector<double> g(p.size());
    for (std::size_t i = 0; i < p.size(); ++i) g[i] = evaluate(partial(f, i), p);
    return g;
}

inline double norm2(std::span<const double> v) {
    double s = 0.0;
    for (double x : v) s += x * x;
    return std::sqrt(s);
}

inline double norm_inf(std::span<const double> v) {
    double s = 0.0;
    for (double x : v) s = std::max(s, std::abs(x));
    return s;
}

}  // namespace defl
