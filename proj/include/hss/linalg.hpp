#pragma once

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <utility>
#include <vector>

#include "hss/errors.hpp"

namespace hss {

using Vec = std::vector<double>;

inline double dot(const Vec& a, const Vec& b) {
    double s = 0.0;
    for (std::size_t i = 0; i < a.size(); ++i) s += a[i] * b[i];
    return s;
}

inline double norm2(const Vec& a) { return std::sqrt(dot(a, a)); }

inline void axpy(double c, const Vec& x, Vec& y) {
    for (std::size_t i = 0; i < x.size(); ++i) y[i] += c * x[i];
}

// Small dense row-major matrix. Enough for desk-scale projectors and solvers.
struct Matrix {
    std::size_t rows = 0, cols = 0;
    Vec data;

    Matrix() = default;
    Matrix(std::size_t r, std::size_t c, double fill = 0.0) : rows(r), cols(c), data(r * c, fill) {}

    double& operator()(std::size_t i, std::size_t j) { return data[i * cols + j]; }
    double operator()(std::size_t i, std::size_t j) const { return data[i * cols + j]; }

    static Matrix identity(std::size_t n) {
        Matrix m(n, n);
        for (std::size_t i = 0; i < n; ++i) m(i, i) = 1.0;
        return m;
    }

    Vec apply(const Vec& x) const {
        Vec y(rows, 0.0);
        for (std::size_t i = 0; i < rows; ++i) {
            double s = 0.0;
            for (std::size_t j = 0; j < cols; ++j) s += data[i * cols + j] * x[j];
            y[i] = s;
        }
        return y;
    }
};

inline Matrix operator-(const Matrix& a, const Matrix& b) {
    Matrix c(a.rows, a.cols);
    for (std::size_t i = 0; i < a.data.size(); ++i) c.data[i] = a.data[i] - b.data[i];
    return c;
}

inline double frobenius_norm(const Matrix& a) {
    double s = 0.0;
    for (double v : a.data) s += v * v;
    return std::sqrt(s);
}

struct SymEigen {
    Vec values;      // descending
    Matrix vectors;  // column j pairs with values[j]
};

// Cyclic Jacobi for symmetric matrices. Deterministic sweep order; iterates
// until the off-diagonal mass falls below tol.
inline SymEigen jacobi_eigen(Matrix a, double tol = 1e-10, int max_sweeps = 128) {
    const std::size_t n = a.rows;
    if (n == 0 || a.cols != n) throw validation_error("jacobi_eigen: matrix must be square and nonempty");
    Matrix v = Matrix::identity(n);

    auto off_norm = [&]() {
        double s = 0.0;
        for (std::size_t i = 0; i < n; ++i)
            for (std::size_t j = i + 1; j < n; ++j) s += a(i, j) * a(i, j);
        return std::sqrt(2.0 * s);
    };

    for (int sweep = 0; sweep < max_sweeps && off_norm() > tol; ++sweep) {
        for (std::size_t p = 0; p + 1 < n; ++p) {
            for (std::size_t q = p + 1; q < n; ++q) {
                const double apq = a(p, q);
                if (std::fabs(apq) <= tol * 1e-4) continue;
                const double theta = (a(q, q) - a(p, p)) / (2.0 * apq);
                const double t = (theta >= 0 ? 1.0 : -1.0) / (std::fabs(theta) + std::sqrt(theta * theta + 1.0));
                const double c = 1.0 / std::sqrt(t * t + 1.0);
                const double s = t * c;
                for (std::size_t k = 0; k < n; ++k) {
                    const double akp = a(k, p), akq = a(k, q);
                    a(k, p) = c * akp - s * akq;
                    a(k, q) = s * akp + c * akq;
                }
                for (std::size_t k = 0; k < n; ++k) {
                    const double apk = a(p, k), aqk = a(q, k);
                    a(p, k) = c * apk - s * aqk;
                    a(q, k) = s * apk + c * aqk;
                }
                for (std::size_t k = 0; k < n; ++k) {
                    const double vkp = v(k, p), vkq = v(k, q);
                    v(k, p) = c * vkp - s * vkq;
                    v(k, q) = s * vkp + c * vkq;
                }
            }
        }
    }

    SymEigen e;
    e.values.resize(n);
    for (std::size_t i = 0; i < n; ++i) e.values[i] = a(i, i);
    // Sort eigenpairs by value, descending; stable order on ties.
    std::vector<std::size_t> idx(n);
    for (std::size_t i = 0; i < n; ++i) idx[i] = i;
    for (std::size_t i = 0; i < n; ++i)
        for (std::size_t j = i + 1; j < n; ++j)
            if (e.values[idx[j]] > e.values[idx[i]]) std::swap(idx[i], idx[j]);
    SymEigen out;
    out.values.resize(n);
    out.vectors = Matrix(n, n);
    for (std::size_t j = 0; j < n; ++j) {
        out.values[j] = e.values[idx[j]];
        for (std::size_t i = 0; i < n; ++i) out.vectors(i, j) = v(i, idx[j]);
    }
    return out;
}

// Spectral norm of a symmetric matrix (largest |eigenvalue|).
inline double sym_spectral_norm(const Matrix& a, double tol = 1e-10) {
    SymEigen e = jacobi_eigen(a, tol);
    double m = 0.0;
    for (double v : e.values) m = std::max(m, std::fabs(v));
    return m;
}

// Solve (A + ridge*I) x = b for symmetric positive definite A, via Cholesky.
inline Vec cholesky_solve(Matrix a, Vec b, double ridge = 0.0) {
    const std::size_t n = a.rows;
    if (a.cols != n || b.size() != n) throw validation_error("cholesky_solve: dimension mismatch");
    for (std::size_t i = 0; i < n; ++i) a(i, i) += ridge;
    // In-place LL^T.
    for (std::size_t j = 0; j < n; ++j) {
        double d = a(j, j);
        for (std::size_t k = 0; k < j; ++k) d -= a(j, k) * a(j, k);
        if (d <= 0.0) throw validation_error("cholesky_solve: matrix not positive definite");
        a(j, j) = std::sqrt(d);
        for (std::size_t i = j + 1; i < n; ++i) {
            double s = a(i, j);
            for (std::size_t k = 0; k < j; ++k) s -= a(i, k) * a(j, k);
            a(i, j) = s / a(j, j);
        }
    }
    for (std::size_t i = 0; i < n; ++i) {
        double s = b[i];
        for (std::size_t k = 0; k < i; ++k) s -= a(i, k) * b[k];
        b[i] = s / a(i, i);
    }
    for (std::size_t ii = n; ii-- > 0;) {
        double s = b[ii];
        for (std::size_t k = ii + 1; k < n; ++k) s -= a(k, ii) * b[k];
        b[ii] = s / a(ii, ii);
    }
    return b;
}

}  // namespace hss
