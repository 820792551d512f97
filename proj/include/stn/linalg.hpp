#pragma once

#include <algorithm>
#include <cmath>
#include <numeric>
#include <stdexcept>
#include <vector>

namespace stn::la {

/// Row-major dense matrix, sized for desk-scale oracle work.
struct Mat {
    std::size_t rows = 0, cols = 0;
    std::vector<double> a;

    Mat() = default;
    Mat(std::size_t r, std::size_t c, double fill = 0.0) : rows(r), cols(c), a(r * c, fill) {}

    double& operator()(std::size_t i, std::size_t j) { return a[i * cols + j]; }
    double operator()(std::size_t i, std::size_t j) const { return a[i * cols + j]; }

    static Mat identity(std::size_t n) {
        Mat m(n, n);
        for (std::size_t i = 0; i < n; ++i) m(i, i) = 1.0;
        return m;
    }
};

using Vec = std::vector<double>;

inline Mat transpose(const Mat& m) {
    Mat out(m.cols, m.rows);
    for (std::size_t i = 0; i < m.rows; ++i)
        for (std::size_t j = 0; j < m.cols; ++j) out(j, i) = m(i, j);
    return out;
}

inline Mat matmul(const Mat& x, const Mat& y) {
    if (x.cols != y.rows) throw std::invalid_argument("matmul dimension mismatch");
    Mat out(x.rows, y.cols);
    for (std::size_t i = 0; i < x.rows; ++i)
        for (std::size_t k = 0; k < x.cols; ++k) {
            double v = x(i, k);
            if (v == 0.0) continue;
            for (std::size_t j = 0; j < y.cols; ++j) out(i, j) += v * y(k, j);
        }
    return out;
}

inline Vec matvec(const Mat& m, const Vec& v) {
    if (m.cols != v.size()) throw std::invalid_argument("matvec dimension mismatch");
    Vec out(m.rows, 0.0);
    for (std::size_t i = 0; i < m.rows; ++i)
        for (std::size_t j = 0; j < m.cols; ++j) out[i] += m(i, j) * v[j];
    return out;
}

inline double dot(const Vec& a, const Vec& b) {
    return std::inner_product(a.begin(), a.end(), b.begin(), 0.0);
}

inline Vec add(const Vec& a, const Vec& b) {
    Vec out(a.size());
    for (std::size_t i = 0; i < a.size(); ++i) out[i] = a[i] + b[i];
    return out;
}

inline Vec scale(const Vec& a, double s) {
    Vec out(a.size());
    for (std::size_t i = 0; i < a.size(); ++i) out[i] = a[i] * s;
    return out;
}

/// Lower-triangular Cholesky factor of a symmetric positive definite matrix;
/// throws if a non-positive pivot appears.
inline Mat cholesky(const Mat& c) {
    if (c.rows != c.cols) throw std::invalid_argument("cholesky requires a square matrix");
    std::size_t n = c.rows;
    Mat l(n, n);
    for (std::size_t i = 0; i < n; ++i) {
        for (std::size_t j = 0; j <= i; ++j) {
            double s = c(i, j);
            for (std::size_t k = 0; k < j; ++k) s -= l(i, k) * l(j, k);
            if (i == j) {
                if (s <= 0.0) throw std::invalid_argument("matrix is not positive definite");
                l(i, i) = std::sqrt(s);
            } else {
                l(i, j) = s / l(j, j);
            }
        }
    }
    return l;
}

inline Vec chol_solve(const Mat& l, const Vec& rhs) {
    std::size_t n = l.rows;
    Vec y(n), x(n);
    for (std::size_t i = 0; i < n; ++i) {
        double s = rhs[i];
        for (std::size_t k = 0; k < i; ++k) s -= l(i, k) * y[k];
        y[i] = s / l(i, i);
    }
    for (std::size_t i = n; i-- > 0;) {
        double s = y[i];
        for (std::size_t k = i + 1; k < n; ++k) s -= l(k, i) * x[k];
        x[i] = s / l(i, i);
    }
    return x;
}

/// Solves C X = B columnwise for SPD C.
inline Mat chol_solve_mat(const Mat& l, const Mat& b) {
    Mat out(b.rows, b.cols);
    Vec col(b.rows);
    for (std::size_t j = 0; j < b.cols; ++j) {
        for (std::size_t i = 0; i < b.rows; ++i) col[i] = b(i, j);
        Vec x = chol_solve(l, col);
        for (std::size_t i = 0; i < b.rows; ++i) out(i, j) = x[i];
    }
    return out;
}

struct SvdResult {
    Mat u;       // N x D, orthonormal columns
    Vec d;       // singular values, descending
    Mat v;       // D x D, orthonormal columns
};

/// Thin SVD by one-sided Jacobi rotations; accurate and dependency-free at
/// desk scale (D <= 16).
inline SvdResult svd(const Mat& x, std::size_t max_sweeps = 100, double tol = 1e-14) {
    if (x.rows < x.cols) throw std::invalid_argument("svd expects N >= D");
    std::size_t n = x.rows, d = x.cols;
    Mat a = x;
    Mat v = Mat::identity(d);
    bool converged = false;
    for (std::size_t sweep = 0; sweep < max_sweeps && !converged; ++sweep) {
        converged = true;
        for (std::size_t p = 0; p + 1 < d; ++p)
            for (std::size_t q = p + 1; q < d; ++q) {
                double app = 0, aqq = 0, apq = 0;
                for (std::size_t i = 0; i < n; ++i) {
                    app += a(i, p) * a(i, p);
                    aqq += a(i, q) * a(i, q);
                    apq += a(i, p) * a(i, q);
                }
                if (std::abs(apq) <= tol * std::sqrt(app * aqq)) continue;
                converged = false;
                double zeta = (aqq - app) / (2.0 * apq);
                double t = (zeta >= 0 ? 1.0 : -1.0) / (std::abs(zeta) + std::sqrt(1.0 + zeta * zeta));
                double cth = 1.0 / std::sqrt(1.0 + t * t);
                double sth = cth * t;
                for (std::size_t i = 0; i < n; ++i) {
                    double ap = a(i, p), aq = a(i, q);
                    a(i, p) = cth * ap - sth * aq;
                    a(i, q) = sth * ap + cth * aq;
                }
                for (std::size_t i = 0; i < d; ++i) {
                    double vp = v(i, p), vq = v(i, q);
                    v(i, p) = cth * vp - sth * vq;
                    v(i, q) = sth * vp + cth * vq;
                }
            }
    }
    if (!converged) throw std::runtime_error("svd did not converge");

    SvdResult r;
    r.d.resize(d);
    std::vector<std::size_t> order(d);
    for (std::size_t j = 0; j < d; ++j) {
        double s = 0;
        for (std::size_t i = 0; i < n; ++i) s += a(i, j) * a(i, j);
        r.d[j] = std::sqrt(s);
        order[j] = j;
    }
    std::sort(order.begin(), order.end(), [&](std::size_t i, std::size_t j) { return r.d[i] > r.d[j]; });
    Vec sorted(d);
    r.u = Mat(n, d);
    r.v = Mat(d, d);
    for (std::size_t j = 0; j < d; ++j) {
        std::size_t src = order[j];
        sorted[j] = r.d[src];
        double inv = r.d[src] > 0 ? 1.0 / r.d[src] : 0.0;
        for (std::size_t i = 0; i < n; ++i) r.u(i, j) = a(i, src) * inv;
        for (std::size_t i = 0; i < d; ++i) r.v(i, j) = v(i, src);
    }
    r.d = std::move(sorted);
    return r;
}

}  // namespace stn::la
