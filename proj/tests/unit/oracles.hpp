#pragma once

// Test-only reference computations, written independently of the library.

#include <algorithm>
#include <cmath>
#include <functional>
#include <vector>

namespace oracle {

using Mat = std::vector<std::vector<double>>;

inline Mat zeros(std::size_t r, std::size_t c) { return Mat(r, std::vector<double>(c, 0.0)); }

inline Mat matmul(const Mat& a, const Mat& b) {
    Mat out = zeros(a.size(), b[0].size());
    for (std::size_t i = 0; i < a.size(); ++i)
        for (std::size_t k = 0; k < b.size(); ++k)
            for (std::size_t j = 0; j < b[0].size(); ++j) out[i][j] += a[i][k] * b[k][j];
    return out;
}

/// Cyclic Jacobi eigenvalue iteration for a symmetric matrix; returns
/// eigenvalues sorted descending.
inline std::vector<double> jacobi_eigenvalues(Mat a) {
    const std::size_t n = a.size();
    for (int sweep = 0; sweep < 100; ++sweep) {
        double off = 0.0;
        for (std::size_t p = 0; p < n; ++p)
            for (std::size_t q = p + 1; q < n; ++q) off += a[p][q] * a[p][q];
        if (off < 1e-30) break;
        for (std::size_t p = 0; p < n; ++p) {
            for (std::size_t q = p + 1; q < n; ++q) {
                if (std::abs(a[p][q]) < 1e-300) continue;
                const double theta = (a[q][q] - a[p][p]) / (2.0 * a[p][q]);
                const double t = (theta >= 0 ? 1.0 : -1.0) / (std::abs(theta) + std::sqrt(theta * theta + 1.0));
                const double c = 1.0 / std::sqrt(t * t + 1.0), s = t * c;
                for (std::size_t k = 0; k < n; ++k) {
                    const double akp = a[k][p], akq = a[k][q];
                    a[k][p] = c * akp - s * akq;
                    a[k][q] = s * akp + c * akq;
                }
                for (std::size_t k = 0; k < n; ++k) {
                    const double apk = a[p][k], aqk = a[q][k];
                    a[p][k] = c * apk - s * aqk;
                    a[q][k] = s * apk + c * aqk;
                }
            }
        }
    }
    std::vector<double> ev(n);
    for (std::size_t i = 0; i < n; ++i) ev[i] = a[i][i];
    std::sort(ev.rbegin(), ev.rend());
    return ev;
}

/// Sample covariance (or second moment when !center) of the rows of x.
inline Mat covariance(const Mat& x, bool center) {
    const std::size_t n = x.size(), m = x[0].size();
    std::vector<double> mean(m, 0.0);
    if (center)
        for (const auto& row : x)
            for (std::size_t j = 0; j < m; ++j) mean[j] += row[j] / static_cast<double>(n);
    Mat c = zeros(m, m);
    for (const auto& row : x)
        for (std::size_t i = 0; i < m; ++i)
            for (std::size_t j = 0; j < m; ++j) c[i][j] += (row[i] - mean[i]) * (row[j] - mean[j]);
    const double denom = n > 1 ? static_cast<double>(n - 1) : 1.0;
    for (auto& row : c)
        for (auto& v : row) v /= denom;
    return c;
}

/// Solves (I - beta A) X = I - (I - beta A) by Gauss-Jordan elimination,
/// i.e. returns (I - beta A)^-1 - I.
inline Mat katz_gauss_jordan(const Mat& a, double beta) {
    const std::size_t n = a.size();
    Mat m = zeros(n, 2 * n);
    for (std::size_t i = 0; i < n; ++i) {
        for (std::size_t j = 0; j < n; ++j) m[i][j] = (i == j ? 1.0 : 0.0) - beta * a[i][j];
        m[i][n + i] = 1.0;
    }
    for (std::size_t col = 0; col < n; ++col) {
        std::size_t piv = col;
        for (std::size_t r = col + 1; r < n; ++r)
            if (std::abs(m[r][col]) > std::abs(m[piv][col])) piv = r;
        std::swap(m[col], m[piv]);
        const double d = m[col][col];
        for (auto& v : m[col]) v /= d;
        for (std::size_t r = 0; r < n; ++r) {
            if (r == col) continue;
            const double f = m[r][col];
            for (std::size_t j = 0; j < 2 * n; ++j) m[r][j] -= f * m[col][j];
        }
    }
    Mat out = zeros(n, n);
    for (std::size_t i = 0; i < n; ++i)
        for (std::size_t j = 0; j < n; ++j) out[i][j] = m[i][n + j] - (i == j ? 1.0 : 0.0);
    return out;
}

/// Average (fractional) ranks by direct counting: rank = #less + (#equal + 1) / 2.
inline std::vector<double> fractional_ranks(const std::vector<double>& x) {
    std::vector<double> r(x.size());
    for (std::size_t i = 0; i < x.size(); ++i) {
        double less = 0, equal = 0;
        for (double y : x) {
            if (y < x[i]) less += 1;
            else if (y == x[i]) equal += 1;
        }
        r[i] = less + (equal + 1.0) / 2.0;
    }
    return r;
}

/// Central finite-difference derivative of f at the parameter *p.
inline double central_difference(const std::function<double()>& f, double* p, double h = 1e-6) {
    const double saved = *p;
    *p = saved + h;
    const double up = f();
    *p = saved - h;
    const double down = f();
    *p = saved;
    return (up - down) / (2.0 * h);
}

/// Relative error; the 1e-3 floor keeps near-zero gradients from turning
/// finite-difference round-off into a large ratio.
inline double rel_error(double analytic, double numeric) {
    return std::abs(analytic - numeric) / std::max(1e-3, std::max(std::abs(analytic), std::abs(numeric)));
}

}  // namespace oracle
