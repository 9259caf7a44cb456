#pragma once

#include <algorithm>
#include <array>
#include <cmath>

namespace sdg {

// State dimension never exceeds two; unused trailing components stay zero.
inline constexpr int kMaxDim = 2;

using Vec = std::array<double, kMaxDim>;
using Mat = std::array<std::array<double, kMaxDim>, kMaxDim>;

inline constexpr Mat identity_mat(int dim, double scale = 1.0) {
    Mat m{};
    for (int i = 0; i < dim; ++i) m[i][i] = scale;
    return m;
}

inline Mat diag_mat(double a, double b) {
    Mat m{};
    m[0][0] = a;
    m[1][1] = b;
    return m;
}

inline Mat mat_mul(const Mat& a, const Mat& b) {
    Mat c{};
    for (int i = 0; i < kMaxDim; ++i)
        for (int j = 0; j < kMaxDim; ++j)
            for (int k = 0; k < kMaxDim; ++k) c[i][j] += a[i][k] * b[k][j];
    return c;
}

inline Vec mat_vec(const Mat& a, const Vec& x) {
    return {a[0][0] * x[0] + a[0][1] * x[1], a[1][0] * x[0] + a[1][1] * x[1]};
}

// Row vector times matrix: (z·σ)_j = Σ_i z_i σ_ij.
inline Vec vec_mat(const Vec& z, const Mat& a) {
    return {z[0] * a[0][0] + z[1] * a[1][0], z[0] * a[0][1] + z[1] * a[1][1]};
}

inline double dot(const Vec& a, const Vec& b, int dim = kMaxDim) {
    double s = 0.0;
    for (int i = 0; i < dim; ++i) s += a[i] * b[i];
    return s;
}

// Frobenius inner product A : B.
inline double frobenius(const Mat& a, const Mat& b, int dim = kMaxDim) {
    double s = 0.0;
    for (int i = 0; i < dim; ++i)
        for (int j = 0; j < dim; ++j) s += a[i][j] * b[i][j];
    return s;
}

inline double max_abs(const Vec& v, int dim = kMaxDim) {
    double m = 0.0;
    for (int i = 0; i < dim; ++i) m = std::max(m, std::abs(v[i]));
    return m;
}

inline double max_abs(const Mat& a, int dim = kMaxDim) {
    double m = 0.0;
    for (int i = 0; i < dim; ++i)
        for (int j = 0; j < dim; ++j) m = std::max(m, std::abs(a[i][j]));
    return m;
}

inline double norm2(const Vec& v, int dim = kMaxDim) { return std::sqrt(dot(v, v, dim)); }

inline bool is_symmetric(const Mat& a, double tol) { return std::abs(a[0][1] - a[1][0]) <= tol; }

// Eigenvalues (ascending) of the symmetric part of a 2x2 (or leading 1x1) matrix.
inline std::array<double, 2> sym_eigenvalues(const Mat& a, int dim) {
    if (dim == 1) return {a[0][0], a[0][0]};
    const double off = 0.5 * (a[0][1] + a[1][0]);
    const double mean = 0.5 * (a[0][0] + a[1][1]);
    const double half = 0.5 * (a[0][0] - a[1][1]);
    const double r = std::hypot(half, off);
    return {mean - r, mean + r};
}

inline double determinant(const Mat& a, int dim) {
    return dim == 1 ? a[0][0] : a[0][0] * a[1][1] - a[0][1] * a[1][0];
}

}  // namespace sdg
