#pragma once

#include <algorithm>
#include <array>
#include <cmath>
#include <cstddef>

namespace chamberflow {

/// Dense N x N real matrix, row-major, value semantics. Only N = 2, 3 are used.
template <int N>
struct Matrix {
    static_assert(N >= 1 && N <= 4);
    std::array<double, N * N> m{};

    static constexpr Matrix identity() {
        Matrix r;
        for (int i = 0; i < N; ++i) r(i, i) = 1.0;
        return r;
    }

    static constexpr Matrix diagonal(const std::array<double, N>& d) {
        Matrix r;
        for (int i = 0; i < N; ++i) r(i, i) = d[i];
        return r;
    }

    constexpr double& operator()(int i, int j) { return m[i * N + j]; }
    constexpr double operator()(int i, int j) const { return m[i * N + j]; }

    constexpr std::array<double, N> row(int i) const {
        std::array<double, N> r{};
        for (int j = 0; j < N; ++j) r[j] = (*this)(i, j);
        return r;
    }

    constexpr std::array<double, N> col(int j) const {
        std::array<double, N> c{};
        for (int i = 0; i < N; ++i) c[i] = (*this)(i, j);
        return c;
    }

    friend constexpr bool operator==(const Matrix&, const Matrix&) = default;
};

template <int N>
constexpr Matrix<N> operator*(const Matrix<N>& a, const Matrix<N>& b) {
    Matrix<N> r;
    for (int i = 0; i < N; ++i)
        for (int k = 0; k < N; ++k) {
            const double aik = a(i, k);
            for (int j = 0; j < N; ++j) r(i, j) += aik * b(k, j);
        }
    return r;
}

template <int N>
constexpr Matrix<N> operator+(Matrix<N> a, const Matrix<N>& b) {
    for (std::size_t i = 0; i < a.m.size(); ++i) a.m[i] += b.m[i];
    return a;
}

template <int N>
constexpr Matrix<N> operator-(Matrix<N> a, const Matrix<N>& b) {
    for (std::size_t i = 0; i < a.m.size(); ++i) a.m[i] -= b.m[i];
    return a;
}

template <int N>
constexpr Matrix<N> operator*(double s, Matrix<N> a) {
    for (auto& x : a.m) x *= s;
    return a;
}

template <int N, std::size_t M>
    requires(M == N)
constexpr std::array<double, M> operator*(const Matrix<N>& a, const std::array<double, M>& v) {
    std::array<double, M> r{};
    for (int i = 0; i < N; ++i)
        for (int j = 0; j < N; ++j) r[i] += a(i, j) * v[j];
    return r;
}

template <int N>
constexpr Matrix<N> transpose(const Matrix<N>& a) {
    Matrix<N> r;
    for (int i = 0; i < N; ++i)
        for (int j = 0; j < N; ++j) r(j, i) = a(i, j);
    return r;
}

template <int N>
constexpr double trace(const Matrix<N>& a) {
    double t = 0.0;
    for (int i = 0; i < N; ++i) t += a(i, i);
    return t;
}

template <int N>
constexpr double determinant(const Matrix<N>& a) {
    if constexpr (N == 1) {
        return a(0, 0);
    } else if constexpr (N == 2) {
        return a(0, 0) * a(1, 1) - a(0, 1) * a(1, 0);
    } else if constexpr (N == 3) {
        return a(0, 0) * (a(1, 1) * a(2, 2) - a(1, 2) * a(2, 1)) -
               a(0, 1) * (a(1, 0) * a(2, 2) - a(1, 2) * a(2, 0)) +
               a(0, 2) * (a(1, 0) * a(2, 1) - a(1, 1) * a(2, 0));
    } else {
        // Laplace expansion along the first row.
        double d = 0.0;
        for (int c = 0; c < N; ++c) {
            Matrix<N - 1> minor;
            for (int i = 1; i < N; ++i)
                for (int j = 0, jj = 0; j < N; ++j)
                    if (j != c) minor(i - 1, jj++) = a(i, j);
            d += ((c % 2) ? -1.0 : 1.0) * a(0, c) * determinant(minor);
        }
        return d;
    }
}

/// Inverse of a unimodular matrix via the adjugate (det taken as 1).
template <int N>
constexpr Matrix<N> unimodular_inverse(const Matrix<N>& a) {
    static_assert(N == 2 || N == 3);
    Matrix<N> r;
    if constexpr (N == 2) {
        r(0, 0) = a(1, 1);
        r(0, 1) = -a(0, 1);
        r(1, 0) = -a(1, 0);
        r(1, 1) = a(0, 0);
    } else {
        r(0, 0) = a(1, 1) * a(2, 2) - a(1, 2) * a(2, 1);
        r(0, 1) = a(0, 2) * a(2, 1) - a(0, 1) * a(2, 2);
        r(0, 2) = a(0, 1) * a(1, 2) - a(0, 2) * a(1, 1);
        r(1, 0) = a(1, 2) * a(2, 0) - a(1, 0) * a(2, 2);
        r(1, 1) = a(0, 0) * a(2, 2) - a(0, 2) * a(2, 0);
        r(1, 2) = a(0, 2) * a(1, 0) - a(0, 0) * a(1, 2);
        r(2, 0) = a(1, 0) * a(2, 1) - a(1, 1) * a(2, 0);
        r(2, 1) = a(0, 1) * a(2, 0) - a(0, 0) * a(2, 1);
        r(2, 2) = a(0, 0) * a(1, 1) - a(0, 1) * a(1, 0);
    }
    return r;
}

template <int N>
constexpr double max_abs(const Matrix<N>& a) {
    double r = 0.0;
    for (double x : a.m) r = std::max(r, std::abs(x));
    return r;
}

/// max-abs entry of a - b
template <int N>
constexpr double max_abs_diff(const Matrix<N>& a, const Matrix<N>& b) {
    return max_abs(a - b);
}

template <int N>
constexpr double frobenius_sq(const Matrix<N>& a) {
    double s = 0.0;
    for (double x : a.m) s += x * x;
    return s;
}

/// ||k^T k - I|| in max-abs norm.
template <int N>
constexpr double orthogonality_defect(const Matrix<N>& k) {
    return max_abs_diff(transpose(k) * k, Matrix<N>::identity());
}

template <int N>
constexpr bool all_finite(const Matrix<N>& a) {
    return std::all_of(a.m.begin(), a.m.end(), [](double x) { return std::isfinite(x); });
}

inline Matrix<2> rotation(double angle) {
    const double c = std::cos(angle), s = std::sin(angle);
    Matrix<2> r;
    r(0, 0) = c;
    r(0, 1) = -s;
    r(1, 0) = s;
    r(1, 1) = c;
    return r;
}

template <std::size_t N>
constexpr double dot(const std::array<double, N>& a, const std::array<double, N>& b) {
    double s = 0.0;
    for (std::size_t i = 0; i < N; ++i) s += a[i] * b[i];
    return s;
}

template <std::size_t N>
inline double norm(const std::array<double, N>& a) {
    return std::sqrt(dot(a, a));
}

} // namespace chamberflow
