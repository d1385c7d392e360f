#pragma once

#include <algorithm>
#include <array>
#include <cmath>
#include <numeric>
#include <string>

#include "errors.hpp"
#include "matrix.hpp"
#include "rootdata.hpp"

namespace chamberflow {

/// Element of SL(N, R). The determinant check is relative to Hadamard's bound
/// (product of row norms): representatives deep in a cusp or funnel have huge
/// entries, and their determinant cannot be evaluated to better than that.
template <int N>
class GroupElement {
public:
    static constexpr double det_tolerance = 1e-10;

    GroupElement() : m_(Matrix<N>::identity()) {}

    static GroupElement checked(const Matrix<N>& m) {
        if (!all_finite(m)) throw NumericalFailure("decomp", "GroupElement", "non-finite entry");
        double scale = 1.0;
        for (int i = 0; i < N; ++i) scale *= norm(m.row(i));
        const double det = determinant(m);
        if (!(std::abs(det - 1.0) <= det_tolerance * std::max(1.0, scale)))
            throw NumericalFailure("decomp", "GroupElement",
                                   "determinant " + std::to_string(det) + " is not 1");
        return GroupElement(m);
    }

    /// For products of group elements built internally; no validation.
    static GroupElement unchecked(const Matrix<N>& m) { return GroupElement(m); }

    const Matrix<N>& matrix() const { return m_; }
    double operator()(int i, int j) const { return m_(i, j); }
    static constexpr GroupId group_id() { return group_of<N>(); }

    friend GroupElement operator*(const GroupElement& a, const GroupElement& b) {
        return GroupElement(a.m_ * b.m_);
    }
    friend bool operator==(const GroupElement&, const GroupElement&) = default;

    GroupElement inverse() const { return GroupElement(unimodular_inverse(m_)); }

private:
    explicit GroupElement(const Matrix<N>& m) : m_(m) {}
    Matrix<N> m_;
};

/// g = n * a * k with n unit upper triangular, a positive diagonal, k in SO(N).
template <int N>
struct IwasawaTriple {
    GroupElement<N> n_part;
    GroupElement<N> a_part;
    GroupElement<N> k_part;
};

/// g = k1 * a * k2 with k1, k2 in SO(N) and a positive diagonal, nonincreasing.
template <int N>
struct CartanTriple {
    GroupElement<N> k1;
    GroupElement<N> a_part;
    GroupElement<N> k2;
};

/// NAK factorization by Gram-Schmidt on the rows, bottom row first.
/// The top diagonal entry of a is fixed by det = 1 and the top row of k
/// completes an oriented orthonormal frame, which keeps the result exact in
/// SL(N) even when the rows of g are nearly parallel.
template <int N>
IwasawaTriple<N> iwasawa(const GroupElement<N>& g) {
    static_assert(N == 2 || N == 3);
    const Matrix<N>& m = g.matrix();
    if (!all_finite(m)) throw NumericalFailure("decomp", "iwasawa", "non-finite input");

    Matrix<N> n = Matrix<N>::identity();
    std::array<double, N> a{};
    std::array<std::array<double, N>, N> k{};

    double prod = 1.0;
    for (int i = N - 1; i >= 1; --i) {
        auto v = m.row(i);
        for (int j = i + 1; j < N; ++j) {
            const double c = dot(v, k[j]);
            n(i, j) = c / a[j];
            for (int c2 = 0; c2 < N; ++c2) v[c2] -= c * k[j][c2];
        }
        const double len = norm(v);
        if (!(len > 0.0) || !std::isfinite(len))
            throw NumericalFailure("decomp", "iwasawa", "rank-deficient row " + std::to_string(i));
        a[i] = len;
        for (int c2 = 0; c2 < N; ++c2) k[i][c2] = v[c2] / len;
        prod *= len;
    }
    a[0] = 1.0 / prod;
    if constexpr (N == 2) {
        k[0] = {k[1][1], -k[1][0]};
    } else {
        k[0] = {k[1][1] * k[2][2] - k[1][2] * k[2][1], k[1][2] * k[2][0] - k[1][0] * k[2][2],
                k[1][0] * k[2][1] - k[1][1] * k[2][0]};
    }
    // Orientation check: the Gram-Schmidt residual of row 0 must point along k[0].
    {
        auto v = m.row(0);
        for (int j = 1; j < N; ++j) {
            const double c = dot(v, k[j]);
            n(0, j) = c / a[j];
            for (int c2 = 0; c2 < N; ++c2) v[c2] -= c * k[j][c2];
        }
        if (!(dot(v, k[0]) > 0.0))
            throw NumericalFailure("decomp", "iwasawa", "input is not in SL(N): orientation reversed");
    }

    Matrix<N> km;
    for (int i = 0; i < N; ++i)
        for (int j = 0; j < N; ++j) km(i, j) = k[i][j];
    return {GroupElement<N>::unchecked(n), GroupElement<N>::unchecked(Matrix<N>::diagonal(a)),
            GroupElement<N>::unchecked(km)};
}

namespace detail {

/// One-sided (Hestenes) Jacobi: rotates the columns of w until they are
/// mutually orthogonal, accumulating the rotations in v. This is the Jacobi
/// eigenvalue iteration for g^T g carried out implicitly on g, so column-graded
/// inputs such as n*a keep their small singular values to high relative accuracy.
template <int N>
void hestenes_jacobi(Matrix<N>& w, Matrix<N>& v) {
    constexpr int max_sweeps = 60;
    constexpr double tol = 1e-15;
    for (int sweep = 0; sweep < max_sweeps; ++sweep) {
        bool rotated = false;
        for (int p = 0; p < N - 1; ++p)
            for (int q = p + 1; q < N; ++q) {
                double alpha = 0, beta = 0, gamma = 0;
                for (int i = 0; i < N; ++i) {
                    alpha += w(i, p) * w(i, p);
                    beta += w(i, q) * w(i, q);
                    gamma += w(i, p) * w(i, q);
                }
                if (gamma == 0.0 || std::abs(gamma) <= tol * std::sqrt(alpha) * std::sqrt(beta)) continue;
                rotated = true;
                const double zeta = (beta - alpha) / (2.0 * gamma);
                const double t = std::copysign(1.0, zeta) / (std::abs(zeta) + std::hypot(1.0, zeta));
                const double c = 1.0 / std::hypot(1.0, t);
                const double s = c * t;
                for (int i = 0; i < N; ++i) {
                    const double wp = w(i, p), wq = w(i, q);
                    w(i, p) = c * wp - s * wq;
                    w(i, q) = s * wp + c * wq;
                    const double vp = v(i, p), vq = v(i, q);
                    v(i, p) = c * vp - s * vq;
                    v(i, q) = s * vp + c * vq;
                }
            }
        if (!rotated) return;
    }
    throw NumericalFailure("decomp", "cartan", "Jacobi iteration did not converge");
}

template <int N>
double leading_sign(const Matrix<N>& u, int col) {
    double scale = 0.0;
    for (int i = 0; i < N; ++i) scale = std::max(scale, std::abs(u(i, col)));
    for (int i = 0; i < N; ++i)
        if (std::abs(u(i, col)) > 1e-12 * scale) return u(i, col) > 0 ? 1.0 : -1.0;
    return 1.0;
}

} // namespace detail

/// KAK factorization. Conventions: singular values in nonincreasing order; the
/// first non-negligible entry of each column of k1 except the last is positive;
/// the last column's sign is chosen so det k1 = +1.
template <int N>
CartanTriple<N> cartan(const GroupElement<N>& g) {
    const Matrix<N>& m = g.matrix();
    if (!all_finite(m)) throw NumericalFailure("decomp", "cartan", "non-finite input");

    Matrix<N> w = m;
    Matrix<N> v = Matrix<N>::identity();
    detail::hestenes_jacobi(w, v);

    std::array<double, N> sigma{};
    for (int j = 0; j < N; ++j) sigma[j] = norm(w.col(j));

    std::array<int, N> order{};
    std::iota(order.begin(), order.end(), 0);
    std::stable_sort(order.begin(), order.end(), [&](int x, int y) { return sigma[x] > sigma[y]; });

    Matrix<N> u, vs;
    std::array<double, N> s{};
    for (int c = 0; c < N; ++c) {
        const int j = order[c];
        s[c] = sigma[j];
        if (!(s[c] > 0.0)) throw NumericalFailure("decomp", "cartan", "singular input");
        for (int i = 0; i < N; ++i) {
            u(i, c) = w(i, j) / s[c];
            vs(i, c) = v(i, j);
        }
    }
    for (int c = 0; c < N - 1; ++c) {
        if (detail::leading_sign(u, c) < 0)
            for (int i = 0; i < N; ++i) {
                u(i, c) = -u(i, c);
                vs(i, c) = -vs(i, c);
            }
    }
    if (determinant(u) < 0)
        for (int i = 0; i < N; ++i) {
            u(i, N - 1) = -u(i, N - 1);
            vs(i, N - 1) = -vs(i, N - 1);
        }
    return {GroupElement<N>::unchecked(u), GroupElement<N>::unchecked(Matrix<N>::diagonal(s)),
            GroupElement<N>::unchecked(transpose(vs))};
}

/// H = log of the Cartan middle factor; always in the closed positive chamber.
template <int N>
ChamberVector<N> radial_from_singular_values(const std::array<double, N>& s) {
    ChamberVector<N> h;
    double mean = 0.0;
    for (int i = 0; i < N; ++i) {
        h.coords[i] = std::log(s[i]);
        mean += h.coords[i];
    }
    mean /= N;
    for (auto& c : h.coords) c -= mean;
    return h;
}

template <int N>
ChamberVector<N> radial_component(const GroupElement<N>& g) {
    const auto ct = cartan(g);
    std::array<double, N> s{};
    for (int i = 0; i < N; ++i) s[i] = ct.a_part(i, i);
    return radial_from_singular_values<N>(s);
}

/// exp(H) as a diagonal group element.
template <int N>
GroupElement<N> exp_chamber(const ChamberVector<N>& h) {
    std::array<double, N> d{};
    for (int i = 0; i < N; ++i) d[i] = std::exp(h.coords[i]);
    return GroupElement<N>::unchecked(Matrix<N>::diagonal(d));
}

/// exp(X) for X traceless symmetric (X in p), via Cayley-Hamilton:
/// exp(X) = c0 I + c1 X + c2 X^2 for N = 3, c0 I + c1 X for N = 2.
template <int N>
Matrix<N> exp_traceless_symmetric(const Matrix<N>& x) {
    static_assert(N == 2 || N == 3);
    const Matrix<N> x2 = x * x;
    if constexpr (N == 2) {
        // X^2 = (tr X^2 / 2) I
        const double r = std::sqrt(0.5 * trace(x2));
        const double c0 = std::cosh(r);
        const double c1 = r > 0 ? std::sinh(r) / r : 1.0;
        return c0 * Matrix<2>::identity() + c1 * x;
    } else {
        // X^3 = (tr X^2 / 2) X + det(X) I
        const double q = 0.5 * trace(x2);
        const double d = determinant(x);
        const double scale = std::sqrt(q);
        // Scale-and-square keeps the power series short and accurate.
        int squarings = 0;
        double f = 1.0;
        while (scale * f > 0.5) {
            f *= 0.5;
            ++squarings;
        }
        const double qs = q * f * f, ds = d * f * f * f;
        // x_s^k = p I + r1 X_s + r2 X_s^2, X_s = f X
        double p = 1.0, r1 = 0.0, r2 = 0.0;
        double c0 = 0.0, c1 = 0.0, c2 = 0.0, fact = 1.0;
        for (int k = 0; k < 30; ++k) {
            if (k > 0) fact *= k;
            c0 += p / fact;
            c1 += r1 / fact;
            c2 += r2 / fact;
            const double np = r2 * ds, nr1 = p + r2 * qs, nr2 = r1;
            p = np;
            r1 = nr1;
            r2 = nr2;
        }
        const Matrix<3> xs = f * x;
        Matrix<3> e = c0 * Matrix<3>::identity() + c1 * xs + c2 * (xs * xs);
        for (int i = 0; i < squarings; ++i) e = e * e;
        return e;
    }
}

} // namespace chamberflow
