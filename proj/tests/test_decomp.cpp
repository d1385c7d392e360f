#include <gtest/gtest.h>

#include <cmath>
#include <random>

#include "chamberflow/decomp.hpp"

using namespace chamberflow;

namespace {

template <int N>
Matrix<N> random_sl(std::mt19937_64& rng, double spread = 1.0) {
    std::normal_distribution<double> nd(0.0, spread);
    for (;;) {
        Matrix<N> m;
        for (auto& x : m.m) x = nd(rng);
        double d = determinant(m);
        if (std::abs(d) < 1e-3) continue;
        if (d < 0) {
            for (int j = 0; j < N; ++j) std::swap(m(0, j), m(1, j));
            d = -d;
        }
        const double f = std::pow(d, -1.0 / N);
        return f * m;
    }
}

template <int N>
Matrix<N> random_rotation(std::mt19937_64& rng) {
    // Gram-Schmidt of a Gaussian matrix, fixed to det +1
    std::normal_distribution<double> nd;
    Matrix<N> q;
    for (int i = 0; i < N; ++i) {
        std::array<double, N> v;
        for (auto& x : v) x = nd(rng);
        for (int j = 0; j < i; ++j) {
            const double c = dot(v, q.row(j));
            for (int k = 0; k < N; ++k) v[k] -= c * q(j, k);
        }
        const double len = norm(v);
        for (int k = 0; k < N; ++k) q(i, k) = v[k] / len;
    }
    if (determinant(q) < 0)
        for (int k = 0; k < N; ++k) q(0, k) = -q(0, k);
    return q;
}

// Oracle: cyclic two-sided Jacobi eigenvalue method on the symmetric matrix s,
// returning ascending eigenvalues.
template <int N>
std::array<double, N> jacobi_eigenvalues(Matrix<N> s) {
    for (int sweep = 0; sweep < 100; ++sweep) {
        double off = 0.0;
        for (int p = 0; p < N; ++p)
            for (int q = p + 1; q < N; ++q) off += s(p, q) * s(p, q);
        if (off < 1e-300) break;
        for (int p = 0; p < N; ++p)
            for (int q = p + 1; q < N; ++q) {
                if (s(p, q) == 0.0) continue;
                const double theta = 0.5 * std::atan2(2.0 * s(p, q), s(q, q) - s(p, p));
                const double c = std::cos(theta), sn = std::sin(theta);
                Matrix<N> j = Matrix<N>::identity();
                j(p, p) = c;
                j(q, q) = c;
                j(p, q) = sn;
                j(q, p) = -sn;
                s = transpose(j) * s * j;
            }
    }
    std::array<double, N> ev;
    for (int i = 0; i < N; ++i) ev[i] = s(i, i);
    std::sort(ev.begin(), ev.end());
    return ev;
}

template <int N>
void check_iwasawa(const Matrix<N>& m) {
    const auto g = GroupElement<N>::checked(m);
    const auto t = iwasawa(g);
    EXPECT_LT(max_abs_diff((t.n_part * t.a_part * t.k_part).matrix(), m), 1e-9);
    for (int i = 0; i < N; ++i) {
        EXPECT_DOUBLE_EQ(t.n_part(i, i), 1.0);
        EXPECT_GT(t.a_part(i, i), 0.0);
        for (int j = 0; j < i; ++j) {
            EXPECT_EQ(t.n_part(i, j), 0.0);
            EXPECT_EQ(t.a_part(i, j), 0.0);
        }
    }
    EXPECT_LT(orthogonality_defect(t.k_part.matrix()), 1e-12);
    EXPECT_NEAR(determinant(t.k_part.matrix()), 1.0, 1e-12);
}

template <int N>
void check_cartan(const Matrix<N>& m) {
    const auto g = GroupElement<N>::checked(m);
    const auto t = cartan(g);
    EXPECT_LT(max_abs_diff((t.k1 * t.a_part * t.k2).matrix(), m), 1e-9);
    EXPECT_LT(orthogonality_defect(t.k1.matrix()), 1e-12);
    EXPECT_LT(orthogonality_defect(t.k2.matrix()), 1e-12);
    EXPECT_NEAR(determinant(t.k1.matrix()), 1.0, 1e-12);
    EXPECT_NEAR(determinant(t.k2.matrix()), 1.0, 1e-12);
    for (int i = 0; i + 1 < N; ++i) EXPECT_GE(t.a_part(i, i), t.a_part(i + 1, i + 1));
    EXPECT_GE(chamber_distance(radial_component(g)), -1e-10);

    const auto ev = jacobi_eigenvalues<N>(transpose(m) * m);
    for (int i = 0; i < N; ++i) {
        const double s = t.a_part(N - 1 - i, N - 1 - i);
        EXPECT_NEAR(s * s, ev[i], 1e-10 * std::max(1.0, ev[i]));
    }
}

} // namespace

TEST(Decomp, GroupElementRejectsBadInput) {
    EXPECT_THROW(GroupElement<2>::checked(Matrix<2>::diagonal({2.0, 1.0})), NumericalFailure);
    EXPECT_THROW(GroupElement<2>::checked(Matrix<2>::diagonal({NAN, 1.0})), NumericalFailure);
    Matrix<2> inf = Matrix<2>::identity();
    inf(0, 1) = INFINITY;
    EXPECT_THROW(cartan(GroupElement<2>::unchecked(inf)), NumericalFailure);
    EXPECT_THROW(iwasawa(GroupElement<2>::unchecked(inf)), NumericalFailure);
    EXPECT_NO_THROW(GroupElement<3>::checked(Matrix<3>::diagonal({2.0, 0.25, 2.0})));
}

TEST(Decomp, IwasawaRoundTripRandom) {
    std::mt19937_64 rng(11);
    for (int i = 0; i < 1000; ++i) {
        check_iwasawa<2>(random_sl<2>(rng));
        check_iwasawa<3>(random_sl<3>(rng));
    }
}

TEST(Decomp, CartanRoundTripRandom) {
    std::mt19937_64 rng(12);
    for (int i = 0; i < 1000; ++i) {
        check_cartan<2>(random_sl<2>(rng));
        check_cartan<3>(random_sl<3>(rng));
    }
}

TEST(Decomp, IdentityFactors) {
    const GroupElement<3> e;
    const auto t = iwasawa(e);
    EXPECT_EQ(t.n_part, e);
    EXPECT_EQ(t.a_part, e);
    EXPECT_EQ(t.k_part, e);
    const auto c = cartan(e);
    EXPECT_EQ(c.a_part, e);
    const auto r = radial_component(e);
    for (double x : r.coords) EXPECT_EQ(x, 0.0);
}

TEST(Decomp, DiagonalCartan) {
    const auto g = GroupElement<2>::checked(Matrix<2>::diagonal({2.0, 0.5}));
    const auto c = cartan(g);
    EXPECT_DOUBLE_EQ(c.a_part(0, 0), 2.0);
    EXPECT_DOUBLE_EQ(c.a_part(1, 1), 0.5);
    EXPECT_DOUBLE_EQ(std::abs(c.k1(0, 0)), 1.0);
    const auto r = radial_component(GroupElement<2>::checked(Matrix<2>::diagonal({std::exp(1.0), std::exp(-1.0)})));
    EXPECT_NEAR(r.coords[0], 1.0, 1e-15);
    EXPECT_NEAR(r.coords[1], -1.0, 1e-15);
}

TEST(Decomp, IwasawaRecoversFactors) {
    std::mt19937_64 rng(17);
    std::normal_distribution<double> nd;
    for (int i = 0; i < 200; ++i) {
        Matrix<3> n = Matrix<3>::identity();
        n(0, 1) = nd(rng);
        n(0, 2) = nd(rng);
        n(1, 2) = nd(rng);
        const double h1 = nd(rng), h2 = nd(rng);
        const auto a = Matrix<3>::diagonal({std::exp(h1), std::exp(h2), std::exp(-h1 - h2)});
        const auto k = random_rotation<3>(rng);
        const auto t = iwasawa(GroupElement<3>::checked(n * a * k));
        EXPECT_LT(max_abs_diff(t.n_part.matrix(), n), 1e-9);
        EXPECT_LT(max_abs_diff(t.a_part.matrix(), a), 1e-9);
        EXPECT_LT(max_abs_diff(t.k_part.matrix(), k), 1e-9);
    }
}

TEST(Decomp, IwasawaOfNAIsItself) {
    Matrix<3> m = Matrix<3>::diagonal({2.0, 0.5, 1.0});
    m(0, 1) = 3.0;
    m(0, 2) = -1.0;
    m(1, 2) = 0.25;
    const auto t = iwasawa(GroupElement<3>::checked(m));
    EXPECT_LT(max_abs_diff(t.k_part.matrix(), Matrix<3>::identity()), 1e-15);
    EXPECT_LT(max_abs_diff((t.n_part * t.a_part).matrix(), m), 1e-15);
}

TEST(Decomp, CartanOfChamberExponential) {
    std::mt19937_64 rng(13);
    for (int i = 0; i < 100; ++i) {
        const auto k1 = random_rotation<3>(rng), k2 = random_rotation<3>(rng);
        const ChamberVector<3> h{{1.7, 0.2, -1.9}};
        const auto g = GroupElement<3>::unchecked(k1) * exp_chamber(h) * GroupElement<3>::unchecked(k2);
        const auto r = radial_component(g);
        for (int j = 0; j < 3; ++j) EXPECT_NEAR(r.coords[j], h.coords[j], 1e-12);
    }
}

TEST(Decomp, RadialComponentIsBiInvariant) {
    std::mt19937_64 rng(14);
    for (int i = 0; i < 200; ++i) {
        const auto g = GroupElement<3>::checked(random_sl<3>(rng, 2.0));
        const auto k = GroupElement<3>::unchecked(random_rotation<3>(rng));
        const auto k2 = GroupElement<3>::unchecked(random_rotation<3>(rng));
        const auto a = radial_component(g), b = radial_component(k * g * k2);
        for (int j = 0; j < 3; ++j) EXPECT_NEAR(a.coords[j], b.coords[j], 1e-8);
    }
}

TEST(Decomp, LargeColumnGradedInputs) {
    // n*a with a spanning many orders of magnitude: the small singular value
    // must keep relative accuracy.
    Matrix<3> m = Matrix<3>::diagonal({std::exp(20.0), std::exp(-5.0), std::exp(-15.0)});
    m(0, 1) = 0.7 * std::exp(-5.0);
    m(0, 2) = -1.3 * std::exp(-15.0);
    m(1, 2) = 2.1 * std::exp(-15.0);
    const auto g = GroupElement<3>::checked(m);
    const auto t = cartan(g);
    double prod = 1.0;
    for (int i = 0; i < 3; ++i) prod *= t.a_part(i, i);
    EXPECT_NEAR(prod, 1.0, 1e-12);
    const auto r = iwasawa(g);
    EXPECT_LT(max_abs_diff((r.n_part * r.a_part * r.k_part).matrix(), m), 1e-9 * max_abs(m));
}

TEST(Decomp, DegenerateSingularValues) {
    const auto g = GroupElement<3>::unchecked(random_rotation<3>(*std::make_unique<std::mt19937_64>(15)));
    const auto t = cartan(g);
    EXPECT_LT(max_abs_diff((t.k1 * t.a_part * t.k2).matrix(), g.matrix()), 1e-12);
    const auto r = radial_component(g);
    for (double c : r.coords) EXPECT_NEAR(c, 0.0, 1e-14);
}

TEST(Decomp, ExpTracelessSymmetricMatchesSeries) {
    std::mt19937_64 rng(16);
    std::normal_distribution<double> nd;
    for (int trial = 0; trial < 50; ++trial) {
        Matrix<3> x;
        for (int i = 0; i < 3; ++i)
            for (int j = i; j < 3; ++j) x(i, j) = x(j, i) = nd(rng);
        const double tr = trace(x) / 3.0;
        for (int i = 0; i < 3; ++i) x(i, i) -= tr;
        // oracle: plain Taylor series
        Matrix<3> term = Matrix<3>::identity(), sum = Matrix<3>::identity();
        for (int k = 1; k < 80; ++k) {
            term = (1.0 / k) * (term * x);
            sum = sum + term;
        }
        EXPECT_LT(max_abs_diff(exp_traceless_symmetric(x), sum), 1e-12 * max_abs(sum));
        EXPECT_NEAR(determinant(exp_traceless_symmetric(x)), 1.0, 1e-11);
    }
    Matrix<2> y;
    y(0, 0) = 0.3;
    y(1, 1) = -0.3;
    y(0, 1) = y(1, 0) = 0.4;
    Matrix<2> term = Matrix<2>::identity(), sum = Matrix<2>::identity();
    for (int k = 1; k < 40; ++k) {
        term = (1.0 / k) * (term * y);
        sum = sum + term;
    }
    EXPECT_LT(max_abs_diff(exp_traceless_symmetric(y), sum), 1e-14);
}
