#include <gtest/gtest.h>

#include <cmath>
#include <numbers>
#include <random>

#include "chamberflow/diffusion.hpp"

using namespace chamberflow;

namespace {

DiffusionConfig config(GroupId g, double horizon, int paths = 1, double eps = 0.02, std::uint64_t seed = 7) {
    DiffusionConfig c;
    c.group = g;
    c.horizon = horizon;
    c.paths = paths;
    c.step_length = eps;
    c.seed = seed;
    return c;
}

// Independent route to the Poisson kernel: P(x, xi) = 1 / |x^{-1} v_xi|^2 with
// v_xi the unit vector of the boundary line.
double poisson_by_vector(const Matrix<2>& x, double angle) {
    const auto inv = unimodular_inverse(x);
    const std::array<double, 2> v{std::cos(angle), std::sin(angle)};
    const auto w = inv * v;
    return 1.0 / dot(w, w);
}

Matrix<2> random_sl2(std::mt19937_64& rng) {
    std::normal_distribution<double> nd;
    for (;;) {
        Matrix<2> m;
        for (auto& x : m.m) x = nd(rng);
        double d = determinant(m);
        if (std::abs(d) < 1e-2) continue;
        if (d < 0) {
            std::swap(m(0, 0), m(1, 0));
            std::swap(m(0, 1), m(1, 1));
            d = -d;
        }
        return (1.0 / std::sqrt(d)) * m;
    }
}

} // namespace

TEST(Diffusion, TimeIncrement) {
    EXPECT_DOUBLE_EQ(time_increment(GroupId::sl2, 0.02), 0.0004 / 4.0);
    EXPECT_DOUBLE_EQ(time_increment(GroupId::sl3, 0.02), 0.0004 / 10.0);
}

TEST(Diffusion, ConfigValidation) {
    EXPECT_THROW(simulate_path<2>(config(GroupId::sl2, 1.0, 1, 0.06), 0), UsageError);
    EXPECT_THROW(simulate_path<2>(config(GroupId::sl2, 1.0, 1, 0.0), 0), UsageError);
    EXPECT_THROW(simulate_path<2>(config(GroupId::sl3, 1.0), 0), UsageError);
    EXPECT_THROW(simulate<2>(config(GroupId::sl2, 1.0, 0)), UsageError);
    EXPECT_THROW(kb_sample<2>(config(GroupId::sl2, 0.0), 0, 0), UsageError);
}

TEST(Diffusion, ZeroHorizonIsBasePoint) {
    const auto p = simulate_path<2>(config(GroupId::sl2, 0.0), 0);
    EXPECT_EQ(p.endpoint, GroupElement<2>());
    EXPECT_EQ(p.elapsed, 0.0);
    const auto q = simulate_path<3>(config(GroupId::sl3, 0.0), 0);
    EXPECT_EQ(q.endpoint, GroupElement<3>());
}

TEST(Diffusion, ElapsedTimeCoversHorizon) {
    const auto c = config(GroupId::sl2, 1.0);
    const auto p = simulate_path<2>(c, 0);
    EXPECT_NEAR(p.elapsed, 1.0, 1e-12);
    const auto q = simulate_path<3>(config(GroupId::sl3, 0.3333), 0);
    EXPECT_GE(q.elapsed, 0.3333 - 1e-12);
    EXPECT_LT(q.elapsed, 0.3333 + time_increment(GroupId::sl3, 0.02));
}

TEST(Diffusion, DeterministicAndWorkerIndependent) {
    const auto c = config(GroupId::sl3, 0.5, 12);
    const auto a = simulate<3>(c, 1);
    const auto b = simulate<3>(c, 3);
    for (int i = 0; i < 12; ++i) EXPECT_EQ(a.endpoints[i], b.endpoints[i]);
    const auto d = simulate<3>(config(GroupId::sl3, 0.5, 12, 0.02, 8), 1);
    EXPECT_NE(a.endpoints[0], d.endpoints[0]);
    EXPECT_NE(a.endpoints[0], a.endpoints[1]);
}

TEST(Diffusion, EndpointsStayUnimodular) {
    const auto a = simulate<3>(config(GroupId::sl3, 20.0, 4), 1);
    for (const auto& e : a.endpoints) EXPECT_NO_THROW(GroupElement<3>::checked(e.matrix()));
    const auto b = simulate<2>(config(GroupId::sl2, 20.0, 4), 1);
    for (const auto& e : b.endpoints) EXPECT_NO_THROW(GroupElement<2>::checked(e.matrix()));
}

TEST(Diffusion, ContinuingAPathMatchesALongerPath) {
    const auto c = config(GroupId::sl2, 2.0);
    Walker<2> w(c, 5);
    w.advance_to(1.0);
    w.advance_to(2.0);
    EXPECT_EQ(w.endpoint(), simulate_path<2>(c, 5).endpoint);
}

// Short-time oracle: Brownian motion generated by the Laplacian on an
// n-dimensional manifold has E d(p, x_t)^2 = 2 n t + O(t^2).
TEST(Diffusion, ShortTimeSpreadMatchesDimension) {
    const double t = 0.02;
    for (GroupId g : {GroupId::sl2, GroupId::sl3}) {
        const int paths = 4000;
        double s = 0.0, s2 = 0.0;
        dispatch_group(g, [&](auto n) {
            constexpr int N = decltype(n)::value;
            const auto set = simulate<N>(config(g, t, paths), 1);
            for (const auto& e : set.endpoints) {
                const double d2 = inner(radial_component(e), radial_component(e));
                s += d2;
                s2 += d2 * d2;
            }
        });
        const double dim = symmetric_space_dim(matrix_size(g));
        const double mean = s / paths, se = std::sqrt((s2 / paths - mean * mean) / paths);
        // curvature correction is O(t^2); allow it plus 4 standard errors
        EXPECT_NEAR(mean, 2.0 * dim * t, 4.0 * se + 0.05 * 2.0 * dim * t) << to_string(g);
    }
}

TEST(Diffusion, KbHorizonIsUniform) {
    const auto c = config(GroupId::sl2, 0.0);
    const int n = 8, draws = 16000;
    std::array<int, 8> counts{};
    for (int i = 0; i < draws; ++i) {
        const int h = kb_horizon(c, n, i);
        ASSERT_GE(h, 0);
        ASSERT_LT(h, n);
        counts[h]++;
    }
    const double p = 1.0 / n, sd = std::sqrt(draws * p * (1 - p));
    for (int k : counts) EXPECT_LT(std::abs(k - draws * p), 5 * sd);
    EXPECT_EQ(kb_sample<2>(c, 1, 3).horizon, 0);
    EXPECT_EQ(kb_sample<2>(c, 1, 3).endpoint, GroupElement<2>());
}

TEST(Diffusion, BoundaryPointConventions) {
    EXPECT_DOUBLE_EQ(BoundaryPoint::from_angle(-0.25).angle, std::numbers::pi - 0.25);
    EXPECT_NEAR(BoundaryPoint::from_angle(std::numbers::pi + 0.5).angle, 0.5, 1e-15);
    EXPECT_NEAR(BoundaryPoint{std::numbers::pi / 4}.disk_angle(), 1.5 * std::numbers::pi, 1e-15);
    const auto b = BoundaryPoint{0.3}.moved_by(rotation(0.5));
    EXPECT_NEAR(b.angle, 0.8, 1e-15);
    const auto c = BoundaryPoint{0.3}.moved_by(Matrix<2>::diagonal({4.0, 0.25}));
    EXPECT_NEAR(std::tan(c.angle), std::tan(0.3) / 16.0, 1e-15);
}

TEST(Diffusion, ExitDirectionOfChamberExponential) {
    EXPECT_FALSE(exit_direction(GroupElement<2>()).has_value());
    for (double beta : {0.1, 1.0, 2.5, -0.7}) {
        const auto x = GroupElement<2>::unchecked(rotation(beta)) * exp_chamber(ChamberVector<2>{{2.0, -2.0}}) *
                       GroupElement<2>::unchecked(rotation(1.1));
        const auto d = exit_direction(x);
        ASSERT_TRUE(d.has_value());
        EXPECT_NEAR(d->angle, BoundaryPoint::from_angle(beta).angle, 1e-12);
    }
}

TEST(Diffusion, ExitHistogramIsNearUniform) {
    const auto set = simulate<2>(config(GroupId::sl2, 3.0, 2000, 0.05), 1);
    const auto h = exit_histogram(set.endpoints, 12);
    EXPECT_EQ(h.total + h.wall_samples, 2000);
    EXPECT_LT(h.max_abs_z, 5.0);
    EXPECT_THROW(exit_histogram(set.endpoints, 0), UsageError);
}

TEST(Poisson, BasePointKernelIsOne) {
    for (double a : {0.0, 0.4, 1.3, 3.0}) EXPECT_NEAR(poisson_kernel(GroupElement<2>(), BoundaryPoint{a}), 1.0, 1e-14);
}

TEST(Poisson, MatchesVectorFormula) {
    std::mt19937_64 rng(3);
    std::uniform_real_distribution<double> ang(0.0, std::numbers::pi);
    for (int i = 0; i < 500; ++i) {
        const auto m = random_sl2(rng);
        const double a = ang(rng);
        const double p = poisson_kernel(GroupElement<2>::unchecked(m), BoundaryPoint{a});
        EXPECT_NEAR(p, poisson_by_vector(m, a), 1e-10 * p);
    }
}

TEST(Poisson, IncreasesTowardTheBoundaryPoint) {
    // the ray k_xi exp(s H) moves toward xi
    const double xi = 0.9;
    double prev = 0.0;
    for (double s : {0.0, 0.5, 1.5}) {
        const auto x = GroupElement<2>::unchecked(rotation(xi)) * exp_chamber(ChamberVector<2>{{s, -s}});
        const double p = poisson_kernel(x, BoundaryPoint{xi});
        EXPECT_GT(p, prev);
        prev = p;
    }
}

TEST(Poisson, MeanValueProperty) {
    // P(., xi) is harmonic: its average over a geodesic circle equals its centre value
    std::mt19937_64 rng(4);
    std::uniform_real_distribution<double> ang(0.0, std::numbers::pi);
    const double r = 0.05;
    const auto step = exp_chamber(ChamberVector<2>{{r / std::sqrt(2.0), -r / std::sqrt(2.0)}});
    for (int i = 0; i < 100; ++i) {
        const auto x = GroupElement<2>::unchecked(random_sl2(rng));
        const BoundaryPoint xi{ang(rng)};
        const int m = 256;
        double s = 0.0;
        for (int j = 0; j < m; ++j) {
            const auto k = GroupElement<2>::unchecked(rotation(std::numbers::pi * j / m));
            s += poisson_kernel(x * k * step, xi);
        }
        const double centre = poisson_kernel(x, xi);
        EXPECT_LT(std::abs(s / m - centre) / centre, 1e-3);
    }
}

TEST(Poisson, SquareIsNotHarmonic) {
    // negative control: the mean-value test detects a non-harmonic function
    const auto x = GroupElement<2>::unchecked(Matrix<2>::diagonal({1.5, 1.0 / 1.5}));
    const BoundaryPoint xi{0.7};
    const auto step = exp_chamber(ChamberVector<2>{{0.5 / std::sqrt(2.0), -0.5 / std::sqrt(2.0)}});
    double s = 0.0;
    for (int j = 0; j < 256; ++j) {
        const auto k = GroupElement<2>::unchecked(rotation(std::numbers::pi * j / 256));
        s += std::pow(poisson_kernel(x * k * step, xi), 2);
    }
    EXPECT_GT(std::abs(s / 256 - std::pow(poisson_kernel(x, xi), 2)), 1e-2);
}

TEST(Poisson, RequiresRankOne) {
    EXPECT_THROW(poisson_kernel(GroupElement<3>(), BoundaryPoint{0.0}), UsageError);
}

TEST(Modular, AgreesWithDiagonalAndTrivialOnN) {
    Matrix<2> n = Matrix<2>::identity();
    n(0, 1) = 3.7;
    EXPECT_NEAR(modular_function(GroupElement<2>::unchecked(n)), 1.0, 1e-10);
    const auto a = GroupElement<2>::unchecked(Matrix<2>::diagonal({1.7, 1.0 / 1.7}));
    EXPECT_NEAR(modular_function(a), 1.7 * 1.7, 1e-12);
    EXPECT_THROW(modular_function(GroupElement<2>::unchecked(rotation(0.3))), UsageError);
}

TEST(Modular, IsMultiplicative) {
    std::mt19937_64 rng(5);
    std::normal_distribution<double> nd;
    for (int i = 0; i < 200; ++i) {
        auto na = [&] {
            Matrix<2> m = Matrix<2>::identity();
            const double a = std::exp(nd(rng));
            m(0, 0) = a;
            m(1, 1) = 1.0 / a;
            m(0, 1) = nd(rng);
            return GroupElement<2>::unchecked(m);
        };
        const auto g1 = na(), g2 = na();
        const double lhs = modular_function(g1 * g2), rhs = modular_function(g1) * modular_function(g2);
        EXPECT_NEAR(lhs, rhs, 1e-10 * rhs);
    }
}
