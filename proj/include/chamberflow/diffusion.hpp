#pragma once

#include <array>
#include <cmath>
#include <cstdint>
#include <numbers>
#include <optional>
#include <random>
#include <string>
#include <utility>
#include <vector>

#include "decomp.hpp"
#include "errors.hpp"
#include "parallel.hpp"
#include "rng.hpp"
#include "rootdata.hpp"

namespace chamberflow {

struct DiffusionConfig {
    GroupId group = GroupId::sl2;
    double step_length = 0.02;  // geodesic step epsilon
    std::uint64_t seed = 7;
    int paths = 1;
    double horizon = 0.0;

    void validate() const {
        if (!(step_length > 0.0) || step_length > 0.05)
            throw UsageError("diffusion: step length must lie in (0, 0.05]");
        if (paths < 1) throw UsageError("diffusion: paths must be >= 1");
        if (!(horizon >= 0.0) || !std::isfinite(horizon)) throw UsageError("diffusion: horizon must be >= 0");
    }
};

/// dim G/K for SL(N, R).
constexpr int symmetric_space_dim(int n) { return n * (n + 1) / 2 - 1; }

/// Time advanced by one geodesic step of length eps under D_t = exp(t Delta):
/// E|dx|^2 = 2 n dt in dimension n.
inline double time_increment(GroupId g, double eps) {
    return eps * eps / (2.0 * symmetric_space_dim(matrix_size(g)));
}

/// Geodesic random walk on G/K = SL(N)/SO(N). The state is the NA Iwasawa
/// representative n*a of the current point; each step multiplies by
/// exp(eps X) for X uniform on the unit sphere of p and re-factors, keeping
/// the diagonal a in product form so huge and tiny entries never mix.
template <int N>
class Walker {
public:
    Walker(const DiffusionConfig& cfg, std::uint64_t path_index)
        : rng_(cfg.seed, path_index, stream_purpose::walk),
          eps_(cfg.step_length),
          dt_(time_increment(group_of<N>(), cfg.step_length)) {
        static_assert(N == 2 || N == 3);
        if (matrix_size(cfg.group) != N) throw UsageError("diffusion: config group does not match walker");
        cfg.validate();
        if constexpr (N == 2) {
            ch_ = std::cosh(eps_ / std::numbers::sqrt2);
            sh_ = std::sinh(eps_ / std::numbers::sqrt2);
        }
    }

    /// Number of steps needed to reach accumulated time >= horizon.
    std::uint64_t steps_for(double horizon) const {
        const double s = std::ceil(horizon / dt_ - 1e-9);
        if (!(s < 1e13))
            throw NumericalFailure("diffusion", "simulate_path", "step count overflow for horizon " +
                                                                     std::to_string(horizon));
        return s > 0 ? static_cast<std::uint64_t>(s) : 0;
    }

    /// Continue the path until its accumulated time reaches the horizon.
    void advance_to(double horizon) {
        advance_to(horizon, [](Walker&) {});
    }

    /// As above, calling on_step(*this) after every step.
    template <class OnStep>
    void advance_to(double horizon, OnStep&& on_step) {
        const std::uint64_t target = steps_for(horizon);
        while (steps_ < target) {
            const std::uint64_t chunk_end = std::min<std::uint64_t>(target, steps_ + 4096);
            for (; steps_ < chunk_end;) {
                step();
                ++steps_;
                on_step(*this);
            }
            if (!finite())
                throw NumericalFailure("diffusion", "simulate_path",
                                       "non-finite state at step " + std::to_string(steps_));
        }
    }

    /// Point x + i y of the upper half plane (sl2 only).
    std::pair<double, double> half_plane() const
        requires(N == 2)
    {
        return {x_, y_};
    }

    /// Move the current point by the isometry m in SL(2) acting on the left.
    void apply_left(const Matrix<2>& m)
        requires(N == 2)
    {
        const double a = m(0, 0), b = m(0, 1), c = m(1, 0), d = m(1, 1);
        const double re = c * x_ + d, im = c * y_;
        const double den = re * re + im * im;
        x_ = ((a * x_ + b) * re + a * c * y_ * y_) / den;
        y_ /= den;
    }

    /// Continue the path as seen through the isometry p: after apply_left(p)
    /// the increments are rotated by the K-part of p y, so the moved path is
    /// p applied to the path that would have been drawn without the move.
    void set_frame(const Matrix<2>& p)
        requires(N == 2)
    {
        frame_a_ = p(0, 0);
        frame_c_ = p(1, 0);
    }

    double elapsed() const { return static_cast<double>(steps_) * dt_; }
    std::uint64_t steps() const { return steps_; }

    /// Current point as the group element n*a.
    GroupElement<N> endpoint() const {
        Matrix<N> m;
        if constexpr (N == 2) {
            const double a1 = std::sqrt(y_);
            m(0, 0) = a1;
            m(0, 1) = x_ / a1;
            m(1, 1) = 1.0 / a1;
        } else {
            for (int i = 0; i < 3; ++i) {
                m(i, i) = a_[i];
                for (int j = i + 1; j < 3; ++j) m(i, j) = n_[i][j] * a_[j];
            }
        }
        return GroupElement<N>::unchecked(m);
    }

private:
    bool finite() const {
        if constexpr (N == 2) {
            return std::isfinite(x_) && std::isfinite(y_) && y_ > 0.0;
        } else {
            return std::isfinite(n_[0][1]) && std::isfinite(n_[0][2]) && std::isfinite(n_[1][2]) && a_[0] > 0.0 &&
                   a_[1] > 0.0 && a_[2] > 0.0 && std::isfinite(a_[0]) && std::isfinite(a_[1]) &&
                   std::isfinite(a_[2]);
        }
    }

    void step() {
        if constexpr (N == 2) {
            // exp(eps X) = cosh(eps/sqrt2) I + sinh(eps/sqrt2) (cos D + sin O)
            auto [c, s] = rng_.unit_circle();
            if (frame_c_ != 0.0) {
                // K-part of p y is the rotation by arg(c z + d) = -arg(a - c z'); X turns by twice that
                const double ur = frame_a_ - frame_c_ * x_, ui = frame_c_ * y_;
                const double inv = 1.0 / (ur * ur + ui * ui);
                const double cos2 = (ur * ur - ui * ui) * inv, sin2 = 2.0 * ur * ui * inv;
                const double c2 = c * cos2 - s * sin2;
                s = c * sin2 + s * cos2;
                c = c2;
            }
            const double e11 = ch_ + sh_ * c, e22 = ch_ - sh_ * c, e12 = sh_ * s;
            const double q = e12 * e12 + e22 * e22;  // |row 2|^2
            const double p = e11 * e12 + e12 * e22;  // row 1 . row 2
            x_ += y_ * p / q;
            y_ /= q;
        } else {
            const auto z = rng_.unit_sphere4();
            const double f = eps_;
            constexpr double r2 = 1.0 / std::numbers::sqrt2;
            const double r6 = 1.0 / std::sqrt(6.0);
            Matrix<3> x;
            x(0, 0) = f * (z[0] * r2 + z[1] * r6);
            x(1, 1) = f * (-z[0] * r2 + z[1] * r6);
            x(2, 2) = f * (-2.0 * z[1] * r6);
            x(0, 1) = x(1, 0) = f * z[2] * r2;
            x(0, 2) = x(2, 0) = f * z[3] * r2;
            x(1, 2) = x(2, 1) = f * z[4] * r2;
            // E = exp(eps X) = n_E s k_E (RQ); then E E^T = exp(2 eps X) = n_E s^2 n_E^T,
            // so n_E and s come from a bottom-up Cholesky of the symmetric exponential.
            const Matrix<3> p = small_exp(2.0 * x);
            const double s3sq = p(2, 2);
            const double n23 = p(1, 2) / s3sq, n13 = p(0, 2) / s3sq;
            const double s2sq = p(1, 1) - p(1, 2) * n23;
            const double n12 = (p(0, 1) - p(0, 2) * n23) / s2sq;
            const double s3 = std::sqrt(s3sq), s2 = std::sqrt(s2sq), s1 = 1.0 / (s2 * s3);
            const double m12 = n12 * a_[0] / a_[1], m13 = n13 * a_[0] / a_[2], m23 = n23 * a_[1] / a_[2];
            n_[0][2] += n_[0][1] * m23 + m13;
            n_[0][1] += m12;
            n_[1][2] += m23;
            a_[0] *= s1;
            a_[1] *= s2;
            a_[2] *= s3;
        }
    }

    // exp of a traceless symmetric 3x3 with |x| <= 0.1: X^3 = q X + d I.
    // Twelve series terms reach 0.1^12 / 12! < 1e-20.
    static Matrix<3> small_exp(const Matrix<3>& x) {
        static constexpr std::array<double, 12> inv_fact{
            1.0,       1.0,       1.0 / 2,    1.0 / 6,     1.0 / 24,     1.0 / 120,
            1.0 / 720, 1.0 / 5040, 1.0 / 40320, 1.0 / 362880, 1.0 / 3628800, 1.0 / 39916800};
        const Matrix<3> x2 = x * x;
        const double q = 0.5 * trace(x2);
        const double d = determinant(x);
        double p = 1.0, r1 = 0.0, r2 = 0.0;
        double c0 = 0.0, c1 = 0.0, c2 = 0.0;
        for (double w : inv_fact) {
            c0 += p * w;
            c1 += r1 * w;
            c2 += r2 * w;
            const double np = r2 * d, nr1 = p + r2 * q, nr2 = r1;
            p = np;
            r1 = nr1;
            r2 = nr2;
        }
        Matrix<3> e;
        for (int i = 0; i < 9; ++i) e.m[i] = c1 * x.m[i] + c2 * x2.m[i];
        for (int i = 0; i < 3; ++i) e(i, i) += c0;
        return e;
    }

    Philox rng_;
    double eps_;
    double dt_;
    std::uint64_t steps_ = 0;
    // N == 2: point x + i y in the upper half plane (y = a_1^2)
    double x_ = 0.0, y_ = 1.0;
    double frame_a_ = 1.0, frame_c_ = 0.0;  // first column of the frame set by set_frame
    double ch_ = 1.0, sh_ = 0.0;
    // N == 3: unit upper triangular n and diagonal a
    std::array<std::array<double, 3>, 3> n_{};
    std::array<double, 3> a_{1.0, 1.0, 1.0};
};

template <int N>
struct PathEndpoint {
    GroupElement<N> endpoint;
    double elapsed = 0.0;
};

/// Endpoint of one path started at the base point, run to cfg.horizon.
template <int N>
PathEndpoint<N> simulate_path(const DiffusionConfig& cfg, std::uint64_t path_index) {
    Walker<N> w(cfg, path_index);
    w.advance_to(cfg.horizon);
    return {w.endpoint(), w.elapsed()};
}

/// Krylov-Bogolyubov horizon: uniform on {0, ..., n-1} from the path's own substream.
inline int kb_horizon(const DiffusionConfig& cfg, int n, std::uint64_t path_index) {
    if (n < 1) throw UsageError("diffusion::kb_sample: n must be >= 1");
    Philox rng(cfg.seed, path_index, stream_purpose::kb_horizon);
    return std::uniform_int_distribution<int>(0, n - 1)(rng);
}

template <int N>
struct KbSample {
    GroupElement<N> endpoint;
    int horizon = 0;
};

/// One draw from the Krylov-Bogolyubov mean (1/n) sum_{t<n} D_t delta_p.
template <int N>
KbSample<N> kb_sample(const DiffusionConfig& cfg, int n, std::uint64_t path_index) {
    const int horizon = kb_horizon(cfg, n, path_index);
    Walker<N> w(cfg, path_index);
    w.advance_to(horizon);
    return {w.endpoint(), horizon};
}

template <int N>
struct DiffusionSampleSet {
    DiffusionConfig config;
    std::vector<GroupElement<N>> endpoints;
    std::vector<double> elapsed;
    std::vector<std::uint64_t> streams;  // per-path substream id
};

template <int N>
DiffusionSampleSet<N> simulate(const DiffusionConfig& cfg, int workers = default_workers()) {
    cfg.validate();
    DiffusionSampleSet<N> set;
    set.config = cfg;
    set.endpoints.resize(cfg.paths);
    set.elapsed.resize(cfg.paths);
    set.streams.resize(cfg.paths);
    parallel_for(cfg.paths, workers, [&](std::size_t i) {
        const auto r = simulate_path<N>(cfg, i);
        set.endpoints[i] = r.endpoint;
        set.elapsed[i] = r.elapsed;
        set.streams[i] = i;
    });
    return set;
}

/// Point of the Furstenberg boundary K/M = G/B of SL(2,R): the line through
/// (cos angle, sin angle). angle lies in [0, pi); M = {+-I} identifies
/// antipodal directions.
struct BoundaryPoint {
    double angle = 0.0;

    static BoundaryPoint from_angle(double a) {
        a = std::fmod(a, std::numbers::pi);
        if (a < 0) a += std::numbers::pi;
        if (a >= std::numbers::pi) a = 0.0;
        return {a};
    }

    static BoundaryPoint from_vector(double vx, double vy) { return from_angle(std::atan2(vy, vx)); }

    /// Position e^{i psi} on the unit circle of the Poincare disk; the rotation by
    /// `angle` in SO(2) acts on the disk as rotation by -2 * angle.
    double disk_angle() const {
        double d = std::fmod(-2.0 * angle, 2.0 * std::numbers::pi);
        if (d < 0) d += 2.0 * std::numbers::pi;
        return d;
    }

    /// Action of g in SL(2) on the boundary (linear action on the line).
    BoundaryPoint moved_by(const Matrix<2>& g) const {
        const double c = std::cos(angle), s = std::sin(angle);
        return from_vector(g(0, 0) * c + g(0, 1) * s, g(1, 0) * c + g(1, 1) * s);
    }
};

/// Exit direction of an sl2 endpoint: the K/M angle of k1 in its Cartan
/// decomposition. Empty when the radial part is on the wall (endpoint at p).
inline std::optional<BoundaryPoint> exit_direction(const GroupElement<2>& endpoint) {
    const auto ct = cartan(endpoint);
    const auto h = radial_from_singular_values<2>({ct.a_part(0, 0), ct.a_part(1, 1)});
    if (chamber_distance(h) <= wall_tolerance) return std::nullopt;
    return BoundaryPoint::from_vector(ct.k1(0, 0), ct.k1(1, 0));
}

struct ExitHistogram {
    std::vector<long> counts;
    long wall_samples = 0;
    long total = 0;  // samples binned
    double max_abs_z = 0.0;  // max |count - expected| / multinomial sd
};

inline ExitHistogram exit_histogram(const std::vector<GroupElement<2>>& endpoints, int bins) {
    if (bins < 1) throw UsageError("diffusion::exit_histogram: bins must be >= 1");
    ExitHistogram h;
    h.counts.assign(bins, 0);
    for (const auto& e : endpoints) {
        const auto b = exit_direction(e);
        if (!b) {
            ++h.wall_samples;
            continue;
        }
        int k = static_cast<int>(b->angle / std::numbers::pi * bins);
        h.counts[std::min(k, bins - 1)]++;
        ++h.total;
    }
    const double p = 1.0 / bins;
    const double expected = h.total * p;
    const double sd = std::sqrt(h.total * p * (1.0 - p));
    for (long c : h.counts) h.max_abs_z = std::max(h.max_abs_z, sd > 0 ? std::abs(c - expected) / sd : 0.0);
    return h;
}

/// Poisson kernel k(p, x p, xi) of the hyperbolic plane in the disk model,
/// (1 - |w|^2) / |w - xi|^2 with w the disk image of x * i. Rank one only.
template <int N>
double poisson_kernel(const GroupElement<N>& x, const BoundaryPoint& xi) {
    if constexpr (N != 2) {
        throw UsageError("diffusion::poisson_kernel: only defined for sl2");
    } else {
        // z = x . i in the upper half plane
        const double a = x(0, 0), b = x(0, 1), c = x(1, 0), d = x(1, 1);
        const double den = c * c + d * d;
        const double zr = (a * c + b * d) / den, zi = (a * d - b * c) / den;
        // With w = (z - i)/(z + i): 1 - |w|^2 = 4 Im z / |z + i|^2 and
        // w - xi = ((1 - xi) z - i (1 + xi)) / (z + i).
        const double psi = xi.disk_angle();
        const double xr = std::cos(psi), xim = std::sin(psi);
        const double ur = 1.0 - xr, ui = -xim;       // 1 - xi
        const double vr = 1.0 + xr, vi = xim;        // 1 + xi
        const double nr = ur * zr - ui * zi + vi;    // Re((1 - xi) z - i (1 + xi))
        const double ni = ur * zi + ui * zr - vr;    // Im(...)
        return 4.0 * zi / (nr * nr + ni * ni);
    }
}

/// Modular function of NA < SL(2,R): delta(g) = k(p, g p, zeta) with zeta the
/// boundary point fixed by NA (angle 0, i.e. infinity in the half plane).
inline double modular_function(const GroupElement<2>& g) {
    const double scale = std::max(1.0, max_abs(g.matrix()));
    if (std::abs(g(1, 0)) > 1e-10 * scale || !(g(0, 0) > 0.0) || !(g(1, 1) > 0.0))
        throw UsageError("diffusion::modular_function: argument is not in NA");
    return poisson_kernel(g, BoundaryPoint{0.0});
}

} // namespace chamberflow
