#pragma once

#include <algorithm>
#include <array>
#include <cmath>
#include <cstddef>
#include <optional>
#include <string>
#include <vector>

#include "errors.hpp"
#include "parallel.hpp"
#include "rootdata.hpp"

namespace chamberflow {

/// Neumaier-compensated running sum; order of additions is the caller's.
class CompensatedSum {
public:
    void add(double x) {
        const double t = sum_ + x;
        if (std::abs(sum_) >= std::abs(x))
            comp_ += (sum_ - t) + x;
        else
            comp_ += (x - t) + sum_;
        sum_ = t;
    }
    double value() const { return sum_ + comp_; }

private:
    double sum_ = 0.0;
    double comp_ = 0.0;
};

namespace detail {
inline double log_sinh(double u) {
    if (u > 20.0) return u - std::log(2.0) + std::log1p(-std::exp(-2.0 * u));
    return std::log(std::sinh(u));
}

template <int N>
void require_closed_chamber(const RootSystem<N>& rs, const ChamberVector<N>& h, const char* op) {
    if (chamber_distance(rs, h) < -1e-10)
        throw UsageError(std::string("heatkernel::") + op + ": H lies outside the closed positive chamber");
}
} // namespace detail

/// Logarithm of the two-sided heat kernel bound on G/K with the comparison
/// constant set to 1:
///   t^{-l/2} prod_{simple a} ((1+<a,H>)/t) (1 + (1+<a,H>)/t)^{(m_a+m_2a)/2 - 1}
///   * exp(-|rho|^2 t - <rho,H> - |H|^2 / 4t).
template <int N>
double log_envelope(const RootSystem<N>& rs, const ChamberVector<N>& h, double t) {
    if (!(t > 0.0)) throw UsageError("heatkernel::log_envelope: t must be positive");
    detail::require_closed_chamber(rs, h, "log_envelope");
    const auto& rho = rs.weyl_vector;
    double v = -0.5 * rs.rank * std::log(t);
    for (const auto& a : rs.simple_roots) {
        const double x = (1.0 + pair(a, h)) / t;
        const double expo = 0.5 * (a.multiplicity + a.double_multiplicity) - 1.0;
        v += std::log(x) + expo * std::log1p(x);
    }
    v += -inner(rho, rho) * t - inner(rho, h) - inner(h, h) / (4.0 * t);
    return v;
}

/// log of prod_{positive a} sinh(<a,H>)^{m_a}, the K-orbit volume through exp(H)
/// with unit normalization. Empty on walls, where the orbit is lower-dimensional.
template <int N>
std::optional<double> log_orbit_volume(const RootSystem<N>& rs, const ChamberVector<N>& h) {
    detail::require_closed_chamber(rs, h, "log_orbit_volume");
    double v = 0.0;
    for (const auto& a : rs.positive_roots) {
        const double u = pair(a, h);
        if (!(u > 0.0)) return std::nullopt;
        v += a.multiplicity * detail::log_sinh(u);
    }
    return v;
}

/// Box and spacing in simple-root pairing coordinates u_i = <alpha_i, H>.
template <int N>
struct GridSpec {
    std::array<double, N - 1> rmax{};
    double step = 0.0;
};

inline constexpr int min_cells_per_axis = 400;

/// Pairing range [0, <alpha,2 rho> t + 8 sqrt(t) |alpha|] per simple root. The
/// step is 1/m for the smallest integer m giving at least 400 cells on every
/// axis, so rho (with <alpha_i, rho> = 1) is a lattice vector.
template <int N>
GridSpec<N> default_grid_spec(const RootSystem<N>& rs, double t) {
    if (!(t > 0.0)) throw UsageError("heatkernel::default_grid_spec: t must be positive");
    GridSpec<N> spec;
    double shortest = INFINITY;
    for (int i = 0; i < N - 1; ++i) {
        const auto& a = rs.simple_roots[i].functional;
        spec.rmax[i] = inner(a, 2.0 * rs.weyl_vector) * t + 8.0 * std::sqrt(t) * norm(a);
        shortest = std::min(shortest, spec.rmax[i]);
    }
    spec.step = 1.0 / std::ceil(min_cells_per_axis / shortest);
    return spec;
}

/// Normalized radial flight density u_t on a box in the closed positive chamber.
template <int N>
struct RadialDensityGrid {
    static constexpr int rank = N - 1;

    RootSystem<N> root_system;
    std::array<double, rank> box{};  // rmax per simple root
    std::array<int, rank> cells{};
    double step = 0.0;
    double t = 0.0;
    double cell_measure = 0.0;  // Lebesgue volume of one cell in a
    std::vector<double> values;  // density per cell, unit mass

    std::size_t size() const { return values.size(); }

    std::array<int, rank> unflatten(std::size_t flat) const {
        std::array<int, rank> idx{};
        for (int d = 0; d < rank; ++d) {
            idx[d] = static_cast<int>(flat % cells[d]);
            flat /= cells[d];
        }
        return idx;
    }

    std::optional<std::size_t> flatten(const std::array<long, rank>& idx) const {
        std::size_t flat = 0, stride = 1;
        for (int d = 0; d < rank; ++d) {
            if (idx[d] < 0 || idx[d] >= cells[d]) return std::nullopt;
            flat += static_cast<std::size_t>(idx[d]) * stride;
            stride *= cells[d];
        }
        return flat;
    }

    std::array<double, rank> center_pairings(std::size_t flat) const {
        const auto idx = unflatten(flat);
        std::array<double, rank> u{};
        for (int d = 0; d < rank; ++d) u[d] = (idx[d] + 0.5) * step;
        return u;
    }

    ChamberVector<N> center(std::size_t flat) const { return from_simple_pairings<N>(center_pairings(flat)); }

    double total_mass() const {
        CompensatedSum s;
        for (double v : values) s.add(v * cell_measure);
        return s.value();
    }

    std::size_t argmax() const {
        return static_cast<std::size_t>(std::max_element(values.begin(), values.end()) - values.begin());
    }
};

template <int N>
RadialDensityGrid<N> flight_density_grid(double t, const RootSystem<N>& rs, const GridSpec<N>& spec,
                                         int workers = default_workers()) {
    constexpr int rank = N - 1;
    if (!(t > 0.0)) throw UsageError("heatkernel::flight_density_grid: t must be positive");
    if (!(spec.step > 0.0)) throw UsageError("heatkernel::flight_density_grid: step must be positive");

    RadialDensityGrid<N> grid;
    grid.root_system = rs;
    grid.box = spec.rmax;
    grid.step = spec.step;
    grid.t = t;
    std::size_t total = 1;
    for (int d = 0; d < rank; ++d) {
        if (!(spec.rmax[d] > 0.0)) throw UsageError("heatkernel::flight_density_grid: empty box");
        grid.cells[d] = static_cast<int>(std::ceil(spec.rmax[d] / spec.step - 1e-9));
        total *= grid.cells[d];
    }
    // Cell volume in a: du_1...du_l / sqrt(det Gram(simple roots)).
    const auto gram = rs.simple_gram();
    const double gram_det = rank == 1 ? gram[0] : gram[0] * gram[3] - gram[1] * gram[2];
    grid.cell_measure = std::pow(spec.step, rank) / std::sqrt(gram_det);

    std::vector<double> logv(total);
    const std::size_t row = grid.cells[0];
    const std::size_t rows = total / row;
    parallel_for(rows, workers, [&](std::size_t r) {
        for (std::size_t c = 0; c < row; ++c) {
            const std::size_t flat = r * row + c;
            const auto h = grid.center(flat);
            const auto vol = log_orbit_volume(rs, h);
            logv[flat] = vol ? log_envelope(rs, h, t) + *vol : -INFINITY;
        }
    });

    const double peak = *std::max_element(logv.begin(), logv.end());
    if (!std::isfinite(peak))
        throw NumericalFailure("heatkernel", "flight_density_grid", "density vanishes on the whole grid");
    grid.values.resize(total);
    CompensatedSum mass;
    for (std::size_t i = 0; i < total; ++i) {
        grid.values[i] = std::exp(logv[i] - peak);
        mass.add(grid.values[i] * grid.cell_measure);
    }
    const double inv = 1.0 / mass.value();
    for (auto& v : grid.values) v *= inv;

    CompensatedSum edge;
    for (std::size_t i = 0; i < total; ++i) {
        const auto idx = grid.unflatten(i);
        for (int d = 0; d < rank; ++d)
            if (idx[d] == grid.cells[d] - 1) {
                edge.add(grid.values[i] * grid.cell_measure);
                break;
            }
    }
    if (edge.value() > 1e-6)
        throw NumericalFailure("heatkernel", "flight_density_grid",
                               "box too small: outer cells carry mass " + std::to_string(edge.value()) +
                                   " > 1e-6; enlarge the box");
    return grid;
}

template <int N>
RadialDensityGrid<N> flight_density_grid(double t, const RootSystem<N>& rs, int workers = default_workers()) {
    return flight_density_grid(t, rs, default_grid_spec(rs, t), workers);
}

template <int N>
struct ShiftResult {
    double value = 0.0;
    ChamberVector<N> h0_used;  // H0 after snapping to the grid lattice
    std::array<long, N - 1> offset{};
    bool rounded = false;
};

/// sum over cells of |u(H) - u(H + H0)| * cell volume; reads past the box are 0.
template <int N>
ShiftResult<N> shift_l1_distance(const RadialDensityGrid<N>& grid, const ChamberVector<N>& h0) {
    constexpr int rank = N - 1;
    detail::require_closed_chamber(grid.root_system, h0, "shift_l1_distance");
    ShiftResult<N> res;
    std::array<double, rank> snapped{};
    const auto u0 = simple_pairings(grid.root_system, h0);
    for (int d = 0; d < rank; ++d) {
        res.offset[d] = std::lround(u0[d] / grid.step);
        snapped[d] = res.offset[d] * grid.step;
        if (std::abs(snapped[d] - u0[d]) > 1e-12 * std::max(1.0, std::abs(u0[d]))) res.rounded = true;
    }
    res.h0_used = from_simple_pairings<N>(snapped);

    CompensatedSum s;
    for (std::size_t i = 0; i < grid.size(); ++i) {
        const auto idx = grid.unflatten(i);
        std::array<long, rank> shifted{};
        for (int d = 0; d < rank; ++d) shifted[d] = idx[d] + res.offset[d];
        const auto j = grid.flatten(shifted);
        const double other = j ? grid.values[*j] : 0.0;
        s.add(std::abs(grid.values[i] - other) * grid.cell_measure);
    }
    res.value = s.value();
    return res;
}

/// Mass of u_t within Euclidean distance |H0| of the wall <alpha_face, H> = 0.
template <int N>
double slab_mass(const RadialDensityGrid<N>& grid, const ChamberVector<N>& h0, int face) {
    constexpr int rank = N - 1;
    if (face < 0 || face >= rank) throw UsageError("heatkernel::slab_mass: face index out of range");
    // distance to the wall is u_face / |alpha_face|
    const double limit = norm(h0) * norm(grid.root_system.simple_roots[face].functional);
    CompensatedSum s;
    for (std::size_t i = 0; i < grid.size(); ++i) {
        const double lo = grid.unflatten(i)[face] * grid.step;
        const double frac = std::clamp((limit - lo) / grid.step, 0.0, 1.0);
        if (frac > 0.0) s.add(grid.values[i] * grid.cell_measure * frac);
    }
    return s.value();
}

/// Fraction of mass within Euclidean radius t^{(1+eps)/2} of 2 rho t. Cells cut
/// by the sphere are split by supersampling (exact interval overlap in rank 1).
template <int N>
double concentration_fraction(const RadialDensityGrid<N>& grid, double eps) {
    constexpr int rank = N - 1;
    const auto& rs = grid.root_system;
    const double radius = std::pow(grid.t, 0.5 * (1.0 + eps));
    const auto c = simple_pairings(rs, (2.0 * grid.t) * rs.weyl_vector);
    const double h = grid.step;

    auto dist = [&](const std::array<double, rank>& u) {
        std::array<double, rank> du{};
        for (int d = 0; d < rank; ++d) du[d] = u[d] - c[d];
        return norm(from_simple_pairings<N>(du));
    };
    double half_diag = 0.0;
    {
        std::array<double, rank> corner{};
        for (int mask = 0; mask < (1 << rank); ++mask) {
            for (int d = 0; d < rank; ++d) corner[d] = ((mask >> d) & 1) ? 0.5 * h : -0.5 * h;
            half_diag = std::max(half_diag, norm(from_simple_pairings<N>(corner)));
        }
    }

    constexpr int sub = 16;
    CompensatedSum s;
    for (std::size_t i = 0; i < grid.size(); ++i) {
        const auto u = grid.center_pairings(i);
        const double d = dist(u);
        double frac;
        if (d + half_diag <= radius) {
            frac = 1.0;
        } else if (d - half_diag >= radius) {
            frac = 0.0;
        } else if constexpr (rank == 1) {
            // metric length per unit pairing is 1/|alpha|; the ball is an interval
            const double scale = norm(from_simple_pairings<N>({1.0}));
            const double lo = std::max(u[0] - 0.5 * h, c[0] - radius / scale);
            const double hi = std::min(u[0] + 0.5 * h, c[0] + radius / scale);
            frac = std::max(0.0, hi - lo) / h;
        } else {
            int inside = 0;
            std::array<double, rank> p{};
            for (int a = 0; a < sub; ++a)
                for (int b = 0; b < sub; ++b) {
                    p[0] = u[0] + ((a + 0.5) / sub - 0.5) * h;
                    p[1] = u[1] + ((b + 0.5) / sub - 0.5) * h;
                    if (dist(p) <= radius) ++inside;
                }
            frac = static_cast<double>(inside) / (sub * sub);
        }
        if (frac > 0.0) s.add(grid.values[i] * grid.cell_measure * frac);
    }
    return s.value();
}

} // namespace chamberflow
