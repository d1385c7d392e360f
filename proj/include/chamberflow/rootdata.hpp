#pragma once

#include <algorithm>
#include <array>
#include <cmath>
#include <functional>
#include <string>
#include <string_view>
#include <type_traits>
#include <vector>

#include "errors.hpp"

namespace chamberflow {

enum class GroupId { sl2, sl3 };

inline GroupId parse_group_id(std::string_view s) {
    if (s == "sl2") return GroupId::sl2;
    if (s == "sl3") return GroupId::sl3;
    throw UsageError("unsupported group '" + std::string(s) + "' (expected sl2 or sl3)");
}

inline std::string to_string(GroupId g) { return g == GroupId::sl2 ? "sl2" : "sl3"; }

constexpr int matrix_size(GroupId g) { return g == GroupId::sl2 ? 2 : 3; }

template <int N>
constexpr GroupId group_of() {
    static_assert(N == 2 || N == 3, "only SL(2,R) and SL(3,R) are supported");
    return N == 2 ? GroupId::sl2 : GroupId::sl3;
}

/// Calls f(std::integral_constant<int, N>{}) with N the matrix size of the group.
template <class F>
decltype(auto) dispatch_group(GroupId g, F&& f) {
    if (g == GroupId::sl2) return std::invoke(std::forward<F>(f), std::integral_constant<int, 2>{});
    return std::invoke(std::forward<F>(f), std::integral_constant<int, 3>{});
}

/// Element H of the Cartan subspace a, stored as the diagonal of the traceless
/// matrix it represents. Inner product is the trace form tr(XY).
template <int N>
struct ChamberVector {
    std::array<double, N> coords{};

    friend constexpr ChamberVector operator+(ChamberVector a, const ChamberVector& b) {
        for (int i = 0; i < N; ++i) a.coords[i] += b.coords[i];
        return a;
    }
    friend constexpr ChamberVector operator-(ChamberVector a, const ChamberVector& b) {
        for (int i = 0; i < N; ++i) a.coords[i] -= b.coords[i];
        return a;
    }
    friend constexpr ChamberVector operator*(double s, ChamberVector a) {
        for (auto& c : a.coords) c *= s;
        return a;
    }
    friend constexpr bool operator==(const ChamberVector&, const ChamberVector&) = default;
};

template <int N>
constexpr double inner(const ChamberVector<N>& a, const ChamberVector<N>& b) {
    double s = 0.0;
    for (int i = 0; i < N; ++i) s += a.coords[i] * b.coords[i];
    return s;
}

template <int N>
inline double norm(const ChamberVector<N>& a) {
    return std::sqrt(inner(a, a));
}

/// Restricted root, stored as its metric dual in a.
template <int N>
struct Root {
    ChamberVector<N> functional;
    int multiplicity = 1;
    int double_multiplicity = 0;
};

template <int N>
struct RootSystem {
    GroupId group_id = group_of<N>();
    int rank = N - 1;
    std::vector<Root<N>> positive_roots;
    std::vector<Root<N>> simple_roots;  // indecomposable positive roots
    ChamberVector<N> weyl_vector;       // rho
    int weyl_group_order = 1;

    /// Gram matrix <alpha_i, alpha_j> of the simple roots, row-major rank x rank.
    std::vector<double> simple_gram() const {
        std::vector<double> g(rank * rank);
        for (int i = 0; i < rank; ++i)
            for (int j = 0; j < rank; ++j)
                g[i * rank + j] = inner(simple_roots[i].functional, simple_roots[j].functional);
        return g;
    }
};

/// Pairing <alpha, H> under the trace form.
template <int N>
constexpr double pair(const Root<N>& root, const ChamberVector<N>& h) {
    return inner(root.functional, h);
}

namespace detail {
template <int N>
ChamberVector<N> root_vector(int i, int j) {
    ChamberVector<N> v;
    v.coords[i] = 1.0;
    v.coords[j] = -1.0;
    return v;
}
} // namespace detail

/// Root data of sl_N: positive roots e_i - e_j (i < j), simple roots e_i - e_{i+1}.
/// Split real form, so every multiplicity is 1 and 2*alpha is never a root.
template <int N>
RootSystem<N> build_root_system() {
    static_assert(N == 2 || N == 3, "only sl2 and sl3 are supported");
    RootSystem<N> rs;
    for (int i = 0; i < N; ++i)
        for (int j = i + 1; j < N; ++j) rs.positive_roots.push_back({detail::root_vector<N>(i, j), 1, 0});
    for (int i = 0; i + 1 < N; ++i) rs.simple_roots.push_back({detail::root_vector<N>(i, i + 1), 1, 0});
    ChamberVector<N> rho;
    for (const auto& a : rs.positive_roots) rho = rho + (0.5 * a.multiplicity) * a.functional;
    rs.weyl_vector = rho;
    rs.weyl_group_order = (N == 2) ? 2 : 6;
    return rs;
}

/// Runtime-checked variant: the requested group must match the template size.
template <int N>
RootSystem<N> build_root_system(GroupId g) {
    if (matrix_size(g) != N) throw UsageError("group " + to_string(g) + " does not match matrix size");
    return build_root_system<N>();
}

/// Coroot 2 alpha / <alpha, alpha>.
template <int N>
ChamberVector<N> coroot(const Root<N>& a) {
    return (2.0 / inner(a.functional, a.functional)) * a.functional;
}

/// min over positive roots of <alpha, H>: > 0 inside the chamber, 0 on a wall, < 0 outside.
template <int N>
double chamber_distance(const RootSystem<N>& rs, const ChamberVector<N>& h) {
    double d = INFINITY;
    for (const auto& a : rs.positive_roots) d = std::min(d, pair(a, h));
    return d;
}

template <int N>
double chamber_distance(const ChamberVector<N>& h) {
    static const RootSystem<N> rs = build_root_system<N>();
    return chamber_distance(rs, h);
}

/// Representative of the W-orbit in the closed positive chamber. W = S_N acts
/// by permuting diagonal entries, so this is a nonincreasing sort.
template <int N>
ChamberVector<N> weyl_reduce(ChamberVector<N> h) {
    std::sort(h.coords.begin(), h.coords.end(), std::greater<>());
    return h;
}

/// Wall proximity below which a vector is treated as singular.
inline constexpr double wall_tolerance = 1e-9;

/// H with <alpha_i, H> = u_i for the simple roots, i.e. sum_i u_i * (fundamental coweight i).
template <int N>
ChamberVector<N> from_simple_pairings(const std::array<double, N - 1>& u) {
    // For sl_N: h_i - h_{i+1} = u_i, sum h_i = 0.
    ChamberVector<N> h;
    double acc = 0.0;
    for (int i = 1; i < N; ++i) {
        acc -= u[i - 1];
        h.coords[i] = acc;
    }
    double mean = 0.0;
    for (double c : h.coords) mean += c;
    mean /= N;
    for (auto& c : h.coords) c -= mean;
    return h;
}

template <int N>
std::array<double, N - 1> simple_pairings(const RootSystem<N>& rs, const ChamberVector<N>& h) {
    std::array<double, N - 1> u{};
    for (int i = 0; i < N - 1; ++i) u[i] = pair(rs.simple_roots[i], h);
    return u;
}

} // namespace chamberflow
