#pragma once

#include <chrono>
#include <cmath>
#include <functional>
#include <numbers>
#include <random>
#include <string>
#include <vector>

#include <fmt/format.h>

#include "decomp.hpp"
#include "diffusion.hpp"
#include "heatkernel.hpp"
#include "io.hpp"
#include "lamination.hpp"
#include "rng.hpp"
#include "rootdata.hpp"

namespace chamberflow::acceptance {

// Pinned thresholds.
inline constexpr double c1_roundtrip = 1e-9;
inline constexpr double c1_chamber_violation = 1e-10;
inline constexpr double c1_seconds = 2.0;
inline constexpr double c2_pairing = 1e-12;
inline constexpr double c3_shift_ratio = 0.3;
inline constexpr double c3_slab_ratio = 0.1;
inline constexpr double c3_seconds = 60.0;
inline constexpr double c4_fraction = 0.95;
inline constexpr double c4_epsilon = 0.2;
inline constexpr double c4_argmax_cells = 2.0;
inline constexpr double c5_drift = 0.05;
inline constexpr double c5_halving = 0.01;
inline constexpr double c6_max_z = 5.0;
inline constexpr double c7_mean_value = 1e-3;
inline constexpr double c7_modular = 1e-10;
inline constexpr double c8_deficit = 3.0;
inline constexpr double c8_control_ratio = 10.0;
inline constexpr double c8_seconds = 120.0;

inline constexpr std::uint64_t seed = 7;

struct Check {
    std::string text;
    bool ok = true;
};

struct CriterionResult {
    int id = 0;
    std::string title;
    std::vector<Check> checks;
    double seconds = 0.0;
    std::string values;  // canonical dump of every computed number, for reproducibility

    bool passed() const {
        for (const auto& c : checks)
            if (!c.ok) return false;
        return true;
    }

    std::string line() const {
        std::string s = fmt::format("[{}] criterion {} ({}):", passed() ? "PASS" : "FAIL", id, title);
        for (std::size_t i = 0; i < checks.size(); ++i)
            s += fmt::format("{} {}{}", i ? ";" : "", checks[i].text, checks[i].ok ? "" : " [failed]");
        return s + fmt::format(" ({:.1f} s)", seconds);
    }
};

/// Full size, or the reduced size used for the worker-count comparison.
struct Options {
    int workers = default_workers();
    bool reduced = false;
};

namespace detail {

class Recorder {
public:
    Recorder(int id, std::string title) : start_(std::chrono::steady_clock::now()) {
        r_.id = id;
        r_.title = std::move(title);
    }

    void value(const std::string& key, double v) { r_.values += key + "=" + format_double(v) + "\n"; }

    bool check(bool ok, std::string text) {
        r_.checks.push_back({std::move(text), ok});
        return ok;
    }

    double elapsed() const { return std::chrono::duration<double>(std::chrono::steady_clock::now() - start_).count(); }

    CriterionResult finish() {
        r_.seconds = elapsed();
        return std::move(r_);
    }

private:
    CriterionResult r_;
    std::chrono::steady_clock::time_point start_;
};

template <int N>
Matrix<N> random_unimodular(Philox& rng) {
    std::normal_distribution<double> nd;
    for (;;) {
        Matrix<N> m;
        for (auto& x : m.m) x = nd(rng);
        double d = determinant(m);
        if (std::abs(d) < 1e-3) continue;
        if (d < 0) {
            for (int j = 0; j < N; ++j) m(0, j) = -m(0, j);
            d = -d;
        }
        const double s = std::pow(d, -1.0 / N);
        for (auto& x : m.m) x *= s;
        return m;
    }
}

template <int N>
void decomposition_suite(Recorder& rec, const char* name) {
    Philox rng(seed, N, stream_purpose::test);
    double iw = 0.0, ca = 0.0, violation = 0.0;
    for (int i = 0; i < 1000; ++i) {
        const auto g = GroupElement<N>::unchecked(random_unimodular<N>(rng));
        const auto t = iwasawa(g);
        iw = std::max(iw, max_abs_diff((t.n_part * t.a_part * t.k_part).matrix(), g.matrix()));
        const auto c = cartan(g);
        ca = std::max(ca, max_abs_diff((c.k1 * c.a_part * c.k2).matrix(), g.matrix()));
        violation = std::max(violation, -chamber_distance(radial_component(g)));
    }
    rec.value(std::string(name) + ".iwasawa", iw);
    rec.value(std::string(name) + ".cartan", ca);
    rec.value(std::string(name) + ".violation", violation);
    rec.check(iw < c1_roundtrip, fmt::format("{} iwasawa error {:.2e} < {:.0e}", name, iw, c1_roundtrip));
    rec.check(ca < c1_roundtrip, fmt::format("{} cartan error {:.2e} < {:.0e}", name, ca, c1_roundtrip));
    rec.check(violation < c1_chamber_violation,
              fmt::format("{} chamber violation {:.2e} < {:.0e}", name, std::max(0.0, violation), c1_chamber_violation));
}

template <int N>
void root_identities(Recorder& rec, const char* name) {
    const auto rs = build_root_system<N>();
    double worst = 0.0;
    for (const auto& a : rs.simple_roots) worst = std::max(worst, std::abs(inner(rs.weyl_vector, coroot(a)) - 1.0));
    rec.value(std::string(name) + ".pairing", worst);
    rec.check(worst <= c2_pairing, fmt::format("{} max |<rho, coroot> - 1| {:.1e} <= {:.0e}", name, worst, c2_pairing));
    Philox rng(seed, 10 + N, stream_purpose::test);
    std::normal_distribution<double> nd;
    int broken = 0;
    for (int i = 0; i < 1000; ++i) {
        ChamberVector<N> h;
        for (auto& c : h.coords) c = nd(rng);
        const auto once = weyl_reduce(h);
        if (!(weyl_reduce(once).coords == once.coords)) ++broken;
    }
    rec.value(std::string(name) + ".weyl_reduce_broken", broken);
    rec.check(broken == 0, fmt::format("{} weyl_reduce idempotent on 1000 vectors: {} failures", name, broken));
}

template <int N>
void concentration(Recorder& rec, const char* name, int workers) {
    const auto rs = build_root_system<N>();
    const double t = 64.0;
    const auto grid = flight_density_grid<N>(t, rs, workers);
    const double c = concentration_fraction(grid, c4_epsilon);
    const auto at = grid.center_pairings(grid.argmax());
    const auto target = simple_pairings(rs, (2.0 * t) * rs.weyl_vector);
    double cells = 0.0;
    for (int d = 0; d < N - 1; ++d) cells = std::max(cells, std::abs(at[d] - target[d]) / grid.step);
    rec.value(std::string(name) + ".concentration", c);
    rec.value(std::string(name) + ".argmax_cells", cells);
    rec.check(c >= c4_fraction, fmt::format("{} fraction {:.4f} >= {}", name, c, c4_fraction));
    rec.check(cells <= c4_argmax_cells, fmt::format("{} argmax {:.2f} cells from 2 rho t (<= {})", name, cells, c4_argmax_cells));
}

template <int N>
std::array<double, N> mean_drift(double t, int paths, double eps, int workers) {
    DiffusionConfig cfg;
    cfg.group = group_of<N>();
    cfg.horizon = t;
    cfg.paths = paths;
    cfg.step_length = eps;
    cfg.seed = seed;
    const auto set = simulate<N>(cfg, workers);
    std::array<double, N> m{};
    for (const auto& e : set.endpoints) {
        const auto h = radial_component(e);
        for (int i = 0; i < N; ++i) m[i] += h.coords[i];
    }
    for (auto& v : m) v /= static_cast<double>(paths) * t;
    return m;
}

template <int N>
void drift(Recorder& rec, const char* name, const Options& opt) {
    const auto rs = build_root_system<N>();
    const double t = opt.reduced ? 5.0 : 50.0;
    const int paths = opt.reduced ? 16 : 2000;
    const auto m = mean_drift<N>(t, paths, 0.02, opt.workers);
    const auto half = mean_drift<N>(t, paths, 0.01, opt.workers);
    const double scale = 2.0 * norm(rs.weyl_vector);
    double worst = 0.0, change = 0.0, size = 0.0;
    std::string shown;
    for (int i = 0; i < N; ++i) {
        worst = std::max(worst, std::abs(m[i] - 2.0 * rs.weyl_vector.coords[i]));
        change += (m[i] - half[i]) * (m[i] - half[i]);
        size += m[i] * m[i];
        shown += fmt::format("{}{:.4f}", i ? " " : "", m[i]);
        rec.value(fmt::format("{}.mean{}", name, i), m[i]);
        rec.value(fmt::format("{}.half{}", name, i), half[i]);
    }
    const double rel = std::sqrt(change / size);
    rec.check(worst <= c5_drift * scale, fmt::format("{} mean H/t ({}) off 2 rho by {:.2f}% of |2 rho| (<= {}%)", name,
                                                     shown, 100.0 * worst / scale, 100.0 * c5_drift));
    rec.check(rel < c5_halving, fmt::format("{} halving eps moves it {:.3f}% (< {}%)", name, 100.0 * rel, 100.0 * c5_halving));
}

} // namespace detail

inline CriterionResult criterion1(const Options&) {
    detail::Recorder rec(1, "decomposition suite");
    detail::decomposition_suite<2>(rec, "sl2");
    detail::decomposition_suite<3>(rec, "sl3");
    const double s = rec.elapsed();
    rec.check(s < c1_seconds, fmt::format("runtime {:.2f} s < {} s", s, c1_seconds));
    return rec.finish();
}

inline CriterionResult criterion2(const Options&) {
    detail::Recorder rec(2, "root-data identities");
    detail::root_identities<2>(rec, "A1");
    detail::root_identities<3>(rec, "A2");
    return rec.finish();
}

inline CriterionResult criterion3(const Options& opt) {
    detail::Recorder rec(3, "decay reproduction");
    const auto rs = build_root_system<3>();
    std::vector<double> shift, slab;
    for (double t : {4.0, 8.0, 16.0, 32.0, 64.0}) {
        const auto grid = flight_density_grid<3>(t, rs, opt.workers);
        shift.push_back(shift_l1_distance(grid, rs.weyl_vector).value);
        slab.push_back(slab_mass(grid, rs.weyl_vector, 0));
        rec.value(fmt::format("shift{}", t), shift.back());
        rec.value(fmt::format("slab{}", t), slab.back());
    }
    bool monotone = true;
    for (std::size_t i = 1; i < shift.size(); ++i) monotone &= shift[i] <= shift[i - 1];
    rec.check(monotone, fmt::format("shift_l1 {:.4f} {:.4f} {:.4f} {:.4f} {:.4f} nonincreasing", shift[0], shift[1],
                                    shift[2], shift[3], shift[4]));
    const double sr = shift[4] / shift[0], mr = slab[4] / slab[0];
    rec.check(sr <= c3_shift_ratio, fmt::format("shift(64)/shift(4) {:.4f} <= {}", sr, c3_shift_ratio));
    rec.check(mr <= c3_slab_ratio, fmt::format("slab(64)/slab(4) {:.2e} <= {}", mr, c3_slab_ratio));
    const double s = rec.elapsed();
    rec.check(s < c3_seconds, fmt::format("runtime {:.2f} s < {} s", s, c3_seconds));
    return rec.finish();
}

inline CriterionResult criterion4(const Options& opt) {
    detail::Recorder rec(4, "concentration at t = 64");
    detail::concentration<2>(rec, "sl2", opt.workers);
    detail::concentration<3>(rec, "sl3", opt.workers);
    return rec.finish();
}

inline CriterionResult criterion5(const Options& opt) {
    detail::Recorder rec(5, opt.reduced ? "diffusion drift, reduced size" : "diffusion drift");
    detail::drift<2>(rec, "sl2", opt);
    detail::drift<3>(rec, "sl3", opt);
    return rec.finish();
}

inline CriterionResult criterion6(const Options& opt) {
    detail::Recorder rec(6, opt.reduced ? "boundary uniformity, reduced size" : "boundary uniformity");
    DiffusionConfig cfg;
    cfg.group = GroupId::sl2;
    cfg.horizon = 20.0;
    cfg.paths = opt.reduced ? 200 : 10000;
    cfg.seed = seed;
    const auto set = simulate<2>(cfg, opt.workers);
    const auto hist = exit_histogram(set.endpoints, 36);
    for (std::size_t b = 0; b < hist.counts.size(); ++b) rec.value(fmt::format("bin{}", b), hist.counts[b]);
    rec.value("wall", hist.wall_samples);
    rec.check(hist.max_abs_z < c6_max_z,
              fmt::format("36-bin max deviation {:.2f} sd < {} ({} on the wall)", hist.max_abs_z, c6_max_z, hist.wall_samples));
    return rec.finish();
}

inline CriterionResult criterion7(const Options&) {
    detail::Recorder rec(7, "Poisson kernel and modular function");
    Philox rng(seed, 7, stream_purpose::test);
    const double r = 0.05;
    const auto step = exp_chamber(ChamberVector<2>{{r / std::numbers::sqrt2, -r / std::numbers::sqrt2}});
    constexpr int boundary_points = 8, circle_points = 256;
    auto h = [&](const GroupElement<2>& x) {
        double s = 0.0;
        for (int j = 0; j < boundary_points; ++j) s += poisson_kernel(x, BoundaryPoint{std::numbers::pi * j / boundary_points});
        return s / boundary_points;
    };
    double defect = 0.0;
    for (int i = 0; i < 100; ++i) {
        const auto x = GroupElement<2>::unchecked(detail::random_unimodular<2>(rng));
        double s = 0.0;
        for (int j = 0; j < circle_points; ++j)
            s += h(x * GroupElement<2>::unchecked(rotation(std::numbers::pi * j / circle_points)) * step);
        const double centre = h(x);
        defect = std::max(defect, std::abs(s / circle_points - centre) / centre);
    }
    rec.value("mean_value", defect);
    rec.check(defect < c7_mean_value,
              fmt::format("mean-value defect {:.2e} < {:.0e} (100 points, r = {})", defect, c7_mean_value, r));
    std::uniform_real_distribution<double> u(-2.0, 2.0);
    auto na = [&] {
        Matrix<2> m = Matrix<2>::diagonal({std::exp(u(rng)), 1.0});
        m(1, 1) = 1.0 / m(0, 0);
        m(0, 1) = u(rng);
        return GroupElement<2>::unchecked(m);
    };
    double mult = 0.0, unip = 0.0;
    for (int i = 0; i < 100; ++i) {
        const auto b1 = na(), b2 = na();
        const double lhs = modular_function(b1 * b2), rhs = modular_function(b1) * modular_function(b2);
        mult = std::max(mult, std::abs(lhs - rhs) / std::abs(rhs));
        Matrix<2> n = Matrix<2>::identity();
        n(0, 1) = 4.0 * u(rng);
        unip = std::max(unip, std::abs(modular_function(GroupElement<2>::unchecked(n)) - 1.0));
    }
    rec.value("multiplicativity", mult);
    rec.value("unipotent", unip);
    rec.check(mult <= c7_modular, fmt::format("multiplicativity {:.1e} <= {:.0e}", mult, c7_modular));
    rec.check(unip <= c7_modular, fmt::format("|delta - 1| on N {:.1e} <= {:.0e}", unip, c7_modular));
    return rec.finish();
}

inline CriterionResult criterion8(const Options& opt) {
    detail::Recorder rec(8, opt.reduced ? "lift invariance, reduced size" : "lift invariance");
    const auto group = schottky_preset("schottky-a");
    LiftConfig cfg;
    cfg.diffusion.group = GroupId::sl2;
    cfg.diffusion.seed = seed;
    cfg.n = opt.reduced ? 16 : 64;
    cfg.count = opt.reduced ? 300 : 10000;
    const auto lift = build_lift(cfg, group, opt.workers);
    const auto haar = build_haar_control(group, cfg.count, seed, 4.0, opt.workers);
    const auto dict = test_function_dictionary();
    double lift_d[3], haar_d[3];
    const char* names[3] = {"a:0.25", "n:0.25", "k:0.7853981633974483"};
    for (int i = 0; i < 3; ++i) {
        const auto g = parse_test_element(names[i]);
        const auto a = invariance_deficit(lift, g, dict, group, opt.workers);
        const auto b = invariance_deficit(haar, g, dict, group, opt.workers);
        lift_d[i] = a.deficit;
        haar_d[i] = b.deficit;
        for (std::size_t k = 0; k < dict.size(); ++k) {
            rec.value(fmt::format("lift.{}.{}", names[i], dict[k].name), a.standardized[k]);
            rec.value(fmt::format("haar.{}.{}", names[i], dict[k].name), b.standardized[k]);
        }
    }
    rec.check(lift_d[0] <= c8_deficit, fmt::format("lift A deficit {:.2f} <= {}", lift_d[0], c8_deficit));
    rec.check(lift_d[1] <= c8_deficit, fmt::format("lift N deficit {:.2f} <= {}", lift_d[1], c8_deficit));
    rec.check(lift_d[2] >= c8_control_ratio * lift_d[0],
              fmt::format("lift K deficit {:.2f} >= {} x A ({:.1f}x)", lift_d[2], c8_control_ratio, lift_d[2] / lift_d[0]));
    rec.check(haar_d[0] <= c8_deficit && haar_d[1] <= c8_deficit && haar_d[2] <= c8_deficit,
              fmt::format("Haar control A/N/K {:.2f}/{:.2f}/{:.2f} <= {}", haar_d[0], haar_d[1], haar_d[2], c8_deficit));
    if (!opt.reduced) {
        const double s = rec.elapsed();
        rec.check(s < c8_seconds, fmt::format("runtime {:.1f} s < {} s", s, c8_seconds));
    }
    return rec.finish();
}

using CriterionFn = CriterionResult (*)(const Options&);

inline const std::vector<CriterionFn>& deterministic_criteria() {
    static const std::vector<CriterionFn> list{criterion1, criterion2, criterion3, criterion4,
                                               criterion5, criterion6, criterion7, criterion8};
    return list;
}

/// Re-runs criteria 1-8 with 1, 2 and 8 workers (Monte Carlo ones at reduced
/// size) and compares every computed number bitwise.
inline CriterionResult criterion9(const Options&) {
    detail::Recorder rec(9, "reproducibility across 1, 2, 8 workers");
    const auto& list = deterministic_criteria();
    for (std::size_t i = 0; i < list.size(); ++i) {
        std::string reference;
        bool same = true;
        for (int w : {1, 2, 8}) {
            const auto r = list[i](Options{w, true});
            const std::string digest = sha1_hex(r.values);
            if (w == 1)
                reference = digest;
            else
                same &= digest == reference;
        }
        rec.check(same, fmt::format("criterion {} {}", i + 1, same ? "identical" : "differs"));
    }
    return rec.finish();
}

inline CriterionResult run_criterion(int id, const Options& opt) {
    if (id == 9) return criterion9(opt);
    if (id < 1 || id > 9) throw UsageError("criterion must be 1..9");
    return deterministic_criteria()[id - 1](opt);
}

} // namespace chamberflow::acceptance
