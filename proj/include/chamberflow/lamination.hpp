#pragma once

#include <algorithm>
#include <array>
#include <cctype>
#include <cmath>
#include <cstdint>
#include <functional>
#include <numbers>
#include <string>
#include <string_view>
#include <vector>

#include "decomp.hpp"
#include "diffusion.hpp"
#include "errors.hpp"
#include "parallel.hpp"
#include "rng.hpp"
#include "rootdata.hpp"

namespace chamberflow {

/// Signed offset of `angle` from `center` on RP^1 = R / pi Z, in [-pi/2, pi/2].
inline double projective_offset(double angle, double center) {
    return std::remainder(angle - center, std::numbers::pi);
}

/// Arc of the boundary circle K/M, in line-angle coordinates mod pi.
struct BoundaryArc {
    double center = 0.0;
    double half_width = 0.0;

    bool contains(double angle) const { return std::abs(projective_offset(angle, center)) < half_width; }
};

/// Letter l of the free group: l = 2i is generator i ('a', 'b', ...), l = 2i + 1
/// its inverse ('A', 'B', ...).
inline constexpr int inverse_letter(int l) { return l ^ 1; }

/// Free group on hyperbolic generators in SL(2,R) with a ping-pong
/// configuration: generator i maps the complement of its repelling arc into
/// its attracting arc, and all arcs are pairwise disjoint.
class SchottkyGroup {
public:
    SchottkyGroup(std::string name, std::vector<GroupElement<2>> generators, double half_width)
        : name_(std::move(name)), generators_(std::move(generators)) {
        if (generators_.empty() || generators_.size() > 13)
            throw UsageError("lamination::SchottkyGroup: need 1 to 13 generators");
        for (const auto& g : generators_) {
            const double tr = g(0, 0) + g(1, 1);
            if (!(std::abs(tr) > 2.0)) throw UsageError("lamination::SchottkyGroup: generator is not hyperbolic");
            letters_.push_back(g.matrix());
            letters_.push_back(unimodular_inverse(g.matrix()));
        }
        for (int l = 0; l < letter_count(); ++l) {
            // Dirichlet face at o for letter s: compare |s^{-1} g|_F with |g|_F
            const Matrix<2>& si = letters_[inverse_letter(l)];
            forms_.push_back(transpose(si) * si);
            const auto [attract, repel] = fixed_directions(letters_[l]);
            attracting_.push_back({attract, half_width});
            repelling_.push_back({repel, half_width});
        }
    }

    const std::string& name() const { return name_; }
    int letter_count() const { return static_cast<int>(letters_.size()); }
    int generator_count() const { return static_cast<int>(generators_.size()); }
    const std::vector<GroupElement<2>>& generators() const { return generators_; }
    const Matrix<2>& letter(int l) const { return letters_[l]; }
    const Matrix<2>& face_form(int l) const { return forms_[l]; }
    char letter_name(int l) const { return static_cast<char>((l & 1 ? 'A' : 'a') + l / 2); }
    const BoundaryArc& attracting_arc(int l) const { return attracting_[l]; }
    const BoundaryArc& repelling_arc(int l) const { return repelling_[l]; }

    int letter_index(char c) const {
        int l = -1;
        if (c >= 'a' && c <= 'z') l = 2 * (c - 'a');
        if (c >= 'A' && c <= 'Z') l = 2 * (c - 'A') + 1;
        if (l < 0 || l >= letter_count()) throw UsageError(std::string("lamination: unknown letter '") + c + "'");
        return l;
    }

    /// Checks the ping-pong configuration; throws UsageError naming the failure.
    void verify() const {
        const int n = letter_count();
        for (int i = 0; i < n; i += 2)
            for (int j = 0; j < n; j += 2) {
                // arcs of generator i / j (attracting of l = repelling of l^1)
                const BoundaryArc arcs_i[2] = {attracting_[i], repelling_[i]};
                const BoundaryArc arcs_j[2] = {attracting_[j], repelling_[j]};
                for (int u = 0; u < 2; ++u)
                    for (int v = 0; v < 2; ++v) {
                        if (i == j && u == v) continue;
                        const double gap = std::abs(projective_offset(arcs_i[u].center, arcs_j[v].center));
                        if (!(gap > arcs_i[u].half_width + arcs_j[v].half_width))
                            throw UsageError("lamination::SchottkyGroup: ping-pong arcs overlap");
                    }
            }
        for (int l = 0; l < n; ++l) {
            const BoundaryArc& r = repelling_[l];
            const BoundaryArc& a = attracting_[l];
            // complement of r, traversed positively: from r.center + w to r.center + pi - w
            const double start = r.center + r.half_width, end = r.center + std::numbers::pi - r.half_width;
            const double mid = 0.5 * (start + end);
            double prev = -INFINITY;
            for (double p : {start, mid, end}) {
                const double img = BoundaryPoint{p}.moved_by(letters_[l]).angle;
                const double off = projective_offset(img, a.center);
                if (!(std::abs(off) < a.half_width) || !(off > prev))
                    throw UsageError(std::string("lamination::SchottkyGroup: letter ") + letter_name(l) +
                                     " does not map the complement of its repelling arc into its attracting arc");
                prev = off;
            }
        }
    }

private:
    // Attracting and repelling eigen-directions of a hyperbolic element.
    static std::pair<double, double> fixed_directions(const Matrix<2>& g) {
        const double a = g(0, 0), b = g(0, 1), c = g(1, 0), d = g(1, 1);
        const double tr = a + d;
        const double root = std::sqrt(tr * tr - 4.0);
        const double big = 0.5 * (std::abs(tr) + root) * (tr > 0 ? 1.0 : -1.0);
        const double small = 1.0 / big;
        auto direction = [&](double lambda) {
            // eigenvector (b, lambda - a) or (lambda - d, c), whichever is larger
            const double x1 = b, y1 = lambda - a, x2 = lambda - d, y2 = c;
            if (x1 * x1 + y1 * y1 >= x2 * x2 + y2 * y2) return BoundaryPoint::from_vector(x1, y1).angle;
            return BoundaryPoint::from_vector(x2, y2).angle;
        };
        return {direction(big), direction(small)};
    }

    std::string name_;
    std::vector<GroupElement<2>> generators_;
    std::vector<Matrix<2>> letters_;
    std::vector<Matrix<2>> forms_;
    std::vector<BoundaryArc> attracting_;
    std::vector<BoundaryArc> repelling_;
};

/// Named presets. "schottky-a": gamma_1 = diag(e^{3/2}, e^{-3/2}) (translation
/// length 3/sqrt(2) ~ 2.12 in the trace metric), gamma_2 its conjugate by the
/// rotation by pi/4; arcs of half-width pi/12 around the fixed directions
/// 0, pi/2 (gamma_1) and pi/4, 3pi/4 (gamma_2).
inline SchottkyGroup schottky_preset(std::string_view name) {
    if (name == "schottky-a") {
        const auto g1 = Matrix<2>::diagonal({std::exp(1.5), std::exp(-1.5)});
        const auto k = rotation(std::numbers::pi / 4);
        const auto g2 = k * g1 * transpose(k);
        SchottkyGroup group("schottky-a", {GroupElement<2>::checked(g1), GroupElement<2>::checked(g2)},
                            std::numbers::pi / 12);
        group.verify();
        return group;
    }
    if (name == "cyclic-a") {
        SchottkyGroup group("cyclic-a", {GroupElement<2>::checked(Matrix<2>::diagonal({std::exp(1.5), std::exp(-1.5)}))},
                            std::numbers::pi / 12);
        group.verify();
        return group;
    }
    throw UsageError("lamination: unknown preset '" + std::string(name) + "' (expected schottky-a or cyclic-a)");
}

/// Point of Gamma \ G: a representative in the Dirichlet domain at o and the
/// word w (letters applied during reduction) with original = w * representative.
struct QuotientPoint {
    GroupElement<2> representative;
    std::string word;
};

/// Representative together with its transversal mark, the Y-coordinate of the
/// suspension (Y x G) / Gamma with Y the boundary circle.
struct MarkedPoint {
    QuotientPoint point;
    BoundaryPoint mark;
};

namespace detail {

inline constexpr double reduce_margin = 1e-12;
inline constexpr int max_reduction_steps = 10000;

inline void append_letter(std::string& word, char c) {
    const char inv = std::islower(static_cast<unsigned char>(c)) ? static_cast<char>(std::toupper(c))
                                                                  : static_cast<char>(std::tolower(c));
    if (!word.empty() && word.back() == inv)
        word.pop_back();
    else
        word.push_back(c);
}

// Letter whose inverse most decreases |g|_F^2, or -1 if g is reduced.
inline int reducing_letter(const SchottkyGroup& group, const Matrix<2>& g) {
    const double base = frobenius_sq(g);
    double best = base * (1.0 - reduce_margin);
    int choice = -1;
    for (int l = 0; l < group.letter_count(); ++l) {
        const double v = frobenius_sq(group.letter(inverse_letter(l)) * g);
        if (v < best) {
            best = v;
            choice = l;
        }
    }
    return choice;
}

// Same test for the half-plane point x + i y, where |g|_F^2 = (x^2 + y^2 + 1) / y
// and |s^{-1} g|_F^2 = <g g^T, s^{-T} s^{-1}>.
inline int reducing_letter(const SchottkyGroup& group, double x, double y) {
    const double r2 = x * x + y * y;
    double best = (r2 + 1.0) * (1.0 - reduce_margin);
    int choice = -1;
    for (int l = 0; l < group.letter_count(); ++l) {
        const Matrix<2>& q = group.face_form(l);
        const double v = q(0, 0) * r2 + 2.0 * q(0, 1) * x + q(1, 1);
        if (v < best) {
            best = v;
            choice = l;
        }
    }
    return choice;
}

} // namespace detail

/// True when no generator or inverse brings g closer to o.
inline bool is_reduced(const Matrix<2>& g, const SchottkyGroup& group) {
    return detail::reducing_letter(group, g) < 0;
}

/// Greedy Dirichlet reduction: while some letter s has |s^{-1} g| < |g|, replace
/// g by s^{-1} g (the best such s, lowest letter on ties). Transports the mark
/// along when given.
inline QuotientPoint schottky_reduce(const GroupElement<2>& g, const SchottkyGroup& group,
                                     BoundaryPoint* mark = nullptr) {
    Matrix<2> m = g.matrix();
    if (!all_finite(m)) throw NumericalFailure("lamination", "schottky_reduce", "non-finite input");
    std::string word;
    for (int step = 0;; ++step) {
        const int l = detail::reducing_letter(group, m);
        if (l < 0) break;
        if (step >= detail::max_reduction_steps)
            throw NumericalFailure("lamination", "schottky_reduce",
                                   "no fundamental-domain representative after 10000 steps");
        const Matrix<2>& inv = group.letter(inverse_letter(l));
        m = inv * m;
        if (mark) *mark = mark->moved_by(inv);
        detail::append_letter(word, group.letter_name(l));
    }
    return {GroupElement<2>::unchecked(m), word};
}

/// Radial Weyl chamber field: the chamber at x pointing away from p, i.e.
/// k1 * a from cartan(x) (k2 = e). On the singular set the tie-break takes
/// k1 = I for sl2 (there x p = p) and the Cartan sign conventions for sl3.
template <int N>
GroupElement<N> radial_chamber_field(const GroupElement<N>& x) {
    const auto ct = cartan(x);
    std::array<double, N> s{};
    for (int i = 0; i < N; ++i) s[i] = ct.a_part(i, i);
    if constexpr (N == 2) {
        if (chamber_distance(radial_from_singular_values<N>(s)) < wall_tolerance) return ct.a_part;
    }
    return ct.k1 * ct.a_part;
}

/// Reduced chamber field from a reduced point and the translated base point:
/// given the NA representative y of the reduced point and P = w^{-1}, the
/// frame w^{-1} V(x) is y * k * w0^{-1}, where k = k1 of y^{-1} P and
/// w0 = rotation by pi/2 swaps the chamber and its opposite.
inline GroupElement<2> reduced_chamber_field(const Matrix<2>& y, const Matrix<2>& base_inverse) {
    const auto toward_base = GroupElement<2>::unchecked(unimodular_inverse(y) * base_inverse);
    const auto ct = cartan(toward_base);
    const auto h = radial_from_singular_values<2>({ct.a_part(0, 0), ct.a_part(1, 1)});
    if (chamber_distance(h) < wall_tolerance) return GroupElement<2>::unchecked(base_inverse);
    return GroupElement<2>::unchecked(y * ct.k1.matrix() * rotation(-0.5 * std::numbers::pi));
}

/// Right action of g on Gamma \ G: reduce(representative * g). The mark moves
/// by the holonomy of the new reduction letters.
inline MarkedPoint right_action(const MarkedPoint& q, const GroupElement<2>& g, const SchottkyGroup& group) {
    MarkedPoint r;
    r.mark = q.mark;
    const auto red = schottky_reduce(q.point.representative * g, group, &r.mark);
    r.point.representative = red.representative;
    r.point.word = q.point.word;
    for (char c : red.word) detail::append_letter(r.point.word, c);
    return r;
}

inline QuotientPoint right_action(const QuotientPoint& q, const GroupElement<2>& g, const SchottkyGroup& group) {
    return right_action(MarkedPoint{q, BoundaryPoint{}}, g, group).point;
}

/// Image of the boundary point under w^{-1} for the word w.
inline BoundaryPoint inverse_word_action(const std::string& word, const SchottkyGroup& group, BoundaryPoint b) {
    for (char c : word) b = b.moved_by(group.letter(inverse_letter(group.letter_index(c))));
    return b;
}

inline Matrix<2> inverse_word_matrix(const std::string& word, const SchottkyGroup& group) {
    Matrix<2> p = Matrix<2>::identity();
    for (char c : word) p = group.letter(inverse_letter(group.letter_index(c))) * p;
    return p;
}

struct LiftConfig {
    DiffusionConfig diffusion;  // group must be sl2; paths is ignored
    int n = 64;                 // Krylov-Bogolyubov horizon
    int count = 10000;
    double theta0 = std::numbers::pi / 8;  // transversal start, off every ping-pong arc
    double fiber_rotation = 0.0;           // nonzero: frames V(x) k_psi (skewed fiber)

    LiftConfig() { diffusion.step_length = 0.05; }

    void validate() const {
        if (diffusion.group != GroupId::sl2) throw UsageError("lamination: lifts are implemented for sl2 only");
        if (n < 1) throw UsageError("lamination::build_lift: n must be >= 1");
        if (count < 1) throw UsageError("lamination::build_lift: count must be >= 1");
        DiffusionConfig d = diffusion;
        d.paths = 1;
        d.validate();
    }
};

struct LiftedSample {
    MarkedPoint point;
    BoundaryPoint next_mark;  // mark after continuing the same path one more time unit
    int horizon = 0;
};

struct LiftedSampleSet {
    std::vector<LiftedSample> samples;
    int n = 0;
    std::uint64_t seed = 0;
    double step_length = 0.0;
    double theta0 = 0.0;
    double fiber_rotation = 0.0;
    std::string group_name;
};

namespace detail {

// Walk the path while keeping it in the Dirichlet domain: whenever the point
// leaves through a face, the matching letter is applied and recorded. Entries
// of the unreduced frame grow like e^{t}, so reducing at the end loses all
// digits; reducing along the way keeps the representative well conditioned. Returns (reduced frame, word) at the current time.
class ReducedPath {
public:
    ReducedPath(const DiffusionConfig& cfg, std::uint64_t index, const SchottkyGroup& group)
        : walker_(cfg, index), group_(group) {}

    void advance_to(double horizon) {
        walker_.advance_to(horizon, [this](Walker<2>& w) {
            for (int guard = 0;; ++guard) {
                const auto [x, y] = w.half_plane();
                const int l = reducing_letter(group_, x, y);
                if (l < 0) break;
                if (guard >= max_reduction_steps)
                    throw NumericalFailure("lamination", "schottky_reduce", "path reduction did not terminate");
                const Matrix<2>& inv = group_.letter(inverse_letter(l));
                w.apply_left(inv);
                base_inverse_ = inv * base_inverse_;
                w.set_frame(base_inverse_);
                append_letter(word_, group_.letter_name(l));
            }
        });
    }

    const std::string& word() const { return word_; }

    GroupElement<2> frame() const {
        const Matrix<2> y = walker_.endpoint().matrix();
        return reduced_chamber_field(y, base_inverse_);
    }

private:
    Walker<2> walker_;
    const SchottkyGroup& group_;
    std::string word_;
    Matrix<2> base_inverse_ = Matrix<2>::identity();  // w^{-1}
};

} // namespace detail

/// Lift of the Krylov-Bogolyubov measure: per sample, T uniform in {0..n-1},
/// x = path at time T, frame V(x) reduced to the fundamental domain, mark
/// w^{-1} theta0 carried by the reduction word.
inline LiftedSampleSet build_lift(const LiftConfig& cfg, const SchottkyGroup& group, int workers = default_workers()) {
    cfg.validate();
    LiftedSampleSet set;
    set.n = cfg.n;
    set.seed = cfg.diffusion.seed;
    set.step_length = cfg.diffusion.step_length;
    set.theta0 = cfg.theta0;
    set.fiber_rotation = cfg.fiber_rotation;
    set.group_name = group.name();
    set.samples.resize(cfg.count);
    const BoundaryPoint start = BoundaryPoint::from_angle(cfg.theta0);
    const auto skew = GroupElement<2>::unchecked(rotation(cfg.fiber_rotation));
    parallel_for(cfg.count, workers, [&](std::size_t i) {
        LiftedSample& out = set.samples[i];
        out.horizon = kb_horizon(cfg.diffusion, cfg.n, i);
        detail::ReducedPath path(cfg.diffusion, i, group);
        path.advance_to(out.horizon);
        auto frame = path.frame();
        if (cfg.fiber_rotation != 0.0) frame = frame * skew;
        // the point may sit within rounding of a face; finish with the matrix reduction
        auto finish = [&](const GroupElement<2>& f, MarkedPoint& q) {
            q.mark = inverse_word_action(path.word(), group, start);
            const auto red = schottky_reduce(f, group, &q.mark);
            q.point.representative = red.representative;
            q.point.word = path.word();
            for (char c : red.word) detail::append_letter(q.point.word, c);
        };
        finish(frame, out.point);
        path.advance_to(out.horizon + 1.0);
        MarkedPoint next;
        finish(path.frame(), next);
        out.next_mark = next.mark;
    });
    return set;
}

/// Synthetic control: Haar measure of G restricted to the Dirichlet domain
/// within trace distance `radius` of o, times the uniform law of marks.
inline LiftedSampleSet build_haar_control(const SchottkyGroup& group, int count, std::uint64_t seed,
                                          double radius = 4.0, int workers = default_workers()) {
    if (count < 1) throw UsageError("lamination::build_haar_control: count must be >= 1");
    if (!(radius > 0.0)) throw UsageError("lamination::build_haar_control: radius must be positive");
    LiftedSampleSet set;
    set.seed = seed;
    set.group_name = group.name();
    set.samples.resize(count);
    // g = k_psi diag(e^h, e^-h) k_chi has trace distance sqrt(2) h and Haar
    // density proportional to sinh(2h) dh dpsi dchi.
    const double hmax = radius / std::numbers::sqrt2;
    const double span = std::cosh(2.0 * hmax) - 1.0;
    parallel_for(count, workers, [&](std::size_t i) {
        Philox rng(seed, i, stream_purpose::haar);
        for (int attempt = 0;; ++attempt) {
            if (attempt > 100000)
                throw NumericalFailure("lamination", "build_haar_control", "rejection sampling stalled");
            const double h = 0.5 * std::acosh(1.0 + rng.uniform() * span);
            const double psi = 2.0 * std::numbers::pi * rng.uniform();
            const double chi = 2.0 * std::numbers::pi * rng.uniform();
            const double mark = std::numbers::pi * rng.uniform();
            const Matrix<2> g = rotation(psi) * Matrix<2>::diagonal({std::exp(h), std::exp(-h)}) * rotation(chi);
            if (!is_reduced(g, group)) continue;
            LiftedSample& out = set.samples[i];
            out.point.point.representative = GroupElement<2>::unchecked(g);
            out.point.mark = BoundaryPoint::from_angle(mark);
            out.next_mark = out.point.mark;
            return;
        }
    });
    return set;
}

/// Bounded test function on the suspension, evaluated on a reduced frame and its mark.
struct TestFunction {
    std::string name;
    std::function<double(const GroupElement<2>&, const BoundaryPoint&)> eval;
};

/// Coordinates used by the dictionary: trace distance r of g o from o, and the
/// Iwasawa coordinates g = n(x) a(e^s) k(phi).
struct FrameCoordinates {
    double r = 0.0;
    double x = 0.0;
    double s = 0.0;
    double phi = 0.0;
};

/// Trace distance from o to g o: |g|_F^2 = 2 cosh(2 h), r = sqrt(2) h.
inline double trace_distance_from_origin(const GroupElement<2>& g) {
    return std::numbers::sqrt2 * 0.5 * std::acosh(std::max(1.0, 0.5 * frobenius_sq(g.matrix())));
}

inline FrameCoordinates frame_coordinates(const GroupElement<2>& g) {
    FrameCoordinates c;
    c.r = trace_distance_from_origin(g);
    const auto t = iwasawa(g);
    c.x = t.n_part(0, 1);
    c.s = std::log(t.a_part(0, 0));
    c.phi = std::atan2(t.k_part(1, 0), t.k_part(0, 0));
    return c;
}

/// Smooth bump of radius r0: exp(1 - 1/(1 - (r/r0)^2)), 1 at r = 0.
inline double bump(double r, double r0) {
    const double u = r / r0;
    if (!(u < 1.0)) return 0.0;
    return std::exp(1.0 - 1.0 / (1.0 - u * u));
}

inline constexpr double dictionary_radius = 3.5;
inline constexpr const char* dictionary_version = "v1";

/// Fixed dictionary of 8 bounded smooth functions of the representative's
/// Iwasawa coordinates and the transversal angle (version v1). Every function
/// depends on phi and theta only through 2 phi and 2 theta, so it is
/// well defined on PSL(2,R) and on the boundary RP^1.
inline std::vector<TestFunction> test_function_dictionary() {
    // Outside the bump every function vanishes. Frames deep in a funnel have
    // entries near 1e19 and no usable Iwasawa factors, so they stop here.
    auto w = [](const GroupElement<2>& g) {
        FrameCoordinates c;
        c.r = trace_distance_from_origin(g);
        const double b = bump(c.r, dictionary_radius);
        if (b > 0.0) c = frame_coordinates(g);
        return std::pair{c, b};
    };
    std::vector<TestFunction> f;
    f.push_back({"bump", [w](const auto& g, const auto&) { return w(g).second; }});
    f.push_back({"bump_cos2phi", [w](const auto& g, const auto&) {
                     const auto [c, b] = w(g);
                     return b * std::cos(2.0 * c.phi);
                 }});
    f.push_back({"bump_sin2phi", [w](const auto& g, const auto&) {
                     const auto [c, b] = w(g);
                     return b * std::sin(2.0 * c.phi);
                 }});
    f.push_back({"bump_tanh_s", [w](const auto& g, const auto&) {
                     const auto [c, b] = w(g);
                     return b * std::tanh(c.s);
                 }});
    f.push_back({"bump_x", [w](const auto& g, const auto&) {
                     const auto [c, b] = w(g);
                     return b * c.x / (1.0 + c.x * c.x);
                 }});
    f.push_back({"bump_cos2theta", [w](const auto& g, const BoundaryPoint& m) {
                     return w(g).second * std::cos(2.0 * m.angle);
                 }});
    f.push_back({"bump_sin2theta_cos2phi", [w](const auto& g, const BoundaryPoint& m) {
                     const auto [c, b] = w(g);
                     return b * std::sin(2.0 * m.angle) * std::cos(2.0 * c.phi);
                 }});
    f.push_back({"bump_cos4phi", [w](const auto& g, const auto&) {
                     const auto [c, b] = w(g);
                     return b * std::cos(4.0 * c.phi);
                 }});
    return f;
}

struct DeficitReport {
    double deficit = 0.0;  // max over functions
    std::vector<std::string> names;
    std::vector<double> mean_before;
    std::vector<double> mean_after;
    std::vector<double> standardized;  // |difference| / combined standard error
};

/// max over f of |mean f(q) - mean f(q g)| / sqrt(var f(q)/N + var f(q g)/N).
inline DeficitReport invariance_deficit(const LiftedSampleSet& set, const GroupElement<2>& g,
                                        const std::vector<TestFunction>& functions, const SchottkyGroup& group,
                                        int workers = default_workers()) {
    if (functions.empty()) throw UsageError("lamination::invariance_deficit: empty test-function set");
    if (set.samples.empty()) throw UsageError("lamination::invariance_deficit: empty sample set");
    const std::size_t n = set.samples.size(), nf = functions.size();
    std::vector<double> before(n * nf), after(n * nf);
    parallel_for(n, workers, [&](std::size_t i) {
        const MarkedPoint& q = set.samples[i].point;
        const MarkedPoint moved = right_action(q, g, group);
        for (std::size_t k = 0; k < nf; ++k) {
            before[i * nf + k] = functions[k].eval(q.point.representative, q.mark);
            after[i * nf + k] = functions[k].eval(moved.point.representative, moved.mark);
        }
    });
    DeficitReport rep;
    for (std::size_t k = 0; k < nf; ++k) {
        double s1 = 0, s2 = 0, q1 = 0, q2 = 0;
        for (std::size_t i = 0; i < n; ++i) {
            s1 += before[i * nf + k];
            s2 += after[i * nf + k];
        }
        const double m1 = s1 / n, m2 = s2 / n;
        for (std::size_t i = 0; i < n; ++i) {
            q1 += (before[i * nf + k] - m1) * (before[i * nf + k] - m1);
            q2 += (after[i * nf + k] - m2) * (after[i * nf + k] - m2);
        }
        const double denom = n > 1 ? static_cast<double>(n - 1) : 1.0;
        const double se = std::sqrt((q1 / denom + q2 / denom) / n);
        const double diff = std::abs(m1 - m2);
        const double z = diff == 0.0 ? 0.0 : (se > 0.0 ? diff / se : INFINITY);
        rep.names.push_back(functions[k].name);
        rep.mean_before.push_back(m1);
        rep.mean_after.push_back(m2);
        rep.standardized.push_back(z);
        rep.deficit = std::max(rep.deficit, z);
    }
    return rep;
}

/// Total variation between the binned laws of marks and next marks, divided by
/// its expected size for two independent multinomial samples of the pooled law.
inline double transverse_stationarity_residual(const LiftedSampleSet& set, int bins) {
    if (bins < 8) throw UsageError("lamination::transverse_stationarity_residual: bins must be >= 8");
    if (set.samples.empty()) throw UsageError("lamination::transverse_stationarity_residual: empty sample set");
    std::vector<double> c1(bins, 0.0), c2(bins, 0.0);
    auto bin = [&](double angle) {
        return std::min(bins - 1, static_cast<int>(angle / std::numbers::pi * bins));
    };
    for (const auto& s : set.samples) {
        c1[bin(s.point.mark.angle)] += 1.0;
        c2[bin(s.next_mark.angle)] += 1.0;
    }
    const double n = static_cast<double>(set.samples.size());
    double tv = 0.0, floor = 0.0;
    for (int b = 0; b < bins; ++b) {
        tv += 0.5 * std::abs(c1[b] - c2[b]) / n;
        const double p = (c1[b] + c2[b]) / (2.0 * n);
        floor += std::sqrt(p * (1.0 - p) / (std::numbers::pi * n));
    }
    if (tv == 0.0) return 0.0;
    return floor > 0.0 ? tv / floor : INFINITY;
}

/// Test group element from "a:s" (exp(s rho)), "n:s" (unipotent) or "k:theta" (rotation).
inline GroupElement<2> parse_test_element(std::string_view spec) {
    const auto colon = spec.find(':');
    if (colon == std::string_view::npos || colon != 1)
        throw UsageError("expected a:<s>, n:<s> or k:<theta>, got '" + std::string(spec) + "'");
    double v = 0.0;
    try {
        std::size_t used = 0;
        const std::string num(spec.substr(2));
        v = std::stod(num, &used);
        if (used != num.size()) throw std::invalid_argument("trailing characters");
    } catch (const std::exception&) {
        throw UsageError("bad number in group element '" + std::string(spec) + "'");
    }
    switch (spec[0]) {
    case 'a':
        return GroupElement<2>::checked(Matrix<2>::diagonal({std::exp(0.5 * v), std::exp(-0.5 * v)}));
    case 'n': {
        Matrix<2> m = Matrix<2>::identity();
        m(0, 1) = v;
        return GroupElement<2>::checked(m);
    }
    case 'k':
        return GroupElement<2>::checked(rotation(v));
    default:
        throw UsageError("unknown group element kind '" + std::string(1, spec[0]) + "'");
    }
}

} // namespace chamberflow
