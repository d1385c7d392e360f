#include <cstdio>
#include <iostream>
#include <sstream>
#include <string>
#include <vector>

#include "CLI11.hpp"
#include "chamberflow/acceptance.hpp"
#include "chamberflow/decomp.hpp"
#include "chamberflow/diffusion.hpp"
#include "chamberflow/heatkernel.hpp"
#include "chamberflow/io.hpp"
#include "chamberflow/lamination.hpp"
#include "chamberflow/rootdata.hpp"

using namespace chamberflow;

namespace {

constexpr int exit_usage = 1;
constexpr int exit_numerical = 2;
constexpr int exit_criteria_failed = 3;

struct Context {
    std::string command_line;
    CLI::App* sub = nullptr;
};

std::vector<double> parse_list(const std::string& text) {
    std::vector<double> out;
    std::stringstream ss(text);
    std::string item;
    while (std::getline(ss, item, ',')) {
        try {
            std::size_t used = 0;
            out.push_back(std::stod(item, &used));
            if (used != item.size()) throw std::invalid_argument(item);
        } catch (const std::exception&) {
            throw UsageError("not a number: '" + item + "'");
        }
    }
    if (out.empty()) throw UsageError("empty number list");
    return out;
}

// Canonical description of the resolved options, defaults included.
std::string canonical_inputs(const Context& ctx, const std::string& extra = {}) {
    return ctx.sub->get_name() + "\n" + ctx.sub->config_to_str(true, false) + extra;
}

void emit(const Context& ctx, const std::string& out, const std::string& anchor, std::optional<std::uint64_t> seed,
          const std::string& body, const std::string& extra_input = {},
          std::vector<std::pair<std::string, std::string>> extra = {}) {
    RunManifest m;
    m.command_line = ctx.command_line;
    m.seed = seed;
    m.input_hash = git_blob_hash(canonical_inputs(ctx, extra_input));
    m.anchor = anchor;
    if (!out.empty()) m.outputs.push_back(out);
    m.extra = std::move(extra);
    const std::string text = m.header() + body;
    if (out.empty())
        std::fwrite(text.data(), 1, text.size(), stdout);
    else
        write_file(out, text);
}

template <int N>
ChamberVector<N> parse_h0(const std::string& text, const RootSystem<N>& rs) {
    if (text == "rho") return rs.weyl_vector;
    const auto v = parse_list(text);
    if (v.size() != static_cast<std::size_t>(N)) throw UsageError("--h0 needs " + std::to_string(N) + " coordinates");
    ChamberVector<N> h;
    double sum = 0.0;
    for (int i = 0; i < N; ++i) {
        h.coords[i] = v[i];
        sum += v[i];
    }
    if (std::abs(sum) > 1e-12) throw UsageError("--h0 coordinates must sum to 0");
    return h;
}

template <int N>
std::string decomp_body(const std::string& matrix, bool want_cartan) {
    const auto v = parse_list(matrix);
    if (v.size() != static_cast<std::size_t>(N * N))
        throw UsageError("--matrix needs " + std::to_string(N * N) + " entries, row-major");
    Matrix<N> m;
    for (int i = 0; i < N * N; ++i) m.m[i] = v[i];
    const auto g = GroupElement<N>::checked(m);
    nlohmann::json j;
    if (want_cartan) {
        const auto c = cartan(g);
        j["k1"] = matrix_json(c.k1.matrix());
        j["a"] = matrix_json(c.a_part.matrix());
        j["k2"] = matrix_json(c.k2.matrix());
        j["radial"] = radial_component(g).coords;
    } else {
        const auto t = iwasawa(g);
        j["n"] = matrix_json(t.n_part.matrix());
        j["a"] = matrix_json(t.a_part.matrix());
        j["k"] = matrix_json(t.k_part.matrix());
    }
    return j.dump(2) + "\n";
}

template <int N>
std::string kernel_body(double t) {
    const auto rs = build_root_system<N>();
    const auto grid = flight_density_grid<N>(t, rs);
    std::vector<std::string> cols;
    for (int d = 0; d < N - 1; ++d) cols.push_back("u" + std::to_string(d + 1));
    cols.push_back("density");
    CsvTable csv(cols);
    for (std::size_t i = 0; i < grid.size(); ++i) {
        const auto u = grid.center_pairings(i);
        std::vector<double> row(u.begin(), u.end());
        row.push_back(grid.values[i]);
        csv.add_row(row);
    }
    return csv.str();
}

template <int N>
std::string decay_body(const std::vector<double>& times, const std::string& h0_text, int face, double eps) {
    const auto rs = build_root_system<N>();
    const auto h0 = parse_h0<N>(h0_text, rs);
    CsvTable csv({"t", "shift_l1", "slab_mass", "concentration_frac"});
    for (double t : times) {
        const auto grid = flight_density_grid<N>(t, rs);
        csv.add_row({t, shift_l1_distance(grid, h0).value, slab_mass(grid, h0, face), concentration_fraction(grid, eps)});
    }
    return csv.str();
}

template <int N>
std::string simulate_body(const DiffusionConfig& cfg) {
    const auto set = simulate<N>(cfg);
    std::vector<std::string> cols{"path", "elapsed"};
    for (int i = 0; i < N; ++i) cols.push_back("h" + std::to_string(i + 1));
    CsvTable csv(cols);
    for (std::size_t p = 0; p < set.endpoints.size(); ++p) {
        const auto h = radial_component(set.endpoints[p]);
        std::vector<double> row{static_cast<double>(p), set.elapsed[p]};
        row.insert(row.end(), h.coords.begin(), h.coords.end());
        csv.add_row(row);
    }
    return csv.str();
}

GroupId group_option(const std::string& s) { return parse_group_id(s); }

} // namespace

int main(int argc, char** argv) {
    CLI::App app{"chamberflow: Lie-group decompositions, radial heat kernels, Brownian motion on symmetric spaces "
                 "and invariance tests on a Schottky suspension"};
    app.require_subcommand(1);
    app.set_config("--config", "", "key=value file merged below the command-line flags");
    app.failure_message(CLI::FailureMessage::help);
    Context ctx;
    for (int i = 0; i < argc; ++i) ctx.command_line += (i ? " " : "") + std::string(i ? argv[i] : "chamberflow");

    std::string group = "sl2", out, matrix, times = "4,8,16,32,64", h0 = "rho", g_in, preset = "schottky-a";
    bool want_iwasawa = false, want_cartan = false;
    double t = 50.0, eps = 0.02, conc_eps = 0.2, theta0 = std::numbers::pi / 8, fiber = 0.0;
    double exit_t = 20.0, lift_eps = 0.05;
    int paths = 2000, exit_paths = 10000, bins = 36, face = 0, n = 64, count = 10000, residual_bins = 16;
    std::uint64_t seed = 7;
    std::vector<std::string> elements;
    std::vector<int> only;

    auto* roots = app.add_subcommand("roots", "Root data and rho as JSON");
    roots->add_option("--group", group)->check(CLI::IsMember({"sl2", "sl3"}));
    roots->add_option("--out", out);

    auto* decomp = app.add_subcommand("decomp", "Iwasawa or Cartan factors of one matrix as JSON");
    decomp->add_option("--group", group)->check(CLI::IsMember({"sl2", "sl3"}));
    decomp->add_option("--matrix", matrix, "Row-major entries, comma separated")->required();
    auto* fi = decomp->add_flag("--iwasawa", want_iwasawa);
    auto* fc = decomp->add_flag("--cartan", want_cartan);
    fi->excludes(fc);
    decomp->add_option("--out", out);

    auto* kernel = app.add_subcommand("kernel", "Normalized radial density grid as CSV");
    kernel->add_option("--group", group)->check(CLI::IsMember({"sl2", "sl3"}));
    kernel->add_option("--t", t)->check(CLI::PositiveNumber);
    kernel->add_option("--out", out);

    auto* decay = app.add_subcommand("decay", "Shift distance, slab mass and concentration per t as CSV");
    decay->add_option("--group", group)->check(CLI::IsMember({"sl2", "sl3"}));
    decay->add_option("--t", times, "Comma-separated times");
    decay->add_option("--h0", h0, "'rho' or comma-separated trace coordinates");
    decay->add_option("--face", face, "Chamber face for the slab");
    decay->add_option("--eps", conc_eps, "Radius exponent for the concentration ball")->check(CLI::Range(0.0, 1.0));
    decay->add_option("--out", out);

    auto* sim = app.add_subcommand("simulate", "Per-path radial coordinates of Brownian endpoints as CSV");
    sim->add_option("--group", group)->check(CLI::IsMember({"sl2", "sl3"}));
    sim->add_option("--t", t)->check(CLI::NonNegativeNumber);
    sim->add_option("--paths", paths)->check(CLI::PositiveNumber);
    sim->add_option("--seed", seed);
    sim->add_option("--eps", eps, "Geodesic step length");
    sim->add_option("--out", out);

    auto* exitdirs = app.add_subcommand("exitdirs", "Histogram of sl2 exit directions as CSV");
    exitdirs->add_option("--bins", bins)->check(CLI::PositiveNumber);
    exitdirs->add_option("--t", exit_t)->check(CLI::NonNegativeNumber);
    exitdirs->add_option("--paths", exit_paths)->check(CLI::PositiveNumber);
    exitdirs->add_option("--seed", seed);
    exitdirs->add_option("--eps", eps);
    exitdirs->add_option("--out", out);

    auto* lift = app.add_subcommand("lift", "Lifted Krylov-Bogolyubov samples on the Schottky suspension as JSONL");
    lift->add_option("--n", n)->check(CLI::PositiveNumber);
    lift->add_option("--count", count)->check(CLI::PositiveNumber);
    lift->add_option("--seed", seed);
    lift->add_option("--preset", preset);
    lift->add_option("--eps", lift_eps);
    lift->add_option("--theta0", theta0);
    lift->add_option("--fiber-rotation", fiber, "Skew every frame by this rotation (negative control)");
    lift->add_option("--out", out);

    auto* inv = app.add_subcommand("invariance", "Invariance deficits of a lift file as CSV");
    inv->add_option("--in", g_in)->required()->check(CLI::ExistingFile);
    inv->add_option("--g", elements, "a:<s>, n:<s> or k:<theta>; repeatable")->required();
    inv->add_option("--residual-bins", residual_bins)->check(CLI::Range(8, 100000));
    inv->add_option("--out", out);

    auto* all = app.add_subcommand("all", "Run the acceptance suite and print a pass/fail table");
    all->add_option("--only", only)->check(CLI::Range(1, 9));

    try {
        app.parse(argc, argv);
    } catch (const CLI::CallForHelp& e) {
        return app.exit(e);
    } catch (const CLI::CallForAllHelp& e) {
        return app.exit(e);
    } catch (const CLI::ParseError& e) {
        app.exit(e);
        return exit_usage;
    }

    try {
        const auto gid = group_option(group);
        if (*roots) {
            ctx.sub = roots;
            const auto body = gid == GroupId::sl2 ? root_data_json(build_root_system<2>())
                                                  : root_data_json(build_root_system<3>());
            emit(ctx, out, "root data: positive roots, rho and coroots", std::nullopt, body.dump(2) + "\n");
        } else if (*decomp) {
            ctx.sub = decomp;
            const std::string body =
                gid == GroupId::sl2 ? decomp_body<2>(matrix, want_cartan) : decomp_body<3>(matrix, want_cartan);
            emit(ctx, out, want_cartan ? "Cartan decomposition G = K A K" : "Iwasawa decomposition G = N A K",
                 std::nullopt, body);
        } else if (*kernel) {
            ctx.sub = kernel;
            emit(ctx, out, "heat kernel envelope u_t in radial coordinates", std::nullopt,
                 gid == GroupId::sl2 ? kernel_body<2>(t) : kernel_body<3>(t));
        } else if (*decay) {
            ctx.sub = decay;
            const auto ts = parse_list(times);
            emit(ctx, out, "decay of |u_t(a) - u_t(a a0)| and slab mass", std::nullopt,
                 gid == GroupId::sl2 ? decay_body<2>(ts, h0, face, conc_eps) : decay_body<3>(ts, h0, face, conc_eps));
        } else if (*sim) {
            ctx.sub = sim;
            DiffusionConfig cfg;
            cfg.group = gid;
            cfg.horizon = t;
            cfg.paths = paths;
            cfg.seed = seed;
            cfg.step_length = eps;
            cfg.validate();
            emit(ctx, out, "Brownian radial drift 2 rho t", seed,
                 gid == GroupId::sl2 ? simulate_body<2>(cfg) : simulate_body<3>(cfg));
        } else if (*exitdirs) {
            ctx.sub = exitdirs;
            DiffusionConfig cfg;
            cfg.group = GroupId::sl2;
            cfg.horizon = exit_t;
            cfg.paths = exit_paths;
            cfg.seed = seed;
            cfg.step_length = eps;
            cfg.validate();
            const auto set = simulate<2>(cfg);
            const auto h = exit_histogram(set.endpoints, bins);
            CsvTable csv({"bin", "angle_lo", "angle_hi", "count"});
            for (int b = 0; b < bins; ++b)
                csv.add_row({static_cast<double>(b), std::numbers::pi * b / bins, std::numbers::pi * (b + 1) / bins,
                             static_cast<double>(h.counts[b])});
            emit(ctx, out, "Brownian exit law on the Furstenberg boundary", seed, csv.str(), {},
                 {{"wall_samples", std::to_string(h.wall_samples)}, {"max_abs_z", format_double(h.max_abs_z)}});
        } else if (*lift) {
            ctx.sub = lift;
            const auto group_data = schottky_preset(preset);
            LiftConfig cfg;
            cfg.diffusion.group = GroupId::sl2;
            cfg.diffusion.seed = seed;
            cfg.diffusion.step_length = lift_eps;
            cfg.n = n;
            cfg.count = count;
            cfg.theta0 = theta0;
            cfg.fiber_rotation = fiber;
            const auto set = build_lift(cfg, group_data);
            emit(ctx, out, "Krylov-Bogolyubov lift of a harmonic measure to the frame lamination", seed,
                 lift_jsonl(set), {}, {{std::string(lift_metadata_key), lift_metadata(set).dump()}});
        } else if (*inv) {
            ctx.sub = inv;
            const std::string text = read_file(g_in);
            const auto set = read_lift_jsonl(text);
            const auto group_data = schottky_preset(set.group_name);
            const auto dict = test_function_dictionary();
            CsvTable csv({"g", "function", "mean", "mean_moved", "standardized"});
            std::vector<std::pair<std::string, std::string>> extra;
            for (const auto& e : elements) {
                const auto rep = invariance_deficit(set, parse_test_element(e), dict, group_data);
                for (std::size_t k = 0; k < dict.size(); ++k)
                    csv.add_cells({e, rep.names[k], format_double(rep.mean_before[k]), format_double(rep.mean_after[k]),
                                   format_double(rep.standardized[k])});
                extra.push_back({"deficit " + e, format_double(rep.deficit)});
            }
            extra.push_back({"transverse_residual", format_double(transverse_stationarity_residual(set, residual_bins))});
            emit(ctx, out, "B-invariance of the lifted measure", set.seed, csv.str(), "\n" + git_blob_hash(text),
                 extra);
        } else if (*all) {
            if (only.empty()) only = {1, 2, 3, 4, 5, 6, 7, 8, 9};
            bool ok = true;
            for (int id : only) {
                const auto r = acceptance::run_criterion(id, {});
                std::printf("%s\n", r.line().c_str());
                std::fflush(stdout);
                ok &= r.passed();
            }
            return ok ? 0 : exit_criteria_failed;
        }
    } catch (const UsageError& e) {
        std::fprintf(stderr, "usage error: %s\n", e.what());
        return exit_usage;
    } catch (const NumericalFailure& e) {
        std::fprintf(stderr, "numerical failure in %s::%s: %s\n", e.module().c_str(), e.op().c_str(), e.what());
        return exit_numerical;
    }
    return 0;
}
