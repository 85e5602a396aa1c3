// Command-line front end for the pore-scale reaction-diffusion toolkit.
//
// Subcommands: redistance (mask -> signed distance), build-grid (SDF ->
// sparse grid), simulate (full pipeline run), frap (virtual recovery
// experiment + effective-diffusivity fit), verify (convergence studies with
// pass/fail slope windows), stats (occupancy and porosity).
//
// Exit codes: 0 success, 1 verification window failure, 2 invalid
// input/configuration, 3 stability-bound violation, 4 numerical failure.

#include <cinttypes>
#include <cstdint>
#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <numeric>
#include <optional>
#include <string>
#include <vector>

#include <CLI11.hpp>
#include <json.hpp>

#include "porediff/analysis.hpp"
#include "porediff/config.hpp"
#include "porediff/dense_field.hpp"
#include "porediff/errors.hpp"
#include "porediff/geometry.hpp"
#include "porediff/levelset.hpp"
#include "porediff/mask_io.hpp"
#include "porediff/parallel.hpp"
#include "porediff/scalar_text.hpp"
#include "porediff/snapshot.hpp"
#include "porediff/solver.hpp"
#include "porediff/sparse_block_grid.hpp"
#include "porediff/verification.hpp"
#include "porediff/vtk.hpp"

namespace pd = porediff;
namespace fs = std::filesystem;

namespace {

// ---------------------------------------------------------------------------
// Small shared helpers
// ---------------------------------------------------------------------------

void ensure_parent_dir(const std::string& path) {
    const fs::path parent = fs::path(path).parent_path();
    if (parent.empty()) return;
    std::error_code ec;
    fs::create_directories(parent, ec);
    if (ec)
        throw pd::io_error("cannot create directory '" + parent.string() +
                           "': " + ec.message());
}

void write_json_file(const std::string& path, const nlohmann::json& j) {
    ensure_parent_dir(path);
    std::ofstream out(path, std::ios::trunc);
    if (!out) throw pd::io_error("cannot open '" + path + "' for writing");
    out << j.dump(2) << '\n';
    out.flush();
    if (!out) throw pd::io_error("write to '" + path + "' failed");
}

std::string vtk_series_path(const std::string& basename, std::int64_t step) {
    char suffix[32];
    std::snprintf(suffix, sizeof suffix, "_%06" PRId64 ".vtk", step);
    return basename + suffix;
}

/// Resolves the grid dimensionality a config implies; snapshot formats carry
/// their own and must agree with the file on disk.
int resolved_dims(const pd::InputSpec& input) {
    if (input.path.empty())
        throw pd::input_error("config: input.path: no input file given");
    if (input.format == "pgm") return 2;
    if (input.format == "sdf" || input.format == "grid") {
        const auto info = pd::peek_snapshot(input.path);
        const char* expect = input.format == "sdf" ? "SBGD" : "SBGR";
        if (info.magic != expect)
            throw pd::input_error("'" + input.path + "' is a " +
                                  (info.magic == "SBGD" ? std::string("dense-field")
                                                        : std::string("sparse-grid")) +
                                  " snapshot, but input.format says " + input.format);
        if (info.scalar_bits != 64)
            throw pd::input_error("'" + input.path +
                                  "' stores 32-bit scalars; the pipeline runs at 64-bit");
        return static_cast<int>(info.dims);
    }
    return input.dims;
}

template <typename T, int Dims>
std::pair<double, double> channel_min_max(const pd::SparseBlockGrid<T, Dims>& grid,
                                          const std::string& channel) {
    const int prop = grid.property_index(channel);
    double lo = std::numeric_limits<double>::infinity();
    double hi = -std::numeric_limits<double>::infinity();
    grid.for_each_active([&](const pd::NodeIndex<Dims>&, const auto& chunk, int off) {
        const double v = static_cast<double>(
            grid.channel_data(chunk, prop)[static_cast<std::size_t>(off)]);
        lo = std::min(lo, v);
        hi = std::max(hi, v);
    });
    return {lo, hi};
}

// ---------------------------------------------------------------------------
// Pipeline stages
// ---------------------------------------------------------------------------

/// Mask file (raw or PGM) -> +-1 indicator, with optional thin-feature
/// filtering.
template <int Dims>
pd::DenseField<double, Dims> load_indicator(const pd::InputSpec& input) {
    pd::VoxelMask<Dims> mask;
    if (input.format == "raw") {
        const std::string sidecar =
            input.sidecar.empty() ? input.path + ".json" : input.sidecar;
        mask = pd::read_mask<Dims>(input.path, sidecar);
    } else if constexpr (Dims == 2) {
        mask = pd::read_pgm(input.path);
    } else {
        throw pd::input_error("PGM input is two-dimensional");
    }
    auto indicator = pd::mask_to_indicator<double, Dims>(mask);
    if (input.filter_min_thickness > 0)
        indicator = pd::filter_thin_features(indicator, input.filter_min_thickness);
    return indicator;
}

/// Input -> signed distance field. Raw/PGM masks run the full redistancing;
/// an "sdf" snapshot is trusted as-is.
template <int Dims>
pd::DenseField<double, Dims> load_sdf(const pd::PipelineConfig& cfg,
                                      pd::RedistanceDiagnostics* diag_out = nullptr) {
    if (cfg.input.format == "sdf") return pd::read_dense_snapshot<double, Dims>(cfg.input.path);
    auto field = load_indicator<Dims>(cfg.input);
    const auto diag = pd::sussman_redistance(field, cfg.levelset);
    if (diag_out) *diag_out = diag;
    return field;
}

/// Fills one channel from a per-node function of the node index.
template <typename T, int Dims, class Fn>
void fill_channel(pd::SparseBlockGrid<T, Dims>& grid, const std::string& channel, Fn&& fn) {
    grid.for_each_active([&](const pd::NodeIndex<Dims>& idx, const auto&, int) {
        grid.set(idx, channel, static_cast<T>(fn(idx)));
    });
}

/// Full geometry build for simulate/frap: load, band-select, populate D and
/// the initial u. Grid snapshots are used exactly as stored.
template <int Dims>
pd::SparseBlockGrid<double, Dims> build_pipeline_grid(const pd::PipelineConfig& cfg) {
    if (cfg.input.format == "grid") {
        auto grid = pd::read_sparse_snapshot<double, Dims>(cfg.input.path);
        for (const auto& name : pd::solver_channels())
            grid.property_index(name); // throws property_error when missing
        if (cfg.simulation.reaction.kind == pd::ReactionSpec::Kind::volumetric)
            grid.property_index(cfg.simulation.reaction.source_channel);
        return grid;
    }

    const auto sdf = load_sdf<Dims>(cfg);
    auto channels = pd::solver_channels();
    if (cfg.simulation.reaction.kind == pd::ReactionSpec::Kind::volumetric) {
        bool present = false;
        for (const auto& c : channels) present = present || c == cfg.simulation.reaction.source_channel;
        if (!present) channels.push_back(cfg.simulation.reaction.source_channel);
    }
    auto grid = pd::build_sparse_grid(sdf, cfg.phase_band, channels);

    if (cfg.diffusion.mode == "sigmoid") {
        pd::populate_diffusion_channel(grid, cfg.diffusion.profile);
    } else {
        const double v = cfg.diffusion.uniform_value;
        fill_channel(grid, "D", [v](const pd::NodeIndex<Dims>&) { return v; });
    }

    const auto& geom = grid.geometry();
    if (cfg.initial.kind == "uniform") {
        const double v = cfg.initial.value;
        if (v != 0.0) // channels start zeroed
            fill_channel(grid, "u", [v](const pd::NodeIndex<Dims>&) { return v; });
    } else {
        const std::uint64_t seed = cfg.initial.seed;
        fill_channel(grid, "u", [&, seed](const pd::NodeIndex<Dims>& idx) {
            return pd::hash_unit_value(seed,
                                       static_cast<std::uint64_t>(geom.flat_index(idx)));
        });
    }
    return grid;
}

template <typename T, int Dims>
void write_grid_vtk(const pd::SparseBlockGrid<T, Dims>& grid, const pd::OutputSpec& out,
                    std::int64_t step) {
    auto ds = pd::vtk_from_sparse(grid, {"u", "D", "phi"}, static_cast<T>(out.vtk_blank));
    const std::string path = vtk_series_path(out.vtk_basename, step);
    ensure_parent_dir(path);
    pd::write_vtk(ds, path, "reaction-diffusion state, step " + std::to_string(step));
}

void write_mass_csv(const std::string& path, const std::vector<pd::StepDiagnostics>& rows) {
    ensure_parent_dir(path);
    std::ofstream out(path, std::ios::binary | std::ios::trunc);
    if (!out) throw pd::io_error("cannot open '" + path + "' for writing");
    out << "step,time,total_mass,min_u,max_u\n";
    for (const auto& d : rows)
        out << d.step << ',' << pd::format_scalar(d.time) << ','
            << pd::format_scalar(d.total_mass) << ',' << pd::format_scalar(d.min_u) << ','
            << pd::format_scalar(d.max_u) << '\n';
    out.flush();
    if (!out) throw pd::io_error("write to '" + path + "' failed");
}

// ---------------------------------------------------------------------------
// simulate
// ---------------------------------------------------------------------------

template <int Dims>
int simulate_impl(const pd::PipelineConfig& cfg) {
    auto grid = build_pipeline_grid<Dims>(cfg);
    const auto stats = grid.stats();
    std::printf("active nodes: %" PRId64 " of %" PRId64 " (fill %.4f)\n",
                stats.active_nodes, stats.dense_node_count, stats.node_fill_fraction);

    const pd::OutputSpec& out = cfg.outputs;
    const std::int64_t n_steps = cfg.simulation.n_steps;

    if (n_steps == 0) {
        pd::StepDiagnostics d0;
        d0.total_mass = pd::total_mass(grid);
        const auto [lo, hi] = channel_min_max(grid, "u");
        d0.min_u = lo;
        d0.max_u = hi;
        if (!out.mass_csv.empty()) write_mass_csv(out.mass_csv, {d0});
        if (!out.vtk_basename.empty()) write_grid_vtk(grid, out, 0);
        if (!out.snapshot.empty()) {
            ensure_parent_dir(out.snapshot);
            pd::write_sparse_snapshot(grid, out.snapshot);
        }
        std::printf("steps: 0 (initial state only), mass %s\n",
                    pd::format_scalar(d0.total_mass).c_str());
        return 0;
    }

    if (!(cfg.simulation.dt > 0.0))
        throw pd::input_error("config: simulation.dt: must be > 0 to take steps");

    pd::SimulationConfig sim = cfg.simulation;
    const std::int64_t csv_every = sim.record_every;
    const bool vtk_series = !out.vtk_basename.empty() && out.vtk_every > 0;
    if (vtk_series) sim.record_every = std::gcd(csv_every, out.vtk_every);

    std::vector<pd::StepDiagnostics> rows;
    std::vector<pd::SimulationObserver<double, Dims>> observers;
    observers.push_back([&](const pd::SparseBlockGrid<double, Dims>& g,
                            const pd::StepDiagnostics& d) {
        if (d.step % csv_every == 0 || d.step == n_steps) rows.push_back(d);
        if (vtk_series && (d.step % out.vtk_every == 0 || d.step == n_steps))
            write_grid_vtk(g, out, d.step);
    });

    pd::run_simulation(grid, sim, observers);

    if (!out.mass_csv.empty()) write_mass_csv(out.mass_csv, rows);
    if (!out.vtk_basename.empty() && !vtk_series) write_grid_vtk(grid, out, n_steps);
    if (!out.snapshot.empty()) {
        ensure_parent_dir(out.snapshot);
        pd::write_sparse_snapshot(grid, out.snapshot);
    }

    const auto& first = rows.front();
    const auto& last = rows.back();
    std::printf("steps: %" PRId64 " dt %s\n", n_steps,
                pd::format_scalar(sim.dt).c_str());
    std::printf("mass: initial %s final %s\n", pd::format_scalar(first.total_mass).c_str(),
                pd::format_scalar(last.total_mass).c_str());
    if (!out.mass_csv.empty())
        std::printf("wrote mass CSV '%s' (%zu rows)\n", out.mass_csv.c_str(), rows.size());
    if (!out.snapshot.empty()) std::printf("wrote snapshot '%s'\n", out.snapshot.c_str());
    return 0;
}

int cmd_simulate(const std::string& config_path, const std::vector<std::string>& sets,
                 std::optional<std::int64_t> steps_override, bool force_dt) {
    pd::PipelineConfig cfg = pd::load_pipeline_config(config_path, sets);
    if (steps_override) {
        if (*steps_override < 0) throw pd::input_error("--steps must be >= 0");
        cfg.simulation.n_steps = *steps_override;
    }
    if (force_dt) cfg.simulation.enforce_stability = false;
    return resolved_dims(cfg.input) == 2 ? simulate_impl<2>(cfg) : simulate_impl<3>(cfg);
}

// ---------------------------------------------------------------------------
// frap
// ---------------------------------------------------------------------------

template <int Dims>
int frap_impl(const pd::PipelineConfig& cfg) {
    auto grid = build_pipeline_grid<Dims>(cfg);
    const auto& geom = grid.geometry();
    const pd::FrapConfig& fc = cfg.frap;

    pd::IndexBox<Dims> bleach;
    if (fc.bleach_lo) {
        for (int a = 0; a < Dims; ++a) {
            bleach.lo[static_cast<std::size_t>(a)] = (*fc.bleach_lo)[static_cast<std::size_t>(a)];
            bleach.hi[static_cast<std::size_t>(a)] = (*fc.bleach_hi)[static_cast<std::size_t>(a)];
        }
    } else {
        bleach = pd::central_bleach_box(geom, fc.bleach_fraction.value_or(0.1));
    }

    pd::FrapSchedule schedule;
    schedule.t_final = fc.t_final;
    schedule.n_samples = fc.n_samples;
    schedule.dt = fc.dt;
    // When a fit follows, the reference experiment and every candidate run
    // must share one time step (stable for the largest diffusivity involved);
    // otherwise the fitted D absorbs the difference in time-discretization
    // error instead of the geometry.
    if (fc.fit_lo > 0.0 && schedule.dt == 0.0)
        schedule.dt =
            0.4 * pd::stability_dt(geom, std::max(fc.d_molecular, fc.fit_hi));
    const auto experiment = pd::run_frap(grid, bleach, fc.d_molecular, schedule);

    std::printf("FRAP: %" PRId64 " bleached of %" PRId64 " phase nodes, %zu samples, "
                "final recovery %s\n",
                experiment.region_nodes, experiment.phase_nodes, experiment.curve.size(),
                pd::format_scalar(experiment.curve.back().recovery).c_str());
    if (!cfg.outputs.recovery_csv.empty()) {
        ensure_parent_dir(cfg.outputs.recovery_csv);
        pd::write_frap_csv(cfg.outputs.recovery_csv, experiment);
        std::printf("wrote recovery CSV '%s'\n", cfg.outputs.recovery_csv.c_str());
    }

    if (fc.fit_lo > 0.0) {
        pd::FitOptions options;
        options.rel_tol = fc.fit_rel_tol;
        options.dt = schedule.dt;
        const auto result =
            pd::fit_effective_D(experiment, geom, bleach, fc.fit_lo, fc.fit_hi, options);
        std::printf("fit: D_eff %s tau_d %s residual %s%s\n",
                    pd::format_scalar(result.d_eff).c_str(),
                    pd::format_scalar(result.tau_d).c_str(),
                    pd::format_scalar(result.fit_residual).c_str(),
                    result.edge_warning ? " (edge warning: widen the search interval)" : "");
        if (!cfg.outputs.tortuosity_json.empty()) {
            ensure_parent_dir(cfg.outputs.tortuosity_json);
            pd::write_tortuosity_json(cfg.outputs.tortuosity_json, result);
            std::printf("wrote tortuosity JSON '%s'\n", cfg.outputs.tortuosity_json.c_str());
        }
    } else if (!cfg.outputs.tortuosity_json.empty()) {
        throw pd::input_error(
            "config: outputs.tortuosity_json needs frap.fit_lo/fit_hi to run the fit");
    }
    return 0;
}

int cmd_frap(const std::string& config_path, const std::vector<std::string>& sets) {
    pd::PipelineConfig cfg = pd::load_pipeline_config(config_path, sets);
    if (!cfg.has_frap_section)
        throw pd::input_error("config: frap: section is required by the frap command");
    return resolved_dims(cfg.input) == 2 ? frap_impl<2>(cfg) : frap_impl<3>(cfg);
}

// ---------------------------------------------------------------------------
// redistance
// ---------------------------------------------------------------------------

int cmd_redistance(pd::InputSpec input, pd::LevelSetOptions options, bool assume_sdf,
                   const std::string& out_path, const std::string& diagnostics_path) {
    if (assume_sdf) {
        if (input.format != "sdf")
            throw pd::input_error(
                "--assume-sdf needs --format sdf (a dense signed-distance snapshot)");
        // Trust the input: keep its values (no rescale) and only polish.
        options.rescale_initial = false;
        options.max_iterations = std::min(options.max_iterations, 2);
    }
    const int dims = resolved_dims(input);

    const auto run = [&](auto dims_tag) -> int {
        constexpr int D = decltype(dims_tag)::value;
        pd::DenseField<double, D> field =
            input.format == "sdf" ? pd::read_dense_snapshot<double, D>(input.path)
                                  : load_indicator<D>(input);
        const auto diag = pd::sussman_redistance(field, options);
        ensure_parent_dir(out_path);
        pd::write_dense_snapshot(field, out_path);
        std::printf("redistanced in %d iterations (residual %s h, %s)\n", diag.iterations,
                    pd::format_scalar(diag.final_residual).c_str(),
                    diag.converged ? "converged" : "iteration cap reached");
        std::printf("wrote SDF snapshot '%s'\n", out_path.c_str());
        if (!diagnostics_path.empty()) {
            nlohmann::json j{{"iterations", diag.iterations},
                             {"final_residual", diag.final_residual},
                             {"converged", diag.converged},
                             {"size", field.geometry().size},
                             {"spacing", field.geometry().spacing}};
            write_json_file(diagnostics_path, j);
        }
        return 0;
    };
    return dims == 2 ? run(std::integral_constant<int, 2>{})
                     : run(std::integral_constant<int, 3>{});
}

// ---------------------------------------------------------------------------
// build-grid
// ---------------------------------------------------------------------------

struct BuildGridArgs {
    std::string sdf_path;
    double band_low = 0.0;
    double band_up = std::numeric_limits<double>::infinity();
    std::optional<double> d_max; // presence selects the sigmoid profile
    double d_min = 0.0;
    double gamma1 = 0.0;
    double gamma2 = 1.0;
    std::optional<double> anchor;
    std::optional<double> uniform_d;
    std::vector<std::string> extra_channels;
    std::optional<double> initial_uniform;
    std::optional<std::int64_t> initial_hash_seed;
    std::string out_path;
    std::string stats_path;
};

int cmd_build_grid(const BuildGridArgs& args) {
    if (args.uniform_d && (args.d_max || args.anchor))
        throw pd::input_error("give either --uniform-d or the sigmoid profile, not both");
    if (args.anchor && args.gamma1 != 0.0)
        throw pd::input_error("give either --gamma1 or --anchor, not both");
    if (args.initial_uniform && args.initial_hash_seed)
        throw pd::input_error("give either --initial-uniform or --initial-hash, not both");

    const auto info = pd::peek_snapshot(args.sdf_path);
    if (info.magic != "SBGD")
        throw pd::input_error("'" + args.sdf_path + "' is not a dense-field snapshot");
    if (info.scalar_bits != 64)
        throw pd::input_error("'" + args.sdf_path +
                              "' stores 32-bit scalars; the pipeline runs at 64-bit");

    const auto run = [&](auto dims_tag) -> int {
        constexpr int D = decltype(dims_tag)::value;
        const auto sdf = pd::read_dense_snapshot<double, D>(args.sdf_path);
        auto channels = pd::solver_channels();
        for (const auto& extra : args.extra_channels) {
            bool present = false;
            for (const auto& c : channels) present = present || c == extra;
            if (!present) channels.push_back(extra);
        }
        auto grid =
            pd::build_sparse_grid(sdf, pd::PhaseBand{args.band_low, args.band_up}, channels);

        if (args.uniform_d) {
            const double v = *args.uniform_d;
            if (v < 0.0) throw pd::input_error("--uniform-d must be >= 0");
            fill_channel(grid, "D", [v](const pd::NodeIndex<D>&) { return v; });
        } else if (args.d_max) {
            pd::DiffusionProfile profile{args.d_min, *args.d_max, args.gamma1, args.gamma2};
            if (args.anchor)
                profile = pd::DiffusionProfile::anchored(args.d_min, *args.d_max,
                                                         args.gamma2, *args.anchor);
            pd::populate_diffusion_channel(grid, profile);
        }

        if (args.initial_uniform) {
            const double v = *args.initial_uniform;
            fill_channel(grid, "u", [v](const pd::NodeIndex<D>&) { return v; });
        } else if (args.initial_hash_seed) {
            if (*args.initial_hash_seed < 0)
                throw pd::input_error("--initial-hash seed must be >= 0");
            const auto seed = static_cast<std::uint64_t>(*args.initial_hash_seed);
            const auto& geom = grid.geometry();
            fill_channel(grid, "u", [&geom, seed](const pd::NodeIndex<D>& idx) {
                return pd::hash_unit_value(
                    seed, static_cast<std::uint64_t>(geom.flat_index(idx)));
            });
        }

        ensure_parent_dir(args.out_path);
        pd::write_sparse_snapshot(grid, args.out_path);
        const auto stats = grid.stats();
        std::printf("built grid: %" PRId64 " active nodes in %" PRId64
                    " chunks (fill %.4f)\n",
                    stats.active_nodes, stats.chunk_count, stats.node_fill_fraction);
        std::printf("wrote grid snapshot '%s'\n", args.out_path.c_str());
        if (!args.stats_path.empty()) {
            nlohmann::json j{{"kind", "sparse_grid"},
                             {"chunk_count", stats.chunk_count},
                             {"active_nodes", stats.active_nodes},
                             {"dense_node_count", stats.dense_node_count},
                             {"max_chunks", stats.max_chunks},
                             {"node_fill_fraction", stats.node_fill_fraction},
                             {"chunk_fill_fraction", stats.chunk_fill_fraction},
                             {"porosity", stats.node_fill_fraction}};
            write_json_file(args.stats_path, j);
        }
        return 0;
    };
    return info.dims == 2 ? run(std::integral_constant<int, 2>{})
                          : run(std::integral_constant<int, 3>{});
}

// ---------------------------------------------------------------------------
// verify
// ---------------------------------------------------------------------------

int cmd_verify(const std::string& study, std::vector<std::int64_t> resolutions,
               std::optional<double> slope_min, std::optional<double> slope_max,
               const std::string& json_path, const std::string& csv_basename) {
    pd::ConvergenceReport report;
    double lo = 0.0, hi = 0.0;
    if (study == "disk") {
        report = pd::run_disk_convergence(resolutions);
        lo = 1.2;
        hi = 1.8;
    } else if (study == "redistance-disk" || study == "redistance-ball") {
        report = pd::run_redistance_convergence(resolutions,
                                                study == "redistance-disk"
                                                    ? pd::RedistanceShape::disk2d
                                                    : pd::RedistanceShape::ball3d);
        lo = 0.75;
        hi = 1.25;
    } else {
        throw pd::input_error(
            "--study must be disk, redistance-disk, or redistance-ball");
    }
    if (slope_min) lo = *slope_min;
    if (slope_max) hi = *slope_max;
    if (!(lo < hi)) throw pd::input_error("--slope-min must be < --slope-max");

    std::printf("study %s: %zu resolutions\n", study.c_str(), report.resolutions.size());
    for (std::size_t i = 0; i < report.resolutions.size(); ++i)
        std::printf("  n=%" PRId64 " h=%s L2=%s Linf=%s\n", report.resolutions[i],
                    pd::format_scalar(report.spacings[i]).c_str(),
                    pd::format_scalar(report.l2_errors[i]).c_str(),
                    pd::format_scalar(report.linf_errors[i]).c_str());
    for (const auto& w : report.warnings) std::printf("warning: %s\n", w.c_str());

    const auto judge = [&](const char* name, const std::optional<double>& slope) {
        if (!slope) {
            std::printf("%s slope: not fitted -> FAIL\n", name);
            return false;
        }
        const bool ok = *slope >= lo && *slope <= hi;
        std::printf("%s slope %.4f in [%.4f, %.4f]: %s\n", name, *slope, lo, hi,
                    ok ? "PASS" : "FAIL");
        return ok;
    };
    const bool ok_l2 = judge("L2", report.l2_slope);
    const bool ok_linf = judge("Linf", report.linf_slope);
    const bool pass = ok_l2 && ok_linf && !report.non_monotone;
    if (report.non_monotone) std::printf("errors are not monotone in h\n");
    std::printf("RESULT: %s\n", pass ? "PASS" : "FAIL");

    if (!json_path.empty()) write_json_file(json_path, pd::convergence_to_json(report));
    if (!csv_basename.empty()) {
        ensure_parent_dir(csv_basename + "_l2.csv");
        pd::write_convergence_csv(csv_basename + "_l2.csv", report, pd::ErrorNorm::l2);
        pd::write_convergence_csv(csv_basename + "_linf.csv", report, pd::ErrorNorm::linf);
    }
    return pass ? 0 : 1;
}

// ---------------------------------------------------------------------------
// stats
// ---------------------------------------------------------------------------

int cmd_stats(const std::string& grid_path, const std::string& mask_path,
              const std::string& sidecar, int dims, const std::string& out_path) {
    nlohmann::json j;
    if (!grid_path.empty()) {
        const auto info = pd::peek_snapshot(grid_path);
        if (info.magic != "SBGR")
            throw pd::input_error("'" + grid_path + "' is not a sparse-grid snapshot");
        const auto fill = [&](const auto& grid) {
            const auto stats = grid.stats();
            j["kind"] = "sparse_grid";
            j["dims"] = info.dims;
            j["scalar_bits"] = info.scalar_bits;
            j["properties"] = info.properties;
            j["chunk_count"] = stats.chunk_count;
            j["active_nodes"] = stats.active_nodes;
            j["dense_node_count"] = stats.dense_node_count;
            j["max_chunks"] = stats.max_chunks;
            j["node_fill_fraction"] = stats.node_fill_fraction;
            j["chunk_fill_fraction"] = stats.chunk_fill_fraction;
            j["porosity"] = stats.node_fill_fraction;
        };
        if (info.dims == 2 && info.scalar_bits == 64)
            fill(pd::read_sparse_snapshot<double, 2>(grid_path));
        else if (info.dims == 3 && info.scalar_bits == 64)
            fill(pd::read_sparse_snapshot<double, 3>(grid_path));
        else if (info.dims == 2)
            fill(pd::read_sparse_snapshot<float, 2>(grid_path));
        else
            fill(pd::read_sparse_snapshot<float, 3>(grid_path));
    } else if (!mask_path.empty()) {
        const std::string side = sidecar.empty() ? mask_path + ".json" : sidecar;
        const auto fill = [&](const auto& mask) {
            std::int64_t phase = 0;
            for (std::uint8_t b : mask.bits) phase += b ? 1 : 0;
            j["kind"] = "mask";
            j["voxel_count"] = mask.voxel_count();
            j["phase_voxels"] = phase;
            j["porosity"] = pd::porosity(mask);
        };
        if (dims == 2)
            fill(pd::read_mask<2>(mask_path, side));
        else
            fill(pd::read_mask<3>(mask_path, side));
    } else {
        throw pd::input_error("stats needs --grid or --mask");
    }

    if (out_path.empty())
        std::printf("%s\n", j.dump(2).c_str());
    else
        write_json_file(out_path, j);
    return 0;
}

// ---------------------------------------------------------------------------
// main
// ---------------------------------------------------------------------------

template <class Fn>
int protected_run(Fn&& fn) {
    try {
        return fn();
    } catch (const pd::stability_error& e) {
        std::cerr << "error: " << e.what() << '\n';
        return 3;
    } catch (const pd::numeric_error& e) {
        std::cerr << "error: " << e.what() << '\n';
        return 4;
    } catch (const pd::error& e) { // input, io, bounds, property
        std::cerr << "error: " << e.what() << '\n';
        return 2;
    } catch (const std::exception& e) {
        std::cerr << "internal error: " << e.what() << '\n';
        return 4;
    }
}

} // namespace

int main(int argc, char** argv) {
    if (const char* env = std::getenv("RD_THREADS")) {
        long long v = 0;
        try {
            v = pd::parse_integer(env);
        } catch (const pd::error&) {
            std::cerr << "error: RD_THREADS must be a positive integer\n";
            return 2;
        }
        if (v < 1) {
            std::cerr << "error: RD_THREADS must be a positive integer\n";
            return 2;
        }
        pd::set_worker_count(
            static_cast<int>(std::min<long long>(v, pd::worker_count())));
    }

    CLI::App app{"pore-scale reaction-diffusion toolkit"};
    app.require_subcommand(1);

    // simulate
    std::string sim_config;
    std::vector<std::string> sim_sets;
    std::int64_t sim_steps = 0;
    bool sim_force_dt = false;
    auto* sim = app.add_subcommand(
        "simulate", "run the mask -> grid -> reaction-diffusion pipeline");
    sim->add_option("--config", sim_config, "pipeline config JSON")->required();
    sim->add_option("--set", sim_sets, "override a config field (dotted.path=value)");
    auto* sim_steps_opt =
        sim->add_option("--steps", sim_steps, "override step count (0 = initial state only)");
    sim->add_flag("--force-dt", sim_force_dt,
                  "run even when dt violates the stability bound");

    // frap
    std::string frap_config;
    std::vector<std::string> frap_sets;
    auto* frap = app.add_subcommand(
        "frap", "virtual fluorescence-recovery experiment and effective-D fit");
    frap->add_option("--config", frap_config, "pipeline config JSON with a frap section")
        ->required();
    frap->add_option("--set", frap_sets, "override a config field (dotted.path=value)");

    // redistance
    pd::InputSpec red_input;
    pd::LevelSetOptions red_options;
    bool red_assume_sdf = false;
    std::string red_out, red_diag;
    auto* red = app.add_subcommand("redistance",
                                   "build a signed distance field from a binary mask");
    red->add_option("--mask", red_input.path, "mask volume (raw/pgm) or SDF snapshot")
        ->required();
    red->add_option("--sidecar", red_input.sidecar,
                    "raw-format sidecar JSON (default: <mask>.json)");
    red->add_option("--format", red_input.format, "input format: raw, pgm, or sdf")
        ->check(CLI::IsMember({"raw", "pgm", "sdf"}));
    red->add_option("--dims", red_input.dims, "mask dimensionality for raw input (2 or 3)")
        ->check(CLI::IsMember({2, 3}));
    red->add_option("--filter-min-thickness", red_input.filter_min_thickness,
                    "remove phase features thinner than this many cells (0 = off)")
        ->check(CLI::NonNegativeNumber);
    red->add_option("--max-iterations", red_options.max_iterations,
                    "redistancing sweep cap")
        ->check(CLI::PositiveNumber);
    red->add_option("--tolerance", red_options.tolerance,
                    "stop when the max band update falls below tolerance * h");
    red->add_flag("--assume-sdf", red_assume_sdf,
                  "input is already a signed distance; polish with at most 2 sweeps");
    red->add_option("--out", red_out, "output dense snapshot path")->required();
    red->add_option("--diagnostics", red_diag, "write iteration diagnostics JSON here");

    // build-grid
    BuildGridArgs bg;
    double bg_d_max = 0.0, bg_anchor = 0.0, bg_uniform_d = 0.0, bg_init_u = 0.0;
    std::int64_t bg_seed = 0;
    auto* bgc = app.add_subcommand("build-grid",
                                   "build a sparse block grid from an SDF snapshot");
    bgc->add_option("--sdf", bg.sdf_path, "dense SDF snapshot")->required();
    bgc->add_option("--band-low", bg.band_low, "phase band lower bound (default 0)");
    bgc->add_option("--band-up", bg.band_up, "phase band upper bound (default +inf)");
    auto* bg_dmax_opt = bgc->add_option("--d-max", bg_d_max,
                                        "sigmoid diffusivity amplitude (enables profile)");
    bgc->add_option("--d-min", bg.d_min, "sigmoid diffusivity floor");
    bgc->add_option("--gamma1", bg.gamma1, "sigmoid shift");
    bgc->add_option("--gamma2", bg.gamma2, "sigmoid steepness (1/length)");
    auto* bg_anchor_opt =
        bgc->add_option("--anchor", bg_anchor, "place the sigmoid midpoint at this phi");
    auto* bg_uni_opt =
        bgc->add_option("--uniform-d", bg_uniform_d, "uniform diffusivity instead");
    bgc->add_option("--extra-channel", bg.extra_channels,
                    "additional zero-initialized channel (repeatable)");
    auto* bg_init_opt =
        bgc->add_option("--initial-uniform", bg_init_u, "set u to this constant");
    auto* bg_hash_opt = bgc->add_option("--initial-hash", bg_seed,
                                        "set u to seeded per-node values in [0,1)");
    bgc->add_option("--out", bg.out_path, "output sparse snapshot path")->required();
    bgc->add_option("--stats-json", bg.stats_path, "write occupancy stats JSON here");

    // verify
    std::string ver_study;
    std::vector<std::int64_t> ver_res;
    double ver_min = 0.0, ver_max = 0.0;
    std::string ver_json, ver_csv;
    auto* ver = app.add_subcommand("verify",
                                   "convergence study with pass/fail slope windows");
    ver->add_option("--study", ver_study,
                    "disk (manufactured solution), redistance-disk, or redistance-ball")
        ->required()
        ->check(CLI::IsMember({"disk", "redistance-disk", "redistance-ball"}));
    ver->add_option("--resolutions", ver_res, "ascending nodes-per-axis list")
        ->required()
        ->delimiter(',');
    auto* ver_min_opt =
        ver->add_option("--slope-min", ver_min, "override the window lower edge");
    auto* ver_max_opt =
        ver->add_option("--slope-max", ver_max, "override the window upper edge");
    ver->add_option("--json", ver_json, "write the full report JSON here");
    ver->add_option("--csv-basename", ver_csv,
                    "write <basename>_l2.csv and <basename>_linf.csv");

    // stats
    std::string st_grid, st_mask, st_sidecar, st_out;
    int st_dims = 3;
    auto* st = app.add_subcommand("stats", "occupancy and porosity of a grid or mask");
    st->add_option("--grid", st_grid, "sparse grid snapshot");
    st->add_option("--mask", st_mask, "raw mask volume");
    st->add_option("--sidecar", st_sidecar, "mask sidecar JSON (default: <mask>.json)");
    st->add_option("--dims", st_dims, "mask dimensionality (2 or 3)")
        ->check(CLI::IsMember({2, 3}));
    st->add_option("--out", st_out, "write the JSON here instead of stdout");

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        const int code = app.exit(e);
        return code == 0 ? 0 : 2; // CLI parse problems are input errors
    }

    return protected_run([&]() -> int {
        if (*sim)
            return cmd_simulate(sim_config, sim_sets,
                                sim_steps_opt->count() > 0
                                    ? std::optional<std::int64_t>(sim_steps)
                                    : std::nullopt,
                                sim_force_dt);
        if (*frap) return cmd_frap(frap_config, frap_sets);
        if (*red) return cmd_redistance(red_input, red_options, red_assume_sdf, red_out,
                                        red_diag);
        if (*bgc) {
            if (bg_dmax_opt->count() > 0) bg.d_max = bg_d_max;
            if (bg_anchor_opt->count() > 0) bg.anchor = bg_anchor;
            if (bg_uni_opt->count() > 0) bg.uniform_d = bg_uniform_d;
            if (bg_init_opt->count() > 0) bg.initial_uniform = bg_init_u;
            if (bg_hash_opt->count() > 0) bg.initial_hash_seed = bg_seed;
            return cmd_build_grid(bg);
        }
        if (*ver)
            return cmd_verify(ver_study, ver_res,
                              ver_min_opt->count() > 0 ? std::optional<double>(ver_min)
                                                       : std::nullopt,
                              ver_max_opt->count() > 0 ? std::optional<double>(ver_max)
                                                       : std::nullopt,
                              ver_json, ver_csv);
        if (*st) return cmd_stats(st_grid, st_mask, st_sidecar, st_dims, st_out);
        return 2; // unreachable: require_subcommand(1)
    });
}
