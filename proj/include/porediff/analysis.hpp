#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <fstream>
#include <string>
#include <utility>
#include <vector>

#include <json.hpp>

#include "porediff/errors.hpp"
#include "porediff/geometry.hpp"
#include "porediff/scalar_text.hpp"
#include "porediff/solver.hpp"
#include "porediff/sparse_block_grid.hpp"

/// Fluorescence-recovery (FRAP) experiments on arbitrary pore geometries,
/// least-squares fitting of an effective diffusivity against a free-box
/// reference, and porosity-tortuosity correlations.
///
/// The virtual experiment: set u = 1 everywhere in the phase except inside a
/// bleached box (u = 0), seal the domain, diffuse with the molecular
/// diffusivity, and record the mass inside the box over time. The curve is
/// normalized by the box's equilibrium share of the total mass, so recovery
/// runs from 0 to 1 regardless of geometry. Fitting finds the scalar
/// diffusivity for which the same experiment in an unobstructed box best
/// reproduces the porous curve; the diffusional tortuosity is the ratio
/// tau_d = D_molecular / D_eff.

namespace porediff {

/// Axis-aligned box of node indices: `lo` inclusive, `hi` exclusive.
template <int Dims>
struct IndexBox {
    NodeIndex<Dims> lo{};
    NodeIndex<Dims> hi{};

    bool contains(const NodeIndex<Dims>& idx) const {
        for (int a = 0; a < Dims; ++a)
            if (idx[static_cast<std::size_t>(a)] < lo[static_cast<std::size_t>(a)] ||
                idx[static_cast<std::size_t>(a)] >= hi[static_cast<std::size_t>(a)])
                return false;
        return true;
    }

    std::int64_t volume() const {
        std::int64_t v = 1;
        for (int a = 0; a < Dims; ++a)
            v *= std::max<std::int64_t>(0, hi[static_cast<std::size_t>(a)] -
                                               lo[static_cast<std::size_t>(a)]);
        return v;
    }
};

/// Centered box covering `fraction` of the grid extent per axis (at least
/// one node). The default mirrors the documented bleach-box choice: 10% of
/// the domain extent on every axis, centered.
template <int Dims>
IndexBox<Dims> central_bleach_box(const GridGeometry<Dims>& geom, double fraction = 0.1) {
    if (!(fraction > 0.0) || fraction > 1.0)
        throw input_error("bleach box fraction must be in (0, 1]");
    IndexBox<Dims> box;
    for (int a = 0; a < Dims; ++a) {
        const std::int64_t n = geom.size[static_cast<std::size_t>(a)];
        const std::int64_t w = std::clamp<std::int64_t>(
            std::llround(fraction * static_cast<double>(n)), 1, n);
        box.lo[static_cast<std::size_t>(a)] = (n - w) / 2;
        box.hi[static_cast<std::size_t>(a)] = (n - w) / 2 + w;
    }
    return box;
}

struct FrapSample {
    double time = 0.0;
    double recovery = 0.0; // normalized mass in the bleached box, -> 1
};

/// Result of one virtual FRAP run. `curve` is ordered by strictly
/// increasing time and starts at (0, 0).
struct FrapExperiment {
    double d_molecular = 0.0;
    std::int64_t region_nodes = 0; // active nodes inside the bleach box
    std::int64_t phase_nodes = 0;  // all active nodes
    std::vector<FrapSample> curve;
};

struct FrapSchedule {
    double t_final = 0.0; // simulated time span (required, > 0)
    int n_samples = 200;  // target number of recorded samples after t = 0
    double dt = 0.0;      // explicit step; 0 -> 0.4 x stability bound
};

/// Effective-diffusivity fit. tau_d is defined as d_molecular / d_eff, so
/// tau_d * d_eff reproduces d_molecular exactly.
struct TortuosityResult {
    double d_molecular = 0.0;
    double d_eff = 0.0;
    double tau_d = 0.0;
    double fit_residual = 0.0;
    /// Set when the optimum converged onto an end of the search interval:
    /// the bracket was too narrow and d_eff is only a bound.
    bool edge_warning = false;
};

namespace detail {

/// Lexicographic walk over the index box (axis 0 fastest).
template <int Dims, class F>
void for_each_in_box(const IndexBox<Dims>& box, F&& f) {
    NodeIndex<Dims> idx = box.lo;
    for (int a = 0; a < Dims; ++a)
        if (box.lo[static_cast<std::size_t>(a)] >= box.hi[static_cast<std::size_t>(a)])
            return;
    while (true) {
        f(idx);
        int a = 0;
        for (; a < Dims; ++a) {
            auto& c = idx[static_cast<std::size_t>(a)];
            if (++c < box.hi[static_cast<std::size_t>(a)]) break;
            c = box.lo[static_cast<std::size_t>(a)];
        }
        if (a == Dims) return;
    }
}

/// Piecewise-linear interpolation of a recovery curve, clamped at both ends.
inline double interp_curve(const std::vector<FrapSample>& curve, double t) {
    if (curve.empty()) throw input_error("cannot interpolate an empty recovery curve");
    if (t <= curve.front().time) return curve.front().recovery;
    if (t >= curve.back().time) return curve.back().recovery;
    const auto it = std::lower_bound(
        curve.begin(), curve.end(), t,
        [](const FrapSample& s, double v) { return s.time < v; });
    const auto& b = *it;
    const auto& a = *(it - 1);
    const double w = (t - a.time) / (b.time - a.time);
    return a.recovery + w * (b.recovery - a.recovery);
}

} // namespace detail

/// Unobstructed reference medium: every node of the box is active with
/// phi = 1; u and D start at zero and are set by the experiment.
template <typename T, int Dims>
SparseBlockGrid<T, Dims> build_free_box_grid(const GridGeometry<Dims>& geom) {
    SparseBlockGrid<T, Dims> grid(geom, solver_channels());
    const std::array<T, 4> values{T{1}, T{0}, T{0}, T{0}}; // phi, u, D, u_next
    for (std::int64_t f = 0; f < geom.node_count(); ++f)
        grid.insert(geom.unflatten(f), values);
    return grid;
}

/// Runs the virtual FRAP experiment on `grid` (which must carry the solver
/// channels). Overwrites the "u" channel with the bleach initial condition
/// and the "D" channel with the uniform molecular diffusivity; phi is left
/// untouched. The domain is sealed (no-flux outer faces).
template <typename T, int Dims>
FrapExperiment run_frap(SparseBlockGrid<T, Dims>& grid, const IndexBox<Dims>& bleach,
                        double d_molecular, const FrapSchedule& schedule) {
    const auto& geom = grid.geometry();
    if (!(d_molecular > 0.0) || !std::isfinite(d_molecular))
        throw input_error("molecular diffusivity must be positive and finite");
    if (!(schedule.t_final > 0.0) || !std::isfinite(schedule.t_final))
        throw input_error("FRAP schedule needs t_final > 0");
    if (schedule.n_samples < 1)
        throw input_error("FRAP schedule needs at least one sample");
    for (int a = 0; a < Dims; ++a) {
        const auto lo = bleach.lo[static_cast<std::size_t>(a)];
        const auto hi = bleach.hi[static_cast<std::size_t>(a)];
        if (lo < 0 || hi > geom.size[static_cast<std::size_t>(a)] || lo >= hi)
            throw input_error("bleach region is empty or outside the grid on axis " +
                              std::to_string(a));
    }

    // Initial condition and counts in one pass.
    std::int64_t region = 0, phase = 0;
    grid.for_each_active([&](const NodeIndex<Dims>& idx, const auto&, int) {
        const bool in = bleach.contains(idx);
        grid.set(idx, "u", in ? T{0} : T{1});
        grid.set(idx, "D", static_cast<T>(d_molecular));
        region += in ? 1 : 0;
        ++phase;
    });
    if (region == 0) throw input_error("bleach region contains no active nodes");
    if (region == phase)
        throw input_error("bleach region covers the whole phase; recovery is undefined");

    const double bound = stability_dt(geom, d_molecular);
    double dt = schedule.dt;
    if (dt == 0.0) {
        dt = 0.4 * bound;
    } else if (!(dt > 0.0) || !(dt < bound)) {
        throw input_error("FRAP time step must lie in (0, " + format_scalar(bound) + ")");
    }
    const auto n_steps = static_cast<std::int64_t>(std::ceil(schedule.t_final / dt));

    SimulationConfig cfg;
    cfg.dt = dt;
    cfg.n_steps = std::max<std::int64_t>(1, n_steps);
    cfg.record_every =
        std::max<std::int64_t>(1, cfg.n_steps / std::max(1, schedule.n_samples));

    FrapExperiment exp;
    exp.d_molecular = d_molecular;
    exp.region_nodes = region;
    exp.phase_nodes = phase;

    double denom = 0.0; // equilibrium mass share of the region, set at step 0
    std::vector<SimulationObserver<T, Dims>> observers{
        [&](const SparseBlockGrid<T, Dims>& g, const StepDiagnostics& d) {
            double m = 0.0;
            detail::for_each_in_box(bleach, [&](const NodeIndex<Dims>& idx) {
                if (const auto u = g.get(idx, "u")) m += static_cast<double>(*u);
            });
            m *= geom.cell_volume();
            if (d.step == 0)
                denom = d.total_mass * static_cast<double>(region) /
                        static_cast<double>(phase);
            exp.curve.push_back({d.time, m / denom});
        }};
    run_simulation(grid, cfg, observers);
    return exp;
}

/// Sum of squared differences between the reference curve and a free-box
/// FRAP run with diffusivity `d_candidate`, interpolated onto the reference
/// sample times. Exposed so the fit objective can be probed directly.
template <int Dims>
double frap_fit_objective(const FrapExperiment& reference,
                          const GridGeometry<Dims>& box_geometry,
                          const IndexBox<Dims>& box_bleach, double d_candidate,
                          double dt = 0.0, int n_samples = 0) {
    if (reference.curve.size() < 2)
        throw input_error("reference FRAP curve needs at least two samples");
    auto grid = build_free_box_grid<double, Dims>(box_geometry);
    FrapSchedule schedule;
    schedule.t_final = reference.curve.back().time;
    schedule.n_samples =
        n_samples > 0 ? n_samples : static_cast<int>(reference.curve.size());
    schedule.dt = dt;
    const auto candidate = run_frap(grid, box_bleach, d_candidate, schedule);
    double sum = 0.0;
    for (const auto& s : reference.curve) {
        const double diff = detail::interp_curve(candidate.curve, s.time) - s.recovery;
        sum += diff * diff;
    }
    return sum;
}

struct FitOptions {
    double rel_tol = 1e-3; // golden-section stopping width, relative
    int n_samples = 0;     // candidate curve samples; 0 -> match reference
    double dt = 0.0;       // candidate step; 0 -> 0.4 x bound at the upper D
};

/// Fits the scalar diffusivity whose free-box FRAP curve best matches the
/// reference in least squares, via derivative-free golden-section search on
/// [d_lo, d_hi]. All candidate runs share one time step (stable for the
/// largest D in the interval) so the objective varies smoothly in D.
template <int Dims>
TortuosityResult fit_effective_D(const FrapExperiment& reference,
                                 const GridGeometry<Dims>& box_geometry,
                                 const IndexBox<Dims>& box_bleach, double d_lo,
                                 double d_hi, const FitOptions& options = {}) {
    if (!(d_lo > 0.0) || !(d_hi > d_lo) || !std::isfinite(d_hi))
        throw input_error("search interval must satisfy 0 < d_lo < d_hi (finite)");
    if (!(options.rel_tol > 0.0) || options.rel_tol >= 1.0)
        throw input_error("fit relative tolerance must be in (0, 1)");
    const double dt =
        options.dt > 0.0 ? options.dt : 0.4 * stability_dt(box_geometry, d_hi);
    auto objective = [&](double d) {
        return frap_fit_objective(reference, box_geometry, box_bleach, d, dt,
                                  options.n_samples);
    };

    const double invphi = (std::sqrt(5.0) - 1.0) / 2.0;
    double a = d_lo, b = d_hi;
    double c = b - invphi * (b - a);
    double d = a + invphi * (b - a);
    double fc = objective(c);
    double fd = objective(d);
    while (b - a > options.rel_tol * 0.5 * (a + b)) {
        if (fc < fd) {
            b = d;
            d = c;
            fd = fc;
            c = b - invphi * (b - a);
            fc = objective(c);
        } else {
            a = c;
            c = d;
            fc = fd;
            d = a + invphi * (b - a);
            fd = objective(d);
        }
    }

    TortuosityResult result;
    result.d_molecular = reference.d_molecular;
    result.d_eff = fc < fd ? c : d;
    result.fit_residual = std::min(fc, fd);
    result.tau_d = reference.d_molecular / result.d_eff;
    const double margin = 4.0 * options.rel_tol;
    result.edge_warning = result.d_eff <= d_lo * (1.0 + margin) ||
                          result.d_eff >= d_hi * (1.0 - margin);
    return result;
}

/// Power-law porosity correlation tau_d = psi^(-N), psi in (0, 1].
inline double tortuosity_power_law(double psi, double exponent) {
    if (!(psi > 0.0) || psi > 1.0)
        throw input_error("power-law correlation needs porosity in (0, 1]");
    return std::pow(psi, -exponent);
}

/// Linear mixing correlation tau_d = psi + beta * (1 - psi).
inline double tortuosity_linear(double psi, double beta = 1.65) {
    return psi + beta * (1.0 - psi);
}

/// CSV with header "time,recovery_fraction", one row per sample, scalars
/// printed round-trip exactly.
inline void write_frap_csv(const std::string& path, const FrapExperiment& exp) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw io_error("cannot open '" + path + "' for writing");
    out << "time,recovery_fraction\n";
    for (const auto& s : exp.curve)
        out << format_scalar(s.time) << ',' << format_scalar(s.recovery) << '\n';
    if (!out) throw io_error("failed while writing '" + path + "'");
}

inline nlohmann::json tortuosity_to_json(const TortuosityResult& r) {
    return nlohmann::json{{"d_molecular", r.d_molecular},
                          {"d_eff", r.d_eff},
                          {"tau_d", r.tau_d},
                          {"fit_residual", r.fit_residual},
                          {"edge_warning", r.edge_warning}};
}

inline void write_tortuosity_json(const std::string& path, const TortuosityResult& r) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw io_error("cannot open '" + path + "' for writing");
    out << tortuosity_to_json(r).dump(2) << '\n';
    if (!out) throw io_error("failed while writing '" + path + "'");
}

} // namespace porediff
