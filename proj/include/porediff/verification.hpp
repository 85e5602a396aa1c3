#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <fstream>
#include <optional>
#include <string>
#include <vector>

#include <json.hpp>

#include "porediff/dense_field.hpp"
#include "porediff/errors.hpp"
#include "porediff/geometry.hpp"
#include "porediff/levelset.hpp"
#include "porediff/scalar_text.hpp"
#include "porediff/solver.hpp"
#include "porediff/sparse_block_grid.hpp"

/// Manufactured-solution machinery for the 2D unit-disk benchmark and
/// automated convergence studies for both the transport solver and the
/// redistancing sweep.
///
/// The benchmark solves u_t = D Laplace(u) + f on the unit disk with a
/// no-flux rim, where the exact solution U(r,t) = (r^3/3 - r^4/4) e^{-Bt}
/// has zero radial derivative at r = 1 and f is the closed-form source that
/// makes U satisfy the equation. Radial quantities are evaluated in
/// Cartesian coordinates (r = |x|); polar coordinates only serve to derive
/// the closed forms.

namespace porediff {

/// Parameters of the disk benchmark. The closed forms below are specific to
/// a unit no-flux radius, so R must stay 1; it is carried explicitly to make
/// that assumption visible.
struct ManufacturedCase {
    double B = 20.0;
    double R = 1.0;
    double D = 1.0;
    double t_final = 0.025;
};

/// Exact solution U(r,t) = (r^3/3 - r^4/4) e^{-Bt}; U(1,0) = 1/12 and
/// dU/dr vanishes at r = 1 for all t.
inline double exact_solution(double r, double t, const ManufacturedCase& c = {}) {
    return (r * r * r / 3.0 - r * r * r * r / 4.0) * std::exp(-c.B * t);
}

/// Source f(r,t) = (B/4 r^4 - B/3 r^3 + 4r^2 - 3r) e^{-Bt} that turns U into
/// a solution of u_t = Laplace(u) + f on the unit disk (D = 1 scaling is
/// absorbed into the closed form; the benchmark runs with D = 1).
inline double source_term(double r, double t, const ManufacturedCase& c = {}) {
    return (c.B / 4.0 * r * r * r * r - c.B / 3.0 * r * r * r + 4.0 * r * r - 3.0 * r) *
           std::exp(-c.B * t);
}

struct ConvergenceReport {
    std::vector<std::int64_t> resolutions; ///< nodes per axis, ascending
    std::vector<double> spacings;          ///< grid spacing h per resolution
    std::vector<double> l2_errors;         ///< RMS error per resolution
    std::vector<double> linf_errors;       ///< max error per resolution
    std::optional<double> l2_slope;        ///< log-log slope vs h (empty when unfittable)
    std::optional<double> linf_slope;
    bool non_monotone = false; ///< some error list fails to decrease with h
    std::vector<std::string> warnings;
};

/// Ordinary least-squares slope of log(error) against log(h). Pairs with a
/// non-positive error are skipped; fewer than two usable pairs -> empty.
inline std::optional<double> fit_loglog_slope(const std::vector<double>& h,
                                              const std::vector<double>& error) {
    if (h.size() != error.size())
        throw input_error("slope fit needs matching h and error lists");
    std::vector<double> lx, ly;
    for (std::size_t i = 0; i < h.size(); ++i) {
        if (!(h[i] > 0.0)) throw input_error("slope fit needs positive spacings");
        if (error[i] > 0.0) {
            lx.push_back(std::log(h[i]));
            ly.push_back(std::log(error[i]));
        }
    }
    if (lx.size() < 2) return std::nullopt;
    double mx = 0.0, my = 0.0;
    for (std::size_t i = 0; i < lx.size(); ++i) {
        mx += lx[i];
        my += ly[i];
    }
    mx /= static_cast<double>(lx.size());
    my /= static_cast<double>(ly.size());
    double num = 0.0, den = 0.0;
    for (std::size_t i = 0; i < lx.size(); ++i) {
        num += (lx[i] - mx) * (ly[i] - my);
        den += (lx[i] - mx) * (lx[i] - mx);
    }
    if (den == 0.0) return std::nullopt;
    return num / den;
}

namespace detail {

inline void validate_case(const ManufacturedCase& c) {
    if (!(c.B > 0.0)) throw input_error("manufactured case needs B > 0");
    if (c.R != 1.0)
        throw input_error(
            "manufactured case requires R = 1 (the closed forms place the "
            "no-flux rim at unit radius)");
    if (!(c.D > 0.0)) throw input_error("manufactured case needs D > 0");
    if (!(c.t_final > 0.0)) throw input_error("manufactured case needs t_final > 0");
}

inline void validate_resolutions(const std::vector<std::int64_t>& resolutions,
                                 std::int64_t floor) {
    if (resolutions.empty()) throw input_error("convergence study needs resolutions");
    for (std::size_t i = 0; i < resolutions.size(); ++i) {
        if (resolutions[i] < floor)
            throw input_error("resolution " + std::to_string(resolutions[i]) +
                              " is below the floor of " + std::to_string(floor) +
                              " nodes per axis");
        if (i > 0 && resolutions[i] <= resolutions[i - 1])
            throw input_error("resolutions must be strictly ascending");
    }
}

inline void flag_non_monotone(ConvergenceReport& report, const std::vector<double>& errors,
                              const char* name) {
    for (std::size_t i = 1; i < errors.size(); ++i) {
        if (errors[i] >= errors[i - 1]) {
            report.non_monotone = true;
            report.warnings.push_back(
                std::string(name) + " error does not decrease from n=" +
                std::to_string(report.resolutions[i - 1]) + " to n=" +
                std::to_string(report.resolutions[i]));
        }
    }
}

inline void finish_report(ConvergenceReport& report) {
    report.l2_slope = fit_loglog_slope(report.spacings, report.l2_errors);
    report.linf_slope = fit_loglog_slope(report.spacings, report.linf_errors);
    if (!report.l2_slope || !report.linf_slope)
        report.warnings.push_back(
            "slopes not fitted: need at least two resolutions with nonzero error");
    flag_non_monotone(report, report.l2_errors, "L2");
    flag_non_monotone(report, report.linf_errors, "Linf");
}

} // namespace detail

/// Sparse disk grid of the benchmark at n nodes per axis: box
/// [-1.28, 1.28]^2, phase from the analytic disk signed distance R - |x|,
/// channels {phi, u, D, u_next, f} with u = U(r, 0), D = case D, and f set
/// to the source's radial part (its e^{-Bt} factor enters as the reaction
/// time factor).
inline SparseBlockGrid<double, 2> build_manufactured_disk_grid(
    std::int64_t n, const ManufacturedCase& c = {}) {
    detail::validate_case(c);
    auto geom = GridGeometry<2>::cell_centered_box(n, -1.28 * c.R, 1.28 * c.R);
    DenseField<double, 2> sdf(geom);
    sdf.fill_from_position([&](const std::array<double, 2>& x) {
        return c.R - std::sqrt(x[0] * x[0] + x[1] * x[1]);
    });
    auto grid = build_sparse_grid(
        sdf, PhaseBand{0.0, std::numeric_limits<double>::infinity()},
        {"phi", "u", "D", scratch_channel, "f"});
    grid.for_each_active([&](const NodeIndex<2>& idx, const auto&, int) {
        const auto x = geom.position(idx);
        const double r = std::sqrt(x[0] * x[0] + x[1] * x[1]);
        grid.set(idx, "u", exact_solution(r, 0.0, c));
        grid.set(idx, "D", c.D);
        grid.set(idx, "f", source_term(r, 0.0, c));
    });
    return grid;
}

/// RMS and max deviation of the grid's u channel from U(r, t) over active
/// nodes.
inline BandErrorNorms disk_error_norms(const SparseBlockGrid<double, 2>& grid, double t,
                                       const ManufacturedCase& c = {}) {
    const auto& geom = grid.geometry();
    const int i_u = grid.property_index("u");
    BandErrorNorms norms;
    double sum_sq = 0.0;
    grid.for_each_active([&](const NodeIndex<2>& idx, const auto& chunk, int off) {
        const auto x = geom.position(idx);
        const double r = std::sqrt(x[0] * x[0] + x[1] * x[1]);
        const double u = static_cast<double>(grid.channel_data(chunk, i_u)[off]);
        const double err = std::abs(u - exact_solution(r, t, c));
        sum_sq += err * err;
        norms.linf = std::max(norms.linf, err);
        ++norms.count;
    });
    if (norms.count == 0) throw input_error("disk grid has no active nodes");
    norms.l2 = std::sqrt(sum_sq / static_cast<double>(norms.count));
    return norms;
}

/// Runs the disk benchmark at each resolution with dt = h^2/8 (shrunk below
/// the stability bound with a warning if the case's D demands it), compares
/// against U at the exactly reached time, and fits log-log slopes.
inline ConvergenceReport run_disk_convergence(const std::vector<std::int64_t>& resolutions,
                                              const ManufacturedCase& c = {}) {
    detail::validate_case(c);
    detail::validate_resolutions(resolutions, 32);

    ConvergenceReport report;
    for (const std::int64_t n : resolutions) {
        auto grid = build_manufactured_disk_grid(n, c);
        const double h = grid.geometry().min_spacing();
        const double bound = stability_dt(grid.geometry(), c.D);
        double dt = h * h / 8.0;
        if (!(dt < bound)) {
            dt = 0.4 * bound;
            report.warnings.push_back("time step reduced below the stability bound at n=" +
                                      std::to_string(n));
        }
        const auto n_steps =
            std::max<std::int64_t>(1, std::llround(c.t_final / dt));

        SimulationConfig cfg;
        cfg.dt = dt;
        cfg.n_steps = n_steps;
        cfg.record_every = n_steps;
        // The separable factor is sampled at the step midpoint: that cancels
        // the source's contribution to the O(dt) truncation term, which
        // otherwise dominates the coarse-grid errors (B = 20 makes u_tt
        // large) and pushes the coarsest successive-error ratio above 4.
        const double b = c.B;
        cfg.reaction = ReactionSpec::volumetric(
            "f", [b, dt](double t) { return std::exp(-b * (t + 0.5 * dt)); });
        run_simulation(grid, cfg);

        // Compare at the time actually reached; n_steps*dt differs from
        // t_final by up to dt/2, which U's decay would otherwise turn into a
        // spurious O(dt) error floor.
        const double t_eval = static_cast<double>(n_steps) * dt;
        const auto norms = disk_error_norms(grid, t_eval, c);
        report.resolutions.push_back(n);
        report.spacings.push_back(h);
        report.l2_errors.push_back(norms.l2);
        report.linf_errors.push_back(norms.linf);
    }
    detail::finish_report(report);
    return report;
}

enum class RedistanceShape { disk2d, ball3d };

namespace detail {

template <int Dims>
ConvergenceReport redistance_convergence_impl(const std::vector<std::int64_t>& resolutions,
                                              const LevelSetOptions& options) {
    ConvergenceReport report;
    for (const std::int64_t n : resolutions) {
        auto geom = GridGeometry<Dims>::cell_centered_box(n, -1.28, 1.28);
        DenseField<double, Dims> phi(geom);
        phi.fill_from_position([](const std::array<double, Dims>& x) {
            double r2 = 0.0;
            for (int a = 0; a < Dims; ++a) r2 += x[a] * x[a];
            return 1.0 - std::sqrt(r2) > 0.0 ? 1.0 : -1.0;
        });
        const auto diag = sussman_redistance(phi, options);
        if (!diag.converged)
            report.warnings.push_back(
                "redistancing hit the iteration cap at n=" + std::to_string(n) +
                " (residual " + format_scalar(diag.final_residual) + " h)");
        const auto norms = band_error_norms(
            phi,
            [](const std::array<double, Dims>& x) {
                double r2 = 0.0;
                for (int a = 0; a < Dims; ++a) r2 += x[a] * x[a];
                return 1.0 - std::sqrt(r2);
            },
            options.band_width_for_error);
        report.resolutions.push_back(n);
        report.spacings.push_back(geom.min_spacing());
        report.l2_errors.push_back(norms.l2);
        report.linf_errors.push_back(norms.linf);
    }
    detail::finish_report(report);
    return report;
}

} // namespace detail

/// Redistances the +-1 indicator of a unit disk (2D) or ball (3D) in the
/// box [-1.28, 1.28]^Dims at each resolution and measures band error norms
/// against the analytic signed distance 1 - |x| over the standard 4h band.
inline ConvergenceReport run_redistance_convergence(
    const std::vector<std::int64_t>& resolutions, RedistanceShape shape,
    const LevelSetOptions& options = {}) {
    detail::validate_resolutions(resolutions, 8);
    return shape == RedistanceShape::disk2d
               ? detail::redistance_convergence_impl<2>(resolutions, options)
               : detail::redistance_convergence_impl<3>(resolutions, options);
}

inline nlohmann::json convergence_to_json(const ConvergenceReport& report) {
    nlohmann::json j{{"resolutions", report.resolutions},
                     {"spacings", report.spacings},
                     {"l2_errors", report.l2_errors},
                     {"linf_errors", report.linf_errors},
                     {"non_monotone", report.non_monotone},
                     {"warnings", report.warnings}};
    j["l2_slope"] = report.l2_slope ? nlohmann::json(*report.l2_slope)
                                    : nlohmann::json(nullptr);
    j["linf_slope"] = report.linf_slope ? nlohmann::json(*report.linf_slope)
                                        : nlohmann::json(nullptr);
    return j;
}

enum class ErrorNorm { l2, linf };

/// Two-column CSV "h,error" of one norm, ready for log-log plotting.
inline void write_convergence_csv(const std::string& path, const ConvergenceReport& report,
                                  ErrorNorm norm) {
    const auto& errors = norm == ErrorNorm::l2 ? report.l2_errors : report.linf_errors;
    std::ofstream out(path, std::ios::binary);
    if (!out) throw io_error("cannot open '" + path + "' for writing");
    out << "h,error\n";
    for (std::size_t i = 0; i < errors.size(); ++i)
        out << format_scalar(report.spacings[i]) << ',' << format_scalar(errors[i])
            << '\n';
    if (!out) throw io_error("failed while writing '" + path + "'");
}

} // namespace porediff
