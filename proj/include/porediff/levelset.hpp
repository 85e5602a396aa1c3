#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <vector>

#include "porediff/dense_field.hpp"
#include "porediff/parallel.hpp"

namespace porediff {

struct LevelSetOptions {
    int max_iterations = 1000;
    double tolerance = 1e-3;          ///< stop when max band update < tolerance * h
    double pseudo_time_step = 0.5;    ///< pseudo-time step in units of h
    double band_width_for_error = 4.0;
    double residual_band_width = 6.0; ///< |phi| <= width*h nodes monitored by the stopping rule
    bool rescale_initial = true;      ///< start from sign(input)*h instead of the raw values
};

struct RedistanceDiagnostics {
    int iterations = 0;
    double final_residual = 0.0; ///< last max band update, in units of h
    bool converged = false;
};

/// Smoothed sign sigma = phi / sqrt(phi^2 + |grad phi|^2 h^2). Exactly zero at
/// phi = 0, saturates to +-1 when |phi| dominates h*|grad phi|.
template <typename T>
T smoothed_sign(T phi, T grad_mag, T h) {
    if (phi == T{0}) return T{0};
    return phi / std::sqrt(phi * phi + grad_mag * grad_mag * h * h);
}

namespace detail {

/// Godunov combination of the one-sided differences for one axis.
/// For positive sign the scheme upwinds toward the interface from below:
/// max(max(d_minus,0)^2, min(d_plus,0)^2); mirrored for negative sign.
/// A local minimum (positive sign) or maximum (negative sign) contributes
/// zero: the rarefaction case with no incoming characteristic.
template <typename T>
T godunov_axis_sq(T d_minus, T d_plus, int sign) {
    if (sign >= 0) {
        const T a = std::max(d_minus, T{0});
        const T b = std::min(d_plus, T{0});
        return std::max(a * a, b * b);
    }
    const T a = std::min(d_minus, T{0});
    const T b = std::max(d_plus, T{0});
    return std::max(a * a, b * b);
}

} // namespace detail

/// First-order Godunov upwind gradient magnitude at one node of a dense
/// field. At box faces the missing one-sided difference is replaced by the
/// available one (linear extension of the field), so a uniform gradient is
/// reproduced exactly everywhere including the faces.
template <typename T, int Dims>
T upwind_gradient_magnitude(const DenseField<T, Dims>& phi, const NodeIndex<Dims>& idx,
                            int sign_at_index) {
    const auto& g = phi.geometry();
    if (!g.contains(idx)) throw bounds_error("upwind gradient queried outside grid");
    const std::int64_t flat = g.flat_index(idx);
    T sum{0};
    std::int64_t stride = 1;
    for (int a = 0; a < Dims; ++a) {
        const T inv_h = static_cast<T>(1.0 / g.spacing[a]);
        const bool has_m = idx[a] > 0;
        const bool has_p = idx[a] + 1 < g.size[a];
        T dm{0}, dp{0};
        if (has_m) dm = (phi[flat] - phi[flat - stride]) * inv_h;
        if (has_p) dp = (phi[flat + stride] - phi[flat]) * inv_h;
        if (!has_m) dm = dp;
        if (!has_p) dp = dm;
        sum += detail::godunov_axis_sq(dm, dp, sign_at_index);
        stride *= g.size[a];
    }
    return std::sqrt(sum);
}

/// True when two axis-adjacent nodes straddle the zero level (negative on
/// one side, non-negative on the other).
template <typename T, int Dims>
bool has_zero_crossing(const DenseField<T, Dims>& phi) {
    const auto& g = phi.geometry();
    std::int64_t stride = 1;
    for (int a = 0; a < Dims; ++a) {
        if (g.size[a] > 1) {
            NodeIndex<Dims> idx{};
            for (std::int64_t flat = 0; flat < g.node_count(); ++flat) {
                if (idx[a] + 1 < g.size[a] &&
                    ((phi[flat] < T{0}) != (phi[flat + stride] < T{0})))
                    return true;
                for (int b = 0; b < Dims; ++b) {
                    if (++idx[b] < g.size[b]) break;
                    idx[b] = 0;
                }
            }
        }
        stride *= g.size[a];
    }
    return false;
}

/// Iterative redistancing: relaxes phi toward |grad phi| = 1 while the
/// smoothed sign pins the zero level between its original neighbours.
/// Jacobi sweeps run until the largest update among nodes currently inside
/// the monitored band falls below tolerance*h (converged) or max_iterations
/// is reached (diagnostics flag it; not fatal). The far field beyond the
/// monitored band may still be in transit when the loop stops; widen
/// residual_band_width when far-field distances matter.
template <typename T, int Dims>
RedistanceDiagnostics sussman_redistance(DenseField<T, Dims>& phi,
                                         const LevelSetOptions& opts = {}) {
    const auto& g = phi.geometry();
    if (opts.max_iterations < 1) throw input_error("max_iterations must be at least 1");
    if (!(opts.tolerance > 0.0)) throw input_error("tolerance must be positive");
    if (!(opts.pseudo_time_step > 0.0) || opts.pseudo_time_step > 1.0)
        throw input_error("pseudo_time_step must lie in (0, 1] (units of h)");
    if (!phi.all_finite()) throw input_error("redistancing input contains non-finite values");
    if (!has_zero_crossing(phi))
        throw input_error("no interface found: the field never changes sign");

    const T h = static_cast<T>(g.min_spacing());
    const T dt = static_cast<T>(opts.pseudo_time_step) * h;
    const T band = static_cast<T>(opts.residual_band_width) * h;
    const T tol = static_cast<T>(opts.tolerance) * h;

    if (opts.rescale_initial) {
        const std::int64_t n = phi.geometry().node_count();
        for (std::int64_t i = 0; i < n; ++i)
            phi[i] = phi[i] < T{0} ? -h : (phi[i] > T{0} ? h : T{0});
    }

    std::array<std::int64_t, Dims> stride{};
    stride[0] = 1;
    for (int a = 1; a < Dims; ++a) stride[a] = stride[a - 1] * g.size[a - 1];
    std::array<T, Dims> inv_h{};
    for (int a = 0; a < Dims; ++a) inv_h[a] = static_cast<T>(1.0 / g.spacing[a]);

    DenseField<T, Dims> next(g);
    const std::int64_t n = g.node_count();
    const int workers = std::max(1, worker_count());
    std::vector<T> worker_residual(static_cast<std::size_t>(workers), T{0});

    RedistanceDiagnostics diag;
    for (int it = 1; it <= opts.max_iterations; ++it) {
        std::fill(worker_residual.begin(), worker_residual.end(), T{0});
        parallel_for_slots(n, [&](int slot, std::int64_t lo, std::int64_t hi) {
            const std::size_t w = static_cast<std::size_t>(slot);
            T local_max{0};
            NodeIndex<Dims> idx = g.unflatten(lo);
            for (std::int64_t f = lo; f < hi; ++f) {
                const T c = phi[f];
                T sum{0};
                for (int a = 0; a < Dims; ++a) {
                    const bool has_m = idx[a] > 0;
                    const bool has_p = idx[a] + 1 < g.size[a];
                    T dm{0}, dp{0};
                    if (has_m) dm = (c - phi[f - stride[a]]) * inv_h[a];
                    if (has_p) dp = (phi[f + stride[a]] - c) * inv_h[a];
                    if (!has_m) dm = dp;
                    if (!has_p) dp = dm;
                    sum += detail::godunov_axis_sq(dm, dp, c < T{0} ? -1 : 1);
                }
                const T grad = std::sqrt(sum);
                const T update = dt * smoothed_sign(c, grad, h) * (T{1} - grad);
                next[f] = c + update;
                if (std::abs(c) <= band) local_max = std::max(local_max, std::abs(update));
                for (int a = 0; a < Dims; ++a) {
                    if (++idx[a] < g.size[a]) break;
                    idx[a] = 0;
                }
            }
            worker_residual[w] = std::max(worker_residual[w], local_max);
        });
        T residual{0};
        for (T r : worker_residual) residual = std::max(residual, r);
        std::swap(phi, next);
        diag.iterations = it;
        diag.final_residual = static_cast<double>(residual) / static_cast<double>(h);
        if (residual < tol) {
            diag.converged = true;
            break;
        }
    }
    return diag;
}

struct BandErrorNorms {
    double l2 = 0.0;   ///< root-mean-square absolute error over band nodes
    double linf = 0.0; ///< maximum absolute error over band nodes
    std::int64_t count = 0;
};

/// Error norms of a field against an exact functor of position, restricted
/// to nodes where |exact(x)| <= band_width * h.
template <typename T, int Dims, class ExactFn>
BandErrorNorms band_error_norms(const DenseField<T, Dims>& phi, ExactFn&& exact,
                                double band_width) {
    const auto& g = phi.geometry();
    const double band = band_width * g.min_spacing();
    BandErrorNorms norms;
    double sum_sq = 0.0;
    NodeIndex<Dims> idx{};
    for (std::int64_t f = 0; f < g.node_count(); ++f) {
        const double e = exact(g.position(idx));
        if (std::abs(e) <= band) {
            const double err = std::abs(static_cast<double>(phi[f]) - e);
            sum_sq += err * err;
            norms.linf = std::max(norms.linf, err);
            ++norms.count;
        }
        for (int a = 0; a < Dims; ++a) {
            if (++idx[a] < g.size[a]) break;
            idx[a] = 0;
        }
    }
    if (norms.count == 0)
        throw input_error("error band is empty: no node satisfies |exact| <= band_width*h");
    norms.l2 = std::sqrt(sum_sq / static_cast<double>(norms.count));
    return norms;
}

} // namespace porediff
