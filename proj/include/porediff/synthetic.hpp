#pragma once

#include <array>
#include <cmath>
#include <cstdint>
#include <numbers>
#include <random>
#include <vector>

#include "porediff/dense_field.hpp"

namespace porediff::synthetic {

/// Signed distance to a ball/disk surface, positive inside.
template <int Dims>
double ball_sdf(const std::array<double, static_cast<std::size_t>(Dims)>& x,
                const std::array<double, static_cast<std::size_t>(Dims)>& center,
                double radius) {
    double r2 = 0.0;
    for (int a = 0; a < Dims; ++a) r2 += (x[a] - center[a]) * (x[a] - center[a]);
    return radius - std::sqrt(r2);
}

/// Random union of solid spheres; the transport phase is the complement.
struct SpherePacking {
    std::vector<std::array<double, 3>> centers;
    std::vector<double> radii;

    /// Level function of the fluid phase: distance to the nearest sphere
    /// surface, positive outside every sphere. Exact signed distance outside
    /// the union; inside overlaps it stays sign-correct.
    double fluid_sdf(const std::array<double, 3>& x) const {
        double best = std::numeric_limits<double>::infinity();
        for (std::size_t i = 0; i < centers.size(); ++i) {
            double r2 = 0.0;
            for (int a = 0; a < 3; ++a) r2 += (x[a] - centers[i][a]) * (x[a] - centers[i][a]);
            best = std::min(best, std::sqrt(r2) - radii[i]);
        }
        return best;
    }

    static SpherePacking random(const std::array<double, 3>& lo, const std::array<double, 3>& hi,
                                int count, double r_min, double r_max, std::uint32_t seed) {
        SpherePacking p;
        std::mt19937 rng(seed);
        std::uniform_real_distribution<double> ux(lo[0], hi[0]);
        std::uniform_real_distribution<double> uy(lo[1], hi[1]);
        std::uniform_real_distribution<double> uz(lo[2], hi[2]);
        std::uniform_real_distribution<double> ur(r_min, r_max);
        for (int i = 0; i < count; ++i) {
            p.centers.push_back({ux(rng), uy(rng), uz(rng)});
            p.radii.push_back(ur(rng));
        }
        return p;
    }
};

/// Triply periodic shell: positive where |g(x)| < thickness with
/// g = sin(kx)cos(ky) + sin(ky)cos(kz) + sin(kz)cos(kx), k = 2*pi/period.
/// A thin connected sponge; the positive set is the transport phase.
inline double gyroid_shell(const std::array<double, 3>& x, double period, double thickness) {
    const double k = 2.0 * std::numbers::pi / period;
    const double g = std::sin(k * x[0]) * std::cos(k * x[1]) +
                     std::sin(k * x[1]) * std::cos(k * x[2]) +
                     std::sin(k * x[2]) * std::cos(k * x[0]);
    return thickness - std::abs(g);
}

/// 2-D square lattice of solid disks (period L, disk radius r < L/2,
/// centred in each cell). Returns the pore-phase signed distance:
/// min over nearby lattice disks of |x - c| - r, positive in the pore.
inline double disk_array_pore_sdf(const std::array<double, 2>& x, double period, double radius) {
    const double cx = std::floor(x[0] / period);
    const double cy = std::floor(x[1] / period);
    double best = std::numeric_limits<double>::infinity();
    for (int j = -1; j <= 1; ++j)
        for (int i = -1; i <= 1; ++i) {
            const double ox = (cx + i + 0.5) * period - x[0];
            const double oy = (cy + j + 0.5) * period - x[1];
            best = std::min(best, std::sqrt(ox * ox + oy * oy) - radius);
        }
    return best;
}

/// True when the point lies inside a solid disk of the lattice above.
inline bool disk_array_is_solid(double px, double py, double period, double radius) {
    const double qx = px - period * std::floor(px / period) - 0.5 * period;
    const double qy = py - period * std::floor(py / period) - 0.5 * period;
    return qx * qx + qy * qy < radius * radius;
}

/// Dense field sampled from a functor of position.
template <typename T, int Dims, class F>
DenseField<T, Dims> field_from(const GridGeometry<Dims>& geom, F&& f) {
    DenseField<T, Dims> out(geom);
    out.fill_from_position(f);
    return out;
}

/// +-1 indicator of the positive set of a functor (0 maps to -1).
template <typename T, int Dims, class F>
DenseField<T, Dims> indicator_from(const GridGeometry<Dims>& geom, F&& f) {
    DenseField<T, Dims> out(geom);
    out.fill_from_position([&](const std::array<double, Dims>& x) {
        return f(x) > 0.0 ? T{1} : T{-1};
    });
    return out;
}

} // namespace porediff::synthetic
