#pragma once

#include <cmath>
#include <cstdint>
#include <limits>
#include <string>
#include <vector>

#include "porediff/dense_field.hpp"
#include "porediff/sparse_block_grid.hpp"

namespace porediff {

/// Binary voxel volume: nonzero byte = transport phase. Flat layout follows
/// the library-wide axis-0-fastest convention.
template <int Dims>
struct VoxelMask {
    std::array<std::int64_t, static_cast<std::size_t>(Dims)> size{};
    std::array<double, static_cast<std::size_t>(Dims)> voxel_size{};
    std::vector<std::uint8_t> bits;

    static VoxelMask make(std::array<std::int64_t, static_cast<std::size_t>(Dims)> size,
                          std::array<double, static_cast<std::size_t>(Dims)> voxel_size,
                          std::vector<std::uint8_t> bits) {
        // Reuse the geometry validation (positive sizes and spacings).
        auto geom = GridGeometry<Dims>::make(size, voxel_size);
        if (static_cast<std::int64_t>(bits.size()) != geom.node_count())
            throw input_error("mask bit count " + std::to_string(bits.size()) +
                              " does not match voxel count " +
                              std::to_string(geom.node_count()));
        return VoxelMask{size, voxel_size, std::move(bits)};
    }

    std::int64_t voxel_count() const {
        std::int64_t n = 1;
        for (int a = 0; a < Dims; ++a) n *= size[static_cast<std::size_t>(a)];
        return n;
    }
};

/// Open interval of level-set values whose nodes belong to the discretized
/// transport phase.
struct PhaseBand {
    double b_low = 0.0;
    double b_up = std::numeric_limits<double>::infinity();
};

/// Parameters of the smooth sigmoid diffusion-coefficient profile.
/// gamma1 shifts the transition relative to the interface, gamma2 (1/length)
/// sets its steepness.
struct DiffusionProfile {
    double d_min = 0.0;
    double d_max = 1.0;
    double gamma1 = 0.0;
    double gamma2 = 1.0;

    /// Profile whose sigmoid midpoint sits exactly at phi = phi_anchor
    /// (gamma1 + gamma2 * phi_anchor = 0).
    static DiffusionProfile anchored(double d_min, double d_max, double gamma2,
                                     double phi_anchor) {
        return DiffusionProfile{d_min, d_max, -gamma2 * phi_anchor, gamma2};
    }
};

/// +-1 indicator field of a binary mask: true -> +1, false -> -1. The field
/// geometry places node (0,..,0) at the origin with the mask's voxel spacing.
template <typename T, int Dims>
DenseField<T, Dims> mask_to_indicator(const VoxelMask<Dims>& mask) {
    auto geom = GridGeometry<Dims>::make(mask.size, mask.voxel_size);
    DenseField<T, Dims> out(geom);
    const std::int64_t n = geom.node_count();
    if (static_cast<std::int64_t>(mask.bits.size()) != n)
        throw input_error("mask bit count does not match voxel count");
    for (std::int64_t f = 0; f < n; ++f)
        out[f] = mask.bits[static_cast<std::size_t>(f)] ? T{1} : T{-1};
    return out;
}

namespace detail {

/// One separable pass of a boolean window filter along `axis`:
/// erode: out[i] = AND of in[i .. i+window-1]   (beyond the grid counts as false)
/// dilate: out[i] = OR  of in[i-window+1 .. i]  (beyond the grid contributes nothing)
template <int Dims>
void box_filter_axis(std::vector<std::uint8_t>& cells, const GridGeometry<Dims>& geom,
                     int axis, int window, bool erode) {
    std::int64_t stride = 1;
    for (int a = 0; a < axis; ++a) stride *= geom.size[a];
    const std::int64_t n_axis = geom.size[axis];
    std::vector<std::uint8_t> out(cells.size());
    NodeIndex<Dims> idx{};
    const std::int64_t n = geom.node_count();
    for (std::int64_t f = 0; f < n; ++f) {
        bool v = erode;
        for (int k = 0; k < window; ++k) {
            const std::int64_t j = idx[axis] + (erode ? k : -k);
            const bool inside = j >= 0 && j < n_axis;
            const bool bit =
                inside && cells[static_cast<std::size_t>(f + (j - idx[axis]) * stride)];
            if (erode)
                v = v && bit;
            else
                v = v || bit;
        }
        out[static_cast<std::size_t>(f)] = v ? 1 : 0;
        for (int a = 0; a < Dims; ++a) {
            if (++idx[a] < geom.size[a]) break;
            idx[a] = 0;
        }
    }
    cells.swap(out);
}

} // namespace detail

/// Morphological opening of the positive phase with a cubic structuring
/// element spanning `min_thickness_cells` nodes per axis, computed on an
/// unbounded negative background. Positive features thinner than the element
/// along any axis cannot survive erosion and are flipped to -1; axis-aligned
/// boxes at least that thick are reproduced exactly (opening is idempotent).
template <typename T, int Dims>
DenseField<T, Dims> filter_thin_features(const DenseField<T, Dims>& indicator,
                                         int min_thickness_cells = 2) {
    if (min_thickness_cells < 1)
        throw input_error("min_thickness_cells must be at least 1");
    const auto& geom = indicator.geometry();
    const std::int64_t n = geom.node_count();
    std::vector<std::uint8_t> cells(static_cast<std::size_t>(n));
    for (std::int64_t f = 0; f < n; ++f) {
        const T v = indicator[f];
        if (v != T{1} && v != T{-1})
            throw input_error("indicator values must be exactly +1 or -1");
        cells[static_cast<std::size_t>(f)] = v > T{0} ? 1 : 0;
    }
    const int w = min_thickness_cells;
    for (int a = 0; a < Dims; ++a) detail::box_filter_axis(cells, geom, a, w, true);
    for (int a = 0; a < Dims; ++a) detail::box_filter_axis(cells, geom, a, w, false);
    DenseField<T, Dims> out(geom);
    for (std::int64_t f = 0; f < n; ++f)
        out[f] = cells[static_cast<std::size_t>(f)] ? T{1} : T{-1};
    return out;
}

/// Builds the sparse block grid of the transport phase: a node is inserted
/// iff b_low + eps < phi < b_up - eps with eps the machine epsilon of the
/// grid's scalar type (an exact-boundary value is never inserted). The level
/// set is copied into the "phi" channel; all other channels start at zero.
template <typename T, int Dims>
SparseBlockGrid<T, Dims> build_sparse_grid(const DenseField<T, Dims>& sdf, PhaseBand band,
                                           std::vector<std::string> channels = {"phi", "u",
                                                                                "D"}) {
    if (!(band.b_low < band.b_up))
        throw input_error("phase band is empty: lower bound must be below upper bound");
    if (!sdf.all_finite()) throw input_error("level-set field contains non-finite values");
    std::size_t phi_channel = channels.size();
    for (std::size_t c = 0; c < channels.size(); ++c)
        if (channels[c] == "phi") phi_channel = c;
    if (phi_channel == channels.size())
        throw input_error("channel list must contain \"phi\" to receive the level set");

    SparseBlockGrid<T, Dims> grid(sdf.geometry(), channels);
    const T eps = std::numeric_limits<T>::epsilon();
    const T lo = static_cast<T>(band.b_low) + eps;
    const T hi = static_cast<T>(band.b_up) - eps;
    std::vector<T> values(channels.size(), T{0});
    sdf.for_each_index([&](const NodeIndex<Dims>& idx, std::int64_t f) {
        const T phi = sdf[f];
        if (phi > lo && phi < hi) {
            values[phi_channel] = phi;
            grid.insert(idx, values);
        }
    });
    if (grid.stats().active_nodes == 0)
        throw input_error("no node lies inside the phase band: the grid would be empty");
    return grid;
}

/// Smooth sigmoid diffusion coefficient
/// D(phi) = d_min + d_max / (1 + exp(-(gamma1 + gamma2 * phi))).
/// Strictly increasing in phi for gamma2 > 0; saturates to d_min and
/// d_min + d_max when the exponent overflows.
inline double smooth_diffusion_coefficient(double phi, const DiffusionProfile& profile) {
    if (profile.d_min < 0.0) throw input_error("d_min must be non-negative");
    if (!(profile.d_max > 0.0)) throw input_error("d_max must be positive");
    return profile.d_min +
           profile.d_max / (1.0 + std::exp(-(profile.gamma1 + profile.gamma2 * phi)));
}

/// Evaluates the diffusion profile on the level-set channel of every active
/// node and stores the result in the diffusion channel.
template <typename T, int Dims>
void populate_diffusion_channel(SparseBlockGrid<T, Dims>& grid, const DiffusionProfile& profile,
                                const std::string& phi_channel = "phi",
                                const std::string& d_channel = "D") {
    const int phi_prop = grid.property_index(phi_channel);
    const int d_prop = grid.property_index(d_channel);
    grid.for_each_chunk([&](typename SparseBlockGrid<T, Dims>::Chunk& chunk) {
        const T* phi = grid.channel_data(chunk, phi_prop);
        T* d = grid.channel_data(chunk, d_prop);
        for (int o = 0; o < SparseBlockGrid<T, Dims>::chunk_volume; ++o) {
            if (chunk.test(o))
                d[o] = static_cast<T>(
                    smooth_diffusion_coefficient(static_cast<double>(phi[o]), profile));
        }
    });
}

/// Transport-phase volume fraction of a mask.
template <int Dims>
double porosity(const VoxelMask<Dims>& mask) {
    std::int64_t positive = 0;
    for (std::uint8_t b : mask.bits) positive += b ? 1 : 0;
    return static_cast<double>(positive) / static_cast<double>(mask.bits.size());
}

/// Active-node fraction of a built sparse grid.
template <typename T, int Dims>
double porosity(const SparseBlockGrid<T, Dims>& grid) {
    return grid.stats().node_fill_fraction;
}

} // namespace porediff
