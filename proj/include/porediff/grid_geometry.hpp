#pragma once

#include <array>
#include <cstdint>
#include <string>

#include "porediff/errors.hpp"

namespace porediff {

// The extent cast keeps Dims out of template-argument deduction (an int
// non-type parameter cannot be deduced from std::array's size_t extent), so
// free functions taking a NodeIndex alongside a field deduce Dims from the
// field alone.
template <int Dims>
using NodeIndex = std::array<std::int64_t, static_cast<std::size_t>(Dims)>;

/// Axis-aligned node lattice: `size[a]` nodes along axis `a`, node (0,...,0)
/// sits at `origin` and neighbours are `spacing[a]` apart. Storage convention
/// everywhere in this library is axis-0-fastest, i.e. the flat index is
/// i0 + size0*(i1 + size1*i2). With axes named (x,y,z) that is the usual
/// "zyx" raw-volume layout: x contiguous, z slowest.
template <int Dims>
struct GridGeometry {
    static_assert(Dims == 2 || Dims == 3, "only 2-D and 3-D grids are supported");

    std::array<std::int64_t, Dims> size{};
    std::array<double, Dims> spacing{};
    std::array<double, Dims> origin{};

    static GridGeometry make(std::array<std::int64_t, Dims> size,
                             std::array<double, Dims> spacing,
                             std::array<double, Dims> origin = {}) {
        for (int a = 0; a < Dims; ++a) {
            if (size[a] < 1)
                throw input_error("grid size must be >= 1 along every axis, got " +
                                  std::to_string(size[a]) + " on axis " + std::to_string(a));
            if (!(spacing[a] > 0.0))
                throw input_error("grid spacing must be > 0 along every axis, got " +
                                  std::to_string(spacing[a]) + " on axis " + std::to_string(a));
        }
        return GridGeometry{size, spacing, origin};
    }

    /// Cube geometry spanning [lo, hi] per axis with n nodes placed at cell
    /// centres: spacing h = (hi-lo)/n, first node at lo + h/2.
    static GridGeometry cell_centered_box(std::int64_t n, double lo, double hi) {
        std::array<std::int64_t, Dims> size{};
        std::array<double, Dims> spacing{};
        std::array<double, Dims> origin{};
        const double h = (hi - lo) / static_cast<double>(n);
        for (int a = 0; a < Dims; ++a) {
            size[a] = n;
            spacing[a] = h;
            origin[a] = lo + 0.5 * h;
        }
        return make(size, spacing, origin);
    }

    std::int64_t node_count() const {
        std::int64_t n = 1;
        for (int a = 0; a < Dims; ++a) n *= size[a];
        return n;
    }

    bool contains(const NodeIndex<Dims>& idx) const {
        for (int a = 0; a < Dims; ++a)
            if (idx[a] < 0 || idx[a] >= size[a]) return false;
        return true;
    }

    /// Flat storage index, axis 0 fastest.
    std::int64_t flat_index(const NodeIndex<Dims>& idx) const {
        std::int64_t f = idx[Dims - 1];
        for (int a = Dims - 2; a >= 0; --a) f = f * size[a] + idx[a];
        return f;
    }

    NodeIndex<Dims> unflatten(std::int64_t flat) const {
        NodeIndex<Dims> idx{};
        for (int a = 0; a < Dims; ++a) {
            idx[a] = flat % size[a];
            flat /= size[a];
        }
        return idx;
    }

    double coord(int axis, std::int64_t i) const {
        return origin[axis] + static_cast<double>(i) * spacing[axis];
    }

    std::array<double, Dims> position(const NodeIndex<Dims>& idx) const {
        std::array<double, Dims> x{};
        for (int a = 0; a < Dims; ++a) x[a] = coord(a, idx[a]);
        return x;
    }

    double min_spacing() const {
        double h = spacing[0];
        for (int a = 1; a < Dims; ++a) h = h < spacing[a] ? h : spacing[a];
        return h;
    }

    /// Volume (2-D: area) of one grid cell.
    double cell_volume() const {
        double v = 1.0;
        for (int a = 0; a < Dims; ++a) v *= spacing[a];
        return v;
    }

    bool operator==(const GridGeometry&) const = default;
};

} // namespace porediff
