#pragma once

#include <cmath>
#include <vector>

#include "porediff/grid_geometry.hpp"

namespace porediff {

/// Dense scalar field over a full node lattice. Flat storage follows the
/// geometry's axis-0-fastest convention.
template <typename T, int Dims>
class DenseField {
  public:
    DenseField() = default;

    explicit DenseField(GridGeometry<Dims> geometry, T fill = T{0})
        : geom_(geometry), data_(static_cast<std::size_t>(geometry.node_count()), fill) {}

    const GridGeometry<Dims>& geometry() const { return geom_; }

    std::int64_t node_count() const { return static_cast<std::int64_t>(data_.size()); }

    T& operator[](std::int64_t flat) { return data_[static_cast<std::size_t>(flat)]; }
    const T& operator[](std::int64_t flat) const { return data_[static_cast<std::size_t>(flat)]; }

    T& at(const NodeIndex<Dims>& idx) {
        check(idx);
        return data_[static_cast<std::size_t>(geom_.flat_index(idx))];
    }
    const T& at(const NodeIndex<Dims>& idx) const {
        check(idx);
        return data_[static_cast<std::size_t>(geom_.flat_index(idx))];
    }

    T* data() { return data_.data(); }
    const T* data() const { return data_.data(); }

    bool all_finite() const {
        for (const T& v : data_)
            if (!std::isfinite(static_cast<double>(v))) return false;
        return true;
    }

    /// Fills the field from a functor of the node's physical position.
    template <class F>
    void fill_from_position(F&& f) {
        NodeIndex<Dims> idx{};
        for (std::int64_t flat = 0; flat < node_count(); ++flat) {
            data_[static_cast<std::size_t>(flat)] = static_cast<T>(f(geom_.position(idx)));
            for (int a = 0; a < Dims; ++a) {
                if (++idx[a] < geom_.size[a]) break;
                idx[a] = 0;
            }
        }
    }

    /// Visits every node in flat order as f(node_index, flat_index).
    template <class F>
    void for_each_index(F&& f) const {
        NodeIndex<Dims> idx{};
        for (std::int64_t flat = 0; flat < node_count(); ++flat) {
            f(idx, flat);
            for (int a = 0; a < Dims; ++a) {
                if (++idx[a] < geom_.size[a]) break;
                idx[a] = 0;
            }
        }
    }

  private:
    void check(const NodeIndex<Dims>& idx) const {
        if (!geom_.contains(idx)) {
            std::string s = "node index (";
            for (int a = 0; a < Dims; ++a) s += (a ? "," : "") + std::to_string(idx[a]);
            throw bounds_error(s + ") outside grid");
        }
    }

    GridGeometry<Dims> geom_{};
    std::vector<T> data_;
};

} // namespace porediff
