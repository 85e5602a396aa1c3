#pragma once

#include <algorithm>
#include <bit>
#include <cstdint>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "porediff/grid_geometry.hpp"

namespace porediff {

struct OccupancyStats {
    std::int64_t chunk_count = 0;
    std::int64_t active_nodes = 0;
    std::int64_t dense_node_count = 0;
    std::int64_t max_chunks = 0;
    double node_fill_fraction = 0.0;
    double chunk_fill_fraction = 0.0;
};

/// Sparse grid of 8^Dims-node chunks. A chunk is allocated only when at
/// least one of its nodes is inserted; every chunk carries an allocation
/// bitmask plus one payload slab per named property (SoA within the chunk,
/// zero-initialised). Chunk traversal order is always ascending chunk
/// linear index, independent of insertion order and worker count.
template <typename T, int Dims>
class SparseBlockGrid {
  public:
    static constexpr int chunk_edge = 8;
    static constexpr int chunk_volume = Dims == 2 ? 64 : 512;
    static constexpr int mask_words = chunk_volume / 64;

    using Key = std::array<std::int32_t, Dims>;
    using Index = NodeIndex<Dims>;

    struct Chunk {
        Key key{};
        std::array<std::uint64_t, mask_words> mask{};
        std::vector<T> payload; // property-major: column c occupies [c*volume, (c+1)*volume)

        bool test(int offset) const {
            return (mask[static_cast<std::size_t>(offset >> 6)] >> (offset & 63)) & 1u;
        }
        void set_bit(int offset) {
            mask[static_cast<std::size_t>(offset >> 6)] |= std::uint64_t{1} << (offset & 63);
        }
        int active_count() const {
            int n = 0;
            for (std::uint64_t w : mask) n += std::popcount(w);
            return n;
        }
    };

    SparseBlockGrid(GridGeometry<Dims> geometry, std::vector<std::string> properties)
        : geom_(geometry), props_(std::move(properties)) {
        if (props_.empty()) throw input_error("sparse grid needs at least one property");
        for (std::size_t i = 0; i < props_.size(); ++i)
            for (std::size_t j = i + 1; j < props_.size(); ++j)
                if (props_[i] == props_[j])
                    throw input_error("duplicate property name '" + props_[i] + "'");
        column_of_.resize(props_.size());
        for (std::size_t i = 0; i < props_.size(); ++i) column_of_[i] = static_cast<int>(i);
        std::int64_t table = 1;
        for (int a = 0; a < Dims; ++a) {
            chunk_counts_[a] = (geom_.size[a] + chunk_edge - 1) / chunk_edge;
            table *= chunk_counts_[a];
        }
        table_.assign(static_cast<std::size_t>(table), -1);
    }

    const GridGeometry<Dims>& geometry() const { return geom_; }

    std::span<const std::string> property_names() const { return props_; }
    int property_count() const { return static_cast<int>(props_.size()); }

    int property_index(std::string_view name) const {
        for (std::size_t i = 0; i < props_.size(); ++i)
            if (props_[i] == name) return static_cast<int>(i);
        throw property_error("unknown property '" + std::string(name) + "'");
    }

    /// Swaps the storage columns behind two property names in O(1); used to
    /// flip the double-buffered state channels between steps.
    void swap_channels(std::string_view a, std::string_view b) {
        std::swap(column_of_[static_cast<std::size_t>(property_index(a))],
                  column_of_[static_cast<std::size_t>(property_index(b))]);
    }

    static Key key_of(const Index& idx) {
        Key k{};
        for (int a = 0; a < Dims; ++a) k[a] = static_cast<std::int32_t>(idx[a] >> 3);
        return k;
    }

    static int offset_of(const Index& idx) {
        int off = static_cast<int>(idx[Dims - 1] & 7);
        for (int a = Dims - 2; a >= 0; --a) off = (off << 3) | static_cast<int>(idx[a] & 7);
        return off;
    }

    std::int64_t chunk_linear_index(const Key& key) const {
        std::int64_t f = key[Dims - 1];
        for (int a = Dims - 2; a >= 0; --a) f = f * chunk_counts_[a] + key[a];
        return f;
    }

    const std::array<std::int64_t, Dims>& chunk_grid_size() const { return chunk_counts_; }

    /// Activates a node, allocating its chunk on demand. `values` lists one
    /// scalar per registered property (in registration order); when empty the
    /// payload slots keep their current (zero-initialised) contents.
    /// Re-inserting an active node only overwrites the payload.
    void insert(const Index& idx, std::span<const T> values = {}) {
        check_bounds(idx);
        if (!values.empty() && values.size() != props_.size())
            throw input_error("insert expects one value per property (" +
                              std::to_string(props_.size()) + "), got " +
                              std::to_string(values.size()));
        Chunk& c = chunk_for(idx);
        const int off = offset_of(idx);
        if (!c.test(off)) {
            c.set_bit(off);
            ++active_nodes_;
        }
        for (std::size_t p = 0; p < values.size(); ++p)
            c.payload[static_cast<std::size_t>(column_of_[p]) * chunk_volume +
                      static_cast<std::size_t>(off)] = values[p];
    }

    bool is_active(const Index& idx) const {
        check_bounds(idx);
        const Chunk* c = find_chunk(idx);
        return c && c->test(offset_of(idx));
    }

    /// Value at an active node, std::nullopt at an inactive one.
    std::optional<T> get(const Index& idx, std::string_view prop) const {
        check_bounds(idx);
        const int col = column_of_[static_cast<std::size_t>(property_index(prop))];
        const Chunk* c = find_chunk(idx);
        const int off = offset_of(idx);
        if (!c || !c->test(off)) return std::nullopt;
        return c->payload[static_cast<std::size_t>(col) * chunk_volume +
                          static_cast<std::size_t>(off)];
    }

    void set(const Index& idx, std::string_view prop, T value) {
        check_bounds(idx);
        const int col = column_of_[static_cast<std::size_t>(property_index(prop))];
        Chunk* c = find_chunk(idx);
        const int off = offset_of(idx);
        if (!c || !c->test(off))
            throw input_error("set on inactive node; insert it first");
        c->payload[static_cast<std::size_t>(col) * chunk_volume +
                   static_cast<std::size_t>(off)] = value;
    }

    std::int64_t active_node_count() const { return active_nodes_; }
    std::int64_t chunk_count() const { return static_cast<std::int64_t>(chunks_.size()); }

    OccupancyStats stats() const {
        OccupancyStats s;
        s.chunk_count = chunk_count();
        s.active_nodes = active_nodes_;
        s.dense_node_count = geom_.node_count();
        s.max_chunks = static_cast<std::int64_t>(table_.size());
        s.node_fill_fraction =
            static_cast<double>(s.active_nodes) / static_cast<double>(s.dense_node_count);
        s.chunk_fill_fraction =
            static_cast<double>(s.chunk_count) / static_cast<double>(s.max_chunks);
        return s;
    }

    /// Raw slab of one property inside one chunk (resolves the double-buffer
    /// column mapping). Stencil and serialisation machinery.
    T* channel_data(Chunk& c, int prop) {
        return c.payload.data() +
               static_cast<std::size_t>(column_of_[static_cast<std::size_t>(prop)]) * chunk_volume;
    }
    const T* channel_data(const Chunk& c, int prop) const {
        return c.payload.data() +
               static_cast<std::size_t>(column_of_[static_cast<std::size_t>(prop)]) * chunk_volume;
    }

    /// Chunk lookup by chunk linear index; nullptr when absent. The linear
    /// index must be in [0, stats().max_chunks).
    const Chunk* chunk_at_table(std::int64_t linear) const {
        const std::int32_t id = table_[static_cast<std::size_t>(linear)];
        return id < 0 ? nullptr : &chunks_[static_cast<std::size_t>(id)];
    }
    Chunk* chunk_at_table(std::int64_t linear) {
        const std::int32_t id = table_[static_cast<std::size_t>(linear)];
        return id < 0 ? nullptr : &chunks_[static_cast<std::size_t>(id)];
    }

    /// Visits allocated chunks in ascending chunk linear index.
    template <class F>
    void for_each_chunk(F&& f) const {
        refresh_order();
        for (std::int32_t id : order_) f(chunks_[static_cast<std::size_t>(id)]);
    }
    template <class F>
    void for_each_chunk(F&& f) {
        refresh_order();
        for (std::int32_t id : order_) f(chunks_[static_cast<std::size_t>(id)]);
    }

    /// f(chunk, ordinal) where ordinal is the chunk's position in the sorted
    /// traversal; ordinals are stable for a fixed chunk set, so per-chunk
    /// scratch indexed by ordinal gives worker-count-independent reductions.
    template <class F>
    void visit_chunks_indexed(F&& f) {
        refresh_order();
        for (std::size_t i = 0; i < order_.size(); ++i)
            f(chunks_[static_cast<std::size_t>(order_[i])], static_cast<std::int64_t>(i));
    }

    /// Sorted chunk ids for range-parallel traversal.
    std::span<const std::int32_t> chunk_order() const {
        refresh_order();
        return order_;
    }
    Chunk& chunk_by_id(std::int32_t id) { return chunks_[static_cast<std::size_t>(id)]; }
    const Chunk& chunk_by_id(std::int32_t id) const {
        return chunks_[static_cast<std::size_t>(id)];
    }

    /// Visits every active node in deterministic order: chunks ascending,
    /// in-chunk offsets ascending. f(index, chunk, offset).
    template <class F>
    void for_each_active(F&& f) const {
        for_each_chunk([&](const Chunk& c) {
            for (int off = 0; off < chunk_volume; ++off) {
                if (!c.test(off)) continue;
                f(node_index(c.key, off), c, off);
            }
        });
    }

    static Index node_index(const Key& key, int offset) {
        Index idx{};
        for (int a = 0; a < Dims; ++a) {
            idx[a] = (static_cast<std::int64_t>(key[a]) << 3) | ((offset >> (3 * a)) & 7);
        }
        return idx;
    }

  private:
    void check_bounds(const Index& idx) const {
        if (!geom_.contains(idx)) {
            std::string s = "node index (";
            for (int a = 0; a < Dims; ++a) s += (a ? "," : "") + std::to_string(idx[a]);
            throw bounds_error(s + ") outside grid");
        }
    }

    const Chunk* find_chunk(const Index& idx) const {
        return chunk_at_table(chunk_linear_index(key_of(idx)));
    }
    Chunk* find_chunk(const Index& idx) {
        return chunk_at_table(chunk_linear_index(key_of(idx)));
    }

    Chunk& chunk_for(const Index& idx) {
        const Key key = key_of(idx);
        const std::int64_t linear = chunk_linear_index(key);
        std::int32_t& slot = table_[static_cast<std::size_t>(linear)];
        if (slot < 0) {
            slot = static_cast<std::int32_t>(chunks_.size());
            Chunk c;
            c.key = key;
            c.payload.assign(props_.size() * static_cast<std::size_t>(chunk_volume), T{0});
            chunks_.push_back(std::move(c));
            order_dirty_ = true;
        }
        return chunks_[static_cast<std::size_t>(slot)];
    }

    void refresh_order() const {
        if (!order_dirty_ && order_.size() == chunks_.size()) return;
        order_.resize(chunks_.size());
        for (std::size_t i = 0; i < chunks_.size(); ++i)
            order_[i] = static_cast<std::int32_t>(i);
        std::sort(order_.begin(), order_.end(), [this](std::int32_t a, std::int32_t b) {
            return chunk_linear_index(chunks_[static_cast<std::size_t>(a)].key) <
                   chunk_linear_index(chunks_[static_cast<std::size_t>(b)].key);
        });
        order_dirty_ = false;
    }

    GridGeometry<Dims> geom_;
    std::vector<std::string> props_;
    std::vector<int> column_of_;
    std::array<std::int64_t, Dims> chunk_counts_{};
    std::vector<std::int32_t> table_;
    std::vector<Chunk> chunks_;
    mutable std::vector<std::int32_t> order_;
    mutable bool order_dirty_ = false;
    std::int64_t active_nodes_ = 0;
};

} // namespace porediff
