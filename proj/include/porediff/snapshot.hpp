#pragma once

#include <array>
#include <bit>
#include <cstdint>
#include <cstring>
#include <filesystem>
#include <fstream>
#include <limits>
#include <string>
#include <type_traits>
#include <vector>

#include "porediff/dense_field.hpp"
#include "porediff/errors.hpp"
#include "porediff/sparse_block_grid.hpp"

/// Binary snapshot containers. Two formats, both little-endian and documented
/// field-by-field in docs/formats.md:
///
///   "SBGD" — a DenseField: header followed by one scalar per node in
///            axis-0-fastest order.
///   "SBGR" — a SparseBlockGrid: header with the property-name table,
///            followed by one record per allocated chunk (key, occupancy
///            mask, full payload slab per property) in ascending chunk
///            linear index.
///
/// Property payloads are serialised in registration order regardless of any
/// channel swaps performed in memory, so a file's layout never depends on the
/// double-buffer state at write time. Round-trips are bit-exact for every
/// stored scalar, including NaNs.

namespace porediff {

static_assert(std::endian::native == std::endian::little,
              "snapshot codec is specified little-endian and this implementation "
              "memcpy's native scalars; big-endian hosts are unsupported");

/// Header summary of a snapshot file, readable without knowing the scalar
/// type or dimensionality in advance.
struct SnapshotInfo {
    std::string magic;                  // "SBGD" (dense) or "SBGR" (sparse)
    std::uint32_t version = 0;          // format version, currently 1
    std::uint32_t scalar_bits = 0;      // 32 or 64
    std::uint32_t dims = 0;             // 2 or 3
    std::vector<std::uint64_t> size;    // nodes per axis
    std::vector<double> spacing;        // node spacing per axis
    std::vector<double> origin;         // position of node (0,...,0)
    std::vector<std::string> properties; // sparse snapshots only
};

namespace detail {

inline constexpr std::uint32_t snapshot_version = 1;

template <typename T>
constexpr std::uint32_t scalar_bits_of() {
    static_assert(std::is_same_v<T, float> || std::is_same_v<T, double>,
                  "snapshots store float or double scalars");
    return std::is_same_v<T, float> ? 32u : 64u;
}

class BinaryWriter {
  public:
    explicit BinaryWriter(const std::filesystem::path& path)
        : path_(path.string()), out_(path, std::ios::binary | std::ios::trunc) {
        if (!out_) throw io_error("cannot open '" + path_ + "' for writing");
    }

    template <typename V>
    void put(V v) {
        static_assert(std::is_trivially_copyable_v<V>);
        char buf[sizeof(V)];
        std::memcpy(buf, &v, sizeof(V));
        out_.write(buf, sizeof(V));
    }

    template <typename V>
    void put_span(const V* data, std::size_t count) {
        static_assert(std::is_trivially_copyable_v<V>);
        out_.write(reinterpret_cast<const char*>(data),
                   static_cast<std::streamsize>(count * sizeof(V)));
    }

    void put_bytes(const char* data, std::size_t count) {
        out_.write(data, static_cast<std::streamsize>(count));
    }

    void finish() {
        out_.flush();
        if (!out_) throw io_error("write to '" + path_ + "' failed");
    }

  private:
    std::string path_;
    std::ofstream out_;
};

class BinaryReader {
  public:
    explicit BinaryReader(const std::filesystem::path& path)
        : path_(path.string()), in_(path, std::ios::binary) {
        if (!in_) throw io_error("cannot open '" + path_ + "' for reading");
    }

    template <typename V>
    V get() {
        static_assert(std::is_trivially_copyable_v<V>);
        char buf[sizeof(V)];
        in_.read(buf, sizeof(V));
        if (in_.gcount() != static_cast<std::streamsize>(sizeof(V)))
            throw io_error("'" + path_ + "' is truncated");
        V v;
        std::memcpy(&v, buf, sizeof(V));
        return v;
    }

    template <typename V>
    void get_span(V* data, std::size_t count) {
        static_assert(std::is_trivially_copyable_v<V>);
        in_.read(reinterpret_cast<char*>(data),
                 static_cast<std::streamsize>(count * sizeof(V)));
        if (in_.gcount() != static_cast<std::streamsize>(count * sizeof(V)))
            throw io_error("'" + path_ + "' is truncated");
    }

    void expect_eof() {
        in_.peek();
        if (!in_.eof())
            throw io_error("'" + path_ + "' has trailing bytes after the payload");
    }

    const std::string& path() const { return path_; }

  private:
    std::string path_;
    std::ifstream in_;
};

/// Reads and validates the fields shared by both container formats,
/// returning the reconstructed geometry. `T`/`Dims` mismatches against the
/// file header are reported as io_error so callers can dispatch on
/// peek_snapshot() first.
template <typename T, int Dims>
GridGeometry<Dims> read_common_header(BinaryReader& r, const char expected_magic[4]) {
    char magic[4];
    r.get_span(magic, 4);
    if (std::memcmp(magic, expected_magic, 4) != 0)
        throw io_error("'" + r.path() + "' is not a " + std::string(expected_magic, 4) +
                       " snapshot (magic mismatch)");
    const auto version = r.get<std::uint32_t>();
    if (version != snapshot_version)
        throw io_error("'" + r.path() + "': unsupported format version " +
                       std::to_string(version));
    const auto bits = r.get<std::uint32_t>();
    if (bits != scalar_bits_of<T>())
        throw io_error("'" + r.path() + "' stores " + std::to_string(bits) +
                       "-bit scalars, expected " + std::to_string(scalar_bits_of<T>()));
    const auto dims = r.get<std::uint32_t>();
    if (dims != static_cast<std::uint32_t>(Dims))
        throw io_error("'" + r.path() + "' is " + std::to_string(dims) +
                       "-dimensional, expected " + std::to_string(Dims));

    std::array<std::int64_t, Dims> size{};
    std::array<double, static_cast<std::size_t>(Dims)> spacing{};
    std::array<double, static_cast<std::size_t>(Dims)> origin{};
    for (int a = 0; a < Dims; ++a) {
        const auto n = r.get<std::uint64_t>();
        if (n == 0 || n > static_cast<std::uint64_t>(std::numeric_limits<std::int32_t>::max()))
            throw io_error("'" + r.path() + "': axis extent " + std::to_string(n) +
                           " out of range");
        size[a] = static_cast<std::int64_t>(n);
    }
    for (int a = 0; a < Dims; ++a) spacing[static_cast<std::size_t>(a)] = r.get<double>();
    for (int a = 0; a < Dims; ++a) origin[static_cast<std::size_t>(a)] = r.get<double>();
    return GridGeometry<Dims>::make(size, spacing, origin);
}

template <typename T, int Dims>
void write_common_header(BinaryWriter& w, const char magic[4],
                         const GridGeometry<Dims>& geom) {
    w.put_bytes(magic, 4);
    w.put(snapshot_version);
    w.put(scalar_bits_of<T>());
    w.put(static_cast<std::uint32_t>(Dims));
    for (int a = 0; a < Dims; ++a) w.put(static_cast<std::uint64_t>(geom.size[a]));
    for (int a = 0; a < Dims; ++a) w.put(geom.spacing[static_cast<std::size_t>(a)]);
    for (int a = 0; a < Dims; ++a) w.put(geom.origin[static_cast<std::size_t>(a)]);
}

} // namespace detail

/// Writes a dense field as an "SBGD" snapshot.
template <typename T, int Dims>
void write_dense_snapshot(const DenseField<T, Dims>& field,
                          const std::filesystem::path& path) {
    detail::BinaryWriter w(path);
    detail::write_common_header<T, Dims>(w, "SBGD", field.geometry());
    w.put_span(field.data(), static_cast<std::size_t>(field.node_count()));
    w.finish();
}

/// Reads an "SBGD" snapshot written with the same scalar type and rank.
template <typename T, int Dims>
DenseField<T, Dims> read_dense_snapshot(const std::filesystem::path& path) {
    detail::BinaryReader r(path);
    const auto geom = detail::read_common_header<T, Dims>(r, "SBGD");
    DenseField<T, Dims> field(geom);
    r.get_span(field.data(), static_cast<std::size_t>(field.node_count()));
    r.expect_eof();
    return field;
}

/// Writes a sparse block grid as an "SBGR" snapshot. Chunk records appear in
/// ascending chunk linear index; each record stores the full payload slab of
/// every property (inactive slots included), so reading reproduces the
/// in-memory state bit for bit.
template <typename T, int Dims>
void write_sparse_snapshot(const SparseBlockGrid<T, Dims>& grid,
                           const std::filesystem::path& path) {
    using Grid = SparseBlockGrid<T, Dims>;
    detail::BinaryWriter w(path);
    detail::write_common_header<T, Dims>(w, "SBGR", grid.geometry());

    const auto names = grid.property_names();
    w.put(static_cast<std::uint32_t>(names.size()));
    for (const std::string& n : names) {
        w.put(static_cast<std::uint32_t>(n.size()));
        w.put_bytes(n.data(), n.size());
    }

    w.put(static_cast<std::uint64_t>(grid.chunk_count()));
    grid.for_each_chunk([&](const typename Grid::Chunk& c) {
        for (int a = 0; a < Dims; ++a) w.put(c.key[static_cast<std::size_t>(a)]);
        w.put_span(c.mask.data(), c.mask.size());
        for (int p = 0; p < grid.property_count(); ++p)
            w.put_span(grid.channel_data(c, p), static_cast<std::size_t>(Grid::chunk_volume));
    });
    w.finish();
}

/// Reads an "SBGR" snapshot written with the same scalar type and rank.
template <typename T, int Dims>
SparseBlockGrid<T, Dims> read_sparse_snapshot(const std::filesystem::path& path) {
    using Grid = SparseBlockGrid<T, Dims>;
    detail::BinaryReader r(path);
    const auto geom = detail::read_common_header<T, Dims>(r, "SBGR");

    const auto n_props = r.get<std::uint32_t>();
    if (n_props == 0 || n_props > 4096)
        throw io_error("'" + r.path() + "': property count " + std::to_string(n_props) +
                       " out of range");
    std::vector<std::string> names(n_props);
    for (auto& n : names) {
        const auto len = r.get<std::uint32_t>();
        if (len == 0 || len > 4096)
            throw io_error("'" + r.path() + "': property name length " +
                           std::to_string(len) + " out of range");
        n.resize(len);
        r.get_span(n.data(), len);
    }
    Grid grid(geom, std::move(names));

    const auto n_chunks = r.get<std::uint64_t>();
    if (n_chunks > static_cast<std::uint64_t>(grid.stats().max_chunks))
        throw io_error("'" + r.path() + "': chunk count " + std::to_string(n_chunks) +
                       " exceeds the geometry's chunk table");
    std::vector<T> slab(static_cast<std::size_t>(Grid::chunk_volume));
    std::int64_t prev_linear = -1;
    for (std::uint64_t ci = 0; ci < n_chunks; ++ci) {
        typename Grid::Key key{};
        for (int a = 0; a < Dims; ++a) {
            key[static_cast<std::size_t>(a)] = r.get<std::int32_t>();
            const auto limit = grid.chunk_grid_size()[static_cast<std::size_t>(a)];
            if (key[static_cast<std::size_t>(a)] < 0 ||
                key[static_cast<std::size_t>(a)] >= limit)
                throw io_error("'" + r.path() + "': chunk key outside the geometry");
        }
        const std::int64_t linear = grid.chunk_linear_index(key);
        if (linear <= prev_linear)
            throw io_error("'" + r.path() + "': chunk records out of order");
        prev_linear = linear;

        std::array<std::uint64_t, Grid::mask_words> mask{};
        r.get_span(mask.data(), mask.size());

        bool any = false;
        for (int off = 0; off < Grid::chunk_volume; ++off) {
            if ((mask[static_cast<std::size_t>(off >> 6)] >> (off & 63)) & 1u) {
                grid.insert(Grid::node_index(key, off));
                any = true;
            }
        }
        if (!any)
            throw io_error("'" + r.path() + "': chunk record with empty occupancy mask");

        typename Grid::Chunk* chunk = grid.chunk_at_table(linear);
        for (std::uint32_t p = 0; p < n_props; ++p) {
            r.get_span(slab.data(), slab.size());
            std::memcpy(grid.channel_data(*chunk, static_cast<int>(p)), slab.data(),
                        slab.size() * sizeof(T));
        }
    }
    r.expect_eof();
    return grid;
}

/// Reads just the header of either snapshot format, so callers can dispatch
/// on scalar width, rank, and container kind before committing to a typed
/// read.
inline SnapshotInfo peek_snapshot(const std::filesystem::path& path) {
    detail::BinaryReader r(path);
    SnapshotInfo info;
    char magic[4];
    r.get_span(magic, 4);
    info.magic.assign(magic, 4);
    if (info.magic != "SBGD" && info.magic != "SBGR")
        throw io_error("'" + path.string() + "' is not a snapshot file (magic '" +
                       info.magic + "')");
    info.version = r.get<std::uint32_t>();
    if (info.version != detail::snapshot_version)
        throw io_error("'" + path.string() + "': unsupported format version " +
                       std::to_string(info.version));
    info.scalar_bits = r.get<std::uint32_t>();
    info.dims = r.get<std::uint32_t>();
    if (info.dims < 2 || info.dims > 3)
        throw io_error("'" + path.string() + "': rank " + std::to_string(info.dims) +
                       " out of range");
    for (std::uint32_t a = 0; a < info.dims; ++a) info.size.push_back(r.get<std::uint64_t>());
    for (std::uint32_t a = 0; a < info.dims; ++a) info.spacing.push_back(r.get<double>());
    for (std::uint32_t a = 0; a < info.dims; ++a) info.origin.push_back(r.get<double>());
    if (info.magic == "SBGR") {
        const auto n_props = r.get<std::uint32_t>();
        if (n_props == 0 || n_props > 4096)
            throw io_error("'" + path.string() + "': property count " +
                           std::to_string(n_props) + " out of range");
        for (std::uint32_t p = 0; p < n_props; ++p) {
            const auto len = r.get<std::uint32_t>();
            if (len == 0 || len > 4096)
                throw io_error("'" + path.string() + "': property name length " +
                               std::to_string(len) + " out of range");
            std::string n(len, '\0');
            r.get_span(n.data(), len);
            info.properties.push_back(std::move(n));
        }
    }
    return info;
}

} // namespace porediff
