#pragma once

#include <array>
#include <cstdint>
#include <filesystem>
#include <fstream>
#include <limits>
#include <string>
#include <utility>
#include <vector>

#include "porediff/errors.hpp"
#include "porediff/grid_geometry.hpp"
#include "porediff/scalar_text.hpp"
#include "porediff/sparse_block_grid.hpp"

/// Legacy ASCII VTK STRUCTURED_POINTS emission, plus a small reader used for
/// round-trip verification. Values print through format_scalar, so FP64
/// fields survive write -> parse bit-exactly (17 significant digits) and
/// identical runs produce byte-identical files. Sparse grids are exported on
/// their full bounding lattice: inactive nodes carry a configurable blank
/// value (default NaN) and an integer "mask" array (1 = active) lets viewers
/// threshold the blanks away.

namespace porediff {

/// A dense lattice plus named point-data arrays, ready for VTK emission.
template <typename T, int Dims>
struct VtkDataset {
    GridGeometry<Dims> geometry{};
    std::vector<std::pair<std::string, std::vector<T>>> scalars; // node_count values each
    std::vector<std::int32_t> mask; // empty = no mask array written

    void add_scalar(std::string name, std::vector<T> values) {
        scalars.emplace_back(std::move(name), std::move(values));
    }
};

namespace detail {

template <typename T>
constexpr const char* vtk_type_name() {
    return sizeof(T) == 4 ? "float" : "double";
}

inline void check_vtk_name(const std::string& name) {
    if (name.empty()) throw input_error("VTK array name must not be empty");
    for (char c : name)
        if (c == ' ' || c == '\t' || c == '\n' || c == '\r')
            throw input_error("VTK array name '" + name + "' contains whitespace");
}

} // namespace detail

/// Writes a dataset as legacy ASCII STRUCTURED_POINTS (2-D lattices are
/// emitted with a third extent of 1).
template <typename T, int Dims>
void write_vtk(const VtkDataset<T, Dims>& ds, const std::filesystem::path& path,
               const std::string& title = "porediff field export") {
    const std::int64_t n = ds.geometry.node_count();
    if (ds.scalars.empty() && ds.mask.empty())
        throw input_error("VTK dataset has no arrays to write");
    for (const auto& [name, values] : ds.scalars) {
        detail::check_vtk_name(name);
        if (static_cast<std::int64_t>(values.size()) != n)
            throw input_error("VTK array '" + name + "' holds " +
                              std::to_string(values.size()) + " values, lattice has " +
                              std::to_string(n) + " nodes");
    }
    for (std::size_t i = 0; i < ds.scalars.size(); ++i)
        for (std::size_t k = i + 1; k < ds.scalars.size(); ++k)
            if (ds.scalars[i].first == ds.scalars[k].first)
                throw input_error("duplicate VTK array name '" + ds.scalars[i].first + "'");
    if (!ds.mask.empty() && static_cast<std::int64_t>(ds.mask.size()) != n)
        throw input_error("VTK mask array size mismatch");

    std::ofstream out(path, std::ios::trunc);
    if (!out) throw io_error("cannot open '" + path.string() + "' for writing");

    std::array<std::int64_t, 3> dims{1, 1, 1};
    std::array<double, 3> origin{0.0, 0.0, 0.0};
    std::array<double, 3> spacing{1.0, 1.0, 1.0};
    for (int a = 0; a < Dims; ++a) {
        dims[static_cast<std::size_t>(a)] = ds.geometry.size[static_cast<std::size_t>(a)];
        origin[static_cast<std::size_t>(a)] = ds.geometry.origin[static_cast<std::size_t>(a)];
        spacing[static_cast<std::size_t>(a)] =
            ds.geometry.spacing[static_cast<std::size_t>(a)];
    }

    out << "# vtk DataFile Version 3.0\n" << title << "\nASCII\n";
    out << "DATASET STRUCTURED_POINTS\n";
    out << "DIMENSIONS " << dims[0] << ' ' << dims[1] << ' ' << dims[2] << '\n';
    out << "ORIGIN " << format_scalar(origin[0]) << ' ' << format_scalar(origin[1]) << ' '
        << format_scalar(origin[2]) << '\n';
    out << "SPACING " << format_scalar(spacing[0]) << ' ' << format_scalar(spacing[1])
        << ' ' << format_scalar(spacing[2]) << '\n';
    out << "POINT_DATA " << n << '\n';

    for (const auto& [name, values] : ds.scalars) {
        out << "SCALARS " << name << ' ' << detail::vtk_type_name<T>() << " 1\n";
        out << "LOOKUP_TABLE default\n";
        for (const T& v : values) out << format_scalar(v) << '\n';
    }
    if (!ds.mask.empty()) {
        out << "SCALARS mask int 1\n";
        out << "LOOKUP_TABLE default\n";
        for (std::int32_t v : ds.mask) out << v << '\n';
    }
    out.flush();
    if (!out) throw io_error("write to '" + path.string() + "' failed");
}

/// Densifies selected channels of a sparse grid for VTK export. Inactive
/// nodes receive `blank` in every scalar array and 0 in the mask array.
template <typename T, int Dims>
VtkDataset<T, Dims> vtk_from_sparse(
    const SparseBlockGrid<T, Dims>& grid, std::vector<std::string> channels = {},
    T blank = std::numeric_limits<T>::quiet_NaN()) {
    if (channels.empty())
        channels.assign(grid.property_names().begin(), grid.property_names().end());

    VtkDataset<T, Dims> ds;
    ds.geometry = grid.geometry();
    const std::size_t n = static_cast<std::size_t>(ds.geometry.node_count());

    std::vector<int> prop_of;
    for (const std::string& name : channels) {
        prop_of.push_back(grid.property_index(name)); // throws on unknown names
        ds.scalars.emplace_back(name, std::vector<T>(n, blank));
    }
    ds.mask.assign(n, 0);

    using Grid = SparseBlockGrid<T, Dims>;
    grid.for_each_active([&](const NodeIndex<Dims>& idx, const typename Grid::Chunk& c,
                             int off) {
        const auto flat = static_cast<std::size_t>(ds.geometry.flat_index(idx));
        ds.mask[flat] = 1;
        for (std::size_t k = 0; k < prop_of.size(); ++k)
            ds.scalars[k].second[flat] =
                grid.channel_data(c, prop_of[k])[static_cast<std::size_t>(off)];
    });
    return ds;
}

/// One parsed point-data array: values are kept as raw tokens so callers can
/// convert with the parse that matches the producing type exactly.
struct VtkScalarArray {
    std::string name;
    std::string type; // "float", "double", "int", ...
    std::vector<std::string> tokens;

    template <typename V>
    std::vector<V> as() const {
        std::vector<V> out;
        out.reserve(tokens.size());
        for (const std::string& t : tokens) {
            if constexpr (std::numeric_limits<V>::is_integer)
                out.push_back(static_cast<V>(parse_integer(t)));
            else
                out.push_back(parse_scalar<V>(t));
        }
        return out;
    }
};

/// Parsed legacy STRUCTURED_POINTS file.
struct VtkFile {
    std::array<std::int64_t, 3> dimensions{1, 1, 1};
    std::array<double, 3> origin{0.0, 0.0, 0.0};
    std::array<double, 3> spacing{1.0, 1.0, 1.0};
    std::int64_t point_count = 0;
    std::vector<VtkScalarArray> arrays;

    const VtkScalarArray& array(const std::string& name) const {
        for (const auto& a : arrays)
            if (a.name == name) return a;
        throw input_error("VTK file has no array named '" + name + "'");
    }
};

/// Reads the subset of legacy ASCII VTK this library writes: a
/// STRUCTURED_POINTS dataset with scalar point data.
inline VtkFile read_vtk(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in) throw io_error("cannot open '" + path.string() + "' for reading");
    const std::string where = "VTK file '" + path.string() + "'";

    std::string line;
    if (!std::getline(in, line) || line.rfind("# vtk DataFile", 0) != 0)
        throw input_error(where + ": missing '# vtk DataFile' header");
    if (!std::getline(in, line)) throw input_error(where + ": missing title line");

    auto next = [&](const char* what) {
        std::string t;
        if (!(in >> t))
            throw input_error(where + ": unexpected end of file, wanted " +
                              std::string(what));
        return t;
    };

    if (next("format") != "ASCII")
        throw input_error(where + ": only ASCII format is supported");
    if (next("DATASET") != "DATASET" || next("dataset type") != "STRUCTURED_POINTS")
        throw input_error(where + ": only DATASET STRUCTURED_POINTS is supported");

    VtkFile f;
    std::string kw;
    while ((kw = next("geometry keyword or POINT_DATA")) != "POINT_DATA") {
        if (kw == "DIMENSIONS") {
            for (auto& d : f.dimensions) d = parse_integer(next("dimension"));
        } else if (kw == "ORIGIN") {
            for (auto& v : f.origin) v = parse_scalar<double>(next("origin component"));
        } else if (kw == "SPACING" || kw == "ASPECT_RATIO") {
            for (auto& v : f.spacing) v = parse_scalar<double>(next("spacing component"));
        } else {
            throw input_error(where + ": unsupported keyword '" + kw + "'");
        }
    }
    f.point_count = parse_integer(next("point count"));
    if (f.point_count != f.dimensions[0] * f.dimensions[1] * f.dimensions[2])
        throw input_error(where + ": POINT_DATA count does not match DIMENSIONS");

    std::string tok;
    while (in >> tok) {
        if (tok != "SCALARS")
            throw input_error(where + ": unsupported point-data section '" + tok + "'");
        VtkScalarArray arr;
        arr.name = next("array name");
        arr.type = next("array type");
        std::string comp_or_table = next("component count or LOOKUP_TABLE");
        long long comps = 1;
        if (comp_or_table != "LOOKUP_TABLE") {
            comps = parse_integer(comp_or_table);
            if (comps < 1 || comps > 9)
                throw input_error(where + ": bad component count for array '" + arr.name +
                                  "'");
            if (next("LOOKUP_TABLE") != "LOOKUP_TABLE")
                throw input_error(where + ": expected LOOKUP_TABLE after SCALARS line");
        }
        next("lookup table name");
        const std::int64_t wanted = f.point_count * comps;
        arr.tokens.reserve(static_cast<std::size_t>(wanted));
        for (std::int64_t i = 0; i < wanted; ++i)
            arr.tokens.push_back(next("array value"));
        f.arrays.push_back(std::move(arr));
    }
    return f;
}

} // namespace porediff
