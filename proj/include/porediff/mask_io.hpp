#pragma once

#include <array>
#include <cctype>
#include <cstdint>
#include <filesystem>
#include <fstream>
#include <string>
#include <utility>
#include <vector>

#include <json.hpp>

#include "porediff/errors.hpp"
#include "porediff/geometry.hpp"

/// Voxel-mask file input/output.
///
/// The primary format is a raw byte volume (one byte per voxel, nonzero =
/// transport phase, axis 0 contiguous) described by a JSON sidecar:
///
///   { "size": [nx, ny, nz], "voxel_size": h | [hx, hy, hz], "axis_order": "zyx" }
///
/// "axis_order" names the raw layout slowest-axis-first, so "zyx" means x
/// varies fastest — the library's native flat order. Only the native order is
/// accepted ("zyx" in 3-D, "yx" in 2-D); the field exists so foreign volumes
/// are rejected loudly instead of silently transposed.
///
/// For hand-written fixtures there is additionally an ASCII PGM (P2) reader:
/// one image per z-slice, nonzero pixel = phase.

namespace porediff {

namespace detail {

template <int Dims>
constexpr const char* native_axis_order() {
    return Dims == 3 ? "zyx" : "yx";
}

inline nlohmann::json parse_json_file(const std::filesystem::path& path,
                                      const std::string& what) {
    std::ifstream in(path);
    if (!in) throw io_error("cannot open " + what + " '" + path.string() + "'");
    nlohmann::json j;
    try {
        in >> j;
    } catch (const nlohmann::json::exception& e) {
        throw input_error(what + " '" + path.string() + "': invalid JSON: " + e.what());
    }
    return j;
}

} // namespace detail

/// Reads a raw byte volume plus its JSON sidecar. All sidecar problems are
/// reported as input_error naming the offending field.
template <int Dims>
VoxelMask<Dims> read_mask(const std::filesystem::path& raw_path,
                          const std::filesystem::path& sidecar_path) {
    const nlohmann::json j = detail::parse_json_file(sidecar_path, "mask sidecar");
    const std::string where = "mask sidecar '" + sidecar_path.string() + "'";

    if (!j.is_object()) throw input_error(where + ": top level must be a JSON object");

    // size
    if (!j.contains("size"))
        throw input_error(where + ": missing field 'size'");
    const auto& jsize = j.at("size");
    if (!jsize.is_array() || jsize.size() != static_cast<std::size_t>(Dims))
        throw input_error(where + ": field 'size' must be an array of " +
                          std::to_string(Dims) + " extents");
    std::array<std::int64_t, static_cast<std::size_t>(Dims)> size{};
    for (int a = 0; a < Dims; ++a) {
        const auto& e = jsize.at(static_cast<std::size_t>(a));
        if (!e.is_number_integer() || e.template get<std::int64_t>() < 1)
            throw input_error(where + ": field 'size[" + std::to_string(a) +
                              "]' must be a positive integer");
        size[static_cast<std::size_t>(a)] = e.template get<std::int64_t>();
    }

    // voxel_size: scalar or per-axis array
    if (!j.contains("voxel_size"))
        throw input_error(where + ": missing field 'voxel_size'");
    const auto& jvox = j.at("voxel_size");
    std::array<double, static_cast<std::size_t>(Dims)> voxel{};
    if (jvox.is_number()) {
        const double h = jvox.template get<double>();
        if (!(h > 0.0))
            throw input_error(where + ": field 'voxel_size' must be > 0");
        voxel.fill(h);
    } else if (jvox.is_array() && jvox.size() == static_cast<std::size_t>(Dims)) {
        for (int a = 0; a < Dims; ++a) {
            const auto& e = jvox.at(static_cast<std::size_t>(a));
            if (!e.is_number() || !(e.template get<double>() > 0.0))
                throw input_error(where + ": field 'voxel_size[" + std::to_string(a) +
                                  "]' must be > 0");
            voxel[static_cast<std::size_t>(a)] = e.template get<double>();
        }
    } else {
        throw input_error(where + ": field 'voxel_size' must be a number or an array of " +
                          std::to_string(Dims) + " numbers");
    }

    // axis_order
    if (!j.contains("axis_order"))
        throw input_error(where + ": missing field 'axis_order'");
    const auto& jorder = j.at("axis_order");
    if (!jorder.is_string() ||
        jorder.template get<std::string>() != detail::native_axis_order<Dims>())
        throw input_error(where + ": field 'axis_order' must be \"" +
                          std::string(detail::native_axis_order<Dims>()) +
                          "\" (slowest axis first, axis 0 contiguous)");

    // raw payload
    std::ifstream raw(raw_path, std::ios::binary);
    if (!raw) throw io_error("cannot open mask volume '" + raw_path.string() + "'");
    std::int64_t expected = 1;
    for (int a = 0; a < Dims; ++a) expected *= size[static_cast<std::size_t>(a)];
    std::vector<std::uint8_t> bits(static_cast<std::size_t>(expected));
    raw.read(reinterpret_cast<char*>(bits.data()), expected);
    if (raw.gcount() != expected)
        throw input_error("mask volume '" + raw_path.string() + "' holds " +
                          std::to_string(raw.gcount()) + " bytes, sidecar field 'size' implies " +
                          std::to_string(expected));
    raw.peek();
    if (!raw.eof())
        throw input_error("mask volume '" + raw_path.string() +
                          "' has trailing bytes beyond sidecar field 'size'");

    return VoxelMask<Dims>::make(size, voxel, std::move(bits));
}

/// Writes a mask as raw bytes plus the JSON sidecar read_mask() expects.
template <int Dims>
void write_mask(const VoxelMask<Dims>& mask, const std::filesystem::path& raw_path,
                const std::filesystem::path& sidecar_path) {
    {
        std::ofstream raw(raw_path, std::ios::binary | std::ios::trunc);
        if (!raw) throw io_error("cannot open '" + raw_path.string() + "' for writing");
        raw.write(reinterpret_cast<const char*>(mask.bits.data()),
                  static_cast<std::streamsize>(mask.bits.size()));
        raw.flush();
        if (!raw) throw io_error("write to '" + raw_path.string() + "' failed");
    }
    nlohmann::json j;
    j["size"] = mask.size;
    j["voxel_size"] = mask.voxel_size;
    j["axis_order"] = detail::native_axis_order<Dims>();
    std::ofstream side(sidecar_path, std::ios::trunc);
    if (!side) throw io_error("cannot open '" + sidecar_path.string() + "' for writing");
    side << j.dump(2) << '\n';
    side.flush();
    if (!side) throw io_error("write to '" + sidecar_path.string() + "' failed");
}

namespace detail {

/// Whitespace- and comment-skipping integer scanner for ASCII PGM.
class PgmScanner {
  public:
    PgmScanner(std::istream& in, std::string path) : in_(in), path_(std::move(path)) {}

    std::string next_token() {
        skip();
        std::string t;
        int c;
        while ((c = in_.peek()) != EOF && !std::isspace(c)) {
            t.push_back(static_cast<char>(in_.get()));
        }
        if (t.empty())
            throw input_error("PGM '" + path_ + "' is truncated");
        return t;
    }

    long next_int(const char* what) {
        const std::string t = next_token();
        try {
            std::size_t pos = 0;
            const long v = std::stol(t, &pos);
            if (pos != t.size()) throw std::invalid_argument(t);
            return v;
        } catch (const std::exception&) {
            throw input_error("PGM '" + path_ + "': expected " + std::string(what) +
                              ", got '" + t + "'");
        }
    }

  private:
    void skip() {
        int c;
        while ((c = in_.peek()) != EOF) {
            if (std::isspace(c)) {
                in_.get();
            } else if (c == '#') {
                while ((c = in_.get()) != EOF && c != '\n') {}
            } else {
                break;
            }
        }
    }

    std::istream& in_;
    std::string path_;
};

/// Reads one ASCII PGM (P2) image; out must hold width*height bytes on
/// return, nonzero pixel -> 1. Returns {width, height}.
inline std::pair<std::int64_t, std::int64_t> read_pgm_slice(
    const std::filesystem::path& path, std::vector<std::uint8_t>& out) {
    std::ifstream in(path);
    if (!in) throw io_error("cannot open PGM '" + path.string() + "'");
    PgmScanner scan(in, path.string());
    const std::string magic = scan.next_token();
    if (magic != "P2")
        throw input_error("PGM '" + path.string() + "': expected ASCII magic P2, got '" +
                          magic + "'");
    const long w = scan.next_int("width");
    const long h = scan.next_int("height");
    const long maxval = scan.next_int("maxval");
    if (w < 1 || h < 1)
        throw input_error("PGM '" + path.string() + "': bad dimensions");
    if (maxval < 1 || maxval > 65535)
        throw input_error("PGM '" + path.string() + "': bad maxval");
    out.resize(static_cast<std::size_t>(w) * static_cast<std::size_t>(h));
    for (long row = 0; row < h; ++row)
        for (long col = 0; col < w; ++col) {
            const long v = scan.next_int("pixel");
            if (v < 0 || v > maxval)
                throw input_error("PGM '" + path.string() + "': pixel value " +
                                  std::to_string(v) + " outside [0, maxval]");
            out[static_cast<std::size_t>(row) * static_cast<std::size_t>(w) +
                static_cast<std::size_t>(col)] = v != 0 ? 1 : 0;
        }
    return {w, h};
}

} // namespace detail

/// Reads a single ASCII PGM image as a 2-D mask (image rows become ascending
/// y indices, columns ascending x).
inline VoxelMask<2> read_pgm(const std::filesystem::path& path, double voxel_size = 1.0) {
    std::vector<std::uint8_t> bits;
    const auto [w, h] = detail::read_pgm_slice(path, bits);
    return VoxelMask<2>::make({w, h}, {voxel_size, voxel_size}, std::move(bits));
}

/// Reads a stack of ASCII PGM images as a 3-D mask; slice k supplies the
/// z = k plane and every slice must share the first slice's dimensions.
inline VoxelMask<3> read_pgm_stack(const std::vector<std::filesystem::path>& slices,
                                   double voxel_size = 1.0) {
    if (slices.empty()) throw input_error("PGM stack is empty");
    std::vector<std::uint8_t> bits;
    std::vector<std::uint8_t> slice;
    std::int64_t w = 0, h = 0;
    for (std::size_t k = 0; k < slices.size(); ++k) {
        const auto [sw, sh] = detail::read_pgm_slice(slices[k], slice);
        if (k == 0) {
            w = sw;
            h = sh;
            bits.reserve(static_cast<std::size_t>(w) * static_cast<std::size_t>(h) *
                         slices.size());
        } else if (sw != w || sh != h) {
            throw input_error("PGM '" + slices[k].string() + "' is " + std::to_string(sw) +
                              "x" + std::to_string(sh) + ", stack started " +
                              std::to_string(w) + "x" + std::to_string(h));
        }
        bits.insert(bits.end(), slice.begin(), slice.end());
    }
    return VoxelMask<3>::make({w, h, static_cast<std::int64_t>(slices.size())},
                              {voxel_size, voxel_size, voxel_size}, std::move(bits));
}

} // namespace porediff
