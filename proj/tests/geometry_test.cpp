// Mask ingestion, thin-feature filtering (verified against a brute-force
// morphology oracle), sparse-grid construction with epsilon-inset band
// bounds, the sigmoid diffusion profile, and porosity.
#include <gtest/gtest.h>

#include <cmath>
#include <limits>
#include <random>
#include <vector>

#include "porediff/geometry.hpp"
#include "porediff/synthetic.hpp"

namespace {

using namespace porediff;

// Reference opening: erosion then dilation of the positive set by the box
// {0..w-1}^d, written as plain set definitions on an unbounded negative
// background. Deliberately simple and slow.
template <int Dims>
std::vector<std::uint8_t> brute_opening(const std::vector<std::uint8_t>& cells,
                                        const GridGeometry<Dims>& geom, int w) {
    const std::int64_t n = geom.node_count();
    auto probe = [&](const std::vector<std::uint8_t>& v, NodeIndex<Dims> idx) {
        for (int a = 0; a < Dims; ++a)
            if (idx[a] < 0 || idx[a] >= geom.size[a]) return false;
        return v[static_cast<std::size_t>(geom.flat_index(idx))] != 0;
    };
    auto offsets_visit = [&](auto&& f) {
        NodeIndex<Dims> b{};
        while (true) {
            f(b);
            int a = 0;
            for (; a < Dims; ++a) {
                if (++b[a] < w) break;
                b[a] = 0;
            }
            if (a == Dims) break;
        }
    };
    std::vector<std::uint8_t> eroded(static_cast<std::size_t>(n));
    std::vector<std::uint8_t> opened(static_cast<std::size_t>(n));
    DenseField<double, Dims> walker(geom); // index iteration helper
    walker.for_each_index([&](const NodeIndex<Dims>& idx, std::int64_t f) {
        bool all = true;
        offsets_visit([&](const NodeIndex<Dims>& b) {
            NodeIndex<Dims> j = idx;
            for (int a = 0; a < Dims; ++a) j[a] += b[a];
            all = all && probe(cells, j);
        });
        eroded[static_cast<std::size_t>(f)] = all ? 1 : 0;
    });
    walker.for_each_index([&](const NodeIndex<Dims>& idx, std::int64_t f) {
        bool any = false;
        offsets_visit([&](const NodeIndex<Dims>& b) {
            NodeIndex<Dims> j = idx;
            for (int a = 0; a < Dims; ++a) j[a] -= b[a];
            any = any || probe(eroded, j);
        });
        opened[static_cast<std::size_t>(f)] = any ? 1 : 0;
    });
    return opened;
}

template <int Dims>
DenseField<double, Dims> field_of(const GridGeometry<Dims>& geom,
                                  const std::vector<std::uint8_t>& cells) {
    DenseField<double, Dims> out(geom);
    for (std::int64_t f = 0; f < geom.node_count(); ++f)
        out[f] = cells[static_cast<std::size_t>(f)] ? 1.0 : -1.0;
    return out;
}

TEST(MaskToIndicator, PointwiseMapAndValidation) {
    auto all_true = VoxelMask<2>::make({2, 2}, {1.0, 1.0}, {1, 1, 1, 1});
    auto ind = mask_to_indicator<double>(all_true);
    for (std::int64_t f = 0; f < 4; ++f) EXPECT_EQ(ind[f], 1.0);

    auto all_false = VoxelMask<2>::make({2, 2}, {1.0, 1.0}, {0, 0, 0, 0});
    ind = mask_to_indicator<double>(all_false);
    for (std::int64_t f = 0; f < 4; ++f) EXPECT_EQ(ind[f], -1.0);

    auto checker = VoxelMask<2>::make({2, 2}, {1.0, 1.0}, {1, 0, 0, 1});
    ind = mask_to_indicator<double>(checker);
    EXPECT_EQ(ind.at({0, 0}), 1.0);
    EXPECT_EQ(ind.at({1, 0}), -1.0);
    EXPECT_EQ(ind.at({0, 1}), -1.0);
    EXPECT_EQ(ind.at({1, 1}), 1.0);

    EXPECT_THROW(VoxelMask<2>::make({0, 2}, {1.0, 1.0}, {}), input_error);
    EXPECT_THROW(VoxelMask<2>::make({2, 2}, {1.0, 1.0}, {1, 1, 1}), input_error);
}

TEST(MaskToIndicator, ThresholdRoundTripRecoversMask) {
    std::mt19937 rng(77);
    std::vector<std::uint8_t> bits(9 * 7 * 5);
    for (auto& b : bits) b = (rng() & 1u) ? 1 : 0;
    auto mask = VoxelMask<3>::make({9, 7, 5}, {0.5, 0.5, 0.5}, bits);
    auto ind = mask_to_indicator<float>(mask);
    for (std::int64_t f = 0; f < ind.node_count(); ++f)
        EXPECT_EQ(ind[f] > 0.0f, bits[static_cast<std::size_t>(f)] != 0);
}

TEST(FilterThinFeatures, SingleVoxelRemovedEverywhere) {
    auto geom = GridGeometry<3>::make({6, 6, 6}, {1, 1, 1});
    for (std::int64_t cx : {0, 3, 5}) {
        for (std::int64_t cz : {0, 5}) {
            DenseField<double, 3> ind(geom, -1.0);
            ind.at({cx, 2, cz}) = 1.0;
            auto out = filter_thin_features(ind);
            for (std::int64_t f = 0; f < out.node_count(); ++f) EXPECT_EQ(out[f], -1.0);
        }
    }
}

TEST(FilterThinFeatures, CubePreservedExactly) {
    auto geom = GridGeometry<3>::make({8, 8, 8}, {1, 1, 1});
    DenseField<double, 3> ind(geom, -1.0);
    ind.for_each_index([&](const NodeIndex<3>& idx, std::int64_t f) {
        if (idx[0] >= 2 && idx[0] <= 5 && idx[1] >= 2 && idx[1] <= 5 && idx[2] >= 2 &&
            idx[2] <= 5)
            ind[f] = 1.0;
    });
    auto out = filter_thin_features(ind);
    for (std::int64_t f = 0; f < out.node_count(); ++f) ASSERT_EQ(out[f], ind[f]);
}

TEST(FilterThinFeatures, AllPositiveUnchanged) {
    auto geom = GridGeometry<3>::make({7, 6, 5}, {1, 1, 1});
    DenseField<double, 3> ind(geom, 1.0);
    auto out = filter_thin_features(ind);
    for (std::int64_t f = 0; f < out.node_count(); ++f) EXPECT_EQ(out[f], 1.0);
}

TEST(FilterThinFeatures, ThicknessThresholdPerAxis) {
    auto geom = GridGeometry<2>::make({8, 8}, {1, 1});
    // One-column wall: thickness 1 along axis 0 -> removed.
    DenseField<double, 2> wall1(geom, -1.0);
    wall1.for_each_index([&](const NodeIndex<2>& idx, std::int64_t f) {
        if (idx[0] == 4) wall1[f] = 1.0;
    });
    auto out = filter_thin_features(wall1);
    for (std::int64_t f = 0; f < out.node_count(); ++f) EXPECT_EQ(out[f], -1.0);

    // Two-column wall: thickness 2 -> kept exactly.
    DenseField<double, 2> wall2(geom, -1.0);
    wall2.for_each_index([&](const NodeIndex<2>& idx, std::int64_t f) {
        if (idx[0] == 4 || idx[0] == 5) wall2[f] = 1.0;
    });
    out = filter_thin_features(wall2);
    for (std::int64_t f = 0; f < out.node_count(); ++f) ASSERT_EQ(out[f], wall2[f]);

    // The same wall dies under a min thickness of 3 and survives at 2.
    out = filter_thin_features(wall2, 3);
    for (std::int64_t f = 0; f < out.node_count(); ++f) EXPECT_EQ(out[f], -1.0);
}

TEST(FilterThinFeatures, MatchesBruteForceOracle) {
    std::mt19937 rng(2024);
    for (int trial = 0; trial < 3; ++trial) {
        auto geom = GridGeometry<3>::make({10, 9, 8}, {1, 1, 1});
        std::vector<std::uint8_t> cells(static_cast<std::size_t>(geom.node_count()));
        for (auto& c : cells) c = (rng() % 100 < 55) ? 1 : 0;
        auto filtered = filter_thin_features(field_of(geom, cells));
        auto oracle = brute_opening(cells, geom, 2);
        for (std::int64_t f = 0; f < geom.node_count(); ++f)
            ASSERT_EQ(filtered[f] > 0, oracle[static_cast<std::size_t>(f)] != 0)
                << "trial " << trial << " node " << f;
    }
    for (int w : {2, 3}) {
        auto geom = GridGeometry<2>::make({12, 11}, {1, 1});
        std::vector<std::uint8_t> cells(static_cast<std::size_t>(geom.node_count()));
        for (auto& c : cells) c = (rng() % 100 < 60) ? 1 : 0;
        auto filtered = filter_thin_features(field_of(geom, cells), w);
        auto oracle = brute_opening(cells, geom, w);
        for (std::int64_t f = 0; f < geom.node_count(); ++f)
            ASSERT_EQ(filtered[f] > 0, oracle[static_cast<std::size_t>(f)] != 0);
    }
}

TEST(FilterThinFeatures, Idempotent) {
    std::mt19937 rng(99);
    auto geom = GridGeometry<3>::make({9, 9, 9}, {1, 1, 1});
    for (int trial = 0; trial < 3; ++trial) {
        DenseField<double, 3> ind(geom);
        for (std::int64_t f = 0; f < ind.node_count(); ++f)
            ind[f] = (rng() % 100 < 50) ? 1.0 : -1.0;
        auto once = filter_thin_features(ind);
        auto twice = filter_thin_features(once);
        for (std::int64_t f = 0; f < once.node_count(); ++f) ASSERT_EQ(twice[f], once[f]);
    }
}

TEST(FilterThinFeatures, RejectsBadArguments) {
    auto geom = GridGeometry<2>::make({4, 4}, {1, 1});
    DenseField<double, 2> ind(geom, 0.5);
    EXPECT_THROW(filter_thin_features(ind), input_error);
    DenseField<double, 2> ok(geom, 1.0);
    EXPECT_THROW(filter_thin_features(ok, 0), input_error);
    // Width 1 is the identity: nothing is thinner than one cell.
    ok.at({2, 2}) = -1.0;
    auto out = filter_thin_features(ok, 1);
    for (std::int64_t f = 0; f < out.node_count(); ++f) EXPECT_EQ(out[f], ok[f]);
}

TEST(BuildSparseGrid, AllPositiveFillsEverything) {
    auto geom = GridGeometry<3>::make({12, 10, 9}, {1, 1, 1});
    DenseField<double, 3> sdf(geom, 2.5);
    auto grid = build_sparse_grid(sdf, PhaseBand{});
    auto s = grid.stats();
    EXPECT_EQ(s.active_nodes, geom.node_count());
    EXPECT_EQ(s.node_fill_fraction, 1.0);
    EXPECT_EQ(grid.get({3, 3, 3}, "phi"), 2.5);
    EXPECT_EQ(grid.get({3, 3, 3}, "u"), 0.0);
    EXPECT_EQ(grid.get({3, 3, 3}, "D"), 0.0);
}

TEST(BuildSparseGrid, DiskAreaFractionMatchesAnalyticRatio) {
    auto geom = GridGeometry<2>::cell_centered_box(256, -1.28, 1.28);
    auto disk = [](const std::array<double, 2>& x) {
        return synthetic::ball_sdf<2>(x, {0, 0}, 1.0);
    };
    auto sdf = synthetic::field_from<double, 2>(geom, disk);
    auto grid = build_sparse_grid(sdf, PhaseBand{});
    // Exact oracle: count the nodes satisfying the same strict bound.
    const double eps = std::numeric_limits<double>::epsilon();
    std::int64_t expected = 0;
    sdf.for_each_index([&](const NodeIndex<2>&, std::int64_t f) {
        if (sdf[f] > eps) ++expected;
    });
    EXPECT_EQ(grid.stats().active_nodes, expected);
    const double analytic = std::numbers::pi / (2.56 * 2.56);
    EXPECT_NEAR(grid.stats().node_fill_fraction, analytic, 0.02 * analytic);
}

TEST(BuildSparseGrid, EmptyAndInvalidInputsThrow) {
    auto geom = GridGeometry<2>::make({8, 8}, {1, 1});
    DenseField<double, 2> negative(geom, -1.0);
    EXPECT_THROW(build_sparse_grid(negative, PhaseBand{}), input_error);

    DenseField<double, 2> fine(geom, 1.0);
    EXPECT_THROW(build_sparse_grid(fine, PhaseBand{2.0, 2.0}), input_error);
    EXPECT_THROW(build_sparse_grid(fine, PhaseBand{}, {"u", "D"}), input_error);

    DenseField<double, 2> infinite(geom, 1.0);
    infinite[5] = std::numeric_limits<double>::infinity();
    EXPECT_THROW(build_sparse_grid(infinite, PhaseBand{}), input_error);
}

TEST(BuildSparseGrid, EpsilonInsetBoundsAreStrict) {
    const double eps = std::numeric_limits<double>::epsilon();
    auto geom = GridGeometry<2>::make({4, 1}, {1, 1});
    DenseField<double, 2> sdf(geom);
    sdf[0] = 0.0;       // exactly on the lower bound: out
    sdf[1] = eps;       // not strictly above b_low + eps: out
    sdf[2] = 2.0 * eps; // in
    sdf[3] = 1.0;       // in
    auto grid = build_sparse_grid(sdf, PhaseBand{});
    EXPECT_FALSE(grid.is_active({0, 0}));
    EXPECT_FALSE(grid.is_active({1, 0}));
    EXPECT_TRUE(grid.is_active({2, 0}));
    EXPECT_TRUE(grid.is_active({3, 0}));

    // Single precision uses its own machine epsilon.
    const float feps = std::numeric_limits<float>::epsilon();
    DenseField<float, 2> fsdf(geom);
    fsdf[0] = 0.5f * feps;
    fsdf[1] = 2.0f * feps;
    fsdf[2] = 1.0f;
    fsdf[3] = 1.0f;
    auto fgrid = build_sparse_grid(fsdf, PhaseBand{});
    EXPECT_FALSE(fgrid.is_active({0, 0}));
    EXPECT_TRUE(fgrid.is_active({1, 0}));
}

TEST(BuildSparseGrid, BandConsistencyExhaustive) {
    std::mt19937 rng(5);
    std::uniform_real_distribution<double> uv(-2.0, 2.0);
    auto geom = GridGeometry<2>::make({11, 9}, {1, 1});
    DenseField<double, 2> sdf(geom);
    for (std::int64_t f = 0; f < sdf.node_count(); ++f) sdf[f] = uv(rng);
    const PhaseBand band{-0.5, 0.7};
    auto grid = build_sparse_grid(sdf, band);
    const double eps = std::numeric_limits<double>::epsilon();
    sdf.for_each_index([&](const NodeIndex<2>& idx, std::int64_t f) {
        const bool should = sdf[f] > band.b_low + eps && sdf[f] < band.b_up - eps;
        ASSERT_EQ(grid.is_active(idx), should);
        if (should) {
            ASSERT_GT(*grid.get(idx, "phi"), band.b_low);
            ASSERT_LT(*grid.get(idx, "phi"), band.b_up);
        }
    });
}

TEST(DiffusionProfile, MidpointSaturationMonotonicity) {
    DiffusionProfile p{0.2, 3.0, 0.0, 5.0};
    EXPECT_NEAR(smooth_diffusion_coefficient(0.0, p), 0.2 + 1.5, 1e-15);
    EXPECT_NEAR(smooth_diffusion_coefficient(100.0, p), 3.2, 1e-12);
    EXPECT_NEAR(smooth_diffusion_coefficient(-100.0, p), 0.2, 1e-12);

    auto anchored = DiffusionProfile::anchored(0.2, 3.0, 5.0, 0.37);
    EXPECT_NEAR(smooth_diffusion_coefficient(0.37, anchored), 0.2 + 1.5, 1e-14);

    double prev = -1.0;
    for (int i = -40; i <= 40; ++i) {
        const double d = smooth_diffusion_coefficient(0.1 * i, p);
        EXPECT_GT(d, 0.2);
        EXPECT_LT(d, 3.2);
        EXPECT_GT(d, prev);
        prev = d;
    }

    EXPECT_THROW(smooth_diffusion_coefficient(0.0, DiffusionProfile{-0.1, 1, 0, 1}),
                 input_error);
    EXPECT_THROW(smooth_diffusion_coefficient(0.0, DiffusionProfile{0.0, 0.0, 0, 1}),
                 input_error);
}

TEST(PopulateDiffusion, UniformTinyAndAnchoredProfiles) {
    auto geom = GridGeometry<2>::cell_centered_box(32, -1.28, 1.28);
    auto disk = [](const std::array<double, 2>& x) {
        return synthetic::ball_sdf<2>(x, {0, 0}, 1.0);
    };
    auto sdf = synthetic::field_from<double, 2>(geom, disk);
    auto grid = build_sparse_grid(sdf, PhaseBand{});

    // Vanishing d_max pins the whole channel to d_min.
    populate_diffusion_channel(grid, DiffusionProfile{0.7, 1e-14, 0.0, 1.0});
    grid.for_each_active([&](const NodeIndex<2>& idx, const auto&, int) {
        ASSERT_NEAR(*grid.get(idx, "D"), 0.7, 1e-13);
    });

    // Uniform level values give a uniform coefficient.
    DenseField<double, 2> flat(GridGeometry<2>::make({8, 8}, {1, 1}), 0.42);
    auto flat_grid = build_sparse_grid(flat, PhaseBand{});
    populate_diffusion_channel(flat_grid, DiffusionProfile{0.0, 2.0, 1.0, 3.0});
    const double expect = smooth_diffusion_coefficient(0.42, {0.0, 2.0, 1.0, 3.0});
    flat_grid.for_each_active([&](const NodeIndex<2>& idx, const auto&, int) {
        ASSERT_EQ(*flat_grid.get(idx, "D"), expect);
    });

    // Anchoring the sigmoid midpoint at the smallest stored level value puts
    // D = d_min + d_max/2 exactly at that node.
    double phi_min = std::numeric_limits<double>::infinity();
    NodeIndex<2> argmin{};
    grid.for_each_active([&](const NodeIndex<2>& idx, const auto&, int) {
        const double v = *grid.get(idx, "phi");
        if (v < phi_min) {
            phi_min = v;
            argmin = idx;
        }
    });
    const double h = geom.min_spacing();
    populate_diffusion_channel(grid, DiffusionProfile::anchored(0.1, 2.0, 4.0 / h, phi_min));
    EXPECT_NEAR(*grid.get(argmin, "D"), 0.1 + 1.0, 1e-12);
}

TEST(Porosity, MaskGridAndPackingOracle) {
    auto full = VoxelMask<2>::make({4, 4}, {1, 1}, std::vector<std::uint8_t>(16, 1));
    EXPECT_EQ(porosity(full), 1.0);
    std::vector<std::uint8_t> half(16, 0);
    for (int i = 0; i < 8; ++i) half[static_cast<std::size_t>(i)] = 1;
    EXPECT_EQ(porosity(VoxelMask<2>::make({4, 4}, {1, 1}, half)), 0.5);

    auto packing = synthetic::SpherePacking::random({0, 0, 0}, {1, 1, 1}, 6, 0.15, 0.3, 11);
    auto geom = GridGeometry<3>::cell_centered_box(24, 0.0, 1.0);
    std::vector<std::uint8_t> bits(static_cast<std::size_t>(geom.node_count()));
    std::int64_t positive = 0;
    DenseField<double, 3> sdf(geom);
    sdf.fill_from_position([&](const std::array<double, 3>& x) { return packing.fluid_sdf(x); });
    sdf.for_each_index([&](const NodeIndex<3>&, std::int64_t f) {
        bits[static_cast<std::size_t>(f)] = sdf[f] > 0 ? 1 : 0;
        positive += sdf[f] > 0 ? 1 : 0;
    });
    auto mask = VoxelMask<3>::make(geom.size, geom.spacing, bits);
    EXPECT_EQ(porosity(mask),
              static_cast<double>(positive) / static_cast<double>(geom.node_count()));
    auto grid = build_sparse_grid(sdf, PhaseBand{});
    EXPECT_NEAR(porosity(grid), porosity(mask), 1e-12);
}

} // namespace
