// Redistancing operator: smoothed sign, Godunov upwind gradient, band error
// norms, and the full iteration on analytic shapes. Numeric regression bounds
// were frozen from measured converged runs of this implementation.
#include <gtest/gtest.h>

#include <algorithm>
#include <cmath>
#include <vector>

#include "porediff/levelset.hpp"
#include "porediff/synthetic.hpp"

namespace {

using namespace porediff;

double unit_ball(const std::array<double, 3>& x) {
    return synthetic::ball_sdf<3>(x, {0, 0, 0}, 1.0);
}

TEST(SmoothedSign, PinnedValues) {
    EXPECT_EQ(smoothed_sign(0.0, 1.0, 0.05), 0.0);
    EXPECT_NEAR(smoothed_sign(1e6, 1.0, 0.01), 1.0, 1e-9);
    for (double h : {0.1, 0.008, 1.0})
        EXPECT_NEAR(smoothed_sign(h, 1.0, h), 1.0 / std::sqrt(2.0), 1e-15);
    // Limit at phi = 0 is defined as 0 even when the gradient vanishes too.
    EXPECT_EQ(smoothed_sign(0.0, 0.0, 0.05), 0.0);
}

TEST(SmoothedSign, OddAndBounded) {
    const double h = 0.03;
    for (double grad : {0.0, 0.5, 1.0, 2.0}) {
        for (int i = -50; i <= 50; ++i) {
            const double phi = 0.1 * i;
            const double s = smoothed_sign(phi, grad, h);
            EXPECT_EQ(smoothed_sign(-phi, grad, h), -s);
            EXPECT_LE(std::abs(s), 1.0);
            if (phi > 0) {
                EXPECT_GT(s, 0.0);
            } else if (phi < 0) {
                EXPECT_LT(s, 0.0);
            }
        }
    }
}

TEST(UpwindGradient, UniformSlopeExactEverywhere) {
    auto geom = GridGeometry<2>::make({5, 4}, {0.5, 0.25});
    DenseField<double, 2> phi(geom);
    phi.fill_from_position(
        [](const std::array<double, 2>& x) { return 3.0 * x[0] + 4.0 * x[1]; });
    phi.for_each_index([&](const NodeIndex<2>& idx, std::int64_t) {
        for (int sign : {1, -1})
            EXPECT_NEAR(upwind_gradient_magnitude(phi, idx, sign), 5.0, 1e-12);
    });
}

TEST(UpwindGradient, KinkRarefactionAndShock) {
    // phi = |i - 2| along axis 0, constant along axis 1, unit spacing.
    auto geom = GridGeometry<2>::make({5, 3}, {1.0, 1.0});
    DenseField<double, 2> vee(geom);
    vee.fill_from_position(
        [](const std::array<double, 2>& x) { return std::abs(x[0] - 2.0); });
    // At the V-bottom the one-sided slopes are -1 and +1. With positive sign
    // neither is upwind (rarefaction): contribution 0. With negative sign
    // both are upwind (shock): contribution 1.
    EXPECT_EQ(upwind_gradient_magnitude(vee, {2, 1}, +1), 0.0);
    EXPECT_EQ(upwind_gradient_magnitude(vee, {2, 1}, -1), 1.0);
    // On the flank both one-sided slopes agree; sign does not matter.
    EXPECT_NEAR(upwind_gradient_magnitude(vee, {1, 1}, +1), 1.0, 1e-15);
    EXPECT_NEAR(upwind_gradient_magnitude(vee, {1, 1}, -1), 1.0, 1e-15);

    DenseField<double, 2> hat(geom);
    hat.fill_from_position(
        [](const std::array<double, 2>& x) { return -std::abs(x[0] - 2.0); });
    EXPECT_EQ(upwind_gradient_magnitude(hat, {2, 1}, +1), 1.0);
    EXPECT_EQ(upwind_gradient_magnitude(hat, {2, 1}, -1), 0.0);
}

TEST(UpwindGradient, OutsideGridThrows) {
    auto geom = GridGeometry<2>::make({5, 4}, {1.0, 1.0});
    DenseField<double, 2> phi(geom);
    EXPECT_THROW(upwind_gradient_magnitude(phi, {5, 0}, 1), bounds_error);
    EXPECT_THROW(upwind_gradient_magnitude(phi, {0, -1}, 1), bounds_error);
}

TEST(BandErrorNorms, ExactFieldAndConstantOffset) {
    auto geom = GridGeometry<3>::cell_centered_box(20, -1.28, 1.28);
    const double h = geom.min_spacing();
    auto phi = synthetic::field_from<double, 3>(geom, unit_ball);
    auto zero = band_error_norms(phi, unit_ball, 4.0);
    EXPECT_EQ(zero.l2, 0.0);
    EXPECT_EQ(zero.linf, 0.0);
    EXPECT_GT(zero.count, 0);

    for (std::int64_t f = 0; f < phi.node_count(); ++f) phi[f] += 0.5 * h;
    auto off = band_error_norms(phi, unit_ball, 4.0);
    EXPECT_NEAR(off.linf, 0.5 * h, 1e-14);
    EXPECT_NEAR(off.l2, 0.5 * h, 1e-14);
    EXPECT_EQ(off.count, zero.count);
}

TEST(BandErrorNorms, EmptyBandThrows) {
    auto geom = GridGeometry<2>::make({8, 8}, {0.1, 0.1});
    DenseField<double, 2> phi(geom);
    auto far = [](const std::array<double, 2>&) { return 10.0; };
    EXPECT_THROW(band_error_norms(phi, far, 4.0), input_error);
}

TEST(BandErrorNorms, MaxDominatesRms) {
    auto geom = GridGeometry<3>::cell_centered_box(24, -1.28, 1.28);
    auto phi = synthetic::indicator_from<double, 3>(geom, unit_ball);
    sussman_redistance(phi);
    auto norms = band_error_norms(phi, unit_ball, 4.0);
    EXPECT_GT(norms.l2, 0.0);
    EXPECT_GE(norms.linf, norms.l2);
}

TEST(Redistance, RejectsBadInputsAndOptions) {
    auto geom = GridGeometry<2>::make({8, 8}, {0.1, 0.1});
    DenseField<double, 2> positive(geom, 1.0);
    EXPECT_THROW(sussman_redistance(positive), input_error);

    DenseField<double, 2> withnan(geom, 1.0);
    withnan[3] = std::nan("");
    EXPECT_THROW(sussman_redistance(withnan), input_error);

    auto ball_geom = GridGeometry<2>::cell_centered_box(16, -1.28, 1.28);
    auto disk = [](const std::array<double, 2>& x) {
        return synthetic::ball_sdf<2>(x, {0, 0}, 1.0);
    };
    auto phi = synthetic::indicator_from<double, 2>(ball_geom, disk);
    LevelSetOptions bad;
    bad.max_iterations = 0;
    EXPECT_THROW(sussman_redistance(phi, bad), input_error);
    bad = {};
    bad.tolerance = 0.0;
    EXPECT_THROW(sussman_redistance(phi, bad), input_error);
    bad = {};
    bad.pseudo_time_step = 1.5;
    EXPECT_THROW(sussman_redistance(phi, bad), input_error);
}

TEST(Redistance, PreservesSignsAndStaysBounded) {
    auto geom = GridGeometry<3>::cell_centered_box(32, -1.28, 1.28);
    auto indicator = synthetic::indicator_from<double, 3>(geom, unit_ball);
    auto phi = indicator;
    auto diag = sussman_redistance(phi);
    EXPECT_TRUE(diag.converged);
    const double diameter = 2.56 * std::sqrt(3.0);
    for (std::int64_t f = 0; f < phi.node_count(); ++f) {
        EXPECT_EQ(indicator[f] < 0, phi[f] < 0) << "interface crossed a node";
        EXPECT_LE(std::abs(phi[f]), diameter);
    }
}

// Frozen converged norms for the unit ball in [-1.28, 1.28]^3, default
// options (measured: n=16 Linf 9.41e-2 L2 5.78e-2 in 161 sweeps;
// n=32 Linf 3.88e-2 L2 2.43e-2 in 140 sweeps).
TEST(Redistance, BallErrorRegression) {
    struct Row {
        std::int64_t n;
        double linf, l2;
    };
    for (const Row& row : {Row{16, 9.412872e-02, 5.782716e-02},
                           Row{32, 3.884271e-02, 2.432154e-02}}) {
        auto geom = GridGeometry<3>::cell_centered_box(row.n, -1.28, 1.28);
        auto phi = synthetic::indicator_from<double, 3>(geom, unit_ball);
        auto diag = sussman_redistance(phi);
        EXPECT_TRUE(diag.converged);
        EXPECT_GE(diag.iterations, 100);
        EXPECT_LE(diag.iterations, 280);
        auto norms = band_error_norms(phi, unit_ball, 4.0);
        EXPECT_NEAR(norms.linf, row.linf, 0.15 * row.linf) << "n=" << row.n;
        EXPECT_NEAR(norms.l2, row.l2, 0.15 * row.l2) << "n=" << row.n;
    }
}

TEST(Redistance, OneDimensionalStepProfile) {
    // Strip with a sign change between columns 15 and 16: the distance to the
    // implied mid-plane is |i - 15.5| in units of the (unit) spacing.
    auto geom = GridGeometry<2>::make({32, 8}, {1.0, 1.0});
    DenseField<double, 2> phi(geom);
    phi.for_each_index([&](const NodeIndex<2>& idx, std::int64_t f) {
        phi[f] = idx[0] < 16 ? -1.0 : 1.0;
    });
    LevelSetOptions opts;
    opts.residual_band_width = 1e9; // monitor every node: far field must settle
    opts.max_iterations = 2000;
    auto diag = sussman_redistance(phi, opts);
    EXPECT_TRUE(diag.converged);
    double worst = 0.0;
    phi.for_each_index([&](const NodeIndex<2>& idx, std::int64_t f) {
        worst = std::max(worst, std::abs(phi[f] - (static_cast<double>(idx[0]) - 15.5)));
    });
    EXPECT_LE(worst, 1.0);  // within one spacing of the analytic distance
    EXPECT_LE(worst, 2e-3); // measured 4.4e-4: the 1-D fixed point is exact
}

// The analytic SDF sampled on the grid is NOT the discrete fixed point: the
// upwind differences of |x| equal 1 only along lattice-aligned rays, so the
// iteration genuinely moves the input toward its own (superconvergent) fixed
// point. Measured band movement 0.35h-0.48h at these resolutions.
TEST(Redistance, AnalyticInputMovesByTruncationGap) {
    auto geom = GridGeometry<3>::cell_centered_box(32, -1.28, 1.28);
    const double h = geom.min_spacing();
    auto phi = synthetic::field_from<double, 3>(geom, unit_ball);
    auto input = phi;
    LevelSetOptions opts;
    opts.rescale_initial = false;
    auto diag = sussman_redistance(phi, opts);
    EXPECT_TRUE(diag.converged);
    double band_move = 0.0;
    phi.for_each_index([&](const NodeIndex<3>& idx, std::int64_t f) {
        if (std::abs(unit_ball(geom.position(idx))) <= 4.0 * h)
            band_move = std::max(band_move, std::abs(phi[f] - input[f]));
    });
    EXPECT_GT(band_move, 10.0 * opts.tolerance * h); // far above the stopping scale
    EXPECT_LT(band_move, 0.6 * h);                   // but bounded by the truncation gap
}

TEST(Redistance, OwnOutputIsAFixedPoint) {
    auto geom = GridGeometry<3>::cell_centered_box(32, -1.28, 1.28);
    const double h = geom.min_spacing();
    auto phi = synthetic::indicator_from<double, 3>(geom, unit_ball);
    sussman_redistance(phi);
    auto before = phi;
    LevelSetOptions opts;
    opts.rescale_initial = false;
    auto diag = sussman_redistance(phi, opts);
    EXPECT_TRUE(diag.converged);
    EXPECT_LE(diag.iterations, 3);
    double move = 0.0;
    for (std::int64_t f = 0; f < phi.node_count(); ++f)
        move = std::max(move, std::abs(phi[f] - before[f]));
    EXPECT_LE(move, 3.0 * opts.tolerance * h);
}

// At the exact discrete fixed point the Godunov gradient is exactly 1
// wherever the sign term is nonzero, so the converged eikonal residual is
// set by the stopping tolerance, not by h. One constant covers every
// resolution: q90(||grad phi| - 1|) <= 0.15 h (measured 0.02h-0.11h).
TEST(Redistance, EikonalResidualQuantileInBand) {
    for (std::int64_t n : {16, 32, 64}) {
        auto geom = GridGeometry<3>::cell_centered_box(n, -1.28, 1.28);
        const double h = geom.min_spacing();
        auto phi = synthetic::indicator_from<double, 3>(geom, unit_ball);
        sussman_redistance(phi);
        std::vector<double> res;
        phi.for_each_index([&](const NodeIndex<3>& idx, std::int64_t f) {
            if (std::abs(unit_ball(geom.position(idx))) <= 4.0 * h) {
                const int sign = phi[f] > 0 ? 1 : -1;
                res.push_back(std::abs(upwind_gradient_magnitude(phi, idx, sign) - 1.0));
            }
        });
        ASSERT_FALSE(res.empty());
        std::sort(res.begin(), res.end());
        const double q90 = res[static_cast<std::size_t>(0.9 * double(res.size() - 1))];
        EXPECT_LE(q90, 0.15 * h) << "n=" << n;
    }
}

TEST(Redistance, IterationCapReportsNotConverged) {
    auto geom = GridGeometry<2>::cell_centered_box(24, -1.28, 1.28);
    auto disk = [](const std::array<double, 2>& x) {
        return synthetic::ball_sdf<2>(x, {0, 0}, 1.0);
    };
    auto phi = synthetic::indicator_from<double, 2>(geom, disk);
    LevelSetOptions opts;
    opts.max_iterations = 3;
    auto diag = sussman_redistance(phi, opts);
    EXPECT_EQ(diag.iterations, 3);
    EXPECT_FALSE(diag.converged);
}

TEST(Redistance, InitialMagnitudeIsIrrelevantWhenRescaling) {
    auto geom = GridGeometry<2>::cell_centered_box(24, -1.28, 1.28);
    auto disk = [](const std::array<double, 2>& x) {
        return synthetic::ball_sdf<2>(x, {0, 0}, 1.0);
    };
    auto a = synthetic::indicator_from<double, 2>(geom, disk);
    auto b = a;
    for (std::int64_t f = 0; f < b.node_count(); ++f) b[f] *= 7.0;
    sussman_redistance(a);
    sussman_redistance(b);
    for (std::int64_t f = 0; f < a.node_count(); ++f) ASSERT_EQ(a[f], b[f]);
}

TEST(Redistance, TwoDimensionalDiskConverges) {
    auto geom = GridGeometry<2>::cell_centered_box(48, -1.28, 1.28);
    auto disk = [](const std::array<double, 2>& x) {
        return synthetic::ball_sdf<2>(x, {0, 0}, 1.0);
    };
    auto phi = synthetic::indicator_from<double, 2>(geom, disk);
    auto diag = sussman_redistance(phi);
    EXPECT_TRUE(diag.converged);
    auto norms = band_error_norms(phi, disk, 4.0);
    EXPECT_LT(norms.linf, 0.8 * geom.min_spacing());
}

} // namespace
