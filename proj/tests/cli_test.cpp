// End-to-end tests of the command-line executable: every subcommand runs as a
// child process against small fixtures, and the tests assert exit codes,
// messages, and the numeric content of the files it writes.

#include <gtest/gtest.h>

#include <sys/wait.h>

#include <cmath>
#include <cstdint>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <string>
#include <vector>

#include <json.hpp>

#include "porediff/config.hpp"
#include "porediff/dense_field.hpp"
#include "porediff/geometry.hpp"
#include "porediff/grid_geometry.hpp"
#include "porediff/mask_io.hpp"
#include "porediff/snapshot.hpp"
#include "porediff/solver.hpp"
#include "porediff/sparse_block_grid.hpp"
#include "porediff/synthetic.hpp"
#include "porediff/vtk.hpp"

namespace pd = porediff;
namespace fs = std::filesystem;
using nlohmann::json;

namespace {

struct RunResult {
    int exit_code = -1;
    std::string out;
    std::string err;
};

std::string slurp(const fs::path& path) {
    std::ifstream in(path, std::ios::binary);
    std::ostringstream ss;
    ss << in.rdbuf();
    return ss.str();
}

fs::path work_dir() {
    static const fs::path dir = [] {
        auto d = fs::temp_directory_path() / "pd_cli_test";
        fs::remove_all(d);
        fs::create_directories(d);
        return d;
    }();
    return dir;
}

/// Runs a full shell command (so env-var prefixes work) and captures exit
/// code, stdout, and stderr.
RunResult run_shell(const std::string& command) {
    static int counter = 0;
    const fs::path so = work_dir() / ("out_" + std::to_string(counter) + ".txt");
    const fs::path se = work_dir() / ("err_" + std::to_string(counter) + ".txt");
    ++counter;
    const std::string full = command + " > " + so.string() + " 2> " + se.string();
    const int status = std::system(full.c_str());
    RunResult r;
    r.exit_code = WIFEXITED(status) ? WEXITSTATUS(status) : -1;
    r.out = slurp(so);
    r.err = slurp(se);
    return r;
}

/// Runs the toolkit executable with the given argument string.
RunResult run_cli(const std::string& args) {
    return run_shell(std::string(PD_CLI_PATH) + " " + args);
}

// -- fixtures ---------------------------------------------------------------

constexpr int kN = 16;
constexpr double kH = 1.0 / kN;
constexpr double kBallRadius = 0.35;

/// 16^3 voxel mask of a centered ball (the transport phase).
fs::path ball_mask_path() {
    static const fs::path raw = [] {
        const fs::path p = work_dir() / "ball16.raw";
        std::vector<std::uint8_t> bits;
        bits.reserve(kN * kN * kN);
        for (int k = 0; k < kN; ++k)
            for (int j = 0; j < kN; ++j)
                for (int i = 0; i < kN; ++i) {
                    const std::array<double, 3> x{(i + 0.5) * kH, (j + 0.5) * kH,
                                                  (k + 0.5) * kH};
                    bits.push_back(pd::synthetic::ball_sdf<3>(x, {0.5, 0.5, 0.5},
                                                              kBallRadius) > 0.0
                                       ? 1
                                       : 0);
                }
        const auto mask = pd::VoxelMask<3>::make({kN, kN, kN}, {kH, kH, kH}, bits);
        pd::write_mask(mask, p, p.string() + ".json");
        return p;
    }();
    return raw;
}

/// Dense snapshot of the exact ball signed distance on the same lattice.
fs::path ball_sdf_path() {
    static const fs::path p = [] {
        const fs::path path = work_dir() / "ball16_sdf.bin";
        const auto geom = pd::GridGeometry<3>::cell_centered_box(kN, 0.0, 1.0);
        const auto sdf = pd::synthetic::field_from<double, 3>(
            geom, [](const std::array<double, 3>& x) {
                return pd::synthetic::ball_sdf<3>(x, {0.5, 0.5, 0.5}, kBallRadius);
            });
        pd::write_dense_snapshot(sdf, path);
        return path;
    }();
    return p;
}

/// Dense snapshot whose level function is positive everywhere: the sparse
/// grid built from it is the fully open box.
fs::path open_box_sdf_path() {
    static const fs::path p = [] {
        const fs::path path = work_dir() / "box16_sdf.bin";
        const auto geom = pd::GridGeometry<3>::cell_centered_box(kN, 0.0, 1.0);
        const auto sdf = pd::synthetic::field_from<double, 3>(
            geom, [](const std::array<double, 3>&) { return 1.0; });
        pd::write_dense_snapshot(sdf, path);
        return path;
    }();
    return p;
}

fs::path write_config(const std::string& name, const json& j) {
    const fs::path p = work_dir() / name;
    std::ofstream out(p, std::ios::trunc);
    out << j.dump(2);
    return p;
}

json ball_sim_config(const std::string& tag) {
    const std::string base = (work_dir() / tag).string();
    return json{
        {"input", {{"path", ball_sdf_path().string()}, {"format", "sdf"}}},
        {"diffusion", {{"mode", "uniform"}, {"value", 1.0}}},
        {"initial", {{"kind", "hash"}, {"seed", 1}}},
        {"simulation", {{"dt", 5e-4}, {"steps", 200}, {"record_every", 50}}},
        {"outputs", {{"mass_csv", base + "_mass.csv"},
                     {"vtk_basename", base},
                     {"vtk_every", 100},
                     {"snapshot", base + "_final.bin"}}}};
}

std::vector<std::string> csv_lines(const fs::path& p) {
    std::vector<std::string> lines;
    std::ifstream in(p);
    std::string line;
    while (std::getline(in, line)) lines.push_back(line);
    return lines;
}

} // namespace

// ---------------------------------------------------------------------------
// redistance
// ---------------------------------------------------------------------------

TEST(CliRedistance, BallMaskYieldsCenteredSignedDistance) {
    const fs::path out = work_dir() / "red_ball.bin";
    const fs::path diag = work_dir() / "red_ball.json";
    const auto r = run_cli("redistance --mask " + ball_mask_path().string() +
                           " --format raw --dims 3 --out " + out.string() +
                           " --diagnostics " + diag.string());
    ASSERT_EQ(r.exit_code, 0) << r.err;

    const auto sdf = pd::read_dense_snapshot<double, 3>(out);
    const auto& geom = sdf.geometry();
    // Center voxel: distance to the ball surface = radius, up to O(h) mask
    // quantization plus redistancing error.
    const double center = sdf.at({kN / 2, kN / 2, kN / 2});
    EXPECT_NEAR(center, kBallRadius, 2.0 * kH);
    // A corner voxel is deep in the solid: negative, roughly half the
    // diagonal minus the radius away from the surface.
    const double corner = sdf.at({0, 0, 0});
    EXPECT_LT(corner, 0.0);
    EXPECT_NEAR(corner, -(std::sqrt(3.0) * 0.5 - kBallRadius), 4.0 * kH);
    EXPECT_EQ(geom.size[0], kN);

    const json d = json::parse(slurp(diag));
    EXPECT_TRUE(d.at("converged").get<bool>());
    EXPECT_GE(d.at("iterations").get<int>(), 1);
    EXPECT_LT(d.at("final_residual").get<double>(), 1e-3);
}

TEST(CliRedistance, AllOnePhaseMaskIsRejected) {
    const fs::path raw = work_dir() / "full16.raw";
    const auto mask = pd::VoxelMask<3>::make(
        {8, 8, 8}, {kH, kH, kH}, std::vector<std::uint8_t>(512, 1));
    pd::write_mask(mask, raw, raw.string() + ".json");
    const auto r = run_cli("redistance --mask " + raw.string() +
                           " --format raw --dims 3 --out " +
                           (work_dir() / "full_sdf.bin").string());
    EXPECT_EQ(r.exit_code, 2);
    EXPECT_NE(r.err.find("no interface"), std::string::npos) << r.err;
}

TEST(CliRedistance, MalformedSidecarNamesTheField) {
    const fs::path raw = work_dir() / "bad_sidecar.raw";
    {
        std::ofstream(raw, std::ios::binary) << std::string(8, '\1');
        std::ofstream(raw.string() + ".json")
            << R"({"voxel_size": 0.5, "axis_order": "zyx"})"; // size missing
    }
    const auto r = run_cli("redistance --mask " + raw.string() +
                           " --format raw --dims 3 --out " +
                           (work_dir() / "unused.bin").string());
    EXPECT_EQ(r.exit_code, 2);
    EXPECT_NE(r.err.find("size"), std::string::npos) << r.err;
}

TEST(CliRedistance, AssumeSdfPolishesInAtMostTwoSweeps) {
    const fs::path first = work_dir() / "polish_in.bin";
    const fs::path diag1 = work_dir() / "polish1.json";
    auto r = run_cli("redistance --mask " + ball_mask_path().string() +
                     " --format raw --dims 3 --out " + first.string());
    ASSERT_EQ(r.exit_code, 0) << r.err;

    const fs::path second = work_dir() / "polish_out.bin";
    r = run_cli("redistance --mask " + first.string() +
                " --format sdf --assume-sdf --out " + second.string() +
                " --diagnostics " + diag1.string());
    ASSERT_EQ(r.exit_code, 0) << r.err;
    const json d = json::parse(slurp(diag1));
    EXPECT_LE(d.at("iterations").get<int>(), 2);

    // The polish must not move a converged field by more than a whisker.
    const auto a = pd::read_dense_snapshot<double, 3>(first);
    const auto b = pd::read_dense_snapshot<double, 3>(second);
    double max_delta = 0.0;
    for (std::int64_t i = 0; i < a.geometry().node_count(); ++i)
        max_delta = std::max(max_delta, std::abs(a.data()[static_cast<std::size_t>(i)] -
                                                 b.data()[static_cast<std::size_t>(i)]));
    EXPECT_LT(max_delta, 0.5 * kH);
}

// ---------------------------------------------------------------------------
// simulate
// ---------------------------------------------------------------------------

TEST(CliSimulate, SealedRunConservesMassInTheCsv) {
    const auto cfg = write_config("sim_cons.json", ball_sim_config("cons"));
    const auto r = run_cli("simulate --config " + cfg.string());
    ASSERT_EQ(r.exit_code, 0) << r.err;

    const auto lines = csv_lines(work_dir() / "cons_mass.csv");
    ASSERT_EQ(lines.size(), 6u); // header + steps {0,50,100,150,200}
    EXPECT_EQ(lines[0], "step,time,total_mass,min_u,max_u");
    double m0 = 0.0;
    for (std::size_t i = 1; i < lines.size(); ++i) {
        std::istringstream ss(lines[i]);
        std::string step, time, mass, mn, mx;
        std::getline(ss, step, ',');
        std::getline(ss, time, ',');
        std::getline(ss, mass, ',');
        std::getline(ss, mn, ',');
        std::getline(ss, mx, ',');
        const double m = pd::parse_scalar<double>(mass);
        if (i == 1) {
            EXPECT_EQ(step, "0");
            m0 = m;
        }
        EXPECT_LE(std::abs(m - m0), 1e-12 * std::abs(m0)) << lines[i];
        // Max principle: hash initial data lies in [0,1).
        EXPECT_GE(pd::parse_scalar<double>(mn), 0.0);
        EXPECT_LE(pd::parse_scalar<double>(mx), 1.0);
    }
}

TEST(CliSimulate, StabilityViolationCitesTheBoundAndExitsThree) {
    json j = ball_sim_config("viol");
    j["simulation"]["dt"] = 0.01; // an order of magnitude over the bound
    const auto cfg = write_config("sim_viol.json", j);
    const auto r = run_cli("simulate --config " + cfg.string());
    EXPECT_EQ(r.exit_code, 3);

    const auto geom = pd::GridGeometry<3>::cell_centered_box(kN, 0.0, 1.0);
    const double bound = pd::stability_dt(geom, 1.0);
    EXPECT_NE(r.err.find(pd::format_scalar(bound)), std::string::npos) << r.err;

    // --force-dt runs anyway (2 steps so the blow-up cannot overflow).
    j["simulation"]["steps"] = 2;
    j["simulation"]["record_every"] = 1;
    const auto cfg2 = write_config("sim_viol2.json", j);
    const auto r2 = run_cli("simulate --config " + cfg2.string() + " --force-dt");
    EXPECT_EQ(r2.exit_code, 0) << r2.err;
}

TEST(CliSimulate, StepsZeroWritesTheInitialStateOnly) {
    const auto cfg = write_config("sim_zero.json", ball_sim_config("zero"));
    const auto r = run_cli("simulate --config " + cfg.string() + " --steps 0");
    ASSERT_EQ(r.exit_code, 0) << r.err;
    const auto lines = csv_lines(work_dir() / "zero_mass.csv");
    ASSERT_EQ(lines.size(), 2u); // header + step 0
    EXPECT_EQ(lines[1].substr(0, 2), "0,");
    EXPECT_TRUE(fs::exists(work_dir() / "zero_000000.vtk"));
    EXPECT_FALSE(fs::exists(work_dir() / "zero_000001.vtk"));
    EXPECT_TRUE(fs::exists(work_dir() / "zero_final.bin"));
}

TEST(CliSimulate, IdenticalRunsProduceByteIdenticalArtifacts) {
    const auto cfg_a = write_config("sim_det_a.json", ball_sim_config("det_a"));
    const auto cfg_b = write_config("sim_det_b.json", ball_sim_config("det_b"));
    ASSERT_EQ(run_cli("simulate --config " + cfg_a.string()).exit_code, 0);
    ASSERT_EQ(run_cli("simulate --config " + cfg_b.string()).exit_code, 0);
    EXPECT_EQ(slurp(work_dir() / "det_a_mass.csv"), slurp(work_dir() / "det_b_mass.csv"));
    EXPECT_EQ(slurp(work_dir() / "det_a_000200.vtk"),
              slurp(work_dir() / "det_b_000200.vtk"));
    EXPECT_FALSE(slurp(work_dir() / "det_a_mass.csv").empty());
}

TEST(CliSimulate, VtkValuesRoundTripTheSnapshotExactly) {
    const auto cfg = write_config("sim_vtk.json", ball_sim_config("vtk"));
    ASSERT_EQ(run_cli("simulate --config " + cfg.string()).exit_code, 0);

    const auto grid =
        pd::read_sparse_snapshot<double, 3>(work_dir() / "vtk_final.bin");
    const auto file = pd::read_vtk(work_dir() / "vtk_000200.vtk");
    ASSERT_EQ(file.dimensions[0], kN);
    ASSERT_EQ(file.point_count, kN * kN * kN);
    const auto u = file.array("u").as<double>();
    const auto mask = file.array("mask").as<int>();
    const auto& geom = grid.geometry();

    std::int64_t active = 0;
    grid.for_each_active([&](const pd::NodeIndex<3>& idx, const auto&, int) {
        const auto flat = static_cast<std::size_t>(geom.flat_index(idx));
        ASSERT_EQ(mask[flat], 1);
        // format_scalar emits 17 significant digits, so the parsed value is
        // the stored double, bit for bit.
        EXPECT_EQ(u[flat], *grid.get(idx, "u"));
        ++active;
    });
    EXPECT_GT(active, 0);
    // Inactive nodes carry the NaN blank and a zero mask entry.
    for (std::size_t i = 0; i < u.size(); ++i) {
        if (mask[i] == 0) {
            EXPECT_TRUE(std::isnan(u[i]));
        }
    }
}

TEST(CliSimulate, ConfigProblemsExitTwoWithNamedKeys) {
    json j = ball_sim_config("badkey");
    j["simulation"]["stepss"] = 3;
    const auto cfg = write_config("sim_badkey.json", j);
    const auto r = run_cli("simulate --config " + cfg.string());
    EXPECT_EQ(r.exit_code, 2);
    EXPECT_NE(r.err.find("stepss"), std::string::npos) << r.err;

    const auto r2 = run_cli("simulate --config " +
                            (work_dir() / "absent_config.json").string());
    EXPECT_EQ(r2.exit_code, 2);

    const auto r3 = run_cli("simulate"); // missing required --config
    EXPECT_EQ(r3.exit_code, 2);

    const auto r4 = run_cli("no-such-subcommand");
    EXPECT_EQ(r4.exit_code, 2);
}

// ---------------------------------------------------------------------------
// frap
// ---------------------------------------------------------------------------

TEST(CliFrap, OpenBoxSelfFitRecoversUnitTortuosity) {
    const std::string rec = (work_dir() / "frap_rec.csv").string();
    const std::string tor = (work_dir() / "frap_tort.json").string();
    const json j{
        {"input", {{"path", open_box_sdf_path().string()}, {"format", "sdf"}}},
        {"diffusion", {{"mode", "uniform"}, {"value", 1.0}}},
        {"frap", {{"d_molecular", 1.0}, {"bleach_fraction", 0.25}, {"t_final", 0.05},
                  {"n_samples", 60}, {"fit_lo", 0.3}, {"fit_hi", 3.0}}},
        {"outputs", {{"recovery_csv", rec}, {"tortuosity_json", tor}}}};
    const auto cfg = write_config("frap_self.json", j);
    const auto r = run_cli("frap --config " + cfg.string());
    ASSERT_EQ(r.exit_code, 0) << r.err;

    // The geometry IS the open box the fit compares against, so the fitted
    // effective diffusivity must come back as the molecular one.
    const json t = json::parse(slurp(tor));
    EXPECT_NEAR(t.at("tau_d").get<double>(), 1.0, 0.01);
    EXPECT_NEAR(t.at("d_eff").get<double>(), 1.0, 0.01);
    EXPECT_FALSE(t.at("edge_warning").get<bool>());

    const auto lines = csv_lines(rec);
    ASSERT_GE(lines.size(), 3u);
    EXPECT_EQ(lines[0], "time,recovery_fraction");
    // Recovery climbs toward 1.
    const auto last = lines.back();
    const double final_rec =
        pd::parse_scalar<double>(last.substr(last.find(',') + 1));
    EXPECT_GT(final_rec, 0.5);
}

TEST(CliFrap, BleachBoxOutsideThePhaseExitsTwo) {
    const json j{
        {"input", {{"path", ball_sdf_path().string()}, {"format", "sdf"}}},
        {"diffusion", {{"mode", "uniform"}, {"value", 1.0}}},
        {"frap", {{"d_molecular", 1.0}, {"bleach_lo", {0, 0, 0}},
                  {"bleach_hi", {2, 2, 2}}, {"t_final", 0.01}}},
        {"outputs", {{"recovery_csv", (work_dir() / "unused_rec.csv").string()}}}};
    const auto cfg = write_config("frap_out.json", j);
    const auto r = run_cli("frap --config " + cfg.string());
    EXPECT_EQ(r.exit_code, 2);

    // And a config without the frap section at all is an input error too.
    const json j2{{"input", {{"path", ball_sdf_path().string()}, {"format", "sdf"}}},
                  {"diffusion", {{"mode", "uniform"}, {"value", 1.0}}}};
    const auto cfg2 = write_config("frap_missing.json", j2);
    EXPECT_EQ(run_cli("frap --config " + cfg2.string()).exit_code, 2);
}

// ---------------------------------------------------------------------------
// build-grid + grid input
// ---------------------------------------------------------------------------

TEST(CliBuildGrid, BakedChannelsSurviveIntoSimulation) {
    const fs::path grid_path = work_dir() / "baked.bin";
    const auto r = run_cli("build-grid --sdf " + ball_sdf_path().string() +
                           " --uniform-d 2 --initial-hash 7 --out " + grid_path.string() +
                           " --stats-json " + (work_dir() / "baked_stats.json").string());
    ASSERT_EQ(r.exit_code, 0) << r.err;

    const auto grid = pd::read_sparse_snapshot<double, 3>(grid_path);
    const auto& geom = grid.geometry();
    grid.for_each_active([&](const pd::NodeIndex<3>& idx, const auto&, int) {
        EXPECT_EQ(*grid.get(idx, "D"), 2.0);
        EXPECT_EQ(*grid.get(idx, "u"),
                  pd::hash_unit_value(7, static_cast<std::uint64_t>(geom.flat_index(idx))));
    });

    const json stats = json::parse(slurp(work_dir() / "baked_stats.json"));
    EXPECT_EQ(stats.at("active_nodes").get<std::int64_t>(),
              static_cast<std::int64_t>(pd::porosity(grid) * 4096 + 0.5));

    // Simulating from the grid uses the baked channels; a diffusion section
    // would fight the baked D and is rejected.
    const std::string base = (work_dir() / "baked_run").string();
    const json ok{{"input", {{"path", grid_path.string()}, {"format", "grid"}}},
                  {"simulation", {{"dt", 1e-4}, {"steps", 5}}},
                  {"outputs", {{"mass_csv", base + "_mass.csv"}}}};
    EXPECT_EQ(run_cli("simulate --config " + write_config("grid_ok.json", ok).string())
                  .exit_code,
              0);

    json bad = ok;
    bad["diffusion"] = {{"mode", "uniform"}, {"value", 1.0}};
    const auto rb = run_cli("simulate --config " +
                            write_config("grid_bad.json", bad).string());
    EXPECT_EQ(rb.exit_code, 2);
    EXPECT_NE(rb.err.find("carries its own D"), std::string::npos) << rb.err;
}

// ---------------------------------------------------------------------------
// verify
// ---------------------------------------------------------------------------

TEST(CliVerify, SlopeWindowDecidesThePassFailLine) {
    // The band-restricted redistancing error on these lattices shrinks close
    // to second order, so the default first-order window fails honestly...
    const auto fail = run_cli("verify --study redistance-disk --resolutions 16,32");
    EXPECT_EQ(fail.exit_code, 1);
    EXPECT_NE(fail.out.find("RESULT: FAIL"), std::string::npos) << fail.out;

    // ...and a window that brackets the measured behavior passes.
    const std::string jsonp = (work_dir() / "ver.json").string();
    const std::string csvb = (work_dir() / "ver").string();
    const auto pass = run_cli(
        "verify --study redistance-disk --resolutions 16,32 --slope-min 0.9 "
        "--slope-max 2.5 --json " + jsonp + " --csv-basename " + csvb);
    EXPECT_EQ(pass.exit_code, 0) << pass.out;
    EXPECT_NE(pass.out.find("RESULT: PASS"), std::string::npos) << pass.out;
    EXPECT_NE(pass.out.find("L2 slope"), std::string::npos);

    const json report = json::parse(slurp(jsonp));
    ASSERT_EQ(report.at("resolutions").size(), 2u);
    EXPECT_TRUE(report.at("l2_slope").is_number());
    const auto l2csv = csv_lines(csvb + "_l2.csv");
    ASSERT_EQ(l2csv.size(), 3u);
    EXPECT_EQ(l2csv[0], "h,error");

    // Degenerate windows are input errors.
    EXPECT_EQ(run_cli("verify --study redistance-disk --resolutions 16,32 "
                      "--slope-min 2 --slope-max 1")
                  .exit_code,
              2);
    EXPECT_EQ(run_cli("verify --study nope --resolutions 16,32").exit_code, 2);
}

// ---------------------------------------------------------------------------
// stats
// ---------------------------------------------------------------------------

TEST(CliStats, MaskAndGridReportsAgreeOnPorosity) {
    const auto rm = run_cli("stats --mask " + ball_mask_path().string() + " --dims 3");
    ASSERT_EQ(rm.exit_code, 0) << rm.err;
    const json m = json::parse(rm.out);
    EXPECT_EQ(m.at("kind"), "mask");
    EXPECT_EQ(m.at("voxel_count").get<std::int64_t>(), 4096);
    const double mask_porosity = m.at("porosity").get<double>();
    EXPECT_NEAR(mask_porosity,
                4.0 / 3.0 * 3.14159265358979 * std::pow(kBallRadius, 3), 0.05);

    const fs::path grid_path = work_dir() / "stats_grid.bin";
    ASSERT_EQ(run_cli("build-grid --sdf " + ball_sdf_path().string() + " --out " +
                      grid_path.string())
                  .exit_code,
              0);
    const fs::path out = work_dir() / "stats_grid.json";
    const auto rg =
        run_cli("stats --grid " + grid_path.string() + " --out " + out.string());
    ASSERT_EQ(rg.exit_code, 0) << rg.err;
    const json g = json::parse(slurp(out));
    EXPECT_EQ(g.at("kind"), "sparse_grid");
    EXPECT_EQ(g.at("dims").get<int>(), 3);
    EXPECT_EQ(g.at("scalar_bits").get<int>(), 64);
    EXPECT_NEAR(g.at("porosity").get<double>(), mask_porosity, 0.02);
    EXPECT_GE(g.at("chunk_fill_fraction").get<double>(),
              g.at("node_fill_fraction").get<double>());
    const auto props = g.at("properties").get<std::vector<std::string>>();
    EXPECT_NE(std::find(props.begin(), props.end(), "u"), props.end());

    EXPECT_EQ(run_cli("stats").exit_code, 2); // needs --grid or --mask
}

// ---------------------------------------------------------------------------
// environment
// ---------------------------------------------------------------------------

TEST(CliEnvironment, WorkerCapIsValidated) {
    const std::string stats_cmd =
        std::string(PD_CLI_PATH) + " stats --mask " + ball_mask_path().string() +
        " --dims 3";
    EXPECT_EQ(run_shell("RD_THREADS=abc " + stats_cmd).exit_code, 2);
    EXPECT_EQ(run_shell("RD_THREADS=0 " + stats_cmd).exit_code, 2);
    EXPECT_EQ(run_shell("RD_THREADS=-2 " + stats_cmd).exit_code, 2);
    EXPECT_EQ(run_shell("RD_THREADS=1 " + stats_cmd).exit_code, 0);
    EXPECT_EQ(run_shell("RD_THREADS=64 " + stats_cmd).exit_code, 0); // capped, not fatal
}
