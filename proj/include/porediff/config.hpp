#pragma once

#include <algorithm>
#include <cctype>
#include <cmath>
#include <cstdint>
#include <filesystem>
#include <fstream>
#include <limits>
#include <optional>
#include <string>
#include <vector>

#include <json.hpp>

#include "porediff/errors.hpp"
#include "porediff/geometry.hpp"
#include "porediff/levelset.hpp"
#include "porediff/solver.hpp"

/// Pipeline configuration: one JSON document that describes the whole
/// mask -> level set -> sparse grid -> simulation -> outputs chain. Parsing
/// is total: every malformed document is rejected with an input_error that
/// names the offending field, never a crash. Unknown keys are rejected so
/// typos cannot silently fall back to defaults.

namespace porediff {

/// Where the geometry comes from.
struct InputSpec {
    std::string path;    ///< raw volume, PGM image, dense SDF snapshot, or sparse grid snapshot
    std::string sidecar; ///< raw format only; empty -> path + ".json"
    std::string format = "raw"; ///< raw | pgm | sdf | grid
    int dims = 3;               ///< raw format only; pgm is 2-D, snapshots carry their own
    int filter_min_thickness = 0; ///< 0 = no thin-feature filtering (raw/pgm only)
};

/// Initial condition for the u channel. "uniform" fills a constant;
/// "hash" fills a seeded per-node value in [0,1) that is independent of
/// traversal order and worker count.
struct InitialCondition {
    std::string kind = "uniform"; ///< uniform | hash
    double value = 0.0;           ///< uniform only
    std::uint64_t seed = 1;       ///< hash only
};

/// How the diffusivity channel is populated.
struct DiffusionSpec {
    std::string mode = "sigmoid"; ///< sigmoid | uniform
    DiffusionProfile profile{};   ///< sigmoid mode
    std::optional<double> anchor; ///< sigmoid midpoint at phi = anchor (sets gamma1)
    double uniform_value = 1.0;   ///< uniform mode
};

/// FRAP protocol parameters (used by the frap subcommand).
struct FrapConfig {
    double d_molecular = 1.0;
    std::optional<double> bleach_fraction;        ///< central box, fraction per axis
    std::optional<std::vector<std::int64_t>> bleach_lo; ///< explicit box, inclusive
    std::optional<std::vector<std::int64_t>> bleach_hi; ///< explicit box, exclusive
    double t_final = 1.0;
    int n_samples = 200;
    double dt = 0.0;     ///< 0 = auto (0.4 x stability bound)
    double fit_lo = 0.0; ///< both fit bounds > 0 enable the effective-D fit
    double fit_hi = 0.0;
    double fit_rel_tol = 1e-3;
};

/// Output artifact paths; empty string = artifact not written.
struct OutputSpec {
    std::string vtk_basename;    ///< series files <basename>_<step>.vtk
    std::int64_t vtk_every = 0;  ///< 0 = write only the final state
    double vtk_blank = std::numeric_limits<double>::quiet_NaN(); ///< inactive-node value
    std::string mass_csv;        ///< "step,time,total_mass,min_u,max_u"
    std::string snapshot;        ///< final state (sparse grid snapshot)
    std::string recovery_csv;    ///< FRAP recovery curve
    std::string tortuosity_json; ///< FRAP fit result
    std::string report_json;     ///< diagnostics / convergence report
};

struct PipelineConfig {
    InputSpec input;
    LevelSetOptions levelset{};
    PhaseBand phase_band{};
    DiffusionSpec diffusion;
    InitialCondition initial;
    SimulationConfig simulation{};
    FrapConfig frap;
    OutputSpec outputs;
    bool has_diffusion_section = false; ///< section present in the document
    bool has_initial_section = false;
    bool has_frap_section = false;
};

namespace detail {

[[noreturn]] inline void config_fail(const std::string& where, const std::string& what) {
    throw input_error("config: " + where + ": " + what);
}

inline void require_object(const nlohmann::json& j, const std::string& where) {
    if (!j.is_object()) config_fail(where, "expected a JSON object");
}

inline void reject_unknown_keys(const nlohmann::json& j, const std::string& where,
                                std::initializer_list<const char*> known) {
    for (const auto& [key, value] : j.items()) {
        (void)value;
        bool ok = false;
        for (const char* k : known) ok = ok || key == k;
        if (!ok) config_fail(where, "unknown key '" + key + "'");
    }
}

inline double get_finite(const nlohmann::json& j, const std::string& where) {
    if (!j.is_number()) config_fail(where, "expected a number");
    const double v = j.get<double>();
    if (!std::isfinite(v)) config_fail(where, "value must be finite");
    return v;
}

inline double get_number(const nlohmann::json& j, const std::string& where) {
    if (!j.is_number()) config_fail(where, "expected a number");
    return j.get<double>();
}

inline std::int64_t get_integer(const nlohmann::json& j, const std::string& where) {
    if (!j.is_number_integer()) config_fail(where, "expected an integer");
    return j.get<std::int64_t>();
}

inline bool get_bool(const nlohmann::json& j, const std::string& where) {
    if (!j.is_boolean()) config_fail(where, "expected true or false");
    return j.get<bool>();
}

inline std::string get_string(const nlohmann::json& j, const std::string& where) {
    if (!j.is_string()) config_fail(where, "expected a string");
    return j.get<std::string>();
}

inline bool is_identifier(const std::string& s) {
    if (s.empty()) return false;
    if (!(std::isalpha(static_cast<unsigned char>(s[0])) || s[0] == '_')) return false;
    for (char c : s)
        if (!(std::isalnum(static_cast<unsigned char>(c)) || c == '_')) return false;
    return true;
}

inline void parse_input_section(const nlohmann::json& j, InputSpec& out) {
    require_object(j, "input");
    reject_unknown_keys(j, "input",
                        {"path", "sidecar", "format", "dims", "filter_min_thickness"});
    if (j.contains("path")) out.path = get_string(j.at("path"), "input.path");
    if (j.contains("sidecar")) out.sidecar = get_string(j.at("sidecar"), "input.sidecar");
    if (j.contains("format")) out.format = get_string(j.at("format"), "input.format");
    if (out.format != "raw" && out.format != "pgm" && out.format != "sdf" &&
        out.format != "grid")
        config_fail("input.format", "must be one of raw, pgm, sdf, grid");
    if (j.contains("dims")) {
        const auto d = get_integer(j.at("dims"), "input.dims");
        if (d != 2 && d != 3) config_fail("input.dims", "must be 2 or 3");
        if (out.format == "pgm" && d != 2)
            config_fail("input.dims", "PGM input is two-dimensional");
        out.dims = static_cast<int>(d);
    }
    if (out.format == "pgm") out.dims = 2;
    if (j.contains("filter_min_thickness")) {
        const auto t = get_integer(j.at("filter_min_thickness"),
                                   "input.filter_min_thickness");
        if (t < 0) config_fail("input.filter_min_thickness", "must be >= 0");
        if (t > 0 && out.format != "raw" && out.format != "pgm")
            config_fail("input.filter_min_thickness",
                        "filtering applies to binary masks only (raw or pgm input)");
        out.filter_min_thickness = static_cast<int>(t);
    }
}

inline void parse_levelset_section(const nlohmann::json& j, LevelSetOptions& out) {
    require_object(j, "levelset");
    reject_unknown_keys(j, "levelset",
                        {"max_iterations", "tolerance", "pseudo_time_step",
                         "band_width_for_error", "residual_band_width", "rescale_initial"});
    if (j.contains("max_iterations")) {
        const auto n = get_integer(j.at("max_iterations"), "levelset.max_iterations");
        if (n < 1) config_fail("levelset.max_iterations", "must be >= 1");
        out.max_iterations = static_cast<int>(n);
    }
    if (j.contains("tolerance")) {
        out.tolerance = get_finite(j.at("tolerance"), "levelset.tolerance");
        if (!(out.tolerance > 0.0)) config_fail("levelset.tolerance", "must be > 0");
    }
    if (j.contains("pseudo_time_step")) {
        out.pseudo_time_step =
            get_finite(j.at("pseudo_time_step"), "levelset.pseudo_time_step");
        if (!(out.pseudo_time_step > 0.0))
            config_fail("levelset.pseudo_time_step", "must be > 0");
    }
    if (j.contains("band_width_for_error")) {
        out.band_width_for_error =
            get_finite(j.at("band_width_for_error"), "levelset.band_width_for_error");
        if (!(out.band_width_for_error > 0.0))
            config_fail("levelset.band_width_for_error", "must be > 0");
    }
    if (j.contains("residual_band_width")) {
        out.residual_band_width =
            get_finite(j.at("residual_band_width"), "levelset.residual_band_width");
        if (!(out.residual_band_width > 0.0))
            config_fail("levelset.residual_band_width", "must be > 0");
    }
    if (j.contains("rescale_initial"))
        out.rescale_initial = get_bool(j.at("rescale_initial"), "levelset.rescale_initial");
}

inline void parse_phase_band_section(const nlohmann::json& j, PhaseBand& out) {
    require_object(j, "phase_band");
    reject_unknown_keys(j, "phase_band", {"low", "up"});
    if (j.contains("low")) out.b_low = get_finite(j.at("low"), "phase_band.low");
    if (j.contains("up")) {
        if (j.at("up").is_null())
            out.b_up = std::numeric_limits<double>::infinity();
        else
            out.b_up = get_finite(j.at("up"), "phase_band.up");
    }
    if (!(out.b_low < out.b_up)) config_fail("phase_band", "low must be < up");
}

inline void parse_diffusion_section(const nlohmann::json& j, DiffusionSpec& out) {
    require_object(j, "diffusion");
    reject_unknown_keys(j, "diffusion",
                        {"mode", "d_min", "d_max", "gamma1", "gamma2", "anchor", "value"});
    if (j.contains("mode")) out.mode = get_string(j.at("mode"), "diffusion.mode");
    if (out.mode != "sigmoid" && out.mode != "uniform")
        config_fail("diffusion.mode", "must be sigmoid or uniform");
    if (j.contains("d_min"))
        out.profile.d_min = get_finite(j.at("d_min"), "diffusion.d_min");
    if (j.contains("d_max"))
        out.profile.d_max = get_finite(j.at("d_max"), "diffusion.d_max");
    if (j.contains("gamma1"))
        out.profile.gamma1 = get_finite(j.at("gamma1"), "diffusion.gamma1");
    if (j.contains("gamma2"))
        out.profile.gamma2 = get_finite(j.at("gamma2"), "diffusion.gamma2");
    if (j.contains("anchor") && !j.at("anchor").is_null()) {
        if (j.contains("gamma1"))
            config_fail("diffusion", "give either gamma1 or anchor, not both");
        out.anchor = get_finite(j.at("anchor"), "diffusion.anchor");
        out.profile.gamma1 = -out.profile.gamma2 * *out.anchor;
    }
    if (j.contains("value"))
        out.uniform_value = get_finite(j.at("value"), "diffusion.value");
    if (out.mode == "sigmoid") {
        if (out.profile.d_min < 0.0) config_fail("diffusion.d_min", "must be >= 0");
        if (!(out.profile.d_max > 0.0)) config_fail("diffusion.d_max", "must be > 0");
    } else if (out.uniform_value < 0.0) {
        config_fail("diffusion.value", "must be >= 0");
    }
}

inline void parse_initial_section(const nlohmann::json& j, InitialCondition& out) {
    require_object(j, "initial");
    reject_unknown_keys(j, "initial", {"kind", "value", "seed"});
    if (j.contains("kind")) out.kind = get_string(j.at("kind"), "initial.kind");
    if (out.kind != "uniform" && out.kind != "hash")
        config_fail("initial.kind", "must be uniform or hash");
    if (j.contains("value")) out.value = get_finite(j.at("value"), "initial.value");
    if (j.contains("seed")) {
        const auto s = get_integer(j.at("seed"), "initial.seed");
        if (s < 0) config_fail("initial.seed", "must be >= 0");
        out.seed = static_cast<std::uint64_t>(s);
    }
}

inline void parse_reaction_section(const nlohmann::json& j, ReactionSpec& out) {
    require_object(j, "simulation.reaction");
    std::string kind = "none";
    if (j.contains("kind")) kind = get_string(j.at("kind"), "simulation.reaction.kind");
    // Keys that belong to a different kind are dead config; reject them so a
    // mistyped kind cannot silently disable its parameters.
    if (kind == "none") {
        reject_unknown_keys(j, "simulation.reaction", {"kind"});
        out = ReactionSpec::none();
        return;
    }
    if (kind == "surface_sink") {
        reject_unknown_keys(j, "simulation.reaction", {"kind", "rate", "band_half_width"});
        double rate = 0.0, width = 1.0;
        if (j.contains("rate"))
            rate = get_finite(j.at("rate"), "simulation.reaction.rate");
        if (rate < 0.0) config_fail("simulation.reaction.rate", "must be >= 0");
        if (j.contains("band_half_width"))
            width = get_finite(j.at("band_half_width"),
                               "simulation.reaction.band_half_width");
        if (!(width > 0.0))
            config_fail("simulation.reaction.band_half_width", "must be > 0");
        out = ReactionSpec::surface_sink(rate, width);
        return;
    }
    if (kind == "volumetric") {
        reject_unknown_keys(j, "simulation.reaction", {"kind", "source_channel"});
        if (!j.contains("source_channel"))
            config_fail("simulation.reaction", "volumetric reaction needs source_channel");
        const auto channel =
            get_string(j.at("source_channel"), "simulation.reaction.source_channel");
        if (!is_identifier(channel))
            config_fail("simulation.reaction.source_channel",
                        "must be a bare identifier (letters, digits, underscore)");
        out = ReactionSpec::volumetric(channel);
        return;
    }
    config_fail("simulation.reaction.kind", "must be none, surface_sink, or volumetric");
}

inline void parse_outer_bc_section(const nlohmann::json& j, int dims,
                                   std::array<FaceBc, 6>& out) {
    if (!j.is_array()) config_fail("simulation.outer_bc", "expected an array");
    std::array<bool, 6> seen{};
    for (std::size_t i = 0; i < j.size(); ++i) {
        const std::string where = "simulation.outer_bc[" + std::to_string(i) + "]";
        const auto& e = j[i];
        require_object(e, where);
        reject_unknown_keys(e, where, {"axis", "side", "type", "value"});
        if (!e.contains("axis")) config_fail(where, "missing axis");
        const auto axis = get_integer(e.at("axis"), where + ".axis");
        if (axis < 0 || axis >= dims)
            config_fail(where + ".axis",
                        "must be in [0, " + std::to_string(dims) + ")");
        if (!e.contains("side")) config_fail(where, "missing side");
        const auto side = get_string(e.at("side"), where + ".side");
        if (side != "low" && side != "high")
            config_fail(where + ".side", "must be low or high");
        std::string type = "no_flux";
        if (e.contains("type")) type = get_string(e.at("type"), where + ".type");
        const std::size_t slot =
            static_cast<std::size_t>(axis) * 2 + (side == "high" ? 1 : 0);
        if (seen[slot]) config_fail(where, "duplicate axis/side entry");
        seen[slot] = true;
        if (type == "no_flux") {
            out[slot] = FaceBc::no_flux();
        } else if (type == "dirichlet") {
            if (!e.contains("value")) config_fail(where, "dirichlet needs value");
            out[slot] = FaceBc::dirichlet(get_finite(e.at("value"), where + ".value"));
        } else {
            config_fail(where + ".type", "must be no_flux or dirichlet");
        }
    }
}

inline void parse_simulation_section(const nlohmann::json& j, int dims,
                                     SimulationConfig& out) {
    require_object(j, "simulation");
    reject_unknown_keys(j, "simulation",
                        {"dt", "steps", "record_every", "enforce_stability",
                         "boundary_epsilon", "reaction", "outer_bc"});
    if (j.contains("dt")) {
        out.dt = get_finite(j.at("dt"), "simulation.dt");
        if (out.dt < 0.0) config_fail("simulation.dt", "must be >= 0");
    }
    if (j.contains("steps")) {
        out.n_steps = get_integer(j.at("steps"), "simulation.steps");
        if (out.n_steps < 0) config_fail("simulation.steps", "must be >= 0");
    }
    if (j.contains("record_every")) {
        out.record_every = get_integer(j.at("record_every"), "simulation.record_every");
        if (out.record_every < 1) config_fail("simulation.record_every", "must be >= 1");
    }
    if (j.contains("enforce_stability"))
        out.enforce_stability =
            get_bool(j.at("enforce_stability"), "simulation.enforce_stability");
    if (j.contains("boundary_epsilon")) {
        out.boundary_epsilon =
            get_finite(j.at("boundary_epsilon"), "simulation.boundary_epsilon");
        if (out.boundary_epsilon < 0.0)
            config_fail("simulation.boundary_epsilon", "must be >= 0");
    }
    if (j.contains("reaction")) parse_reaction_section(j.at("reaction"), out.reaction);
    if (j.contains("outer_bc")) parse_outer_bc_section(j.at("outer_bc"), dims, out.outer_bc);
}

inline void parse_frap_section(const nlohmann::json& j, int dims, FrapConfig& out) {
    require_object(j, "frap");
    reject_unknown_keys(j, "frap",
                        {"d_molecular", "bleach_fraction", "bleach_lo", "bleach_hi",
                         "t_final", "n_samples", "dt", "fit_lo", "fit_hi", "fit_rel_tol"});
    if (j.contains("d_molecular")) {
        out.d_molecular = get_finite(j.at("d_molecular"), "frap.d_molecular");
        if (!(out.d_molecular > 0.0)) config_fail("frap.d_molecular", "must be > 0");
    }
    if (j.contains("bleach_fraction")) {
        out.bleach_fraction = get_finite(j.at("bleach_fraction"), "frap.bleach_fraction");
        if (!(*out.bleach_fraction > 0.0) || *out.bleach_fraction > 1.0)
            config_fail("frap.bleach_fraction", "must be in (0, 1]");
    }
    const auto parse_corner = [&](const char* key) -> std::optional<std::vector<std::int64_t>> {
        if (!j.contains(key)) return std::nullopt;
        const auto& arr = j.at(key);
        const std::string where = std::string("frap.") + key;
        if (!arr.is_array() || arr.size() != static_cast<std::size_t>(dims))
            config_fail(where, "expected an array of " + std::to_string(dims) + " integers");
        std::vector<std::int64_t> v;
        for (std::size_t a = 0; a < arr.size(); ++a)
            v.push_back(get_integer(arr[a], where + "[" + std::to_string(a) + "]"));
        return v;
    };
    out.bleach_lo = parse_corner("bleach_lo");
    out.bleach_hi = parse_corner("bleach_hi");
    if (out.bleach_lo.has_value() != out.bleach_hi.has_value())
        config_fail("frap", "bleach_lo and bleach_hi must be given together");
    if (out.bleach_lo && out.bleach_fraction)
        config_fail("frap", "give either bleach_fraction or bleach_lo/bleach_hi, not both");
    if (out.bleach_lo) {
        for (int a = 0; a < dims; ++a)
            if (!((*out.bleach_lo)[static_cast<std::size_t>(a)] <
                  (*out.bleach_hi)[static_cast<std::size_t>(a)]))
                config_fail("frap", "bleach_lo must be < bleach_hi on every axis");
    }
    if (j.contains("t_final")) {
        out.t_final = get_finite(j.at("t_final"), "frap.t_final");
        if (!(out.t_final > 0.0)) config_fail("frap.t_final", "must be > 0");
    }
    if (j.contains("n_samples")) {
        const auto n = get_integer(j.at("n_samples"), "frap.n_samples");
        if (n < 1) config_fail("frap.n_samples", "must be >= 1");
        out.n_samples = static_cast<int>(n);
    }
    if (j.contains("dt")) {
        out.dt = get_finite(j.at("dt"), "frap.dt");
        if (out.dt < 0.0) config_fail("frap.dt", "must be >= 0");
    }
    if (j.contains("fit_lo")) out.fit_lo = get_finite(j.at("fit_lo"), "frap.fit_lo");
    if (j.contains("fit_hi")) out.fit_hi = get_finite(j.at("fit_hi"), "frap.fit_hi");
    if (out.fit_lo != 0.0 || out.fit_hi != 0.0) {
        if (!(out.fit_lo > 0.0) || !(out.fit_hi > out.fit_lo))
            config_fail("frap", "fit bounds must satisfy 0 < fit_lo < fit_hi");
    }
    if (j.contains("fit_rel_tol")) {
        out.fit_rel_tol = get_finite(j.at("fit_rel_tol"), "frap.fit_rel_tol");
        if (!(out.fit_rel_tol > 0.0) || out.fit_rel_tol >= 1.0)
            config_fail("frap.fit_rel_tol", "must be in (0, 1)");
    }
}

inline void parse_outputs_section(const nlohmann::json& j, OutputSpec& out) {
    require_object(j, "outputs");
    reject_unknown_keys(j, "outputs",
                        {"vtk_basename", "vtk_every", "vtk_blank", "mass_csv", "snapshot",
                         "recovery_csv", "tortuosity_json", "report_json"});
    if (j.contains("vtk_basename"))
        out.vtk_basename = get_string(j.at("vtk_basename"), "outputs.vtk_basename");
    if (j.contains("vtk_every")) {
        out.vtk_every = get_integer(j.at("vtk_every"), "outputs.vtk_every");
        if (out.vtk_every < 0) config_fail("outputs.vtk_every", "must be >= 0");
    }
    if (j.contains("vtk_blank")) {
        if (j.at("vtk_blank").is_null())
            out.vtk_blank = std::numeric_limits<double>::quiet_NaN();
        else
            out.vtk_blank = get_number(j.at("vtk_blank"), "outputs.vtk_blank");
    }
    if (j.contains("mass_csv"))
        out.mass_csv = get_string(j.at("mass_csv"), "outputs.mass_csv");
    if (j.contains("snapshot"))
        out.snapshot = get_string(j.at("snapshot"), "outputs.snapshot");
    if (j.contains("recovery_csv"))
        out.recovery_csv = get_string(j.at("recovery_csv"), "outputs.recovery_csv");
    if (j.contains("tortuosity_json"))
        out.tortuosity_json = get_string(j.at("tortuosity_json"), "outputs.tortuosity_json");
    if (j.contains("report_json"))
        out.report_json = get_string(j.at("report_json"), "outputs.report_json");
}

} // namespace detail

/// Parses and validates a whole pipeline document. Throws input_error naming
/// the offending field on any problem.
inline PipelineConfig pipeline_config_from_json(const nlohmann::json& j) {
    detail::require_object(j, "top level");
    detail::reject_unknown_keys(j, "top level",
                                {"input", "levelset", "phase_band", "diffusion", "initial",
                                 "simulation", "frap", "outputs"});
    PipelineConfig cfg;
    if (j.contains("input")) detail::parse_input_section(j.at("input"), cfg.input);
    if (j.contains("levelset")) detail::parse_levelset_section(j.at("levelset"), cfg.levelset);
    if (j.contains("phase_band"))
        detail::parse_phase_band_section(j.at("phase_band"), cfg.phase_band);
    if (j.contains("diffusion")) {
        cfg.has_diffusion_section = true;
        detail::parse_diffusion_section(j.at("diffusion"), cfg.diffusion);
    }
    if (j.contains("initial")) {
        cfg.has_initial_section = true;
        detail::parse_initial_section(j.at("initial"), cfg.initial);
    }
    if (j.contains("simulation"))
        detail::parse_simulation_section(j.at("simulation"), cfg.input.dims, cfg.simulation);
    if (j.contains("frap")) {
        cfg.has_frap_section = true;
        detail::parse_frap_section(j.at("frap"), cfg.input.dims, cfg.frap);
    }
    if (j.contains("outputs")) detail::parse_outputs_section(j.at("outputs"), cfg.outputs);

    cfg.simulation.phase_band = cfg.phase_band;
    if (cfg.input.format == "grid") {
        // A grid snapshot carries its channels; the sections that would
        // overwrite them must not be present, so a document cannot silently
        // mean two different things.
        if (cfg.has_diffusion_section)
            detail::config_fail("diffusion",
                                "grid input carries its own D channel; remove this section");
        if (cfg.has_initial_section)
            detail::config_fail("initial",
                                "grid input carries its own u channel; remove this section");
    }
    return cfg;
}

/// Applies one "dotted.path=value" override to a JSON document before
/// parsing. The value is parsed as JSON when possible (numbers, booleans,
/// null, arrays) and kept as a string otherwise.
inline void apply_config_override(nlohmann::json& doc, const std::string& assignment) {
    const auto eq = assignment.find('=');
    if (eq == std::string::npos || eq == 0)
        throw input_error("override '" + assignment + "' is not of the form key=value");
    const std::string key = assignment.substr(0, eq);
    const std::string raw = assignment.substr(eq + 1);

    std::string pointer = "/";
    for (char c : key) pointer += c == '.' ? '/' : c;
    nlohmann::json value;
    try {
        value = nlohmann::json::parse(raw);
    } catch (const nlohmann::json::exception&) {
        value = raw; // plain strings (paths, names) need no quoting
    }
    try {
        doc[nlohmann::json::json_pointer(pointer)] = value;
    } catch (const nlohmann::json::exception& e) {
        throw input_error("override '" + assignment + "' cannot be applied: " + e.what());
    }
}

/// Loads a config file, applies --set overrides in order, and validates.
inline PipelineConfig load_pipeline_config(const std::filesystem::path& path,
                                           const std::vector<std::string>& overrides = {}) {
    std::ifstream in(path);
    if (!in) throw io_error("cannot open config '" + path.string() + "'");
    nlohmann::json doc;
    try {
        doc = nlohmann::json::parse(in);
    } catch (const nlohmann::json::exception& e) {
        throw input_error("config '" + path.string() + "' is not valid JSON: " + e.what());
    }
    for (const auto& assignment : overrides) apply_config_override(doc, assignment);
    return pipeline_config_from_json(doc);
}

/// Seeded per-node value in [0, 1), independent of traversal order and
/// worker count (pure function of the node's flat index).
inline double hash_unit_value(std::uint64_t seed, std::uint64_t key) {
    std::uint64_t z = seed + 0x9e3779b97f4a7c15ULL * (key + 1);
    z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
    z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
    z ^= z >> 31;
    return static_cast<double>(z >> 11) * 0x1.0p-53;
}

} // namespace porediff
