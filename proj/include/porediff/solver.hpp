#pragma once

#include <array>
#include <chrono>
#include <cmath>
#include <cstdint>
#include <functional>
#include <limits>
#include <string>
#include <vector>

#include "porediff/errors.hpp"
#include "porediff/geometry.hpp"
#include "porediff/parallel.hpp"
#include "porediff/scalar_text.hpp"
#include "porediff/sparse_block_grid.hpp"

/// Explicit forward-time centered-space integration of the inhomogeneous
/// diffusion equation u_t = div(D grad u) + f on a sparse block grid.
///
/// Boundary handling is stencil-level: a face whose neighbor is missing
/// (inactive node, outside the box) or belongs to the solid phase
/// (phi <= b_low + boundary_epsilon) substitutes the center values
/// u_nb := u_c, D_nb := D_c, which zeroes the flux through that face. Face
/// diffusivities are arithmetic half-point means (D_c + D_nb)/2. Outer box
/// faces can instead be held at a fixed value (Dirichlet), which behaves as a
/// one-cell halo filled with that value before each step.
///
/// Determinism: every node update reads only step-n state and writes one
/// scratch slot, diagnostics reduce per-chunk partials in ascending chunk
/// order with a fixed pairwise tree, and builds keep fp contraction off, so
/// results are bit-identical for any worker count and for sparse vs
/// dense-allocated grids of the same phase.

namespace porediff {

/// Pointwise reaction term of the transport equation.
struct ReactionSpec {
    enum class Kind { none, surface_sink, volumetric };

    Kind kind = Kind::none;
    double rate = 0.0;            // surface_sink: k >= 0, contributes -k*u
    double band_half_width = 1.0; // surface_sink: w > 0, multiples of the min spacing
    std::string source_channel;   // volumetric: grid channel holding f(x)
    std::function<double(double)> time_factor; // volumetric: optional f(x)*g(t)

    static ReactionSpec none() { return {}; }

    /// Linear sink -k*u applied on the interface band |phi| <= w*h.
    static ReactionSpec surface_sink(double k, double w = 1.0) {
        ReactionSpec r;
        r.kind = Kind::surface_sink;
        r.rate = k;
        r.band_half_width = w;
        return r;
    }

    /// Source read from a grid channel, optionally modulated by a global
    /// time factor g(t) (defaults to 1).
    static ReactionSpec volumetric(std::string channel,
                                   std::function<double(double)> g = {}) {
        ReactionSpec r;
        r.kind = Kind::volumetric;
        r.source_channel = std::move(channel);
        r.time_factor = std::move(g);
        return r;
    }
};

/// Outer-box face condition; the default substitution rule is zero flux.
struct FaceBc {
    enum class Type { no_flux, dirichlet };
    Type type = Type::no_flux;
    double value = 0.0;

    static FaceBc no_flux() { return {}; }
    static FaceBc dirichlet(double v) { return {Type::dirichlet, v}; }
};

struct SimulationConfig {
    double dt = 0.0;
    std::int64_t n_steps = 1;
    PhaseBand phase_band{};
    /// Nodes (own or neighbor) with phi <= b_low + boundary_epsilon count as
    /// solid walls. Grids built with the standard strict-inequality inset
    /// need 0; dense-allocated grids masking the solid by phi use the same
    /// epsilon the sparse build used.
    double boundary_epsilon = 0.0;
    ReactionSpec reaction{};
    /// Indexed [axis*2 + side], side 0 = low face, 1 = high face; entries
    /// beyond 2*Dims are ignored.
    std::array<FaceBc, 6> outer_bc{};
    std::int64_t record_every = 1;
    /// When true (default), run_simulation rejects dt at or above the
    /// stability bound; force-dt modes clear it.
    bool enforce_stability = true;
};

struct StepDiagnostics {
    std::int64_t step = 0;
    double time = 0.0;
    double total_mass = 0.0;
    double min_u = 0.0;
    double max_u = 0.0;
    double wall_seconds = 0.0;
};

/// Strict upper bound on the stable explicit time step for the worst-case
/// diffusivity: dt < 1 / (2 D_max) / sum_axis(1/spacing_a^2). Callers must
/// choose dt strictly below the returned value.
template <int Dims>
double stability_dt(const GridGeometry<Dims>& geometry, double d_max) {
    if (!(d_max > 0.0)) throw input_error("stability bound needs D_max > 0");
    double inv_sum = 0.0;
    for (int a = 0; a < Dims; ++a) {
        const double h = geometry.spacing[static_cast<std::size_t>(a)];
        inv_sum += 1.0 / (h * h);
    }
    return 1.0 / (2.0 * d_max) / inv_sum;
}

/// Reaction rate at one node (before the dt factor). Surface sinks act on
/// the band |phi| <= w * h_min; volumetric sources pass their sampled field
/// value through the optional time factor.
inline double apply_reaction(double u, double phi, const ReactionSpec& spec,
                             double h_min, double time, double source_value = 0.0) {
    switch (spec.kind) {
        case ReactionSpec::Kind::none:
            return 0.0;
        case ReactionSpec::Kind::surface_sink:
            return std::abs(phi) <= spec.band_half_width * h_min ? -spec.rate * u : 0.0;
        case ReactionSpec::Kind::volumetric:
            return spec.time_factor ? source_value * spec.time_factor(time) : source_value;
    }
    return 0.0;
}

/// Largest value of the D channel over active nodes (0 on an empty grid).
template <typename T, int Dims>
double max_diffusivity(const SparseBlockGrid<T, Dims>& grid,
                       std::string_view channel = "D") {
    const int prop = grid.property_index(channel);
    double d_max = -std::numeric_limits<double>::infinity();
    bool any = false;
    grid.for_each_chunk([&](const typename SparseBlockGrid<T, Dims>::Chunk& c) {
        const T* d = grid.channel_data(c, prop);
        for (int o = 0; o < SparseBlockGrid<T, Dims>::chunk_volume; ++o)
            if (c.test(o)) {
                d_max = std::max(d_max, static_cast<double>(d[o]));
                any = true;
            }
    });
    return any ? d_max : 0.0;
}

/// Discrete integral of a channel: sum(u) * cell volume, reduced with the
/// deterministic chunk-ordered pairwise tree.
template <typename T, int Dims>
double total_mass(const SparseBlockGrid<T, Dims>& grid, std::string_view channel = "u") {
    const int prop = grid.property_index(channel);
    std::vector<double> partial;
    partial.reserve(static_cast<std::size_t>(grid.chunk_count()));
    grid.for_each_chunk([&](const typename SparseBlockGrid<T, Dims>::Chunk& c) {
        const T* u = grid.channel_data(c, prop);
        double s = 0.0;
        for (int o = 0; o < SparseBlockGrid<T, Dims>::chunk_volume; ++o)
            if (c.test(o)) s += static_cast<double>(u[o]);
        partial.push_back(s);
    });
    return pairwise_sum(std::move(partial)) * grid.geometry().cell_volume();
}

/// Name of the scratch channel the stepper double-buffers into. Grids meant
/// for time integration are built with channels {"phi", "u", "D", "u_next"}.
inline constexpr const char* scratch_channel = "u_next";

inline std::vector<std::string> solver_channels() {
    return {"phi", "u", "D", scratch_channel};
}

/// One-time-validated FTCS stepper bound to a grid. step() advances the "u"
/// channel by one explicit step and reports diagnostics of the new state.
template <typename T, int Dims>
class FtcsStepper {
  public:
    using Grid = SparseBlockGrid<T, Dims>;
    using Chunk = typename Grid::Chunk;
    static constexpr int volume = Grid::chunk_volume;

    FtcsStepper(Grid& grid, const SimulationConfig& config)
        : grid_(grid), cfg_(config) {
        validate();
        i_phi_ = grid_.property_index("phi");
        i_u_ = grid_.property_index("u");
        i_d_ = grid_.property_index("D");
        i_next_ = grid_.property_index(scratch_channel);
        i_src_ = cfg_.reaction.kind == ReactionSpec::Kind::volumetric
                     ? grid_.property_index(cfg_.reaction.source_channel)
                     : -1;

        const auto& geom = grid_.geometry();
        for (int a = 0; a < Dims; ++a) {
            inv_dx2_[a] = T{1} / static_cast<T>(geom.spacing[static_cast<std::size_t>(a)] *
                                                geom.spacing[static_cast<std::size_t>(a)]);
        }
        dt_ = static_cast<T>(cfg_.dt);
        // Computed in T arithmetic so the wall test is the exact complement
        // of the sparse build's insertion test when boundary_epsilon equals
        // the build inset (machine epsilon of T).
        wall_threshold_ = static_cast<T>(cfg_.phase_band.b_low) +
                          static_cast<T>(cfg_.boundary_epsilon);
        sink_band_ = cfg_.reaction.band_half_width * geom.min_spacing();

        build_neighbor_table();
    }

    const SimulationConfig& config() const { return cfg_; }

    /// Strict stability bound for this grid's current D channel.
    double stability_bound() const {
        const double d_max = max_diffusivity(grid_);
        return d_max > 0.0 ? stability_dt(grid_.geometry(), d_max)
                           : std::numeric_limits<double>::infinity();
    }

    /// Advances u by one step; `step_index` is the index of the step being
    /// taken (the state entering the call is u at step_index * dt).
    StepDiagnostics step(std::int64_t step_index) {
        const auto t0 = std::chrono::steady_clock::now();
        const double time = static_cast<double>(step_index) * cfg_.dt;
        const T source_factor =
            cfg_.reaction.kind == ReactionSpec::Kind::volumetric && cfg_.reaction.time_factor
                ? static_cast<T>(cfg_.reaction.time_factor(time))
                : T{1};

        const auto order = grid_.chunk_order();
        const auto n_chunks = static_cast<std::int64_t>(order.size());
        mass_partial_.assign(static_cast<std::size_t>(n_chunks), 0.0);
        min_partial_.assign(static_cast<std::size_t>(n_chunks),
                            std::numeric_limits<double>::infinity());
        max_partial_.assign(static_cast<std::size_t>(n_chunks),
                            -std::numeric_limits<double>::infinity());
        bad_offset_.assign(static_cast<std::size_t>(n_chunks), -1);

        parallel_for(n_chunks, [&](std::int64_t lo, std::int64_t hi) {
            for (std::int64_t i = lo; i < hi; ++i)
                process_chunk(i, order[static_cast<std::size_t>(i)], source_factor);
        });

        for (std::int64_t i = 0; i < n_chunks; ++i) {
            if (bad_offset_[static_cast<std::size_t>(i)] >= 0) {
                const Chunk& c = grid_.chunk_by_id(order[static_cast<std::size_t>(i)]);
                const auto idx = Grid::node_index(
                    c.key, bad_offset_[static_cast<std::size_t>(i)]);
                std::string s = "non-finite value at step " +
                                std::to_string(step_index + 1) + ", node (";
                for (int a = 0; a < Dims; ++a) s += (a ? "," : "") + std::to_string(idx[a]);
                throw numeric_error(s + ")");
            }
        }

        grid_.swap_channels("u", scratch_channel);

        StepDiagnostics d;
        d.step = step_index + 1;
        d.time = static_cast<double>(step_index + 1) * cfg_.dt;
        d.total_mass = pairwise_sum(mass_partial_) * grid_.geometry().cell_volume();
        double mn = std::numeric_limits<double>::infinity();
        double mx = -std::numeric_limits<double>::infinity();
        for (std::int64_t i = 0; i < n_chunks; ++i) {
            mn = std::min(mn, min_partial_[static_cast<std::size_t>(i)]);
            mx = std::max(mx, max_partial_[static_cast<std::size_t>(i)]);
        }
        d.min_u = mn;
        d.max_u = mx;
        d.wall_seconds = std::chrono::duration<double>(
                             std::chrono::steady_clock::now() - t0).count();
        return d;
    }

    /// Diagnostics of the current state without advancing (the step-0 row).
    StepDiagnostics snapshot_diagnostics() const {
        StepDiagnostics d;
        d.step = 0;
        d.time = 0.0;
        d.total_mass = total_mass(grid_);
        double mn = std::numeric_limits<double>::infinity();
        double mx = -std::numeric_limits<double>::infinity();
        const int prop = i_u_;
        grid_.for_each_chunk([&](const Chunk& c) {
            const T* u = grid_.channel_data(c, prop);
            for (int o = 0; o < volume; ++o)
                if (c.test(o)) {
                    mn = std::min(mn, static_cast<double>(u[o]));
                    mx = std::max(mx, static_cast<double>(u[o]));
                }
        });
        d.min_u = mn;
        d.max_u = mx;
        return d;
    }

  private:
    void validate() const {
        if (!(cfg_.dt > 0.0) || !std::isfinite(cfg_.dt))
            throw input_error("time step must be positive and finite");
        if (cfg_.n_steps < 1) throw input_error("step count must be at least 1");
        if (cfg_.record_every < 1) throw input_error("record_every must be at least 1");
        if (!(cfg_.phase_band.b_low < cfg_.phase_band.b_up))
            throw input_error("phase band is empty (b_low must be < b_up)");
        if (cfg_.boundary_epsilon < 0.0 || !std::isfinite(cfg_.boundary_epsilon))
            throw input_error("boundary_epsilon must be finite and >= 0");
        if (cfg_.reaction.kind == ReactionSpec::Kind::surface_sink) {
            if (cfg_.reaction.rate < 0.0)
                throw input_error("surface sink rate must be >= 0");
            if (!(cfg_.reaction.band_half_width > 0.0))
                throw input_error("surface sink band half-width must be > 0");
        }
        for (const char* ch : {"phi", "u", "D", scratch_channel}) {
            try {
                (void)grid_.property_index(ch);
            } catch (const property_error&) {
                throw input_error(
                    std::string("grid lacks the '") + ch +
                    "' channel; build simulation grids with channels "
                    "{phi, u, D, u_next}");
            }
        }
        if (cfg_.reaction.kind == ReactionSpec::Kind::volumetric)
            (void)grid_.property_index(cfg_.reaction.source_channel); // throws if missing
    }

    void build_neighbor_table() {
        const auto order = grid_.chunk_order();
        neighbors_.assign(order.size() * static_cast<std::size_t>(2 * Dims), nullptr);
        for (std::size_t i = 0; i < order.size(); ++i) {
            const Chunk& c = grid_.chunk_by_id(order[i]);
            for (int a = 0; a < Dims; ++a)
                for (int s = 0; s < 2; ++s) {
                    auto key = c.key;
                    key[static_cast<std::size_t>(a)] += s == 0 ? -1 : 1;
                    const auto limit = grid_.chunk_grid_size()[static_cast<std::size_t>(a)];
                    if (key[static_cast<std::size_t>(a)] < 0 ||
                        key[static_cast<std::size_t>(a)] >= limit)
                        continue;
                    neighbors_[i * static_cast<std::size_t>(2 * Dims) +
                               static_cast<std::size_t>(a * 2 + s)] =
                        grid_.chunk_at_table(grid_.chunk_linear_index(key));
                }
        }
    }

    /// Gathers (u, D) across one face of node `off` in chunk `c`. `coord` is
    /// the node's in-chunk coordinate along `axis`, `global` its grid index.
    struct Face {
        T u;
        T d;
    };

    Face gather(const Chunk& c, const Chunk* const* nb, int off, int axis, int side,
                int coord, std::int64_t global, T u_c, T d_c,
                const T* phi_p, const T* u_p, const T* d_p) const {
        const std::int64_t g = global + (side == 0 ? -1 : 1);
        if (g < 0 || g >= grid_.geometry().size[static_cast<std::size_t>(axis)]) {
            const FaceBc& bc = cfg_.outer_bc[static_cast<std::size_t>(axis * 2 + side)];
            if (bc.type == FaceBc::Type::dirichlet)
                return {static_cast<T>(bc.value), d_c};
            return {u_c, d_c};
        }
        const int stride = 1 << (3 * axis);
        const bool crosses = side == 0 ? coord == 0 : coord == 7;
        if (!crosses) {
            const int o2 = side == 0 ? off - stride : off + stride;
            if (!c.test(o2) || phi_p[o2] <= wall_threshold_) return {u_c, d_c};
            return {u_p[o2], d_p[o2]};
        }
        const Chunk* n = nb[axis * 2 + side];
        const int o2 = side == 0 ? off + 7 * stride : off - 7 * stride;
        if (!n || !n->test(o2)) return {u_c, d_c};
        const T* nphi = grid_.channel_data(*n, i_phi_);
        if (nphi[o2] <= wall_threshold_) return {u_c, d_c};
        return {grid_.channel_data(*n, i_u_)[o2], grid_.channel_data(*n, i_d_)[o2]};
    }

    void process_chunk(std::int64_t ordinal, std::int32_t id, T source_factor) {
        Chunk& c = grid_.chunk_by_id(id);
        const Chunk* const* nb =
            neighbors_.data() + static_cast<std::size_t>(ordinal) *
                                    static_cast<std::size_t>(2 * Dims);
        const T* phi_p = grid_.channel_data(c, i_phi_);
        const T* u_p = grid_.channel_data(c, i_u_);
        const T* d_p = grid_.channel_data(c, i_d_);
        const T* src_p = i_src_ >= 0 ? grid_.channel_data(c, i_src_) : nullptr;
        T* dst_p = grid_.channel_data(c, i_next_);

        std::array<std::int64_t, static_cast<std::size_t>(Dims)> base{};
        for (int a = 0; a < Dims; ++a)
            base[static_cast<std::size_t>(a)] = static_cast<std::int64_t>(
                                                    c.key[static_cast<std::size_t>(a)])
                                                << 3;

        double mass = 0.0;
        double mn = std::numeric_limits<double>::infinity();
        double mx = -std::numeric_limits<double>::infinity();
        int bad = -1;

        for (int off = 0; off < volume; ++off) {
            if (!c.test(off)) continue;
            const T u_c = u_p[off];
            const T phi_c = phi_p[off];

            T un;
            if (phi_c <= wall_threshold_) {
                // Solid-side node (possible only when boundary_epsilon
                // exceeds the build inset): frozen, every neighbor already
                // sees it as a wall.
                un = u_c;
            } else {
                const T d_c = d_p[off];
                T lap{0};
                for (int a = 0; a < Dims; ++a) {
                    const int coord = (off >> (3 * a)) & 7;
                    const std::int64_t global =
                        base[static_cast<std::size_t>(a)] + coord;
                    const Face m =
                        gather(c, nb, off, a, 0, coord, global, u_c, d_c, phi_p, u_p, d_p);
                    const Face p =
                        gather(c, nb, off, a, 1, coord, global, u_c, d_c, phi_p, u_p, d_p);
                    const T dh_m = (d_c + m.d) * T{0.5};
                    const T dh_p = (d_c + p.d) * T{0.5};
                    lap += (dh_p * (p.u - u_c) - dh_m * (u_c - m.u)) *
                           inv_dx2_[static_cast<std::size_t>(a)];
                }
                T rate{0};
                if (cfg_.reaction.kind == ReactionSpec::Kind::surface_sink) {
                    if (std::abs(static_cast<double>(phi_c)) <= sink_band_)
                        rate = -static_cast<T>(cfg_.reaction.rate) * u_c;
                } else if (cfg_.reaction.kind == ReactionSpec::Kind::volumetric) {
                    rate = src_p[off] * source_factor;
                }
                un = u_c + dt_ * lap + dt_ * rate;
            }

            if (!std::isfinite(static_cast<double>(un)) && bad < 0) bad = off;
            dst_p[off] = un;
            mass += static_cast<double>(un);
            mn = std::min(mn, static_cast<double>(un));
            mx = std::max(mx, static_cast<double>(un));
        }

        mass_partial_[static_cast<std::size_t>(ordinal)] = mass;
        min_partial_[static_cast<std::size_t>(ordinal)] = mn;
        max_partial_[static_cast<std::size_t>(ordinal)] = mx;
        bad_offset_[static_cast<std::size_t>(ordinal)] = bad;
    }

    Grid& grid_;
    SimulationConfig cfg_;
    int i_phi_ = -1, i_u_ = -1, i_d_ = -1, i_next_ = -1, i_src_ = -1;
    std::array<T, static_cast<std::size_t>(Dims)> inv_dx2_{};
    T dt_{};
    T wall_threshold_{};
    double sink_band_ = 0.0;
    std::vector<const Chunk*> neighbors_;
    std::vector<double> mass_partial_, min_partial_, max_partial_;
    std::vector<int> bad_offset_;
};

/// Advances the grid by exactly one validated step.
template <typename T, int Dims>
StepDiagnostics ftcs_step(SparseBlockGrid<T, Dims>& grid, const SimulationConfig& config,
                          std::int64_t step_index = 0) {
    FtcsStepper<T, Dims> stepper(grid, config);
    return stepper.step(step_index);
}

template <typename T, int Dims>
using SimulationObserver =
    std::function<void(const SparseBlockGrid<T, Dims>&, const StepDiagnostics&)>;

struct SimulationResult {
    std::vector<StepDiagnostics> diagnostics; // step 0 plus every recorded step
};

/// Runs n_steps of FTCS integration. Diagnostics are recorded (and observers
/// invoked) for the initial state, every record_every-th step, and the final
/// step. Unless stability enforcement is disabled, dt at or above the bound
/// for the grid's max diffusivity is rejected up front.
template <typename T, int Dims>
SimulationResult run_simulation(
    SparseBlockGrid<T, Dims>& grid, const SimulationConfig& config,
    const std::vector<SimulationObserver<T, Dims>>& observers = {}) {
    FtcsStepper<T, Dims> stepper(grid, config);

    if (config.enforce_stability) {
        const double bound = stepper.stability_bound();
        if (!(config.dt < bound))
            throw stability_error(
                "time step " + format_scalar(config.dt) +
                " violates the explicit stability bound " + format_scalar(bound) +
                " (dt must be strictly below it; max D = " +
                format_scalar(max_diffusivity(grid)) + ")");
    }

    SimulationResult result;
    auto record = [&](const StepDiagnostics& d) {
        result.diagnostics.push_back(d);
        for (const auto& obs : observers) obs(grid, d);
    };
    record(stepper.snapshot_diagnostics());

    for (std::int64_t s = 0; s < config.n_steps; ++s) {
        const StepDiagnostics d = stepper.step(s);
        if (!std::isfinite(d.total_mass))
            throw numeric_error("non-finite total mass at step " + std::to_string(s + 1));
        if ((s + 1) % config.record_every == 0 || s + 1 == config.n_steps) record(d);
    }
    return result;
}

} // namespace porediff
