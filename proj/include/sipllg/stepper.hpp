/// @file stepper.hpp
/// @brief Semi-implicit projection step for the LLG equation and the time loop around it.
///
/// One step from m^{n-1} (unit length) to m^n:
///
///   (mt - m^{n-1}) / dt = -beta m^{n-1} x Lap_h mt - gamma m^{n-1} x (m^{n-1} x Lap_h mt)
///                         -beta m^{n-1} x H - gamma m^{n-1} x (m^{n-1} x H) + f(t^n)
///   m^n = mt / |mt|
///
/// where H is the explicit (non-exchange) field of the model and f an optional
/// forcing. The linear stage is A(mt) = rhs with
///
///   A(v) = v + dt [beta m x Lap_h v + gamma m x (m x Lap_h v)],   m = m^{n-1},
///
/// solved matrix-free for the increment mt - m^{n-1}. Since every term of A
/// other than the identity is orthogonal to m, force-free steps satisfy
/// mt . m^{n-1} = 1 and |mt| >= 1 pointwise, which is what makes the
/// projection energy-decreasing.
#pragma once

#include "sipllg/effective_field.hpp"
#include "sipllg/errors.hpp"
#include "sipllg/grid.hpp"
#include "sipllg/grid_ops.hpp"
#include "sipllg/krylov.hpp"
#include "sipllg/preconditioner.hpp"

#include <cmath>
#include <functional>
#include <limits>
#include <memory>
#include <optional>
#include <sstream>
#include <string>
#include <string_view>
#include <vector>

namespace sipllg {

using Forcing = std::function<Vec3(const Point& x, double t)>;

struct SchemeParams {
    double beta = 1.0;
    double gamma = 1.0;
    double dt = 0.01;
    FieldModel model = ExchangeOnly{};
    Forcing forcing;

    void validate() const
    {
        if (!(gamma > 0.0)) {
            throw ArgumentError("damping gamma must be positive");
        }
        if (!(dt > 0.0)) {
            throw ArgumentError("time step dt must be positive");
        }
        sipllg::validate(model);
    }
};

struct SolverConfig {
    KrylovMethod method = KrylovMethod::Gmres;
    double rel_tol = 1e-12;
    int max_iter = 500;
    int restart = 30;
    bool diffusion_preconditioner = false;

    void validate() const
    {
        if (!(rel_tol > 0.0 && rel_tol < 1.0)) {
            throw ArgumentError("solver rel_tol must lie in (0, 1)");
        }
        if (max_iter < 1) {
            throw ArgumentError("solver max_iter must be >= 1");
        }
        if (restart < 1) {
            throw ArgumentError("solver restart must be >= 1");
        }
    }
};

struct StepReport {
    long step_index = 0;
    double time = 0.0;
    int krylov_iters = 0;
    /// Final relative residual of the linear solve for the increment mt - m^{n-1}.
    double residual = 0.0;
    double min_intermediate_length = 0.0;
    double energy = 0.0;
    double max_length_error = 0.0;
};

struct IntermediateSolve {
    VectorField m_tilde;
    int krylov_iters = 0;
    double residual = 0.0;
};

struct StepResult {
    VectorField m_new;
    VectorField m_tilde;
    StepReport report;
};

/// Energy that the scheme monitors: exchange only, or the full extended energy.
inline double discrete_energy(const VectorField& m, const FieldModel& model)
{
    return is_extended(model) ? extended_energy(m, model) : exchange_energy(m);
}

inline VectorField normalize(const VectorField& m_tilde)
{
    constexpr double tiny = 1e-300;
    VectorField out(m_tilde.grid());
    for (std::size_t n = 0; n < m_tilde.size(); ++n) {
        const Vec3 v = m_tilde[n];
        const double len = norm(v);
        if (!(len > tiny)) {
            throw DegenerateStateError("cannot normalize: |m| = " + std::to_string(len) + " at node " +
                                           std::to_string(n),
                                       n);
        }
        out.set(n, {v.x / len, v.y / len, v.z / len});
    }
    return out;
}

inline double max_length_error(const VectorField& m)
{
    double e = 0.0;
    for (std::size_t n = 0; n < m.size(); ++n) {
        e = std::max(e, std::abs(norm(m[n]) - 1.0));
    }
    return e;
}

inline double min_length(const VectorField& m)
{
    double e = std::numeric_limits<double>::infinity();
    for (std::size_t n = 0; n < m.size(); ++n) {
        e = std::min(e, norm(m[n]));
    }
    return e;
}

inline bool all_finite(const VectorField& m)
{
    for (double v : m.values()) {
        if (!std::isfinite(v)) {
            return false;
        }
    }
    return true;
}

/// out = v + bdt m x Lap_h v + gdt m x (m x Lap_h v); `lap` is scratch of the same length.
inline void scheme_operator_kernel(const GridSpec& g, double bdt, double gdt, std::span<const double> m_prev,
                                   std::span<const double> v, std::span<double> out, std::span<double> lap)
{
    laplacian_kernel(g, v, lap);
    const std::size_t n = g.node_count();
    for (std::size_t i = 0; i < n; ++i) {
        const Vec3 m{m_prev[3 * i], m_prev[3 * i + 1], m_prev[3 * i + 2]};
        const Vec3 l{lap[3 * i], lap[3 * i + 1], lap[3 * i + 2]};
        const Vec3 c = cross(m, l);
        const Vec3 a = bdt * c + gdt * cross(m, c);
        out[3 * i] = v[3 * i] + a.x;
        out[3 * i + 1] = v[3 * i + 1] + a.y;
        out[3 * i + 2] = v[3 * i + 2] + a.z;
    }
}

/// Holds the per-run state of the scheme: parameters, scratch buffers and the optional preconditioner.
/// Scratch buffers are shared between calls, so one instance must not be used from two threads at once.
class SipStepper {
public:
    SipStepper(const GridSpec& grid, SchemeParams params, SolverConfig cfg)
        : grid_(grid), params_(std::move(params)), cfg_(cfg), lap_(3 * grid.node_count())
    {
        grid_.validate();
        params_.validate();
        cfg_.validate();
        if (!grid_.is_uniform()) {
            throw UnsupportedConfiguration("the scheme requires equal spacing on every axis");
        }
        if (is_extended(params_.model) && grid_.dim != 2) {
            throw UnsupportedConfiguration("the extended model is only defined on 2D grids");
        }
        if (cfg_.diffusion_preconditioner) {
            precond_ = std::make_unique<DiffusionPreconditioner>(grid_, params_.gamma * params_.dt);
            pc_in_.resize(3 * grid_.node_count());
        }
    }

    const GridSpec& grid() const noexcept { return grid_; }
    const SchemeParams& params() const noexcept { return params_; }
    const SolverConfig& solver() const noexcept { return cfg_; }

    /// out = A(v) for the frozen coefficient field m_prev.
    void apply_operator(std::span<const double> m_prev, std::span<const double> v, std::span<double> out) const
    {
        scheme_operator_kernel(grid_, params_.beta * params_.dt, params_.gamma * params_.dt, m_prev, v, out, lap_);
    }

    /// Right-hand side m^{n-1} - dt [beta m x H + gamma m x (m x H)] + dt f(., t_new).
    VectorField rhs(const VectorField& m_prev, double t_new) const
    {
        VectorField b = m_prev;
        if (is_extended(params_.model)) {
            const VectorField H = explicit_field_apply(m_prev, params_.model);
            for (std::size_t n = 0; n < b.size(); ++n) {
                const Vec3 m = m_prev[n];
                const Vec3 c = cross(m, H[n]);
                b.set(n, b[n] - params_.dt * (params_.beta * c + params_.gamma * cross(m, c)));
            }
        }
        if (params_.forcing) {
            for (int k = 0; k < grid_.counts[2]; ++k) {
                for (int j = 0; j < grid_.counts[1]; ++j) {
                    for (int i = 0; i < grid_.counts[0]; ++i) {
                        const std::size_t n = grid_.index(i, j, k);
                        b.set(n, b[n] + params_.dt * params_.forcing(grid_.position(i, j, k), t_new));
                    }
                }
            }
        }
        return b;
    }

    IntermediateSolve solve_intermediate(const VectorField& m_prev, double t_new, long step_index = 0) const
    {
        require_same_grid(m_prev.grid(), grid_, "solve_intermediate");
        const VectorField b = rhs(m_prev, t_new);
        if (!all_finite(b)) {
            throw NonFiniteError("non-finite right-hand side at step " + std::to_string(step_index), step_index);
        }
        const auto mp = m_prev.values();

        // Solve A(delta) = b - A(m_prev) and set mt = m_prev + delta.
        std::vector<double> bd(b.raw().size());
        apply_operator(mp, mp, bd);
        for (std::size_t i = 0; i < bd.size(); ++i) {
            bd[i] = b.raw()[i] - bd[i];
        }
        std::vector<double> delta(bd.size(), 0.0);
        auto A = [&](std::span<const double> in, std::span<double> out) { apply_operator(mp, in, out); };

        KrylovResult kr;
        if (precond_) {
            // Tangential part through the diffusion inverse, normal part unchanged (A acts as I there).
            auto M = [&](std::span<const double> in, std::span<double> out) {
                const std::size_t n = grid_.node_count();
                for (std::size_t i = 0; i < n; ++i) {
                    const Vec3 m{mp[3 * i], mp[3 * i + 1], mp[3 * i + 2]};
                    const Vec3 v{in[3 * i], in[3 * i + 1], in[3 * i + 2]};
                    const Vec3 t = v - dot(m, v) * m;
                    pc_in_[3 * i] = t.x;
                    pc_in_[3 * i + 1] = t.y;
                    pc_in_[3 * i + 2] = t.z;
                }
                (*precond_)(pc_in_, out);
                for (std::size_t i = 0; i < n; ++i) {
                    const Vec3 m{mp[3 * i], mp[3 * i + 1], mp[3 * i + 2]};
                    const Vec3 v{in[3 * i], in[3 * i + 1], in[3 * i + 2]};
                    const Vec3 z{out[3 * i], out[3 * i + 1], out[3 * i + 2]};
                    const Vec3 r = z - dot(m, z) * m + dot(m, v) * m;
                    out[3 * i] = r.x;
                    out[3 * i + 1] = r.y;
                    out[3 * i + 2] = r.z;
                }
            };
            kr = krylov(A, bd, delta, M);
        } else {
            kr = krylov(A, bd, delta, IdentityPreconditioner{});
        }
        if (!kr.converged) {
            std::ostringstream msg;
            msg << to_string(cfg_.method) << " did not reach rel_tol " << cfg_.rel_tol << " within "
                << cfg_.max_iter << " iterations (final relative residual " << kr.relative_residual << ")";
            throw SolverError(msg.str(), std::move(kr.history));
        }

        IntermediateSolve out{m_prev, kr.iterations, kr.relative_residual};
        auto mt = out.m_tilde.values();
        for (std::size_t i = 0; i < mt.size(); ++i) {
            mt[i] += delta[i];
        }
        return out;
    }

    StepResult step(const VectorField& m_prev, double t_new, long step_index) const
    {
        IntermediateSolve s = solve_intermediate(m_prev, t_new, step_index);
        if (!all_finite(s.m_tilde)) {
            throw NonFiniteError("non-finite intermediate state at step " + std::to_string(step_index), step_index);
        }
        StepResult r{normalize(s.m_tilde), std::move(s.m_tilde), {}};
        r.report.step_index = step_index;
        r.report.time = t_new;
        r.report.krylov_iters = s.krylov_iters;
        r.report.residual = s.residual;
        r.report.min_intermediate_length = min_length(r.m_tilde);
        r.report.energy = discrete_energy(r.m_new, params_.model);
        r.report.max_length_error = max_length_error(r.m_new);
        return r;
    }

private:
    template <class Op, class Prec>
    KrylovResult krylov(const Op& A, std::span<const double> b, std::span<double> x, const Prec& M) const
    {
        if (cfg_.method == KrylovMethod::Gmres) {
            return gmres(A, b, x, cfg_.rel_tol, cfg_.max_iter, cfg_.restart, M, workspace_);
        }
        return bicgstab(A, b, x, cfg_.rel_tol, cfg_.max_iter, M);
    }

    GridSpec grid_;
    SchemeParams params_;
    SolverConfig cfg_;
    mutable std::vector<double> lap_;
    mutable std::vector<double> pc_in_;
    mutable GmresWorkspace workspace_;
    std::unique_ptr<DiffusionPreconditioner> precond_;
};

/// A(v) for the frozen coefficient field m_prev; dt = 0 is allowed and gives the identity.
inline VectorField operator_apply(const VectorField& v, const VectorField& m_prev, const SchemeParams& params)
{
    require_same_grid(v.grid(), m_prev.grid(), "operator_apply");
    require_consistent(v);
    require_consistent(m_prev);
    if (!(params.dt >= 0.0)) {
        throw ArgumentError("time step dt must be non-negative");
    }
    VectorField out(v.grid());
    std::vector<double> lap(v.raw().size());
    scheme_operator_kernel(v.grid(), params.beta * params.dt, params.gamma * params.dt, m_prev.values(), v.values(),
                           out.values(), lap);
    return out;
}

inline IntermediateSolve solve_intermediate(const VectorField& m_prev, const SchemeParams& params,
                                            const SolverConfig& cfg, double t_new)
{
    return SipStepper(m_prev.grid(), params, cfg).solve_intermediate(m_prev, t_new);
}

inline StepResult step(const VectorField& m_prev, const SchemeParams& params, const SolverConfig& cfg, double t_new,
                       long step_index = 1)
{
    return SipStepper(m_prev.grid(), params, cfg).step(m_prev, t_new, step_index);
}

/// Accepts initial data that is unit length up to 1e-12 and renormalizes it.
/// Farther drift is rejected unless `allow_nonunit` is set, in which case `warn` is told.
/// Nodes already unit to a few ulps are kept bit-for-bit, so resuming from a checkpoint
/// reproduces the uninterrupted run exactly.
inline VectorField ingest_initial(const VectorField& initial, bool allow_nonunit = false,
                                  const std::function<void(std::string_view)>& warn = {})
{
    require_consistent(initial);
    if (!all_finite(initial)) {
        throw NonFiniteError("non-finite initial data", 0);
    }
    const double drift = max_length_error(initial);
    if (drift > 1e-12) {
        if (!allow_nonunit) {
            throw ArgumentError("initial data is not unit length (max drift " + std::to_string(drift) + ")");
        }
        if (warn) {
            warn("initial data renormalized, max length drift " + std::to_string(drift));
        }
    }
    constexpr double keep = 4.0 * std::numeric_limits<double>::epsilon();
    VectorField out = initial;
    for (std::size_t n = 0; n < out.size(); ++n) {
        const Vec3 v = out[n];
        const double len = norm(v);
        if (std::abs(len - 1.0) > keep) {
            if (!(len > 1e-300)) {
                throw DegenerateStateError("cannot normalize: |m| = " + std::to_string(len) + " at node " +
                                               std::to_string(n),
                                           n);
            }
            out.set(n, {v.x / len, v.y / len, v.z / len});
        }
    }
    return out;
}

struct RunOptions {
    double t_start = 0.0;
    long start_step = 0;
    double t_end = 0.0;
    /// Stop early once ||m^n - m^{n-1}||_2 / dt < steady_tol.
    std::optional<double> steady_tol;
    /// Hard cap on the number of steps taken by this call (0 = none).
    long max_steps = 0;
    bool allow_nonunit_initial = false;
    std::function<void(std::string_view)> warn;
};

/// Everything a step produced, handed to the per-step callback.
struct StepEvent {
    const VectorField& m_prev;
    const VectorField& m_tilde;
    const VectorField& m_new;
    const StepReport& report;
    double previous_energy;
};

/// Return false to stop the run after the current step.
using StepCallback = std::function<bool(const StepEvent&)>;

struct RunResult {
    VectorField final_state;
    std::vector<StepReport> reports;
    long steps_taken = 0;
    long final_step = 0;
    double final_time = 0.0;
    bool steady_state_reached = false;
    double last_increment_rate = 0.0;
};

inline long steps_to_reach(double t_start, double t_end, double dt)
{
    const double span = t_end - t_start;
    if (span <= 0.0) {
        return 0;
    }
    return static_cast<long>(std::ceil(span / dt - 1e-9));
}

inline RunResult run(const VectorField& initial, const SchemeParams& params, const SolverConfig& cfg,
                     const RunOptions& opts, const StepCallback& callback = {})
{
    const SipStepper stepper(initial.grid(), params, cfg);
    RunResult result;
    result.final_state = ingest_initial(initial, opts.allow_nonunit_initial, opts.warn);
    result.final_step = opts.start_step;
    result.final_time = opts.t_start;

    long n_steps = steps_to_reach(opts.t_start, opts.t_end, params.dt);
    if (opts.max_steps > 0) {
        n_steps = std::min(n_steps, opts.max_steps);
    }
    double energy = discrete_energy(result.final_state, params.model);
    for (long s = 1; s <= n_steps; ++s) {
        const long idx = opts.start_step + s;
        const double t_new = opts.t_start + s * params.dt;
        StepResult r = stepper.step(result.final_state, t_new, idx);
        if (!all_finite(r.m_new) || !std::isfinite(r.report.energy)) {
            throw NonFiniteError("non-finite state at step " + std::to_string(idx), idx);
        }
        bool keep_going = true;
        if (callback) {
            keep_going = callback(StepEvent{result.final_state, r.m_tilde, r.m_new, r.report, energy});
        }
        double rate = 0.0;
        if (opts.steady_tol) {
            VectorField diff = r.m_new;
            auto d = diff.values();
            const auto p = result.final_state.values();
            for (std::size_t i = 0; i < d.size(); ++i) {
                d[i] -= p[i];
            }
            rate = l2_norm(diff) / params.dt;
        }
        energy = r.report.energy;
        result.reports.push_back(r.report);
        result.final_state = std::move(r.m_new);
        result.final_step = idx;
        result.final_time = t_new;
        result.steps_taken = s;
        result.last_increment_rate = rate;
        if (opts.steady_tol && rate < *opts.steady_tol) {
            result.steady_state_reached = true;
            break;
        }
        if (!keep_going) {
            break;
        }
    }
    return result;
}

} // namespace sipllg
