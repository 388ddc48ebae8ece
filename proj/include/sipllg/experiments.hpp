/// @file experiments.hpp
/// @brief Initial data, manufactured solution and the four experiment drivers behind the CLI.
#pragma once

#include "sipllg/config.hpp"
#include "sipllg/diagnostics.hpp"
#include "sipllg/effective_field.hpp"
#include "sipllg/grid.hpp"
#include "sipllg/grid_ops.hpp"
#include "sipllg/io.hpp"
#include "sipllg/stepper.hpp"

#include <algorithm>
#include <cmath>
#include <filesystem>
#include <iomanip>
#include <map>
#include <numbers>
#include <ostream>
#include <sstream>
#include <string>
#include <vector>

namespace sipllg {

// ---------------------------------------------------------------------------
// Initial data
// ---------------------------------------------------------------------------

/// Smooth periodic texture used for the dissipation study.
inline Vec3 dissipation_initial(const Point& x)
{
    const double c = std::cos(x[0]) * std::cos(x[1]);
    return {c * std::sin(0.1), c * std::cos(0.1), std::sqrt(std::max(0.0, 1.0 - c * c))};
}

/// Compactly supported degree-one texture that may develop a point singularity:
/// (0,0,-1) for |x| >= 1/2, otherwise the stereographic profile with A = (1 - 2|x|)^4.
inline Vec3 blowup_initial(const Point& x)
{
    const double r2 = x[0] * x[0] + x[1] * x[1];
    const double r = std::sqrt(r2);
    if (r >= 0.5) {
        return {0.0, 0.0, -1.0};
    }
    const double A = std::pow(1.0 - 2.0 * r, 4);
    const double d = A * A + r2;
    return {2.0 * x[0] * A / d, 2.0 * x[1] * A / d, (A * A - r2) / d};
}

/// Bloch-type Q = 1 trial texture centred at the origin: m3(0) = -1, m3(inf) = +1,
/// a 360 degree wall of core radius R and width w,
/// theta(rho) = 2 atan(sinh(R / w) / sinh(rho / w)), azimuth phi + pi/2.
inline Vec3 skyrmion_trial(const Point& x, double radius, double width)
{
    const double rho = std::hypot(x[0], x[1]);
    const double theta = 2.0 * std::atan(std::sinh(radius / width) / std::sinh(rho / width));
    const double phi = std::atan2(x[1], x[0]) + 0.5 * std::numbers::pi;
    return {std::sin(theta) * std::cos(phi), std::sin(theta) * std::sin(phi), std::cos(theta)};
}

/// n -> (2 n3 n1, 2 n3 n2, 2 n3^2 - 1): maps a Q = 1 texture to a Q = 0 trial state.
inline Vec3 q0_transform(const Vec3& n) { return {2.0 * n.z * n.x, 2.0 * n.z * n.y, 2.0 * n.z * n.z - 1.0}; }

inline VectorField q0_transform(const VectorField& n)
{
    VectorField out(n.grid());
    for (std::size_t i = 0; i < n.size(); ++i) {
        out.set(i, q0_transform(n[i]));
    }
    return out;
}

// ---------------------------------------------------------------------------
// Manufactured solution on [0, 2pi]^2
// ---------------------------------------------------------------------------

inline Vec3 manufactured_value(const Point& x, double t)
{
    const double sx = std::sin(t + x[0]);
    const double cx = std::cos(t + x[0]);
    const double sy = std::sin(t + x[1]);
    const double cy = std::cos(t + x[1]);
    return {sx * cy, cx * cy, sy};
}

/// Residual f = m_t + beta m x Lap m + gamma m x (m x Lap m) of the exact field, evaluated analytically.
inline Vec3 manufactured_forcing(const Point& x, double t, double beta, double gamma)
{
    const Vec3 m = manufactured_value(x, t);
    const Vec3 dm_dt{std::cos(2.0 * t + x[0] + x[1]), -std::sin(2.0 * t + x[0] + x[1]), std::cos(t + x[1])};
    const Vec3 lap{-2.0 * m.x, -2.0 * m.y, -m.z};
    const Vec3 c = cross(m, lap);
    return dm_dt + beta * c + gamma * cross(m, c);
}

inline ExactSolution manufactured_solution(double beta, double gamma)
{
    ExactSolution e;
    e.value = manufactured_value;
    e.forcing = [beta, gamma](const Point& x, double t) { return manufactured_forcing(x, t, beta, gamma); };
    return e;
}

// ---------------------------------------------------------------------------
// Drivers
// ---------------------------------------------------------------------------

struct ConvergeLevel {
    int n = 0;
    double h = 0.0;
    double dt = 0.0;
    long steps = 0;
};

struct ConvergeResult {
    std::vector<ConvergeLevel> levels;
    std::vector<ErrorRecord> table;
    bool completed = false;
    bool passed = false;
    std::string message;
};

namespace exp_detail {

inline std::string real_tag(double v)
{
    std::ostringstream os;
    os << v;
    return os.str();
}

inline void write_table(const ConvergeResult& r, const std::filesystem::path& path)
{
    std::ofstream os(path);
    os << "level,nx,h,dt,steps,linf_l2,rate_linf_l2,l2_h1,rate_l2_h1\n";
    for (std::size_t k = 0; k < r.table.size(); ++k) {
        const auto& e = r.table[k];
        const auto& l = r.levels[k];
        os << k << ',' << l.n << ',' << format_real(l.h) << ',' << format_real(l.dt) << ',' << l.steps << ','
           << format_real(e.linf_l2) << ',' << (e.rate_linf_l2 ? format_real(*e.rate_linf_l2) : "") << ','
           << format_real(e.l2_h1) << ',' << (e.rate_l2_h1 ? format_real(*e.rate_l2_h1) : "") << '\n';
    }
}

inline void print_table(const ConvergeResult& r, std::ostream& log)
{
    log << std::setw(10) << "grid" << std::setw(14) << "||e||_inf(l2)" << std::setw(8) << "rate" << std::setw(14)
        << "||grad e||" << std::setw(8) << "rate" << '\n';
    for (std::size_t k = 0; k < r.table.size(); ++k) {
        const auto& e = r.table[k];
        std::ostringstream g;
        g << r.levels[k].n << 'x' << r.levels[k].n;
        log << std::setw(10) << g.str() << std::setw(14) << std::scientific << std::setprecision(3) << e.linf_l2
            << std::setw(8) << std::fixed << std::setprecision(2);
        if (e.rate_linf_l2) log << *e.rate_linf_l2; else log << "---";
        log << std::setw(14) << std::scientific << std::setprecision(3) << e.l2_h1 << std::setw(8) << std::fixed
            << std::setprecision(2);
        if (e.rate_l2_h1) log << *e.rate_l2_h1; else log << "---";
        log << '\n';
    }
    log << std::defaultfloat;
}

inline void ensure_dir(const std::filesystem::path& dir)
{
    if (!dir.empty()) {
        std::filesystem::create_directories(dir);
    }
}

} // namespace exp_detail

/// Manufactured-solution convergence study over dyadic refinements of `grid`.
inline ConvergeResult cmd_converge(const ExperimentConfig& cfg, std::ostream& log)
{
    exp_detail::ensure_dir(cfg.out_dir);
    ConvergeResult res;
    const double gamma = cfg.gammas.front();
    const ExactSolution exact = manufactured_solution(cfg.beta, gamma);
    try {
        for (int l = 0; l < cfg.levels; ++l) {
            const int nx = cfg.grid[0] << l;
            const int ny = cfg.grid[1] << l;
            const GridSpec g = cfg.grid_spec(nx, ny);
            const double nominal = cfg.time_step(g.h(), nx);
            const long steps = steps_to_reach(0.0, cfg.t_end, nominal);
            const double dt = steps > 0 ? cfg.t_end / steps : nominal;

            SchemeParams p = cfg.scheme(gamma, dt);
            p.forcing = exact.forcing;
            const VectorField m0 = VectorField::sample(g, [&](const Point& x) { return exact.value(x, 0.0); });

            ErrorAccumulator acc(exact);
            acc.record(ingest_initial(m0), 0.0);
            RunOptions opts;
            opts.t_end = cfg.t_end;
            run(m0, p, cfg.solver, opts, [&](const StepEvent& ev) {
                acc.record(ev.m_new, ev.report.time);
                return true;
            });
            res.levels.push_back({nx, g.h(), dt, steps});
            res.table.push_back(acc.result(l));
            assign_rates(res.table);
            log << "level " << l << ": " << nx << 'x' << ny << ", dt = " << dt << ", " << steps << " steps\n";
        }
        res.completed = true;
    } catch (const Error& e) {
        res.message = e.what();
        log << "convergence study aborted: " << e.what() << '\n';
    }
    exp_detail::print_table(res, log);
    exp_detail::write_table(res, cfg.out_dir / "converge.csv");

    res.passed = res.completed;
    if (res.completed && res.table.size() >= 2) {
        const auto& fin = res.table.back();
        for (double rate : {*fin.rate_linf_l2, *fin.rate_l2_h1}) {
            if (cfg.expect_rate_min && rate < *cfg.expect_rate_min) res.passed = false;
            if (cfg.expect_rate_max && rate > *cfg.expect_rate_max) res.passed = false;
        }
    }
    return res;
}

/// Worst value of each invariant over a run.
struct InvariantSummary {
    double max_length_error = 0.0;
    double min_intermediate_length = std::numeric_limits<double>::infinity();
    double max_orthogonality_error = 0.0;
    double max_gradient_growth = -std::numeric_limits<double>::infinity();
    double max_energy_increase = -std::numeric_limits<double>::infinity();
    long failures = 0;
    long first_failure_step = -1;
    std::string first_failure;

    void absorb(const InvariantReport& rep, long step)
    {
        for (const auto& c : rep.checks) {
            if (c.name == "length") max_length_error = std::max(max_length_error, c.value);
            else if (c.name == "intermediate_length") min_intermediate_length = std::min(min_intermediate_length, c.value);
            else if (c.name == "orthogonal_increment") max_orthogonality_error = std::max(max_orthogonality_error, c.value);
            else if (c.name == "gradient_reduction") max_gradient_growth = std::max(max_gradient_growth, c.value);
            else if (c.name == "energy_dissipation") max_energy_increase = std::max(max_energy_increase, c.value);
            if (!c.passed) {
                ++failures;
                if (first_failure_step < 0) {
                    first_failure_step = step;
                    first_failure = c.name;
                }
            }
        }
    }
};

struct EnergySeries {
    double gamma = 0.0;
    std::vector<double> times;
    std::vector<double> energies;
    double max_increase = -std::numeric_limits<double>::infinity();
    long worst_step = -1;
    InvariantSummary invariants;
    bool monotone = true;
};

namespace exp_detail {

/// Tracks energy monotonicity and (optionally) the invariant suite for every step.
struct Monitor {
    EnergySeries series;
    const ExperimentConfig& cfg;
    bool invariants_apply = false;

    void start(double t, double e)
    {
        series.times.push_back(t);
        series.energies.push_back(e);
    }

    void observe(const StepEvent& ev)
    {
        const double de = ev.report.energy - ev.previous_energy;
        if (de > series.max_increase) {
            series.max_increase = de;
            series.worst_step = ev.report.step_index;
        }
        if (de > cfg.energy_tol) {
            series.monotone = false;
        }
        series.times.push_back(ev.report.time);
        series.energies.push_back(ev.report.energy);
        if (invariants_apply) {
            series.invariants.absorb(invariant_suite(ev.m_prev, ev.m_tilde, ev.m_new, ev.previous_energy,
                                                     ev.report.energy, {.energy_increase = cfg.energy_tol}),
                                     ev.report.step_index);
        }
    }
};

inline Snapshot load_checkpoint(const std::filesystem::path& path, const GridSpec& g, const SchemeParams& p)
{
    Snapshot s = read_snapshot(path);
    if (!(s.field.grid() == g)) {
        throw ConfigError("checkpoint grid does not match the configured grid");
    }
    if (s.params_hash && *s.params_hash != params_hash(g, p)) {
        throw ConfigError("checkpoint was written with different scheme parameters");
    }
    return s;
}

inline void save_checkpoint(const std::filesystem::path& path, const VectorField& m, double t, long step,
                            const SchemeParams& p)
{
    write_snapshot({m, t, step, params_hash(m.grid(), p)}, path);
}

} // namespace exp_detail

struct DissipateResult {
    std::vector<EnergySeries> runs;
    bool passed = false;
    bool final_ordering_ok = true;
    std::string message;
};

inline DissipateResult cmd_dissipate(const ExperimentConfig& cfg, std::ostream& log,
                                     const std::filesystem::path& resume = {})
{
    exp_detail::ensure_dir(cfg.out_dir);
    DissipateResult res;
    if (!resume.empty() && cfg.gammas.size() != 1) {
        throw ConfigError("--resume needs a single gamma value for dissipate", 0, "gamma");
    }
    const GridSpec g = cfg.grid_spec();
    res.passed = true;
    for (double gamma : cfg.gammas) {
        const SchemeParams p = cfg.scheme(gamma, cfg.time_step(g.h()));
        VectorField m0 = VectorField::sample(g, dissipation_initial);
        RunOptions opts;
        opts.t_end = cfg.t_end;
        opts.allow_nonunit_initial = cfg.allow_nonunit;
        opts.max_steps = cfg.max_steps;
        if (!resume.empty()) {
            const Snapshot s = exp_detail::load_checkpoint(resume, g, p);
            m0 = s.field;
            opts.t_start = s.time;
            opts.start_step = s.step;
        }
        exp_detail::Monitor mon{{}, cfg};
        mon.series.gamma = gamma;
        mon.invariants_apply = cfg.check_invariants && !is_extended(p.model) && !p.forcing;

        const auto csv_path = cfg.out_dir / ("dissipate_gamma_" + exp_detail::real_tag(gamma) + ".csv");
        CsvSeries csv(csv_path, false);
        const VectorField start = ingest_initial(m0, cfg.allow_nonunit);
        const StepReport r0 = initial_report(start, p.model, opts.start_step, opts.t_start);
        csv.write(r0);
        mon.start(opts.t_start, r0.energy);

        const RunResult rr = run(start, p, cfg.solver, opts, [&](const StepEvent& ev) {
            mon.observe(ev);
            if (ev.report.step_index % cfg.cadence == 0) {
                csv.write(ev.report);
            }
            if (cfg.checkpoint_every > 0 && ev.report.step_index % cfg.checkpoint_every == 0) {
                exp_detail::save_checkpoint(cfg.out_dir / ("dissipate_gamma_" + exp_detail::real_tag(gamma) +
                                                           "_checkpoint.snap"),
                                            ev.m_new, ev.report.time, ev.report.step_index, p);
            }
            return true;
        });
        exp_detail::save_checkpoint(cfg.out_dir / ("dissipate_gamma_" + exp_detail::real_tag(gamma) +
                                                   "_checkpoint.snap"),
                                    rr.final_state, rr.final_time, rr.final_step, p);

        log << "gamma = " << gamma << ": E0 = " << mon.series.energies.front()
            << ", E_end = " << mon.series.energies.back() << ", max step increase = " << mon.series.max_increase;
        if (!mon.series.monotone) {
            log << "  VIOLATION at step " << mon.series.worst_step;
            res.passed = false;
            res.message += "energy increased beyond tolerance at step " + std::to_string(mon.series.worst_step) +
                           " (gamma = " + exp_detail::real_tag(gamma) + "); ";
        }
        if (mon.series.invariants.failures > 0) {
            log << "  invariant '" << mon.series.invariants.first_failure << "' failed at step "
                << mon.series.invariants.first_failure_step;
            res.passed = false;
            res.message += "invariant " + mon.series.invariants.first_failure + " failed at step " +
                           std::to_string(mon.series.invariants.first_failure_step) + "; ";
        }
        log << '\n';
        res.runs.push_back(std::move(mon.series));
    }

    if (res.runs.size() >= 2) {
        const auto lo = std::min_element(res.runs.begin(), res.runs.end(),
                                         [](const auto& a, const auto& b) { return a.gamma < b.gamma; });
        const auto hi = std::max_element(res.runs.begin(), res.runs.end(),
                                         [](const auto& a, const auto& b) { return a.gamma < b.gamma; });
        res.final_ordering_ok = hi->energies.back() <= lo->energies.back() + cfg.energy_tol;
        log << "final energy: gamma = " << hi->gamma << " -> " << hi->energies.back() << ", gamma = " << lo->gamma
            << " -> " << lo->energies.back() << (res.final_ordering_ok ? "" : "  ORDERING VIOLATED") << '\n';
        if (!res.final_ordering_ok) {
            res.passed = false;
            res.message += "larger damping did not end at lower energy; ";
        }
    }
    return res;
}

struct BlowupResult {
    EnergySeries energy;
    std::vector<std::filesystem::path> snapshots;
    std::vector<double> snapshot_times;
    double initial_snapshot_error = 0.0;
    bool passed = false;
    std::string message;
};

inline BlowupResult cmd_blowup(const ExperimentConfig& cfg, std::ostream& log, const std::filesystem::path& resume = {})
{
    exp_detail::ensure_dir(cfg.out_dir);
    BlowupResult res;
    const GridSpec g = cfg.grid_spec();
    const SchemeParams p = cfg.scheme(cfg.gammas.front(), cfg.time_step(g.h()));
    const VectorField analytic = VectorField::sample(g, blowup_initial);
    VectorField m0 = analytic;
    RunOptions opts;
    opts.t_end = cfg.t_end;
    opts.max_steps = cfg.max_steps;
    opts.allow_nonunit_initial = cfg.allow_nonunit;
    if (!resume.empty()) {
        const Snapshot s = exp_detail::load_checkpoint(resume, g, p);
        m0 = s.field;
        opts.t_start = s.time;
        opts.start_step = s.step;
    }

    // snapshot time -> step index
    std::map<long, double> wanted;
    for (double t : cfg.snapshot_times) {
        wanted[std::lround(t / p.dt)] = t;
    }
    const auto snap_name = [&](double t) {
        std::ostringstream os;
        os << "blowup_t" << std::fixed << std::setprecision(4) << t << ".snap";
        return cfg.out_dir / os.str();
    };
    const auto emit = [&](const VectorField& m, long step, double t) {
        const auto it = wanted.find(step);
        if (it == wanted.end()) {
            return;
        }
        const auto path = snap_name(it->second);
        write_snapshot({m, t, step, std::nullopt}, path, cfg.snapshot_format);
        res.snapshots.push_back(path);
        res.snapshot_times.push_back(it->second);
        log << "snapshot t = " << it->second << " -> " << path.string() << '\n';
    };

    exp_detail::Monitor mon{{}, cfg};
    mon.series.gamma = p.gamma;
    mon.invariants_apply = cfg.check_invariants && !is_extended(p.model);
    CsvSeries csv(cfg.out_dir / "blowup_energy.csv", false);

    const VectorField start = ingest_initial(m0, cfg.allow_nonunit);
    if (resume.empty()) {
        for (std::size_t i = 0; i < start.raw().size(); ++i) {
            res.initial_snapshot_error =
                std::max(res.initial_snapshot_error, std::abs(start.raw()[i] - analytic.raw()[i]));
        }
    }
    const StepReport r0 = initial_report(start, p.model, opts.start_step, opts.t_start);
    csv.write(r0);
    mon.start(opts.t_start, r0.energy);
    emit(start, opts.start_step, opts.t_start);

    const RunResult rr = run(start, p, cfg.solver, opts, [&](const StepEvent& ev) {
        mon.observe(ev);
        if (ev.report.step_index % cfg.cadence == 0) {
            csv.write(ev.report);
        }
        emit(ev.m_new, ev.report.step_index, ev.report.time);
        if (cfg.checkpoint_every > 0 && ev.report.step_index % cfg.checkpoint_every == 0) {
            exp_detail::save_checkpoint(cfg.out_dir / "blowup_checkpoint.snap", ev.m_new, ev.report.time,
                                        ev.report.step_index, p);
        }
        return true;
    });
    exp_detail::save_checkpoint(cfg.out_dir / "blowup_checkpoint.snap", rr.final_state, rr.final_time, rr.final_step,
                                p);

    res.passed = mon.series.monotone && mon.series.invariants.failures == 0;
    log << "blowup: E0 = " << mon.series.energies.front() << ", E_end = " << mon.series.energies.back()
        << ", max step increase = " << mon.series.max_increase << ", snapshots written: " << res.snapshots.size()
        << '\n';
    if (!mon.series.monotone) {
        res.message += "energy increased at step " + std::to_string(mon.series.worst_step) + "; ";
    }
    if (mon.series.invariants.failures > 0) {
        res.message += "invariant " + mon.series.invariants.first_failure + " failed at step " +
                       std::to_string(mon.series.invariants.first_failure_step) + "; ";
    }
    res.energy = std::move(mon.series);
    return res;
}

struct SkyrmionResult {
    EnergySeries energy;
    std::vector<double> charges;
    double final_charge = 0.0;
    long steps = 0;
    bool converged = false;
    double last_increment_rate = 0.0;
    /// max |m3(+x axis) - m3(+y axis)| sampled outward from the centre.
    double axial_asymmetry = 0.0;
    VectorField relaxed;
    std::filesystem::path snapshot;
    bool passed = false;
    std::string message;
};

/// Compare m3 along the +x and +y half-axes through the lattice centre.
/// For even counts the centre is a cell centre and the rows straddling it are used.
inline double axial_asymmetry(const VectorField& m)
{
    const GridSpec& g = m.grid();
    const int n = g.counts[0];
    if (g.counts[1] != n) {
        throw StructuralError("axial_asymmetry needs a square lattice");
    }
    const int lo = (n - 1) / 2;
    const int hi = n / 2;
    double worst = 0.0;
    for (int r = hi; r < n; ++r) {
        // rotation by 90 degrees about the centre maps node (r, hi) to (lo, r)
        worst = std::max(worst, std::abs(m.at(r, hi).z - m.at(lo, r).z));
    }
    return worst;
}

inline SkyrmionResult cmd_skyrmion(const ExperimentConfig& cfg, std::ostream& log,
                                   const std::filesystem::path& resume = {})
{
    exp_detail::ensure_dir(cfg.out_dir);
    SkyrmionResult res;
    const GridSpec g = cfg.grid_spec();
    const SchemeParams p = cfg.scheme(cfg.gammas.front(), cfg.time_step(g.h()));
    const std::string tag = cfg.mode == SkyrmionMode::Q1 ? "Q1" : "Q0";

    VectorField m0;
    RunOptions opts;
    opts.t_end = cfg.t_end;
    opts.steady_tol = cfg.steady_tol;
    opts.max_steps = cfg.max_steps;
    opts.allow_nonunit_initial = cfg.allow_nonunit;
    if (!resume.empty()) {
        const Snapshot s = exp_detail::load_checkpoint(resume, g, p);
        m0 = s.field;
        opts.t_start = s.time;
        opts.start_step = s.step;
    } else if (cfg.mode == SkyrmionMode::Q1) {
        m0 = VectorField::sample(g, [&](const Point& x) { return skyrmion_trial(x, cfg.profile_radius, cfg.profile_width); });
    } else {
        const Snapshot n = read_snapshot(cfg.input);
        if (!(n.field.grid() == g)) {
            throw ConfigError("input snapshot grid does not match the configured grid", 0, "input");
        }
        m0 = q0_transform(n.field);
    }

    exp_detail::Monitor mon{{}, cfg};
    mon.series.gamma = p.gamma;
    mon.invariants_apply = false;
    CsvSeries csv(cfg.out_dir / ("skyrmion_" + tag + ".csv"), true);

    const VectorField start = ingest_initial(m0, cfg.allow_nonunit);
    StepReport r0 = initial_report(start, p.model, opts.start_step, opts.t_start);
    const double q0 = skyrmion_number(start);
    csv.write(r0, q0);
    res.charges.push_back(q0);
    mon.start(opts.t_start, r0.energy);
    log << "skyrmion " << tag << ": initial Q = " << q0 << ", E = " << r0.energy << '\n';

    const auto checkpoint_path = cfg.out_dir / ("skyrmion_" + tag + "_checkpoint.snap");
    RunResult rr;
    VectorField last = start;
    double last_time = opts.t_start;
    long last_step = opts.start_step;
    try {
        rr = run(start, p, cfg.solver, opts, [&](const StepEvent& ev) {
            mon.observe(ev);
            last = ev.m_new;
            last_time = ev.report.time;
            last_step = ev.report.step_index;
            if (ev.report.step_index % cfg.cadence == 0) {
                const double q = skyrmion_number(ev.m_new);
                res.charges.push_back(q);
                csv.write(ev.report, q);
            }
            if (cfg.checkpoint_every > 0 && ev.report.step_index % cfg.checkpoint_every == 0) {
                exp_detail::save_checkpoint(checkpoint_path, ev.m_new, ev.report.time, ev.report.step_index, p);
            }
            return true;
        });
    } catch (const Error& e) {
        res.message = e.what();
        log << "skyrmion run failed: " << e.what() << '\n';
        exp_detail::save_checkpoint(checkpoint_path, last, last_time, last_step, p);
        res.energy = std::move(mon.series);
        return res;
    }

    res.steps = rr.steps_taken;
    res.converged = rr.steady_state_reached;
    res.last_increment_rate = rr.last_increment_rate;
    res.final_charge = skyrmion_number(rr.final_state);
    if (rr.reports.empty() || rr.reports.back().step_index % cfg.cadence != 0) {
        if (!rr.reports.empty()) {
            csv.write(rr.reports.back(), res.final_charge);
        }
        res.charges.push_back(res.final_charge);
    }
    res.axial_asymmetry = axial_asymmetry(rr.final_state);
    res.snapshot = cfg.out_dir / ("skyrmion_" + tag + "_relaxed.snap");
    write_snapshot({rr.final_state, rr.final_time, rr.final_step, std::nullopt}, res.snapshot, cfg.snapshot_format);
    exp_detail::save_checkpoint(checkpoint_path, rr.final_state, rr.final_time, rr.final_step, p);
    res.relaxed = std::move(rr.final_state);

    log << "skyrmion " << tag << ": " << res.steps << " steps, " << (res.converged ? "steady" : "NOT steady")
        << " (rate " << res.last_increment_rate << "), Q = " << res.final_charge
        << ", E = " << mon.series.energies.back() << ", max step energy increase = " << mon.series.max_increase
        << '\n';
    res.passed = res.converged && mon.series.monotone;
    if (!res.converged) {
        res.message += "steady state not reached within the step budget; ";
    }
    if (!mon.series.monotone) {
        res.message += "energy increased at step " + std::to_string(mon.series.worst_step) + "; ";
    }
    res.energy = std::move(mon.series);
    return res;
}

} // namespace sipllg
