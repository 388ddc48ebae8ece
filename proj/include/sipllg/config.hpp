/// @file config.hpp
/// @brief Flat `key = value` experiment configuration with a typed schema.
///
/// Lines are `key = value`, `#` starts a comment. Every experiment starts from
/// the defaults of its kind; keys in the file (then --override pairs) replace them.
///
/// Keys and units (lengths in the domain's units, times in the equation's time units):
///   experiment          converge | dissipate | blowup | skyrmion
///   grid                nodes per axis: "Nx Ny" (required)
///   domain.lo, domain.hi box corners "x y"; reals accept "pi", "2pi", "2*pi", "pi/2"
///   boundary            periodic | neumann
///   dt_policy           fixed | h_squared | h_linear | inverse_n   (inverse_n: dt = 1/nx)
///   dt                  time step for dt_policy = fixed
///   t_end               final time
///   beta                precession (exchange) parameter
///   gamma               damping; a list runs one simulation per value (dissipate)
///   model               exchange | extended
///   kappa, lambda       anisotropy and chirality of the extended model
///   zeeman              external field coefficient "hx hy hz"
///   solver.method       gmres | bicgstab
///   solver.rel_tol, solver.max_iter, solver.restart
///   solver.preconditioner none | diffusion
///   levels              number of dyadic refinements (converge)
///   expect_rate_min, expect_rate_max   optional pass band for the finest rates (converge)
///   steady_tol          stop once ||m^n - m^{n-1}||_2 / dt falls below this
///   max_steps           step budget (0 = unlimited)
///   mode                Q1 | Q0 (skyrmion); Q0 needs `input`
///   input               snapshot path of a relaxed Q1 state
///   profile_radius, profile_width   core radius and wall width of the initial Q1 texture
///   snapshot_times      list of times at which snapshots are written
///   energy_tol          allowed per-step energy increase
///   check_invariants    true | false
///   allow_nonunit       accept initial data far from unit length (renormalized)
///   output.dir, output.cadence (CSV row every k steps), output.format text | binary,
///   output.checkpoint_every (steps, 0 = only at the end)
#pragma once

#include "sipllg/effective_field.hpp"
#include "sipllg/errors.hpp"
#include "sipllg/grid.hpp"
#include "sipllg/io.hpp"
#include "sipllg/krylov.hpp"
#include "sipllg/stepper.hpp"

#include <array>
#include <cstdint>
#include <filesystem>
#include <fstream>
#include <numbers>
#include <optional>
#include <sstream>
#include <string>
#include <utility>
#include <vector>

namespace sipllg {

enum class ExperimentKind { Converge, Dissipate, Blowup, Skyrmion };
enum class DtPolicy { Fixed, HSquared, HLinear, InverseN };
enum class SkyrmionMode { Q1, Q0 };

inline std::string to_string(ExperimentKind k)
{
    switch (k) {
    case ExperimentKind::Converge: return "converge";
    case ExperimentKind::Dissipate: return "dissipate";
    case ExperimentKind::Blowup: return "blowup";
    case ExperimentKind::Skyrmion: return "skyrmion";
    }
    return "?";
}

inline std::optional<ExperimentKind> experiment_from_string(const std::string& s)
{
    if (s == "converge") return ExperimentKind::Converge;
    if (s == "dissipate") return ExperimentKind::Dissipate;
    if (s == "blowup") return ExperimentKind::Blowup;
    if (s == "skyrmion") return ExperimentKind::Skyrmion;
    return std::nullopt;
}

struct ExperimentConfig {
    ExperimentKind experiment = ExperimentKind::Dissipate;
    std::array<double, 2> lo{0.0, 0.0};
    std::array<double, 2> hi{1.0, 1.0};
    std::array<int, 2> grid{8, 8};
    Boundary boundary = Boundary::Periodic;

    DtPolicy dt_policy = DtPolicy::Fixed;
    double dt = 0.01;
    double t_end = 1.0;

    double beta = 1.0;
    std::vector<double> gammas{1.0};
    FieldModel model = ExchangeOnly{};
    SolverConfig solver{};

    int levels = 1;
    std::optional<double> expect_rate_min;
    std::optional<double> expect_rate_max;

    std::optional<double> steady_tol;
    long max_steps = 0;
    SkyrmionMode mode = SkyrmionMode::Q1;
    std::string input;
    double profile_radius = 1.5;
    double profile_width = 0.6;
    std::vector<double> snapshot_times;

    double energy_tol = 1e-8;
    bool check_invariants = true;
    bool allow_nonunit = false;

    std::filesystem::path out_dir = "out";
    long cadence = 1;
    SnapshotFormat snapshot_format = SnapshotFormat::Text;
    long checkpoint_every = 0;

    /// Node spacing implied by domain, counts and boundary along axis a.
    double spacing(int a, int count) const
    {
        const double len = hi[a] - lo[a];
        return boundary == Boundary::Periodic ? len / count : len / (count - 1);
    }

    GridSpec grid_spec(int nx, int ny) const
    {
        GridSpec g;
        g.dim = 2;
        g.counts = {nx, ny, 1};
        g.spacing = {spacing(0, nx), spacing(1, ny), 1.0};
        g.origin = {lo[0], lo[1], 0.0};
        g.boundary = boundary;
        g.validate();
        return g;
    }

    GridSpec grid_spec() const { return grid_spec(grid[0], grid[1]); }

    /// Time step for a grid of spacing h and nx nodes along x under the configured policy.
    double time_step(double h, int nx = 0) const
    {
        switch (dt_policy) {
        case DtPolicy::HSquared: return h * h;
        case DtPolicy::HLinear: return h;
        case DtPolicy::InverseN: return 1.0 / (nx > 0 ? nx : grid[0]);
        case DtPolicy::Fixed: break;
        }
        return dt;
    }

    SchemeParams scheme(double gamma, double step) const
    {
        SchemeParams p;
        p.beta = beta;
        p.gamma = gamma;
        p.dt = step;
        p.model = model;
        return p;
    }

    static ExperimentConfig defaults(ExperimentKind kind)
    {
        constexpr double two_pi = 2.0 * std::numbers::pi;
        ExperimentConfig c;
        c.experiment = kind;
        switch (kind) {
        case ExperimentKind::Converge:
            c.lo = {0.0, 0.0};
            c.hi = {two_pi, two_pi};
            c.grid = {8, 8};
            c.boundary = Boundary::Periodic;
            c.dt_policy = DtPolicy::HSquared;
            c.t_end = 1.0;
            c.beta = 1.0;
            c.gammas = {1.0};
            c.levels = 5;
            c.check_invariants = false;
            break;
        case ExperimentKind::Dissipate:
            c.lo = {0.0, 0.0};
            c.hi = {two_pi, two_pi};
            c.grid = {100, 100};
            c.boundary = Boundary::Periodic;
            c.dt = 0.01;
            c.t_end = 1.0;
            c.beta = 1.0;
            c.gammas = {0.1, 0.5, 1.0, 10.0};
            break;
        case ExperimentKind::Blowup:
            c.lo = {-0.5, -0.5};
            c.hi = {0.5, 0.5};
            c.grid = {257, 257};
            c.boundary = Boundary::Neumann;
            c.dt = 1e-4;
            c.t_end = 0.35;
            c.beta = 1.0;
            c.gammas = {1.0};
            c.snapshot_times = {0.0, 0.06, 0.15, 0.30, 0.32, 0.35};
            c.cadence = 10;
            break;
        case ExperimentKind::Skyrmion:
            c.lo = {-12.75, -12.75};
            c.hi = {12.75, 12.75};
            c.grid = {256, 256};
            c.boundary = Boundary::Neumann;
            c.dt = 0.01;
            c.t_end = 1e4;
            c.beta = 0.0;
            c.gammas = {1.0};
            c.model = Extended{3.0, 1.0, {}};
            c.steady_tol = 1e-6;
            c.max_steps = 200000;
            c.energy_tol = 1e-6;
            c.check_invariants = false;
            c.cadence = 100;
            break;
        }
        return c;
    }
};

namespace config_detail {

struct Entry {
    std::string key;
    std::string value;
    int line = 0;
};

inline std::string trim(const std::string& s)
{
    const auto b = s.find_first_not_of(" \t\r");
    if (b == std::string::npos) {
        return {};
    }
    const auto e = s.find_last_not_of(" \t\r");
    return s.substr(b, e - b + 1);
}

/// Real number, optionally written as a multiple or fraction of pi.
inline double real_value(const std::string& tok)
{
    const auto p = tok.find("pi");
    if (p == std::string::npos) {
        return parse_real(tok);
    }
    std::string head = tok.substr(0, p);
    std::string tail = tok.substr(p + 2);
    double factor = 1.0;
    if (!head.empty() && head.back() == '*') {
        head.pop_back();
    }
    if (head == "-") {
        factor = -1.0;
    } else if (!head.empty() && head != "+") {
        factor = parse_real(head);
    }
    double v = factor * std::numbers::pi;
    if (!tail.empty()) {
        if (tail[0] != '/') {
            throw ConfigError("not a real number: '" + tok + "'");
        }
        v /= parse_real(tail.substr(1));
    }
    return v;
}

inline std::vector<std::string> tokens(const std::string& v) { return io_detail::split(v); }

} // namespace config_detail

inline std::string canonical_scheme_string(const GridSpec& g, const SchemeParams& p)
{
    std::ostringstream os;
    os << "dim=" << g.dim << ";counts=" << g.counts[0] << ',' << g.counts[1] << ',' << g.counts[2]
       << ";h=" << format_real(g.spacing[0]) << ";boundary=" << to_string(g.boundary)
       << ";beta=" << format_real(p.beta) << ";gamma=" << format_real(p.gamma) << ";dt=" << format_real(p.dt);
    if (const auto* e = std::get_if<Extended>(&p.model)) {
        os << ";model=extended;kappa=" << format_real(e->kappa) << ";lambda=" << format_real(e->lambda)
           << ";zeeman=" << format_real(e->zeeman.x) << ',' << format_real(e->zeeman.y) << ','
           << format_real(e->zeeman.z);
    } else {
        os << ";model=exchange";
    }
    return os.str();
}

/// 64-bit FNV-1a of the canonical scheme description, as 16 hex digits.
inline std::string params_hash(const GridSpec& g, const SchemeParams& p)
{
    std::uint64_t h = 1469598103934665603ull;
    for (unsigned char c : canonical_scheme_string(g, p)) {
        h ^= c;
        h *= 1099511628211ull;
    }
    static constexpr char hex[] = "0123456789abcdef";
    std::string out(16, '0');
    for (int i = 15; i >= 0; --i) {
        out[i] = hex[h & 0xf];
        h >>= 4;
    }
    return out;
}

/// Parse configuration text. `fallback` supplies the experiment when the text has no `experiment` key.
inline ExperimentConfig parse_config_text(const std::string& text, const std::vector<std::string>& overrides = {},
                                          std::optional<ExperimentKind> fallback = std::nullopt)
{
    using namespace config_detail;
    std::vector<Entry> entries;
    std::istringstream is(text);
    std::string line;
    int lineno = 0;
    while (std::getline(is, line)) {
        ++lineno;
        const auto hash = line.find('#');
        if (hash != std::string::npos) {
            line.erase(hash);
        }
        line = trim(line);
        if (line.empty()) {
            continue;
        }
        const auto eq = line.find('=');
        if (eq == std::string::npos) {
            throw ConfigError("line " + std::to_string(lineno) + ": expected 'key = value'", lineno);
        }
        entries.push_back({trim(line.substr(0, eq)), trim(line.substr(eq + 1)), lineno});
    }
    for (const auto& o : overrides) {
        const auto eq = o.find('=');
        if (eq == std::string::npos) {
            throw ConfigError("override '" + o + "': expected key=value");
        }
        entries.push_back({trim(o.substr(0, eq)), trim(o.substr(eq + 1)), 0});
    }

    std::optional<ExperimentKind> kind = fallback;
    bool has_grid = false;
    for (const auto& e : entries) {
        if (e.key == "experiment") {
            const auto k = experiment_from_string(e.value);
            if (!k) {
                throw ConfigError("line " + std::to_string(e.line) + ": unknown experiment '" + e.value + "'", e.line,
                                  e.key);
            }
            if (fallback && *k != *fallback) {
                throw ConfigError("config is for experiment '" + e.value + "' but '" + to_string(*fallback) +
                                      "' was requested",
                                  e.line, e.key);
            }
            kind = k;
        }
        if (e.key == "grid") {
            has_grid = true;
        }
    }
    if (!kind) {
        throw ConfigError("missing required key 'experiment'", 0, "experiment");
    }
    if (!has_grid) {
        throw ConfigError("missing required key 'grid'", 0, "grid");
    }

    ExperimentConfig c = ExperimentConfig::defaults(*kind);
    Extended ext = std::holds_alternative<Extended>(c.model) ? std::get<Extended>(c.model) : Extended{};
    bool extended = is_extended(c.model);

    for (const auto& e : entries) {
        const auto where = [&](const std::string& msg) {
            const std::string loc = e.line > 0 ? "line " + std::to_string(e.line) : std::string("override");
            return ConfigError(loc + ", key '" + e.key + "': " + msg, e.line, e.key);
        };
        try {
            const auto t = tokens(e.value);
            auto want = [&](std::size_t n) {
                if (t.size() != n) {
                    throw where("expected " + std::to_string(n) + " value(s)");
                }
            };
            auto reals = [&]() {
                if (t.empty()) {
                    throw where("expected at least one value");
                }
                std::vector<double> v;
                for (const auto& s : t) {
                    v.push_back(real_value(s));
                }
                return v;
            };
            auto boolean = [&]() {
                want(1);
                if (t[0] == "true" || t[0] == "1") return true;
                if (t[0] == "false" || t[0] == "0") return false;
                throw where("expected true or false");
            };
            const std::string& k = e.key;
            if (k == "experiment") {
                // handled above
            } else if (k == "grid") {
                want(2);
                c.grid = {static_cast<int>(parse_integer(t[0])), static_cast<int>(parse_integer(t[1]))};
                if (c.grid[0] < 2 || c.grid[1] < 2) {
                    throw where("need at least 2 nodes per axis");
                }
            } else if (k == "domain.lo" || k == "domain.hi") {
                want(2);
                auto& dst = k == "domain.lo" ? c.lo : c.hi;
                dst = {real_value(t[0]), real_value(t[1])};
            } else if (k == "boundary") {
                want(1);
                if (t[0] == "periodic") c.boundary = Boundary::Periodic;
                else if (t[0] == "neumann") c.boundary = Boundary::Neumann;
                else throw where("expected periodic or neumann");
            } else if (k == "dt_policy") {
                want(1);
                if (t[0] == "fixed") c.dt_policy = DtPolicy::Fixed;
                else if (t[0] == "h_squared") c.dt_policy = DtPolicy::HSquared;
                else if (t[0] == "h_linear") c.dt_policy = DtPolicy::HLinear;
                else if (t[0] == "inverse_n") c.dt_policy = DtPolicy::InverseN;
                else throw where("expected fixed, h_squared, h_linear or inverse_n");
            } else if (k == "dt") {
                want(1);
                c.dt = real_value(t[0]);
                if (!(c.dt > 0.0)) throw where("must be positive");
            } else if (k == "t_end") {
                want(1);
                c.t_end = real_value(t[0]);
                if (!(c.t_end >= 0.0)) throw where("must be non-negative");
            } else if (k == "beta") {
                want(1);
                c.beta = real_value(t[0]);
            } else if (k == "gamma") {
                c.gammas = reals();
                for (double g : c.gammas) {
                    if (!(g > 0.0)) throw where("damping must be positive");
                }
            } else if (k == "model") {
                want(1);
                if (t[0] == "exchange") extended = false;
                else if (t[0] == "extended") extended = true;
                else throw where("expected exchange or extended");
            } else if (k == "kappa") {
                want(1);
                ext.kappa = real_value(t[0]);
                if (!(ext.kappa >= 0.0)) throw where("must be non-negative");
            } else if (k == "lambda") {
                want(1);
                ext.lambda = real_value(t[0]);
                if (std::abs(ext.lambda) != 1.0) throw where("must be +1 or -1");
            } else if (k == "zeeman") {
                want(3);
                ext.zeeman = {real_value(t[0]), real_value(t[1]), real_value(t[2])};
            } else if (k == "solver.method") {
                want(1);
                if (t[0] == "gmres") c.solver.method = KrylovMethod::Gmres;
                else if (t[0] == "bicgstab") c.solver.method = KrylovMethod::Bicgstab;
                else throw where("expected gmres or bicgstab");
            } else if (k == "solver.rel_tol") {
                want(1);
                c.solver.rel_tol = real_value(t[0]);
                if (!(c.solver.rel_tol > 0.0 && c.solver.rel_tol < 1.0)) throw where("must lie in (0, 1)");
            } else if (k == "solver.max_iter") {
                want(1);
                c.solver.max_iter = static_cast<int>(parse_integer(t[0]));
                if (c.solver.max_iter < 1) throw where("must be >= 1");
            } else if (k == "solver.restart") {
                want(1);
                c.solver.restart = static_cast<int>(parse_integer(t[0]));
                if (c.solver.restart < 1) throw where("must be >= 1");
            } else if (k == "solver.preconditioner") {
                want(1);
                if (t[0] == "none") c.solver.diffusion_preconditioner = false;
                else if (t[0] == "diffusion") c.solver.diffusion_preconditioner = true;
                else throw where("expected none or diffusion");
            } else if (k == "levels") {
                want(1);
                c.levels = static_cast<int>(parse_integer(t[0]));
                if (c.levels < 1) throw where("must be >= 1");
            } else if (k == "expect_rate_min") {
                want(1);
                c.expect_rate_min = real_value(t[0]);
            } else if (k == "expect_rate_max") {
                want(1);
                c.expect_rate_max = real_value(t[0]);
            } else if (k == "steady_tol") {
                want(1);
                const double v = real_value(t[0]);
                if (v > 0.0) c.steady_tol = v;
                else c.steady_tol.reset();
            } else if (k == "max_steps") {
                want(1);
                c.max_steps = parse_integer(t[0]);
                if (c.max_steps < 0) throw where("must be >= 0");
            } else if (k == "mode") {
                want(1);
                if (t[0] == "Q1") c.mode = SkyrmionMode::Q1;
                else if (t[0] == "Q0") c.mode = SkyrmionMode::Q0;
                else throw where("expected Q1 or Q0");
            } else if (k == "input") {
                want(1);
                c.input = t[0];
            } else if (k == "profile_radius") {
                want(1);
                c.profile_radius = real_value(t[0]);
                if (!(c.profile_radius > 0.0)) throw where("must be positive");
            } else if (k == "profile_width") {
                want(1);
                c.profile_width = real_value(t[0]);
                if (!(c.profile_width > 0.0)) throw where("must be positive");
            } else if (k == "snapshot_times") {
                c.snapshot_times = t.empty() ? std::vector<double>{} : reals();
            } else if (k == "energy_tol") {
                want(1);
                c.energy_tol = real_value(t[0]);
            } else if (k == "check_invariants") {
                c.check_invariants = boolean();
            } else if (k == "allow_nonunit") {
                c.allow_nonunit = boolean();
            } else if (k == "output.dir") {
                want(1);
                c.out_dir = t[0];
            } else if (k == "output.cadence") {
                want(1);
                c.cadence = parse_integer(t[0]);
                if (c.cadence < 1) throw where("must be >= 1");
            } else if (k == "output.format") {
                want(1);
                if (t[0] == "text") c.snapshot_format = SnapshotFormat::Text;
                else if (t[0] == "binary") c.snapshot_format = SnapshotFormat::Binary;
                else throw where("expected text or binary");
            } else if (k == "output.checkpoint_every") {
                want(1);
                c.checkpoint_every = parse_integer(t[0]);
                if (c.checkpoint_every < 0) throw where("must be >= 0");
            } else {
                throw where("unknown key");
            }
        } catch (const ConfigError& err) {
            if (err.line() != 0 || !err.key().empty()) {
                throw;
            }
            const std::string loc = e.line > 0 ? "line " + std::to_string(e.line) : std::string("override");
            throw ConfigError(loc + ", key '" + e.key + "': " + err.what(), e.line, e.key);
        }
    }

    if (extended) {
        c.model = ext;
    } else {
        c.model = ExchangeOnly{};
    }
    for (int a = 0; a < 2; ++a) {
        if (!(c.hi[a] > c.lo[a])) {
            throw ConfigError("domain extents must be positive", 0, "domain.hi");
        }
    }
    if (c.mode == SkyrmionMode::Q0 && c.experiment == ExperimentKind::Skyrmion && c.input.empty()) {
        throw ConfigError("mode Q0 needs 'input' (a relaxed Q1 snapshot)", 0, "input");
    }
    return c;
}

inline ExperimentConfig parse_config(const std::filesystem::path& path, const std::vector<std::string>& overrides = {},
                                     std::optional<ExperimentKind> fallback = std::nullopt)
{
    std::ifstream is(path);
    if (!is) {
        throw ConfigError("cannot open config '" + path.string() + "'");
    }
    std::ostringstream ss;
    ss << is.rdbuf();
    return parse_config_text(ss.str(), overrides, fallback);
}

} // namespace sipllg
