/// @file diagnostics.hpp
/// @brief Error norms against exact solutions, skyrmion number and the per-step invariant checks.
#pragma once

#include "sipllg/effective_field.hpp"
#include "sipllg/errors.hpp"
#include "sipllg/grid.hpp"
#include "sipllg/grid_ops.hpp"
#include "sipllg/stepper.hpp"

#include <algorithm>
#include <cmath>
#include <functional>
#include <limits>
#include <numbers>
#include <optional>
#include <span>
#include <string>
#include <vector>

namespace sipllg {

struct ExactSolution {
    std::function<Vec3(const Point& x, double t)> value;
    Forcing forcing;
};

struct ErrorRecord {
    int level = 0;
    /// max_n ||e^n||_2
    double linf_l2 = 0.0;
    /// (sum_n dt ||grad_h e^n||_2^2)^{1/2}
    double l2_h1 = 0.0;
    std::optional<double> rate_linf_l2;
    std::optional<double> rate_l2_h1;
};

/// Streams (state, time) pairs of one run and accumulates the two error norms.
class ErrorAccumulator {
public:
    explicit ErrorAccumulator(ExactSolution exact) : exact_(std::move(exact)) {}

    void record(const VectorField& m, double t)
    {
        if (count_ > 0) {
            if (!(m.grid() == grid_)) {
                throw StructuralError("error_norms: states recorded on different grids");
            }
            if (!(t > t_prev_)) {
                throw StructuralError("error_norms: record times must be strictly increasing");
            }
        }
        VectorField e = VectorField::sample(m.grid(), [&](const Point& x) { return exact_.value(x, t); });
        auto ev = e.values();
        const auto mv = m.values();
        for (std::size_t i = 0; i < ev.size(); ++i) {
            ev[i] -= mv[i];
        }
        linf_l2_ = std::max(linf_l2_, l2_norm(e));
        if (count_ > 0) {
            const double g = gradient_l2_norm(e);
            h1_sum_.add((t - t_prev_) * g * g);
        }
        grid_ = m.grid();
        t_prev_ = t;
        ++count_;
    }

    ErrorRecord result(int level = 0) const
    {
        ErrorRecord r;
        r.level = level;
        r.linf_l2 = linf_l2_;
        r.l2_h1 = std::sqrt(h1_sum_.value());
        return r;
    }

    long count() const noexcept { return count_; }

private:
    ExactSolution exact_;
    GridSpec grid_{};
    double t_prev_ = 0.0;
    long count_ = 0;
    double linf_l2_ = 0.0;
    CompensatedSum h1_sum_;
};

struct TimedState {
    double time = 0.0;
    VectorField state;
};

inline ErrorRecord error_norms(std::span<const TimedState> history, const ExactSolution& exact, int level = 0)
{
    ErrorAccumulator acc(exact);
    for (const auto& h : history) {
        acc.record(h.state, h.time);
    }
    return acc.result(level);
}

/// Fill rate columns: rate_k = log2(err_{k-1} / err_k). The first record keeps no rates.
inline void assign_rates(std::vector<ErrorRecord>& table)
{
    for (std::size_t k = 0; k < table.size(); ++k) {
        if (k == 0) {
            table[k].rate_linf_l2.reset();
            table[k].rate_l2_h1.reset();
            continue;
        }
        table[k].rate_linf_l2 = std::log2(table[k - 1].linf_l2 / table[k].linf_l2);
        table[k].rate_l2_h1 = std::log2(table[k - 1].l2_h1 / table[k].l2_h1);
    }
}

/// Topological charge of a planar field,
///   Q = -(1/4pi) h^2 sum m . (D1 m x D2 m),
/// with central differences D1, D2. The orientation is the one for which a
/// radial texture satisfies Q = [m3(inf) - m3(0)] / 2, so a skyrmion with
/// m3(0) = -1 in an m3 = +1 background has Q = +1.
inline double skyrmion_number(const VectorField& m)
{
    const GridSpec& g = m.grid();
    if (g.dim != 2) {
        throw UnsupportedConfiguration("skyrmion_number is defined for 2D grids only");
    }
    require_consistent(m);
    CompensatedSum s;
    for (int j = 0; j < g.counts[1]; ++j) {
        for (int i = 0; i < g.counts[0]; ++i) {
            const Vec3 d1 = central_difference(m, 0, i, j);
            const Vec3 d2 = central_difference(m, 1, i, j);
            s.add(g.node_weight(i, j) * dot(m.at(i, j), cross(d1, d2)));
        }
    }
    return -g.cell_volume() * s.value() / (4.0 * std::numbers::pi);
}

/// Slack in |e|^2 + |et - e|^2 <= |et|^2 <= 2 (|e|^2 + |et - e|^2)
/// with e = m_e - mt/|mt| and et = m_e - mt. Both entries are >= 0 when the relation holds.
struct RenormalizationSlack {
    double lower = 0.0;
    double upper = 0.0;
};

inline RenormalizationSlack renormalization_slack(const Vec3& m_exact, const Vec3& m_tilde)
{
    const Vec3 e = m_exact - m_tilde / norm(m_tilde);
    const Vec3 et = m_exact - m_tilde;
    const double a = dot(e, e) + dot(et - e, et - e);
    const double b = dot(et, et);
    return {b - a, 2.0 * a - b};
}

struct InvariantTolerances {
    double length = 1e-14;
    double intermediate_length = 1e-9;
    double orthogonality = 1e-9;
    double gradient_reduction = 1e-12;
    double energy_increase = 1e-8;
};

struct InvariantCheck {
    std::string name;
    bool passed = false;
    /// Worst observed value of the checked quantity.
    double value = 0.0;
    double threshold = 0.0;
};

struct InvariantReport {
    std::vector<InvariantCheck> checks;

    bool all_passed() const
    {
        return std::all_of(checks.begin(), checks.end(), [](const auto& c) { return c.passed; });
    }

    const InvariantCheck* find(const std::string& name) const
    {
        for (const auto& c : checks) {
            if (c.name == name) {
                return &c;
            }
        }
        return nullptr;
    }
};

/// Largest |grad_h m| - |grad_h mt| over all faces (<= 0 when projection never increases a difference).
inline double max_gradient_growth(const VectorField& m_tilde, const VectorField& m_new)
{
    require_same_grid(m_tilde.grid(), m_new.grid(), "max_gradient_growth");
    const GridSpec& g = m_new.grid();
    double worst = -std::numeric_limits<double>::infinity();
    for (int a = 0; a < g.dim; ++a) {
        const double inv_h = 1.0 / g.spacing[a];
        for_each_face(g, a, [&](std::size_t, std::size_t lo, std::size_t hi, int, int, int) {
            const double gm = norm(m_new[hi] - m_new[lo]) * inv_h;
            const double gt = norm(m_tilde[hi] - m_tilde[lo]) * inv_h;
            worst = std::max(worst, gm - gt);
        });
    }
    return worst;
}

/// Checks the force-free exchange-only step properties. Failures are entries, never exceptions.
inline InvariantReport invariant_suite(const VectorField& m_prev, const VectorField& m_tilde, const VectorField& m_new,
                                       double energy_prev, double energy_new, const InvariantTolerances& tol = {})
{
    InvariantReport rep;

    const double len_err = max_length_error(m_new);
    rep.checks.push_back({"length", len_err <= tol.length, len_err, tol.length});

    const double min_len = min_length(m_tilde);
    const double lower = 1.0 - tol.intermediate_length;
    rep.checks.push_back({"intermediate_length", min_len >= lower, min_len, lower});

    double orth = 0.0;
    for (std::size_t n = 0; n < m_prev.size(); ++n) {
        orth = std::max(orth, std::abs(dot(m_tilde[n], m_prev[n]) - 1.0));
    }
    rep.checks.push_back({"orthogonal_increment", orth <= tol.orthogonality, orth, tol.orthogonality});

    const double growth = max_gradient_growth(m_tilde, m_new);
    rep.checks.push_back({"gradient_reduction", growth <= tol.gradient_reduction, growth, tol.gradient_reduction});

    const double de = energy_new - energy_prev;
    rep.checks.push_back({"energy_dissipation", de <= tol.energy_increase, de, tol.energy_increase});
    return rep;
}

} // namespace sipllg
