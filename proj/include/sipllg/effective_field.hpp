/// @file effective_field.hpp
/// @brief Effective-field models: exchange only, or exchange + easy-axis anisotropy + DMI + Zeeman.
///
/// The exchange part (Lap m) is always treated implicitly by the stepper, so
/// explicit_field_apply() returns only the remaining contributions
///
///   H_expl = kappa m3 e3 - 2 lambda [D2 m3 e1 - D1 m3 e2 + (D1 m2 - D2 m1) e3] + zeeman
///
/// with node-centred central differences D1, D2. The matching energy is
///
///   E = 1/2 |grad_h m|^2 + kappa/2 sum (m1^2 + m2^2) + lambda sum (curl m).m - sum zeeman.m
///
/// Energy and field share the same central differences but are not an exact
/// discrete gradient pair; they agree to second order.
#pragma once

#include "sipllg/errors.hpp"
#include "sipllg/grid.hpp"
#include "sipllg/grid_ops.hpp"

#include <cmath>
#include <string>
#include <variant>

namespace sipllg {

struct ExchangeOnly {};

struct Extended {
    double kappa = 3.0;
    double lambda = 1.0;
    Vec3 zeeman{};
};

using FieldModel = std::variant<ExchangeOnly, Extended>;

inline bool is_extended(const FieldModel& model) { return std::holds_alternative<Extended>(model); }

inline void validate(const FieldModel& model)
{
    if (const auto* e = std::get_if<Extended>(&model)) {
        if (std::abs(e->lambda) != 1.0) {
            throw ArgumentError("chirality lambda must be +1 or -1, got " + std::to_string(e->lambda));
        }
        if (!(e->kappa >= 0.0)) {
            throw ArgumentError("anisotropy kappa must be non-negative");
        }
    }
}

namespace detail {

inline void require_planar(const FieldModel& model, const GridSpec& g)
{
    if (is_extended(model) && g.dim != 2) {
        throw UnsupportedConfiguration("the extended (anisotropy + DMI) model is only defined on 2D grids");
    }
}

/// (curl m) at node (i, j) of a planar field.
inline Vec3 planar_curl(const VectorField& m, int i, int j)
{
    const Vec3 d1 = central_difference(m, 0, i, j);
    const Vec3 d2 = central_difference(m, 1, i, j);
    return {d2.z, -d1.z, d1.y - d2.x};
}

} // namespace detail

inline VectorField explicit_field_apply(const VectorField& m, const FieldModel& model)
{
    require_consistent(m);
    validate(model);
    detail::require_planar(model, m.grid());
    VectorField out(m.grid());
    const auto* e = std::get_if<Extended>(&model);
    if (e == nullptr) {
        return out;
    }
    const GridSpec& g = m.grid();
    for (int j = 0; j < g.counts[1]; ++j) {
        for (int i = 0; i < g.counts[0]; ++i) {
            const Vec3 v = m.at(i, j);
            const Vec3 curl = detail::planar_curl(m, i, j);
            out.set(g.index(i, j), Vec3{0.0, 0.0, e->kappa * v.z} - 2.0 * e->lambda * curl + e->zeeman);
        }
    }
    return out;
}

/// Parts of the discrete energy, kept separate so tests can check each term.
struct EnergyTerms {
    double exchange = 0.0;
    double anisotropy = 0.0;
    double dmi = 0.0;
    double zeeman = 0.0;

    double total() const { return exchange + anisotropy + dmi + zeeman; }
};

inline double exchange_energy(const VectorField& m) { return 0.5 * std::pow(gradient_l2_norm(m), 2); }

inline EnergyTerms energy_terms(const VectorField& m, const FieldModel& model)
{
    validate(model);
    detail::require_planar(model, m.grid());
    EnergyTerms t;
    const auto grad = gradient_apply(m);
    t.exchange = 0.5 * gradient_inner_product(grad, grad);
    const auto* e = std::get_if<Extended>(&model);
    if (e == nullptr) {
        return t;
    }
    const GridSpec& g = m.grid();
    CompensatedSum aniso;
    CompensatedSum dmi;
    CompensatedSum zee;
    for (int j = 0; j < g.counts[1]; ++j) {
        for (int i = 0; i < g.counts[0]; ++i) {
            const double w = g.node_weight(i, j);
            const Vec3 v = m.at(i, j);
            aniso.add(w * (v.x * v.x + v.y * v.y));
            dmi.add(w * dot(detail::planar_curl(m, i, j), v));
            zee.add(w * dot(e->zeeman, v));
        }
    }
    const double vol = g.cell_volume();
    t.anisotropy = 0.5 * e->kappa * vol * aniso.value();
    t.dmi = e->lambda * vol * dmi.value();
    t.zeeman = -vol * zee.value();
    return t;
}

inline double extended_energy(const VectorField& m, const FieldModel& model)
{
    return energy_terms(m, model).total();
}

} // namespace sipllg
