#include "oracles.hpp"

#include <gtest/gtest.h>

#include <cmath>
#include <limits>
#include <numbers>
#include <random>

using namespace sipllg;

namespace {

GridSpec periodic(int n) { return GridSpec::make_2d(n, n, 2.0 * std::numbers::pi / n, Boundary::Periodic); }

SchemeParams params(double beta, double gamma, double dt)
{
    SchemeParams p;
    p.beta = beta;
    p.gamma = gamma;
    p.dt = dt;
    return p;
}

SolverConfig tight()
{
    SolverConfig c;
    c.rel_tol = 1e-13;
    c.max_iter = 2000;
    c.restart = 60;
    return c;
}

/// One step computed with the dense probed matrix and a direct solve.
VectorField dense_step(const VectorField& m, const SchemeParams& p, double t_new, VectorField* tilde = nullptr)
{
    const GridSpec& g = m.grid();
    std::vector<double> b(m.raw().begin(), m.raw().end());
    if (p.forcing) {
        for (int j = 0; j < g.counts[1]; ++j) {
            for (int i = 0; i < g.counts[0]; ++i) {
                const Vec3 f = p.forcing(g.position(i, j, 0), t_new);
                const std::size_t n = g.index(i, j);
                b[3 * n] += p.dt * f.x;
                b[3 * n + 1] += p.dt * f.y;
                b[3 * n + 2] += p.dt * f.z;
            }
        }
    }
    const auto x = oracle::dense_solve(oracle::scheme_matrix(m, p.beta, p.gamma, p.dt), b);
    VectorField mt(g, x);
    if (tilde) *tilde = mt;
    VectorField out(g);
    for (std::size_t n = 0; n < mt.size(); ++n) out.set(n, mt[n] / norm(mt[n]));
    return out;
}

} // namespace

TEST(OperatorApply, ConstantFieldIsFixed)
{
    std::mt19937_64 rng(1);
    const GridSpec g = GridSpec::make_2d(5, 4, 0.3, Boundary::Neumann);
    const auto m = oracle::random_unit_field(g, rng);
    const auto v = VectorField::uniform(g, {0.2, -1.0, 3.0});
    EXPECT_EQ(operator_apply(v, m, params(1.0, 1.0, 0.5)), v);
}

TEST(OperatorApply, ZeroTimeStepIsIdentity)
{
    std::mt19937_64 rng(2);
    const GridSpec g = periodic(6);
    const auto m = oracle::random_unit_field(g, rng);
    const auto v = oracle::random_field(g, rng);
    EXPECT_EQ(operator_apply(v, m, params(1.0, 1.0, 0.0)), v);
    EXPECT_THROW(operator_apply(v, m, params(1.0, 1.0, -1.0)), ArgumentError);
}

TEST(OperatorApply, MatchesDenseProbedMatrix)
{
    std::mt19937_64 rng(3);
    for (const GridSpec& g : {periodic(4), GridSpec::make_2d(4, 4, 0.5, Boundary::Neumann)}) {
        const auto m = oracle::random_unit_field(g, rng);
        const auto v = oracle::random_field(g, rng);
        const auto M = oracle::scheme_matrix(m, 0.7, 1.3, 0.05);
        ASSERT_EQ(M.size(), 48u * 48u);
        const auto expect = oracle::matvec(M, std::vector<double>(v.raw().begin(), v.raw().end()));
        const auto got = operator_apply(v, m, params(0.7, 1.3, 0.05));
        EXPECT_LE(oracle::max_abs_diff(got.values(), expect), 1e-12);
    }
}

TEST(SolveIntermediate, UniformStateIsStationary)
{
    const auto m = VectorField::uniform(periodic(8), {0, 0, 1});
    const auto s = solve_intermediate(m, params(1.0, 1.0, 0.3), SolverConfig{}, 0.3);
    EXPECT_EQ(s.m_tilde, m);
}

TEST(SolveIntermediate, MatchesDenseDirectSolve)
{
    std::mt19937_64 rng(4);
    for (int trial = 0; trial < 5; ++trial) {
        const auto m = oracle::random_unit_field(periodic(4), rng);
        const auto p = params(1.0, 1.0, 0.01);
        VectorField ref;
        dense_step(m, p, 0.01, &ref);
        const auto s = solve_intermediate(m, p, SolverConfig{}, 0.01);
        EXPECT_LE(oracle::max_abs_diff(s.m_tilde.values(), ref.values()), 1e-10);
    }
}

TEST(SolveIntermediate, BicgstabMatchesGmres)
{
    std::mt19937_64 rng(5);
    const auto m = oracle::random_unit_field(GridSpec::make_2d(6, 5, 0.4, Boundary::Neumann), rng);
    const auto p = params(0.5, 2.0, 0.02);
    SolverConfig b;
    b.method = KrylovMethod::Bicgstab;
    const auto x = solve_intermediate(m, p, SolverConfig{}, 0.02);
    const auto y = solve_intermediate(m, p, b, 0.02);
    EXPECT_LE(oracle::max_abs_diff(x.m_tilde.values(), y.m_tilde.values()), 1e-10);
}

TEST(SolveIntermediate, PreconditionedSolveMatchesPlainSolve)
{
    const GridSpec g = periodic(16);
    const auto m = VectorField::sample(g, dissipation_initial);
    for (const auto& p : {params(1.0, 1.0, 0.05), params(1.0, 10.0, 0.5)}) {
        SolverConfig pc;
        pc.diffusion_preconditioner = true;
        const auto a = solve_intermediate(m, p, SolverConfig{}, p.dt);
        const auto b = solve_intermediate(m, p, pc, p.dt);
        EXPECT_LE(oracle::max_abs_diff(a.m_tilde.values(), b.m_tilde.values()), 1e-9);
        EXPECT_LE(b.krylov_iters, a.krylov_iters);
    }
}

TEST(SolveIntermediate, NonConvergenceCarriesHistory)
{
    std::mt19937_64 rng(6);
    const auto m = oracle::random_unit_field(periodic(8), rng);
    SolverConfig c;
    c.max_iter = 1;
    c.rel_tol = 1e-14;
    try {
        solve_intermediate(m, params(1.0, 1.0, 1.0), c, 1.0);
        FAIL() << "expected SolverError";
    } catch (const SolverError& e) {
        EXPECT_GE(e.residual_history().size(), 2u);
        EXPECT_GT(e.residual_history().back(), 1e-14);
    }
}

TEST(SolveIntermediate, ForceFreeInvariants)
{
    std::mt19937_64 rng(7);
    for (const GridSpec& g : {periodic(10), GridSpec::make_2d(9, 7, 0.2, Boundary::Neumann),
                              GridSpec::make_3d(5, 4, 6, 0.3, Boundary::Periodic)}) {
        const auto m = oracle::random_unit_field(g, rng);
        for (double dt : {1e-3, 0.1, 10.0}) {
            const auto r = step(m, params(1.0, 0.5, dt), tight(), dt);
            for (std::size_t n = 0; n < m.size(); ++n) {
                EXPECT_NEAR(dot(r.m_tilde[n], m[n]), 1.0, 1e-9);
                EXPECT_GE(norm(r.m_tilde[n]), 1.0 - 1e-9);
            }
            EXPECT_LE(r.report.max_length_error, 1e-14);
            EXPECT_LE(max_gradient_growth(r.m_tilde, r.m_new), 1e-12);
            EXPECT_LE(r.report.energy - exchange_energy(m), 1e-8);
        }
    }
}

TEST(Normalize, ScalesToUnitLength)
{
    const GridSpec g = periodic(2);
    const auto f = normalize(VectorField::uniform(g, {0, 0, 2}));
    EXPECT_EQ(f[0], (Vec3{0, 0, 1}));
    const auto d = normalize(VectorField::uniform(g, {3, 4, 0}));
    EXPECT_EQ(d[1], (Vec3{0.6, 0.8, 0}));
}

TEST(Normalize, UnitInputIsUnchanged)
{
    const GridSpec g = periodic(3);
    const auto axes = VectorField::uniform(g, {0, -1, 0});
    EXPECT_EQ(normalize(axes), axes);
    std::mt19937_64 rng(8);
    const auto u = oracle::random_unit_field(g, rng);
    EXPECT_LE(oracle::max_abs_diff(normalize(u).values(), u.values()), 2.0 * std::numeric_limits<double>::epsilon());
}

TEST(Normalize, ZeroVectorIsDegenerate)
{
    auto f = VectorField::uniform(periodic(3), {0, 0, 1});
    f.set(4, {0, 0, 0});
    try {
        normalize(f);
        FAIL() << "expected DegenerateStateError";
    } catch (const DegenerateStateError& e) {
        EXPECT_EQ(e.node(), 4u);
    }
}

TEST(Normalize, ProjectionNeverIncreasesDifferences)
{
    std::mt19937_64 rng(9);
    std::uniform_real_distribution<double> s(1.0, 3.0);
    for (const GridSpec& g : {periodic(12), GridSpec::make_2d(8, 11, 0.1, Boundary::Neumann)}) {
        auto mt = oracle::random_unit_field(g, rng);
        for (std::size_t n = 0; n < mt.size(); ++n) mt.set(n, s(rng) * mt[n]);
        EXPECT_LE(max_gradient_growth(mt, normalize(mt)), 1e-12);
    }
}

TEST(Step, UniformStateIsFixedPoint)
{
    const auto m = VectorField::uniform(GridSpec::make_2d(6, 6, 0.1, Boundary::Neumann), {0, 0, 1});
    for (double dt : {1e-4, 1.0, 100.0}) {
        const auto r = step(m, params(1.0, 1.0, dt), SolverConfig{}, dt);
        EXPECT_EQ(r.m_new, m);
        EXPECT_EQ(r.report.energy, 0.0);
    }
}

TEST(Step, DissipationInitialDataLosesEnergy)
{
    const auto m = VectorField::sample(GridSpec::make_2d(100, 100, 2.0 * std::numbers::pi / 100, Boundary::Periodic),
                                       dissipation_initial);
    const auto r = step(m, params(1.0, 1.0, 0.01), SolverConfig{}, 0.01);
    EXPECT_LE(r.report.energy, exchange_energy(m));
}

TEST(Step, ManufacturedStepMatchesDenseReference)
{
    const auto exact = manufactured_solution(1.0, 1.0);
    const GridSpec g = periodic(8);
    auto p = params(1.0, 1.0, g.h() * g.h());
    p.forcing = exact.forcing;
    const auto m0 = VectorField::sample(g, [&](const Point& x) { return exact.value(x, 0.0); });
    const auto ref = dense_step(m0, p, p.dt);
    const auto r = step(m0, p, tight(), p.dt);
    EXPECT_LE(oracle::max_abs_diff(r.m_new.values(), ref.values()), 1e-10);
}

TEST(Step, ManufacturedLocalErrorIsHigherOrder)
{
    // one step from exact data: error O(dt^2 + dt h^2) = O(h^4) with dt = h^2
    const auto exact = manufactured_solution(1.0, 1.0);
    std::vector<double> err;
    for (int n : {32, 64}) {
        const GridSpec g = periodic(n);
        auto p = params(1.0, 1.0, g.h() * g.h());
        p.forcing = exact.forcing;
        const auto m0 = VectorField::sample(g, [&](const Point& x) { return exact.value(x, 0.0); });
        auto r = step(m0, p, tight(), p.dt);
        const auto me = VectorField::sample(g, [&](const Point& x) { return exact.value(x, p.dt); });
        for (std::size_t i = 0; i < me.raw().size(); ++i) r.m_new.raw()[i] -= me.raw()[i];
        err.push_back(l2_norm(r.m_new));
    }
    EXPECT_GT(err[0] / err[1], 10.0);
}

TEST(Step, RejectsInvalidParameters)
{
    const auto m = VectorField::uniform(periodic(4), {0, 0, 1});
    EXPECT_THROW(step(m, params(1.0, 0.0, 0.1), SolverConfig{}, 0.1), ArgumentError);
    EXPECT_THROW(step(m, params(1.0, 1.0, 0.0), SolverConfig{}, 0.0), ArgumentError);
    SolverConfig bad;
    bad.rel_tol = 0.0;
    EXPECT_THROW(step(m, params(1.0, 1.0, 0.1), bad, 0.1), ArgumentError);
    auto ext = params(0.0, 1.0, 0.1);
    ext.model = Extended{};
    const auto m3d = VectorField::uniform(GridSpec::make_3d(3, 3, 3, 0.1, Boundary::Periodic), {0, 0, 1});
    EXPECT_THROW(step(m3d, ext, SolverConfig{}, 0.1), UnsupportedConfiguration);
    EXPECT_NO_THROW(step(m, ext, SolverConfig{}, 0.1));
}

TEST(Run, ZeroStepsReturnsInitial)
{
    std::mt19937_64 rng(10);
    const auto m = oracle::random_unit_field(periodic(6), rng);
    RunOptions o;
    o.t_end = 0.0;
    const auto r = run(m, params(1.0, 1.0, 0.1), SolverConfig{}, o);
    EXPECT_EQ(r.steps_taken, 0);
    EXPECT_TRUE(r.reports.empty());
    EXPECT_LE(oracle::max_abs_diff(r.final_state.values(), m.values()), 2.0 * std::numeric_limits<double>::epsilon());
}

TEST(Run, StepCountAndCallback)
{
    const auto m = VectorField::sample(periodic(12), dissipation_initial);
    RunOptions o;
    o.t_end = 0.5;
    long seen = 0;
    double last_energy = exchange_energy(m);
    const auto r = run(m, params(1.0, 1.0, 0.1), SolverConfig{}, o, [&](const StepEvent& ev) {
        EXPECT_EQ(ev.previous_energy, last_energy);
        last_energy = ev.report.energy;
        ++seen;
        return true;
    });
    EXPECT_EQ(r.steps_taken, 5);
    EXPECT_EQ(seen, 5);
    EXPECT_EQ(r.final_step, 5);
    EXPECT_NEAR(r.final_time, 0.5, 1e-15);
    for (std::size_t k = 1; k < r.reports.size(); ++k) {
        EXPECT_LE(r.reports[k].energy, r.reports[k - 1].energy + 1e-8);
    }
}

TEST(Run, CallbackCanStopEarly)
{
    const auto m = VectorField::sample(periodic(8), dissipation_initial);
    RunOptions o;
    o.t_end = 1.0;
    const auto r = run(m, params(1.0, 1.0, 0.1), SolverConfig{}, o, [](const StepEvent& ev) {
        return ev.report.step_index < 3;
    });
    EXPECT_EQ(r.steps_taken, 3);
}

TEST(Run, SteadyStateExit)
{
    const auto m = VectorField::uniform(periodic(6), {1, 0, 0});
    RunOptions o;
    o.t_end = 10.0;
    o.steady_tol = 1e-6;
    const auto r = run(m, params(1.0, 1.0, 0.1), SolverConfig{}, o);
    EXPECT_TRUE(r.steady_state_reached);
    EXPECT_EQ(r.steps_taken, 1);
}

TEST(Run, NonUnitInitialDataIsRejectedUnlessAllowed)
{
    auto m = VectorField::uniform(periodic(4), {0, 0, 1});
    m.set(3, {0, 0, 1.01});
    RunOptions o;
    EXPECT_THROW(run(m, params(1.0, 1.0, 0.1), SolverConfig{}, o), ArgumentError);
    o.allow_nonunit_initial = true;
    int warnings = 0;
    o.warn = [&](std::string_view) { ++warnings; };
    const auto r = run(m, params(1.0, 1.0, 0.1), SolverConfig{}, o);
    EXPECT_EQ(warnings, 1);
    EXPECT_EQ(r.final_state[3], (Vec3{0, 0, 1}));
}

TEST(Run, SmallDriftIsRenormalizedSilently)
{
    auto m = VectorField::uniform(periodic(4), {0, 0, 1});
    m.set(2, {0, 0, 1.0 + 1e-13});
    int warnings = 0;
    RunOptions o;
    o.warn = [&](std::string_view) { ++warnings; };
    const auto r = run(m, params(1.0, 1.0, 0.1), SolverConfig{}, o);
    EXPECT_EQ(warnings, 0);
    EXPECT_EQ(r.final_state[2], (Vec3{0, 0, 1}));
}

TEST(Run, NonFiniteStateReportsStep)
{
    const auto m = VectorField::sample(periodic(6), dissipation_initial);
    auto p = params(1.0, 1.0, 0.1);
    p.forcing = [](const Point&, double t) {
        return t > 0.25 ? Vec3{std::numeric_limits<double>::quiet_NaN(), 0, 0} : Vec3{0, 0, 0};
    };
    RunOptions o;
    o.t_end = 1.0;
    try {
        run(m, p, SolverConfig{}, o);
        FAIL() << "expected NonFiniteError";
    } catch (const NonFiniteError& e) {
        EXPECT_EQ(e.step(), 3);
    }
    auto bad = m;
    bad.set(0, {std::numeric_limits<double>::quiet_NaN(), 0, 0});
    EXPECT_THROW(run(bad, params(1.0, 1.0, 0.1), SolverConfig{}, o), NonFiniteError);
}

TEST(Run, StepsToReach)
{
    EXPECT_EQ(steps_to_reach(0.0, 1.0, 0.01), 100);
    EXPECT_EQ(steps_to_reach(0.0, 0.0, 0.01), 0);
    EXPECT_EQ(steps_to_reach(0.3, 1.0, 0.1), 7);
    EXPECT_EQ(steps_to_reach(0.0, 1.0, 0.3), 4);
}
