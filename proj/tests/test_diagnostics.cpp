#include "oracles.hpp"

#include <gtest/gtest.h>

#include <cmath>
#include <numbers>
#include <random>

using namespace sipllg;

namespace {

GridSpec periodic(int n) { return GridSpec::make_2d(n, n, 2.0 * std::numbers::pi / n, Boundary::Periodic); }

std::vector<TimedState> exact_history(const GridSpec& g, const ExactSolution& e, std::initializer_list<double> times)
{
    std::vector<TimedState> h;
    for (double t : times) {
        h.push_back({t, VectorField::sample(g, [&](const Point& x) { return e.value(x, t); })});
    }
    return h;
}

/// -(1/4pi) * integral of m . (d1 m x d2 m) by the midpoint rule on a fine lattice,
/// with derivatives of the analytic field taken by small central differences.
template <class Fn>
double refined_charge(Fn&& f, double lo, double hi, int cells)
{
    const double h = (hi - lo) / cells;
    const double d = 1e-6;
    long double s = 0.0L;
    for (int j = 0; j < cells; ++j) {
        for (int i = 0; i < cells; ++i) {
            const double x = lo + (i + 0.5) * h;
            const double y = lo + (j + 0.5) * h;
            const Vec3 d1 = (f(Point{x + d, y, 0}) - f(Point{x - d, y, 0})) / (2 * d);
            const Vec3 d2 = (f(Point{x, y + d, 0}) - f(Point{x, y - d, 0})) / (2 * d);
            s += dot(f(Point{x, y, 0}), cross(d1, d2));
        }
    }
    return -static_cast<double>(s) * h * h / (4.0 * std::numbers::pi);
}

} // namespace

TEST(ErrorNorms, ExactHistoryHasZeroError)
{
    const auto e = manufactured_solution(1.0, 1.0);
    const auto h = exact_history(periodic(8), e, {0.0, 0.1, 0.2});
    const auto r = error_norms(h, e);
    EXPECT_EQ(r.linf_l2, 0.0);
    EXPECT_EQ(r.l2_h1, 0.0);
    EXPECT_FALSE(r.rate_linf_l2.has_value());
}

TEST(ErrorNorms, MatchesHandComputation)
{
    // numerical state = exact + constant offset c at t = 0 and t = dt
    const auto e = manufactured_solution(1.0, 1.0);
    const GridSpec g = periodic(8);
    auto h = exact_history(g, e, {0.0, 0.25});
    h[0].state.raw()[0] += 0.5;
    h[1].state.raw()[5] -= 0.25;
    const auto r = error_norms(h, e);
    const double w = g.h() * g.h();
    EXPECT_NEAR(r.linf_l2, std::sqrt(w * 0.25), 1e-15);
    // gradient of a single spike of size a: four faces, each |a / h|^2, times h^2
    EXPECT_NEAR(r.l2_h1, std::sqrt(0.25 * 4.0 * 0.0625), 1e-14);
}

TEST(ErrorNorms, ScaleWithTheError)
{
    const auto e = manufactured_solution(1.0, 1.0);
    std::mt19937_64 rng(1);
    const GridSpec g = periodic(10);
    auto base = exact_history(g, e, {0.0, 0.1, 0.3});
    std::vector<VectorField> noise;
    for (std::size_t k = 0; k < base.size(); ++k) noise.push_back(oracle::random_field(g, rng, 1e-3));
    auto perturbed = [&](double s) {
        auto h = base;
        for (std::size_t k = 0; k < h.size(); ++k) {
            for (std::size_t i = 0; i < h[k].state.raw().size(); ++i) {
                h[k].state.raw()[i] += s * noise[k].raw()[i];
            }
        }
        return error_norms(h, e);
    };
    const auto r1 = perturbed(1.0);
    const auto r4 = perturbed(4.0);
    EXPECT_NEAR(r4.linf_l2, 4.0 * r1.linf_l2, 1e-12 * r1.linf_l2);
    EXPECT_NEAR(r4.l2_h1, 4.0 * r1.l2_h1, 1e-12 * r1.l2_h1);
}

TEST(ErrorNorms, RejectsInconsistentHistories)
{
    const auto e = manufactured_solution(1.0, 1.0);
    auto h = exact_history(periodic(8), e, {0.0, 0.1});
    h.push_back({0.2, VectorField::uniform(periodic(6), {0, 0, 1})});
    EXPECT_THROW(error_norms(h, e), StructuralError);
    auto t = exact_history(periodic(8), e, {0.0, 0.2, 0.1});
    EXPECT_THROW(error_norms(t, e), StructuralError);
}

TEST(ErrorNorms, AssignRatesIsLogOfRatio)
{
    std::vector<ErrorRecord> t(3);
    t[0].linf_l2 = 4.0, t[0].l2_h1 = 1.0;
    t[1].linf_l2 = 1.0, t[1].l2_h1 = 0.5;
    t[2].linf_l2 = 0.3, t[2].l2_h1 = 0.2;
    assign_rates(t);
    EXPECT_FALSE(t[0].rate_linf_l2.has_value());
    EXPECT_EQ(*t[1].rate_linf_l2, 2.0);
    EXPECT_EQ(*t[1].rate_l2_h1, 1.0);
    EXPECT_EQ(*t[2].rate_linf_l2, std::log2(1.0 / 0.3));
    EXPECT_EQ(*t[2].rate_l2_h1, std::log2(0.5 / 0.2));
}

TEST(ManufacturedSolution, ForcingMatchesFiniteDifferenceResidual)
{
    const double beta = 0.7, gamma = 1.3, d = 1e-4;
    for (const Point& x : {Point{0.3, 1.1, 0}, Point{4.0, 2.5, 0}, Point{6.0, 0.1, 0}}) {
        for (double t : {0.0, 0.4}) {
            const Vec3 m = manufactured_value(x, t);
            EXPECT_NEAR(norm(m), 1.0, 1e-15);
            const Vec3 dt = (manufactured_value(x, t + d) - manufactured_value(x, t - d)) / (2 * d);
            const Vec3 lap = (manufactured_value({x[0] + d, x[1], 0}, t) + manufactured_value({x[0] - d, x[1], 0}, t) +
                              manufactured_value({x[0], x[1] + d, 0}, t) + manufactured_value({x[0], x[1] - d, 0}, t) -
                              4.0 * m) /
                             (d * d);
            const Vec3 c = cross(m, lap);
            const Vec3 expect = dt + beta * c + gamma * cross(m, c);
            EXPECT_LE(norm(manufactured_forcing(x, t, beta, gamma) - expect), 1e-5);
        }
    }
}

TEST(SkyrmionNumber, UniformFieldHasZeroCharge)
{
    EXPECT_EQ(skyrmion_number(VectorField::uniform(periodic(8), {0, 0, 1})), 0.0);
    EXPECT_THROW(skyrmion_number(VectorField::uniform(GridSpec::make_3d(3, 3, 3, 0.1, Boundary::Periodic), {0, 0, 1})),
                 UnsupportedConfiguration);
}

TEST(SkyrmionNumber, RadialProfileHasUnitCharge)
{
    const GridSpec g = GridSpec::make_2d(256, 256, 0.1, Boundary::Neumann, {-12.75, -12.75});
    const auto bloch = VectorField::sample(g, [](const Point& x) { return skyrmion_trial(x, 1.5, 0.6); });
    EXPECT_NEAR(skyrmion_number(bloch), 1.0, 0.05);
    const auto neel = VectorField::sample(g, [](const Point& x) {
        const double rho = std::hypot(x[0], x[1]);
        const double theta = std::numbers::pi * std::exp(-rho * rho / 4.0);
        const double phi = std::atan2(x[1], x[0]);
        return Vec3{std::sin(theta) * std::cos(phi), std::sin(theta) * std::sin(phi), std::cos(theta)};
    });
    EXPECT_NEAR(skyrmion_number(neel), 1.0, 0.05);
}

TEST(SkyrmionNumber, RotationInvariantAndReflectionOdd)
{
    std::mt19937_64 rng(2);
    const int n = 12;
    const auto m = oracle::random_unit_field(GridSpec::make_2d(n, n, 0.3, Boundary::Periodic), rng);
    VectorField rot(m.grid()), refl(m.grid());
    for (int j = 0; j < n; ++j) {
        for (int i = 0; i < n; ++i) {
            // lattice rotated by 90 degrees: (i, j) -> (n - 1 - j, i)
            rot.set(m.grid().index(n - 1 - j, i), m.at(i, j));
            const Vec3 v = m.at(i, j);
            refl.set(m.grid().index(i, j), {v.x, v.y, -v.z});
        }
    }
    const double q = skyrmion_number(m);
    EXPECT_NEAR(skyrmion_number(rot), q, 1e-12);
    EXPECT_NEAR(skyrmion_number(refl), -q, 1e-12);
}

TEST(SkyrmionNumber, BlowupDataMatchesRefinedQuadrature)
{
    const GridSpec g = GridSpec::make_2d(64, 64, 1.0 / 63, Boundary::Neumann, {-0.5, -0.5});
    const double q = skyrmion_number(VectorField::sample(g, blowup_initial));
    const double ref = refined_charge(blowup_initial, -0.5, 0.5, 4 * 63);
    EXPECT_NEAR(std::abs(ref), 1.0, 0.02);
    EXPECT_NEAR(q, ref, 0.02);
}

TEST(RenormalizationSlack, RelationsHoldForRandomPairs)
{
    std::mt19937_64 rng(3);
    std::normal_distribution<double> n(0.0, 1.0);
    std::uniform_real_distribution<double> s(1.0, 4.0);
    for (int k = 0; k < 2000; ++k) {
        Vec3 me{n(rng), n(rng), n(rng)};
        me = me / norm(me);
        Vec3 mt{n(rng), n(rng), n(rng)};
        mt = s(rng) / norm(mt) * mt;
        const auto r = renormalization_slack(me, mt);
        EXPECT_GE(r.lower, -1e-13);
        EXPECT_GE(r.upper, -1e-13);
    }
    const auto same = renormalization_slack({0, 0, 1}, {0, 0, 2});
    EXPECT_NEAR(same.lower, 0.0, 1e-15);
}

TEST(InvariantSuite, StationaryUniformRunPasses)
{
    const auto m = VectorField::uniform(periodic(6), {0, 1, 0});
    const auto rep = invariant_suite(m, m, m, 0.0, 0.0);
    EXPECT_TRUE(rep.all_passed());
    EXPECT_EQ(rep.checks.size(), 5u);
    for (const auto& c : rep.checks) {
        if (c.name == "intermediate_length") {
            EXPECT_EQ(c.value, 1.0);
        } else {
            EXPECT_LE(c.value, 0.0) << c.name;
        }
    }
}

TEST(InvariantSuite, RealStepPasses)
{
    const auto m = VectorField::sample(periodic(24), dissipation_initial);
    SchemeParams p;
    p.dt = 0.05;
    const auto r = step(m, p, SolverConfig{}, p.dt);
    const auto rep = invariant_suite(m, r.m_tilde, r.m_new, exchange_energy(m), r.report.energy);
    for (const auto& c : rep.checks) {
        EXPECT_TRUE(c.passed) << c.name << " " << c.value;
    }
}

TEST(InvariantSuite, DetectsWrongNormalization)
{
    const auto m = VectorField::sample(periodic(24), dissipation_initial);
    SchemeParams p;
    p.dt = 0.05;
    const auto r = step(m, p, SolverConfig{}, p.dt);
    auto bad = r.m_new;
    bad.set(17, 1.01 * bad[17]);
    const auto rep = invariant_suite(m, r.m_tilde, bad, exchange_energy(m), r.report.energy);
    EXPECT_FALSE(rep.all_passed());
    ASSERT_NE(rep.find("length"), nullptr);
    EXPECT_FALSE(rep.find("length")->passed);
    EXPECT_NEAR(rep.find("length")->value, 0.01, 1e-12);
    EXPECT_TRUE(rep.find("orthogonal_increment")->passed);
    EXPECT_EQ(rep.find("missing"), nullptr);
}

TEST(InvariantSuite, DetectsEnergyIncrease)
{
    const auto m = VectorField::uniform(periodic(4), {0, 0, 1});
    const auto rep = invariant_suite(m, m, m, 1.0, 1.0 + 1e-6);
    EXPECT_FALSE(rep.find("energy_dissipation")->passed);
    EXPECT_TRUE(rep.find("length")->passed);
}
