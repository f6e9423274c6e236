#include <gtest/gtest.h>

#include <cmath>
#include <numbers>

#include "oracles.hpp"
#include "steerkit/lqr.hpp"
#include "steerkit/margins.hpp"

using namespace steerkit;
using namespace steerkit::margins;
using numkit::Mat;

namespace {

const models::VehicleParams kP = models::default_params();

StateSpace integrator(double dt) { return {Mat{{1.0}}, Mat{{dt}}, Mat{{1.0}}, dt}; }

lqr::GainSet gain(std::vector<double> k, double dt) { return {std::move(k), 0.0, dt, 0.0}; }

}  // namespace

TEST(LoopResponse, DiscreteIntegratorAtLowFrequency) {
    const double dt = 0.02;
    const std::vector<double> w{0.01, 0.05, 0.1};
    const auto fr = loop_response(integrator(dt), gain({1.0}, dt), w);
    for (std::size_t i = 0; i < w.size(); ++i) {
        EXPECT_NEAR(fr.mag_db[i], -20.0 * std::log10(w[i]), 1e-3);
        EXPECT_NEAR(fr.phase_deg[i], -90.0, 0.1);
    }
    EXPECT_NEAR(fr.mag_db[0] - fr.mag_db[2], 20.0, 1e-3);
}

TEST(LoopResponse, GainScalingShiftsMagnitudeOnly) {
    const auto g = lqr::design_kinematic(6.0, kP);
    const auto sys = lqr::design_model(lqr::Designer::kinematic, 6.0, kP, g.dt);
    const auto grid = default_grid(g.dt, 200);
    const auto a = loop_response(sys, g, grid);
    auto g3 = g;
    for (double& k : g3.k) k *= 3.0;
    const auto b = loop_response(sys, g3, grid);
    for (std::size_t i = 0; i < grid.size(); ++i) {
        EXPECT_NEAR(b.mag_db[i] - a.mag_db[i], 20.0 * std::log10(3.0), 1e-9);
        EXPECT_NEAR(b.phase_deg[i], a.phase_deg[i], 1e-9);
    }
}

TEST(LoopResponse, MatchesPolynomialOracle) {
    for (auto d : {lqr::Designer::kinematic, lqr::Designer::dynamic}) {
        const auto g = lqr::design(d, 9.0, kP, lqr::LqrWeights::equal(d), lqr::kDefaultDt);
        const auto sys = lqr::design_model(d, 9.0, kP, g.dt);
        oracle::M a = oracle::zeros(sys.states(), sys.states());
        std::vector<double> b(sys.states());
        for (std::size_t i = 0; i < sys.states(); ++i) {
            b[i] = sys.B(i, 0);
            for (std::size_t j = 0; j < sys.states(); ++j) a[i][j] = sys.A(i, j);
        }
        for (double w : {0.05, 0.7, 3.0, 40.0, 150.0}) {
            const auto l = loop_value(sys, g.k, w);
            const auto o = oracle::loop_value(a, b, g.k, std::polar(1.0, w * g.dt));
            EXPECT_LT(std::abs(l - o), 1e-8 * std::abs(o)) << w;
            // Negative frequency gives the conjugate.
            const auto neg = oracle::loop_value(a, b, g.k, std::polar(1.0, -w * g.dt));
            EXPECT_LT(std::abs(std::conj(l) - neg), 1e-8 * std::abs(o));
        }
    }
}

TEST(LoopResponse, FiniteNearNyquistAndErrors) {
    const auto g = lqr::design_kinematic(10.0, kP);
    const auto sys = lqr::design_model(lqr::Designer::kinematic, 10.0, kP, g.dt);
    const std::vector<double> w{0.999 * std::numbers::pi / g.dt};
    const auto fr = loop_response(sys, g, w);
    EXPECT_TRUE(std::isfinite(fr.mag_db[0]));
    const std::vector<double> beyond{std::numbers::pi / g.dt};
    EXPECT_THROW(loop_response(sys, g, beyond), InputError);
    const std::vector<double> desc{2.0, 1.0};
    EXPECT_THROW(loop_response(sys, g, desc), InputError);
    EXPECT_THROW(loop_response(sys, gain({1.0}, g.dt), default_grid(g.dt)), InputError);
    const auto cont = models::kinematic_error_model(10.0, kP.L);
    EXPECT_THROW(loop_response(cont, g, default_grid(g.dt)), InputError);
}

TEST(LoopResponse, SingularPointFlagged) {
    // Open-loop pole at z = 1 evaluated exactly is impossible on the grid,
    // so place one on the unit circle at a grid frequency instead.
    const double dt = 0.1, w0 = 2.0;
    const double c = std::cos(w0 * dt), s = std::sin(w0 * dt);
    const StateSpace osc{Mat{{c, -s}, {s, c}}, Mat{{1.0}, {0.0}}, Mat::identity(2), dt};
    const std::vector<double> w{1.0, w0, 3.0};
    const auto fr = loop_response(osc, gain({1.0, 0.0}, dt), w);
    EXPECT_FALSE(fr.singular[0]);
    EXPECT_TRUE(fr.singular[1]);
    EXPECT_TRUE(std::isinf(fr.mag_db[1]));
}

TEST(Margins, PureIntegrator) {
    const double dt = 1e-3;
    const auto fr = loop_response(integrator(dt), gain({1.0}, dt), default_grid(dt, 2000));
    const auto m = compute_margins(fr);
    EXPECT_FALSE(m.has_phase_crossover);
    EXPECT_TRUE(std::isinf(m.gm));
    ASSERT_TRUE(m.has_gain_crossover);
    EXPECT_NEAR(m.pm, 90.0, 0.05);
    EXPECT_NEAR(m.pm_freq, 1.0, 1e-3);
    EXPECT_NEAR(m.delay_margin(), m.pm * std::numbers::pi / 180.0 / m.pm_freq, 1e-15);
}

TEST(Margins, NoCrossoverAtLowGain) {
    const double dt = 0.02;
    const StateSpace lag{Mat{{0.5}}, Mat{{0.1}}, Mat{{1.0}}, dt};
    const auto m = compute_margins(loop_response(lag, gain({1.0}, dt), default_grid(dt)));
    EXPECT_TRUE(std::isinf(m.gm));
    EXPECT_FALSE(m.has_gain_crossover);
    EXPECT_TRUE(std::isnan(m.pm));
    EXPECT_TRUE(std::isinf(m.delay_margin()));
}

TEST(Margins, PhaseCrossoverOfThirdOrderLag) {
    // Three cascaded discrete lags p = 0.9 have phase -180 deg at a finite
    // frequency; check gm against the closed-form value at that point.
    const double dt = 0.05, p = 0.9, k0 = 0.02;
    const StateSpace sys{Mat{{p, 0, 0}, {1, p, 0}, {0, 1, p}}, Mat{{1}, {0}, {0}}, Mat::identity(3), dt};
    const auto fr = loop_response(sys, gain({0, 0, k0}, dt), default_grid(dt, 4000));
    const auto m = compute_margins(fr);
    ASSERT_TRUE(m.has_phase_crossover);
    // L(z) = k0 / (z - p)^3: phase -180 when arg(z - p) = 60 deg.
    double lo = 0.0, hi = std::numbers::pi / dt;
    for (int i = 0; i < 200; ++i) {
        const double mid = 0.5 * (lo + hi);
        const auto z = std::polar(1.0, mid * dt) - p;
        (std::arg(z) < std::numbers::pi / 3 ? lo : hi) = mid;
    }
    const double wc = 0.5 * (lo + hi);
    const double mag = k0 / std::pow(std::abs(std::polar(1.0, wc * dt) - p), 3);
    EXPECT_NEAR(m.gm_freq, wc, 1e-3 * wc);
    EXPECT_NEAR(m.gm, 1.0 / mag, 1e-3 / mag);
}

TEST(Margins, Errors) {
    FreqResponse empty;
    EXPECT_THROW(compute_margins(empty), InputError);
    EXPECT_THROW(default_grid(0.0), InputError);
    EXPECT_THROW(default_grid(0.02, 1), InputError);
}

TEST(Margins, DefaultGrid) {
    const auto g = default_grid(0.02);
    ASSERT_EQ(g.size(), 400u);
    EXPECT_NEAR(g.front(), 1e-2, 1e-15);
    EXPECT_NEAR(g.back(), 0.99 * std::numbers::pi / 0.02, 1e-9);
}

TEST(Margins, KinematicScheduleGate) {
    const auto s = lqr::build_schedule(std::vector<double>{1, 2, 3, 4, 5, 6, 7, 8, 9, 10, 11, 12, 13, 14, 15},
                                       lqr::Designer::kinematic, kP, {});
    for (const auto& g : s.gains()) {
        const auto a = analyze_design(lqr::Designer::kinematic, g, kP);
        EXPECT_GT(a.margins.gm, 2.0) << g.v;
        EXPECT_GT(a.margins.pm, 30.0) << g.v;
        // Grid refinement stability.
        const auto fine = analyze_design(lqr::Designer::kinematic, g, kP, 800);
        if (std::isfinite(a.margins.gm)) {
            EXPECT_NEAR(fine.margins.gm / a.margins.gm, 1.0, 0.01);
        }
        EXPECT_EQ(std::isinf(fine.margins.gm), std::isinf(a.margins.gm));
        EXPECT_NEAR(fine.margins.pm, a.margins.pm, 0.5);
    }
}

TEST(Margins, DynamicScheduleHasPositiveMargins) {
    const auto s = lqr::build_schedule(std::vector<double>{1, 3, 5, 8, 10, 15, 20}, lqr::Designer::dynamic, kP,
                                       lqr::LqrWeights::equal(lqr::Designer::dynamic));
    for (const auto& g : s.gains()) {
        const auto a = analyze_design(lqr::Designer::dynamic, g, kP);
        EXPECT_GT(a.margins.gm, 1.0) << g.v;
        EXPECT_GT(a.margins.pm, 0.0) << g.v;
    }
}

TEST(Margins, RegressionAtTenMetersPerSecond) {
    const auto g = lqr::design_kinematic(10.0, kP);
    const auto a = analyze_design(lqr::Designer::kinematic, g, kP);
    EXPECT_FALSE(a.margins.has_phase_crossover);
    ASSERT_TRUE(a.margins.has_gain_crossover);
    EXPECT_GT(a.margins.pm, 55.0);
    EXPECT_LT(a.margins.pm, 75.0);
}
