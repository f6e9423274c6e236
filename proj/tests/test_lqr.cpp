#include <gtest/gtest.h>

#include <cmath>
#include <random>
#include <sstream>

#include "oracles.hpp"
#include "steerkit/lqr.hpp"

using namespace steerkit;
using namespace steerkit::lqr;

namespace {

const VehicleParams kP = models::default_params();

std::vector<double> grid(double lo, double hi, double step) {
    std::vector<double> g;
    for (double v = lo; v <= hi + 1e-9; v += step) g.push_back(v);
    return g;
}

double norm(const std::vector<double>& k) {
    double s = 0.0;
    for (double x : k) s += x * x;
    return std::sqrt(s);
}

// Quadratic cost of u = -k x from x0 over n steps.
double cost(const StateSpace& sys, const std::vector<double>& k, const std::vector<double>& q, double r,
            std::vector<double> x, int n) {
    double j = 0.0;
    const std::size_t ns = x.size();
    for (int it = 0; it < n; ++it) {
        double u = 0.0;
        for (std::size_t i = 0; i < ns; ++i) u -= k[i] * x[i];
        for (std::size_t i = 0; i < ns; ++i) j += q[i] * x[i] * x[i];
        j += r * u * u;
        std::vector<double> nx(ns, 0.0);
        for (std::size_t i = 0; i < ns; ++i) {
            for (std::size_t c = 0; c < ns; ++c) nx[i] += sys.A(i, c) * x[c];
            nx[i] += sys.B(i, 0) * u;
        }
        x = nx;
    }
    return j;
}

}  // namespace

TEST(DesignKinematic, SignsAndRegression) {
    const auto g = design_kinematic(5.0, kP);
    ASSERT_EQ(g.k.size(), 2u);
    EXPECT_GT(g.k[0], 0.0);
    EXPECT_GT(g.k[1], 0.0);
    EXPECT_LT(g.closed_loop_radius, 1.0 - kStabilityMargin);
    // Independent check: doubling-algorithm Riccati solution on the exact ZOH model.
    oracle::M ad, bd;
    oracle::kinematic_zoh(5.0, kP.L, kDefaultDt, ad, bd);
    const oracle::M x = oracle::dare_doubling(ad, bd, oracle::eye(2), {{1.0}});
    const oracle::M bt = oracle::tr(bd);
    const oracle::M k = oracle::mul(oracle::inv(oracle::add({{1.0}}, oracle::mul(oracle::mul(bt, x), bd))),
                                    oracle::mul(oracle::mul(bt, x), ad));
    EXPECT_NEAR(g.k[0], k[0][0], 1e-9 * std::abs(k[0][0]));
    EXPECT_NEAR(g.k[1], k[0][1], 1e-9 * std::abs(k[0][1]));
}

TEST(DesignKinematic, LateralGainDecreasesWithSpeed) {
    for (double v : {1.0, 2.5, 5.0, 7.0}) EXPECT_LT(design_kinematic(2 * v, kP).k[0], design_kinematic(v, kP).k[0]);
}

TEST(DesignKinematic, RejectsBadInputs) {
    EXPECT_THROW(design_kinematic(5.0, kP, {{0.0, 0.0}, 1.0}), InputError);
    EXPECT_THROW(design_kinematic(5.0, kP, {{1.0}, 1.0}), InputError);
    EXPECT_THROW(design_kinematic(5.0, kP, {{1.0, 1.0}, 0.0}), InputError);
    EXPECT_THROW(design_kinematic(5.0, kP, {}, 0.5), InputError);
    EXPECT_THROW(design_kinematic(0.0, kP), DesignError);
    try {
        design_dynamic(0.3, kP);
        FAIL();
    } catch (const DesignError& e) {
        EXPECT_EQ(e.speed(), 0.3);
    }
}

TEST(DesignDynamic, StableAcrossSpeeds) {
    for (double vx : {1.0, 5.0, 10.0, 15.0, 20.0}) {
        const auto g = design_dynamic(vx, kP);
        ASSERT_EQ(g.k.size(), 4u);
        const auto sys = design_model(Designer::dynamic, vx, kP, g.dt);
        oracle::M acl = oracle::zeros(4, 4);
        for (int i = 0; i < 4; ++i)
            for (int j = 0; j < 4; ++j) acl[i][j] = sys.A(i, j) - sys.B(i, 0) * g.k[j];
        EXPECT_LT(oracle::spectral_radius(acl), 1.0 - kStabilityMargin) << vx;
        EXPECT_NEAR(g.closed_loop_radius, oracle::spectral_radius(acl), 1e-8);
    }
}

TEST(DesignDynamic, ZeroErrorZeroCommand) {
    const auto g = design_dynamic(10.0, kP);
    const double e[4] = {0, 0, 0, 0};
    EXPECT_EQ(g.apply(e), 0.0);
}

TEST(DesignDynamic, ExpensiveControlShrinksGain) {
    for (double vx : {3.0, 10.0}) {
        const auto cheap = design_dynamic(vx, kP, LqrWeights::equal(Designer::dynamic));
        const auto dear = design_dynamic(vx, kP, {{1, 1, 1, 1}, 100.0});
        EXPECT_LT(norm(dear.k), norm(cheap.k));
    }
}

TEST(Design, UniformCostScalingLeavesGain) {
    for (Designer d : {Designer::kinematic, Designer::dynamic}) {
        const auto base = design(d, 8.0, kP, LqrWeights::equal(d), kDefaultDt);
        LqrWeights w = LqrWeights::equal(d);
        for (double& q : w.q_diag) q *= 37.0;
        w.r *= 37.0;
        const auto scaled = design(d, 8.0, kP, w, kDefaultDt);
        for (std::size_t i = 0; i < base.k.size(); ++i) EXPECT_NEAR(scaled.k[i], base.k[i], 1e-9 * (1 + std::abs(base.k[i])));
    }
}

TEST(Design, LqrGainDominatesRandomStabilizingGains) {
    const auto g = design_kinematic(5.0, kP);
    const auto sys = design_model(Designer::kinematic, 5.0, kP, g.dt);
    const std::vector<double> q{1, 1};
    const double best = cost(sys, g.k, q, 1.0, {1, 0}, 2000);
    std::mt19937_64 gen(17);
    std::uniform_real_distribution<double> f(0.5, 1.5);
    int tried = 0;
    while (tried < 100) {
        const std::vector<double> k{g.k[0] * f(gen), g.k[1] * f(gen)};
        if (!(closed_loop_radius(sys, k) < 1.0)) continue;
        ++tried;
        EXPECT_LE(best, cost(sys, k, q, 1.0, {1, 0}, 2000) + 1e-12);
    }
}

TEST(Schedule, KinematicGridCertified) {
    const auto speeds = grid(1, 15, 1);
    const auto s = build_schedule(speeds, Designer::kinematic, kP, {});
    ASSERT_EQ(s.gains().size(), 15u);
    for (const auto& g : s.gains()) EXPECT_LT(g.closed_loop_radius, 1.0 - kStabilityMargin);
    // Both columns fall monotonically with speed under equal weights.
    for (std::size_t i = 1; i < s.gains().size(); ++i) {
        EXPECT_LT(s.gains()[i].k[0], s.gains()[i - 1].k[0]);
        EXPECT_LT(s.gains()[i].k[1], s.gains()[i - 1].k[1]);
    }
}

TEST(Schedule, InterpolatedGainsStableAtFineResolution) {
    for (Designer d : {Designer::kinematic, Designer::dynamic}) {
        const auto s = build_schedule(grid(1, 15, 1), d, kP, LqrWeights::equal(d));
        for (int i = 10; i <= 150; ++i) {
            const double v = i / 10.0;
            const auto g = s.interpolate(v);
            const auto sys = design_model(d, v, kP, s.dt());
            EXPECT_LT(closed_loop_radius(sys, g.k), 1.0 - kStabilityMargin) << to_string(d) << " v=" << v;
        }
    }
}

TEST(Schedule, LookupPolicy) {
    const auto s = build_schedule(grid(1, 15, 1), Designer::kinematic, kP, {});
    const auto on = s.lookup(4.0);
    EXPECT_EQ(on.k, s.gains()[3].k);
    const auto mid = s.lookup(4.5);
    for (std::size_t i = 0; i < 2; ++i) EXPECT_DOUBLE_EQ(mid.k[i], 0.5 * (s.gains()[3].k[i] + s.gains()[4].k[i]));
    EXPECT_GT(mid.closed_loop_radius, 0.0);
    EXPECT_LT(mid.closed_loop_radius, 1.0);
    EXPECT_EQ(s.lookup(0.2).k, s.gains().front().k);
    EXPECT_EQ(s.lookup(40.0).k, s.gains().back().k);
}

TEST(Schedule, Rejections) {
    const double one[] = {5.0};
    EXPECT_THROW(build_schedule(one, Designer::kinematic, kP, {}), InputError);
    const double desc[] = {5.0, 4.0};
    EXPECT_THROW(build_schedule(desc, Designer::kinematic, kP, {}), InputError);
    const double low[] = {0.1, 1.0};
    try {
        build_schedule(low, Designer::kinematic, kP, {});
        FAIL();
    } catch (const DesignError& e) {
        EXPECT_EQ(e.speed(), 0.1);
    }
}

TEST(GainsCsv, RoundTripBitExact) {
    for (Designer d : {Designer::kinematic, Designer::dynamic}) {
        const auto s = build_schedule(grid(2, 20, 2), d, kP, LqrWeights::equal(d));
        std::stringstream ss;
        write_gains_csv(ss, s);
        const std::string text = ss.str();
        const auto back = read_gains_csv(ss);
        EXPECT_EQ(back.designer(), d);
        EXPECT_EQ(back.dt(), s.dt());
        ASSERT_EQ(back.gains().size(), s.gains().size());
        for (std::size_t i = 0; i < s.gains().size(); ++i) {
            EXPECT_EQ(back.gains()[i].v, s.gains()[i].v);
            EXPECT_EQ(back.gains()[i].k, s.gains()[i].k);
        }
        std::stringstream again;
        write_gains_csv(again, back);
        EXPECT_EQ(again.str(), text);
    }
}

TEST(GainsCsv, Errors) {
    std::istringstream no_dt("v,k1,k2\n1,2,3\n");
    EXPECT_THROW(read_gains_csv(no_dt), InputError);
    std::istringstream mixed("v,k1,k2,dt\n1,2,3,0.02\n2,2,3,0.01\n");
    EXPECT_THROW(read_gains_csv(mixed), InputError);
    std::istringstream one("v,k1,k2,dt\n1,2,3,0.02\n");
    EXPECT_THROW(read_gains_csv(one), InputError);
    std::istringstream empty("v,k1,k2,dt\n");
    EXPECT_THROW(read_gains_csv(empty), InputError);
}
