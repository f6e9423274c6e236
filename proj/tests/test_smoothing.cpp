#include <gtest/gtest.h>

#include <cmath>
#include <numbers>

#include "steerkit/rng.hpp"
#include "steerkit/smoothing.hpp"

using namespace steerkit;
using namespace steerkit::pathkit;

namespace {

const models::VehicleParams kP = models::default_params();

RefPath noisy_straight(std::uint64_t seed, double sigma = 0.3, double step = 0.5, double length = 150.0) {
    Rng rng(seed);
    RecordedLog log;
    const int n = static_cast<int>(length / step);
    for (int i = 0; i <= n; ++i)
        log.push_back({i * 0.1, i * step, sigma * rng.normal(), 0.0, std::nullopt, std::nullopt, std::nullopt});
    return load_recorded(log, {0.25, 10});
}

double total_variation(const RefPath& p) {
    double tv = 0.0;
    for (std::size_t i = 1; i < p.size(); ++i) tv += std::abs(p[i].kappa - p[i - 1].kappa);
    return tv;
}

double max_abs_kappa(const RefPath& p) {
    double m = 0.0;
    for (const auto& pt : p.points()) m = std::max(m, std::abs(pt.kappa));
    return m;
}

}  // namespace

TEST(Smoothing, NoisyStraightBecomesStraight) {
    for (std::uint64_t seed = 1; seed <= 5; ++seed) {
        const auto raw = noisy_straight(seed);
        const auto out = smooth_recorded(raw, kP);
        EXPECT_LT(max_abs_kappa(out), 0.01) << seed;
        EXPECT_LT(total_variation(out), total_variation(raw)) << seed;
        // Noise inflates the raw polyline; compare with the 150 m span instead.
        EXPECT_GT(out.length(), 0.95 * 150.0) << seed;
    }
}

TEST(Smoothing, CleanCircleKeepsCurvature) {
    PathShape shape;
    shape.kind = PathKind::circle;
    shape.radius = 50;
    const auto raw = gen_path(shape, 0.25);
    const auto out = smooth_recorded(raw, kP);
    // Away from the start transient the curvature stays within 5 %.
    for (const auto& pt : out.points()) {
        if (pt.s > 10.0 && pt.s < out.length() - 10.0) {
            EXPECT_NEAR(pt.kappa, 0.02, 0.02 * 0.05) << pt.s;
        }
    }
}

TEST(Smoothing, OutputIsKinematicallyFeasible) {
    const auto raw = noisy_straight(9, 0.8, 0.5);
    const auto out = smooth_recorded(raw, kP);
    const double limit = std::tan(kP.max_steer) / kP.L;
    for (const auto& pt : out.points()) EXPECT_LE(std::abs(pt.kappa), limit + 1e-12);
    for (std::size_t i = 1; i < out.size(); ++i) EXPECT_NEAR(out[i].s - out[i - 1].s, 0.25, 0.01);
}

TEST(Smoothing, PrefilterKeepsLinesExact) {
    PathShape shape;
    shape.length = 60;
    const auto raw = gen_path(shape, 0.25);
    const auto f = detail::prefilter(raw, 12.0);
    for (const auto& pt : f.points()) {
        EXPECT_NEAR(pt.Y, 0.0, 1e-12);
        EXPECT_NEAR(pt.kappa, 0.0, 1e-9);
    }
    EXPECT_NEAR(f.length(), 60.0, 1e-9);
}

TEST(Smoothing, DivergenceIsReported) {
    // A zig-zag far beyond the steering limit cannot be followed.
    RecordedLog log;
    for (int i = 0; i < 80; ++i)
        log.push_back({i * 0.1, i * 2.0, (i / 5) % 2 == 0 ? 0.0 : 12.0, 0.0, std::nullopt, std::nullopt, std::nullopt});
    const auto raw = load_recorded(log, {0.25, 10});
    SmoothOptions opt;
    opt.window = 0.0;
    opt.max_error = 1.0;
    try {
        smooth_recorded(raw, kP, opt);
        FAIL() << "expected divergence";
    } catch (const SimulationError& e) {
        EXPECT_NE(std::string(e.what()).find("max |e_y|"), std::string::npos);
    }
}

TEST(Smoothing, OptionValidation) {
    const auto raw = noisy_straight(1);
    SmoothOptions opt;
    opt.v = 0.1;
    EXPECT_THROW(smooth_recorded(raw, kP, opt), InputError);
    opt = {};
    opt.spacing = 2.0;
    EXPECT_THROW(smooth_recorded(raw, kP, opt), InputError);
    opt = {};
    opt.max_error = 0.0;
    EXPECT_THROW(smooth_recorded(raw, kP, opt), InputError);
}
