#include <gtest/gtest.h>

#include <cmath>
#include <numbers>
#include <random>
#include <sstream>

#include "steerkit/pathkit.hpp"

using namespace steerkit;
using namespace steerkit::pathkit;

namespace {

PathShape circle(double r, bool left = true) {
    PathShape s;
    s.kind = PathKind::circle;
    s.radius = r;
    s.left = left;
    return s;
}

RecordedLog circle_log(double R, double step, int n, double noise = 0.0, unsigned seed = 1) {
    std::mt19937_64 gen(seed);
    std::normal_distribution<double> nd(0.0, 1.0);
    RecordedLog log;
    for (int i = 0; i < n; ++i) {
        const double th = i * step / R;
        log.push_back({i * 0.1, R * std::sin(th) + noise * nd(gen), R * (1 - std::cos(th)) + noise * nd(gen), th,
                       std::nullopt, std::nullopt, std::nullopt});
    }
    return log;
}

}  // namespace

TEST(GenPath, Line) {
    PathShape s;
    s.length = 100;
    const auto p = gen_path(s, 0.25);
    EXPECT_NEAR(p.length(), 100.0, 1e-12);
    EXPECT_FALSE(p.closed());
    for (const auto& pt : p.points()) {
        EXPECT_EQ(pt.kappa, 0.0);
        EXPECT_EQ(pt.psi_d, 0.0);
    }
}

TEST(GenPath, CircleLeftAndRight) {
    const auto p = gen_path(circle(50), 0.1);
    EXPECT_TRUE(p.closed());
    EXPECT_NEAR(p.length(), 2 * std::numbers::pi * 50, 1e-9);
    for (const auto& pt : p.points()) {
        EXPECT_EQ(pt.kappa, 0.02);
        EXPECT_NEAR(std::hypot(pt.X, pt.Y - 50), 50.0, 1e-9);
    }
    const auto r = gen_path(circle(50, false), 0.1);
    for (const auto& pt : r.points()) EXPECT_EQ(pt.kappa, -0.02);
    EXPECT_LT(r[10].Y, 0.0);
}

TEST(GenPath, SCurvePeakCurvature) {
    PathShape s;
    s.kind = PathKind::s_curve;
    s.offset = 3.5;
    s.transition = 50;
    const auto p = gen_path(s, 0.05);
    double peak = 0.0;
    for (const auto& pt : p.points()) peak = std::max(peak, std::abs(pt.kappa));
    // Maximize y''/(1 + y'^2)^1.5 of the quintic by dense sampling of the closed forms.
    double oracle = 0.0;
    for (int i = 0; i <= 2000000; ++i) {
        const double u = i / 2000000.0;
        const double d1 = 3.5 / 50 * 30 * u * u * (1 - u) * (1 - u);
        const double d2 = 3.5 / 2500 * 60 * u * (1 - u) * (1 - 2 * u);
        oracle = std::max(oracle, std::abs(d2) / std::pow(1 + d1 * d1, 1.5));
    }
    EXPECT_NEAR(peak, oracle, 1e-6);
    EXPECT_NEAR(p.back().Y, 3.5, 1e-12);
}

TEST(GenPath, HeadingMatchesPositions) {
    PathShape s;
    s.kind = PathKind::lane_change;
    const auto p = gen_path(s, 0.1);
    EXPECT_LT(max_heading_inconsistency(p), 1e-4);
    for (std::size_t i = 1; i < p.size(); ++i)
        EXPECT_NEAR(std::hypot(p[i].X - p[i - 1].X, p[i].Y - p[i - 1].Y), p[i].s - p[i - 1].s, 1e-6);
}

TEST(GenPath, IntegratedCurvatureEqualsHeadingChange) {
    PathShape lc;
    lc.kind = PathKind::lane_change;
    PathShape half = circle(30);
    half.arc_angle = std::numbers::pi / 2;
    PathShape sc;
    sc.kind = PathKind::s_curve;
    sc.offset = -2;
    for (const auto& shape : {lc, half, sc, circle(20), circle(40, false)}) {
        const auto p = gen_path(shape, 0.2);
        const double net = p.closed() ? (p.front().kappa > 0 ? 2 * std::numbers::pi : -2 * std::numbers::pi)
                                      : p.back().psi_d - p.front().psi_d;
        EXPECT_NEAR(integrated_curvature(p), net, 1e-3);
    }
}

TEST(GenPath, CircleWithEntryStraight) {
    PathShape c = circle(50);
    c.entry = 30;
    const auto p = gen_path(c, 0.1);
    EXPECT_FALSE(p.closed());
    EXPECT_NEAR(p.length(), 30 + 2 * std::numbers::pi * 50, 1e-9);
    for (const auto& pt : p.points()) {
        if (pt.s <= 30.0) {
            EXPECT_EQ(pt.kappa, 0.0);
            EXPECT_EQ(pt.Y, 0.0);
        } else {
            EXPECT_EQ(pt.kappa, 0.02);
            EXPECT_NEAR(std::hypot(pt.X - 30, pt.Y - 50), 50.0, 1e-9);
        }
    }
    EXPECT_LT(max_heading_inconsistency(p), 1e-4);
    c.entry = -1;
    EXPECT_THROW(gen_path(c, 0.1), InputError);
}

TEST(GenPath, InvalidParameters) {
    EXPECT_THROW(gen_path(PathShape{}, 0.01), InputError);
    EXPECT_THROW(gen_path(PathShape{}, 0.6), InputError);
    EXPECT_THROW(gen_path(circle(5.0), 0.1), InputError);
    PathShape s;
    s.kind = PathKind::lane_change;
    s.transition = 2;
    EXPECT_THROW(gen_path(s, 0.1), InputError);
    s.length = -1;
    s.kind = PathKind::line;
    EXPECT_THROW(gen_path(s, 0.1), InputError);
}

TEST(RefPath, Validation) {
    EXPECT_THROW(RefPath({{0, 0, 0, 0, 0}}, false), InputError);
    EXPECT_THROW(RefPath({{0, 0, 0, 0, 0}, {0, 1, 0, 0, 0}}, false), InputError);
    EXPECT_THROW(RefPath({{0, 0, 0, 0, 0}, {1, 1, 0, 0, 0}}, true, 0.0), InputError);
}

TEST(Project, OnPathAndLeftOffset) {
    PathShape s;
    const auto p = gen_path(s, 0.25);
    auto r = project(p, {30.0, 0.0, 0.0});
    EXPECT_NEAR(r.e_y, 0.0, 1e-12);
    EXPECT_NEAR(r.e_psi, 0.0, 1e-12);
    EXPECT_NEAR(r.s, 30.0, 1e-9);
    r = project(p, {30.1, 1.0, 0.0});
    EXPECT_NEAR(r.e_y, 1.0, 1e-12);
    EXPECT_NEAR(r.e_psi, 0.0, 1e-12);
    r = project(p, {30.1, -1.0, 0.2});
    EXPECT_NEAR(r.e_y, -1.0, 1e-12);
    EXPECT_NEAR(r.e_psi, 0.2, 1e-12);
}

TEST(Project, OutsideCircleIsRight) {
    const auto p = gen_path(circle(50), 0.1);
    for (double th : {0.3, 1.7, 3.0, 5.9}) {
        const Pose pose{51 * std::sin(th), 50 - 51 * std::cos(th), wrap_angle(th)};
        const auto r = project(p, pose);
        EXPECT_NEAR(r.e_y, -1.0, 1e-6) << th;
        EXPECT_EQ(r.kappa, 0.02);
        EXPECT_NEAR(r.s, 50 * th, 1e-6);
        EXPECT_NEAR(r.e_psi, 0.0, 1e-6);
    }
    const auto on = project(p, {50 * std::sin(1.0), 50 - 50 * std::cos(1.0), 1.0});
    EXPECT_NEAR(on.e_y, 0.0, 1e-9);
    EXPECT_EQ(on.kappa, 0.02);
}

TEST(Project, ReflectionNegatesLateralError) {
    PathShape s;
    s.kind = PathKind::lane_change;
    const auto p = gen_path(s, 0.2);
    std::mt19937_64 gen(4);
    std::uniform_real_distribution<double> sd(1, p.length() - 1), ed(-3, 3);
    for (int i = 0; i < 200; ++i) {
        const double sv = sd(gen), e = ed(gen);
        const Pose left = pose_at(p, sv, e);
        const Pose right = pose_at(p, sv, -e);
        EXPECT_NEAR(project(p, left).e_y, -project(p, right).e_y, 1e-9);
        EXPECT_NEAR(project(p, left).e_y, e, 2e-3);
    }
}

TEST(Project, WindowPreventsBackwardJump) {
    // A hairpin: the return leg passes 3 m from the outbound leg.
    std::vector<PathPoint> pts;
    double s = 0;
    for (int i = 0; i <= 200; ++i) pts.push_back({s = i * 0.5, i * 0.5, 0, 0, 0});
    const double R = 1.5;
    for (int i = 1; i <= 30; ++i) {
        const double th = std::numbers::pi * i / 30;
        pts.push_back({s + R * th, 100 + R * std::sin(th), R - R * std::cos(th), wrap_angle(th), 1 / R});
    }
    s = pts.back().s;
    for (int i = 1; i <= 200; ++i) pts.push_back({s + i * 0.5, 100 - i * 0.5, 3, std::numbers::pi, 0});
    const RefPath p(pts, false);
    const Pose pose{60, 1.6, std::numbers::pi};  // nearer the return leg
    EXPECT_NEAR(project(p, pose).e_y, 1.4, 1e-9);
    // Someone who was on the outbound leg stays there.
    const auto r = project(p, pose, 59.0);
    EXPECT_NEAR(r.s, 60.0, 1e-9);
    EXPECT_NEAR(r.e_y, 1.6, 1e-9);
}

TEST(Project, LostBeyondHorizon) {
    PathShape s;
    const auto p = gen_path(s, 0.25);
    EXPECT_THROW(project(p, {50, 60, 0}), SimulationError);
}

TEST(LoadRecorded, CircleCurvatureFromHeading) {
    const auto p = load_recorded(circle_log(50, 0.2, 600), {0.25, 10});
    for (std::size_t i = 2; i + 2 < p.size(); ++i) EXPECT_NEAR(p[i].kappa, 0.02, 0.02 * 0.02);
}

TEST(LoadRecorded, CurvatureFromYawRate) {
    auto log = circle_log(50, 0.2, 300);
    for (auto& smp : log) {
        smp.speed = 2.0;
        smp.yaw_rate = 2.0 / 50.0;
    }
    const auto p = load_recorded(log);
    for (const auto& pt : p.points()) EXPECT_NEAR(pt.kappa, 0.02, 1e-12);
}

TEST(LoadRecorded, StraightLineAndDuplicates) {
    RecordedLog log;
    for (int i = 0; i < 50; ++i) {
        log.push_back({i * 0.1, i * 0.3, 2.0, 0.0, std::nullopt, std::nullopt, std::nullopt});
        if (i % 7 == 0) log.push_back({i * 0.1 + 0.05, i * 0.3, 2.0, 0.0, std::nullopt, std::nullopt, std::nullopt});
    }
    const auto p = load_recorded(log);
    EXPECT_NEAR(p.length(), 49 * 0.3, 1e-9);
    for (const auto& pt : p.points()) {
        EXPECT_LT(std::abs(pt.kappa), 1e-3);
        EXPECT_NEAR(pt.psi_d, 0.0, 1e-12);
    }
}

TEST(LoadRecorded, OriginalSamplesProjectClose) {
    const auto log = circle_log(20, 0.37, 200);
    const double spacing = 0.25;
    const auto p = load_recorded(log, {spacing, 10});
    std::optional<double> prev;
    for (const auto& smp : log) {
        const auto r = project(p, {smp.X, smp.Y, smp.psi}, prev);
        prev = r.s;
        EXPECT_LE(std::abs(r.e_y), spacing / 2);
    }
}

TEST(LoadRecorded, Errors) {
    EXPECT_THROW(load_recorded(circle_log(50, 0.2, 5)), InputError);
    RecordedLog still(20, RecordedSample{});
    for (std::size_t i = 0; i < still.size(); ++i) still[i].t = static_cast<double>(i);
    EXPECT_THROW(load_recorded(still), InputError);
    auto back = circle_log(50, 0.2, 20);
    back[5].t = 0.0;
    EXPECT_THROW(load_recorded(back), InputError);
}

TEST(RecordedCsv, RoundTripAndChannels) {
    auto log = circle_log(50, 0.2, 12);
    log[3].yaw_rate = 0.04;
    for (auto& smp : log) {
        smp.yaw_rate = 0.04;
        smp.speed = 2.0;
        smp.steer = 0.054;
    }
    std::stringstream ss;
    write_recorded_csv(ss, log);
    const auto back = read_recorded_csv(ss);
    ASSERT_EQ(back.size(), log.size());
    for (std::size_t i = 0; i < log.size(); ++i) {
        EXPECT_EQ(back[i].X, log[i].X);
        EXPECT_EQ(back[i].psi, log[i].psi);
        EXPECT_EQ(back[i].yaw_rate, log[i].yaw_rate);
        EXPECT_EQ(back[i].steer, log[i].steer);
    }
}

TEST(RecordedCsv, CommentsAndErrors) {
    std::istringstream ok("# a comment\nt,X,Y,psi\n0,0,0,0\n# mid\n1,1,0,0\n");
    EXPECT_EQ(read_recorded_csv(ok).size(), 2u);
    std::istringstream missing("t,X,psi\n0,0,0\n");
    EXPECT_THROW(read_recorded_csv(missing), InputError);
    std::istringstream bad("t,X,Y,psi\n0,zero,0,0\n");
    EXPECT_THROW(read_recorded_csv(bad), InputError);
    std::istringstream ragged("t,X,Y,psi\n0,0,0\n");
    EXPECT_THROW(read_recorded_csv(ragged), InputError);
}
