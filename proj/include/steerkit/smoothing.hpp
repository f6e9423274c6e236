#pragma once

// Smoothing of recorded reference paths by driving them in simulation: the
// kinematic controller tracks the (lightly prefiltered) raw path and the
// trajectory it actually drives becomes the new reference. Curvature of the
// result is tan(delta) / L of the simulated steering, so it never exceeds
// what the vehicle can steer.

#include <algorithm>
#include <array>
#include <cmath>
#include <optional>
#include <string>
#include <vector>

#include "steerkit/error.hpp"
#include "steerkit/lqr.hpp"
#include "steerkit/models.hpp"
#include "steerkit/pathkit.hpp"
#include "steerkit/simkit.hpp"

namespace steerkit::pathkit {

struct SmoothOptions {
    double v = 3.0;            // m/s, tracking speed
    double window = 12.0;      // m, half-width of the prefilter kernel; 0 disables it
    double spacing = 0.25;     // m, output sample spacing
    double lag_tau = 0.1;      // s, actuator lag during the tracking run
    double max_error = 5.0;    // m, tracking error treated as divergence
    int passes = 2;            // prefilter passes, arc length re-measured between them
    bool feedforward = true;
    lqr::LqrWeights weights;
};

namespace detail {

// Weighted least-squares line through (u_i, y_i); returns value and slope
// at u = 0. Local linear fits keep their accuracy at the path ends, where a
// quadratic would extrapolate noise into the curvature.
inline std::array<double, 2> local_linear(const std::vector<double>& u, const std::vector<double>& w,
                                          const std::vector<double>& y) {
    double sw = 0.0, su = 0.0, suu = 0.0, sy = 0.0, suy = 0.0;
    for (std::size_t i = 0; i < u.size(); ++i) {
        sw += w[i];
        su += w[i] * u[i];
        suu += w[i] * u[i] * u[i];
        sy += w[i] * y[i];
        suy += w[i] * u[i] * y[i];
    }
    const double det = sw * suu - su * su;
    if (!(det > 0.0)) throw NumericError("local_linear: degenerate window");
    return {(suu * sy - su * suy) / det, (sw * suy - su * sy) / det};
}

// Tricube-weighted local linear regression of X(s), Y(s). Headings come
// from the fitted slopes, curvature from central differences of heading.
// Closed paths are filtered with wrap-around and stay closed.
inline RefPath prefilter(const RefPath& path, double window) {
    std::vector<PathPoint> pts;
    std::size_t first = 0;
    const std::size_t n = path.size();
    if (path.closed()) {
        const double len = path.length();
        for (const auto& p : path.points())
            if (p.s >= len - window) pts.push_back({p.s - len, p.X, p.Y, p.psi_d, p.kappa});
        first = pts.size();
        pts.insert(pts.end(), path.points().begin(), path.points().end());
        for (const auto& p : path.points())
            if (p.s <= window) pts.push_back({p.s + len, p.X, p.Y, p.psi_d, p.kappa});
    } else {
        pts = path.points();
    }

    std::vector<PathPoint> out(n);
    std::vector<double> u, w, xs, ys;
    std::size_t lo = 0, hi = 0;
    for (std::size_t i = 0; i < n; ++i) {
        const double s0 = pts[first + i].s;
        while (pts[lo].s < s0 - window) ++lo;
        while (hi + 1 < pts.size() && pts[hi + 1].s <= s0 + window) ++hi;
        u.clear();
        w.clear();
        xs.clear();
        ys.clear();
        for (std::size_t j = lo; j <= hi; ++j) {
            const double d = (pts[j].s - s0) / window;
            const double t = 1.0 - std::abs(d * d * d);
            u.push_back(pts[j].s - s0);
            w.push_back(t * t * t + 1e-12);
            xs.push_back(pts[j].X);
            ys.push_back(pts[j].Y);
        }
        if (u.size() < 3) throw InputError("smooth_recorded: prefilter window holds fewer than three samples");
        const auto fx = local_linear(u, w, xs);
        const auto fy = local_linear(u, w, ys);
        out[i] = {s0, fx[0], fy[0], std::atan2(fy[1], fx[1]), 0.0};
    }
    // Re-measure arc length along the filtered points.
    for (std::size_t i = 1; i < n; ++i)
        out[i].s = out[i - 1].s + std::max(std::hypot(out[i].X - out[i - 1].X, out[i].Y - out[i - 1].Y), 1e-9);
    const bool closed = path.closed();
    const double closing = closed ? std::max(std::hypot(out[0].X - out[n - 1].X, out[0].Y - out[n - 1].Y), 1e-9) : 0.0;
    const double len = out[n - 1].s + closing;
    for (std::size_t i = 0; i < n; ++i) {
        std::size_t a = i == 0 ? 0 : i - 1;
        std::size_t b = i + 1 == n ? i : i + 1;
        double sa = out[a].s, sb = out[b].s;
        if (closed && i == 0) {
            a = n - 1;
            sa = out[a].s - len;
        }
        if (closed && i + 1 == n) {
            b = 0;
            sb = len;
        }
        out[i].kappa = models::wrap_angle(out[b].psi_d - out[a].psi_d) / (sb - sa);
    }
    return RefPath(std::move(out), closed, closing);
}

}  // namespace detail

/// Drives `path` with the kinematic controller at opt.v from its start pose
/// and returns the driven trajectory as a new path. Closed inputs are driven
/// for one lap and come back open. Throws SimulationError when the tracking
/// error against the raw path exceeds opt.max_error.
inline RefPath smooth_recorded(const RefPath& path, const models::VehicleParams& p, const SmoothOptions& opt = {}) {
    p.validate();
    if (!(opt.v >= 0.5 && opt.v <= 30.0)) throw InputError("smooth_recorded: speed must lie in [0.5, 30] m/s");
    if (opt.window < 0.0 || opt.lag_tau < 0.0 || !(opt.max_error > 0.0))
        throw InputError("smooth_recorded: invalid options");
    detail::check_spacing(opt.spacing);

    RefPath track = path;
    if (opt.window > 0.0)
        for (int i = 0; i < opt.passes; ++i) track = detail::prefilter(track, opt.window);
    const double speeds[] = {opt.v, opt.v + 1.0};
    const auto gains = lqr::build_schedule(speeds, lqr::Designer::kinematic, p, opt.weights);

    simkit::ScenarioConfig cfg;
    cfg.model = simkit::ModelKind::kinematic;
    cfg.controller = simkit::ControllerKind::kinematic_ff_fb;
    cfg.path = track;
    cfg.vehicle = p;
    cfg.speed = simkit::SpeedProfile::constant(opt.v);
    cfg.t_end = track.length() / opt.v;
    cfg.actuator.lag_tau = opt.lag_tau;
    cfg.actuator.delay_steps = 0;
    cfg.sensors.steer.quantization_step = 0.0;
    cfg.feedforward = opt.feedforward;

    const auto log = simkit::run_scenario(cfg, gains);
    double worst = 0.0;
    std::optional<double> s_prev;
    for (const auto& r : log.records) {
        const auto pr = project(path, r.pose, s_prev);
        s_prev = pr.s;
        worst = std::max(worst, std::abs(pr.e_y));
    }
    if (!log.ok() || worst > opt.max_error)
        throw SimulationError("smooth_recorded: tracking diverged (max |e_y| = " + std::to_string(worst) + " m" +
                              (log.ok() ? "" : ", " + log.message) + ")");

    // Resample the driven trajectory at uniform distance.
    const auto& rec = log.records;
    const double total = rec.back().distance;
    const int n = std::max(2, static_cast<int>(std::ceil(total / opt.spacing - 1e-12)));
    const double ds = total / n;
    std::vector<PathPoint> out;
    out.reserve(static_cast<std::size_t>(n) + 1);
    std::size_t j = 0;
    for (int k = 0; k <= n; ++k) {
        const double s = k == n ? total : k * ds;
        while (j + 2 < rec.size() && rec[j + 1].distance < s) ++j;
        const auto& a = rec[j];
        const auto& b = rec[j + 1];
        const double f = std::clamp((s - a.distance) / (b.distance - a.distance), 0.0, 1.0);
        const double delta = a.delta_act + f * (b.delta_act - a.delta_act);
        out.push_back({s, a.pose.X + f * (b.pose.X - a.pose.X), a.pose.Y + f * (b.pose.Y - a.pose.Y),
                       models::wrap_angle(a.pose.psi + f * (b.pose.psi - a.pose.psi)), std::tan(delta) / p.L});
    }
    return RefPath(std::move(out), false);
}

}  // namespace steerkit::pathkit
