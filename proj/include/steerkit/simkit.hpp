#pragma once

// Closed-loop lateral control simulation: plant integration, the two
// steering controllers, sensor and actuator imperfections, curvature
// estimation alongside, and tracking metrics.

#include <algorithm>
#include <array>
#include <cmath>
#include <cstdint>
#include <cstdio>
#include <deque>
#include <functional>
#include <limits>
#include <optional>
#include <ostream>
#include <string>
#include <utility>
#include <vector>

#include "steerkit/curvkit.hpp"
#include "steerkit/error.hpp"
#include "steerkit/lqr.hpp"
#include "steerkit/models.hpp"
#include "steerkit/pathkit.hpp"
#include "steerkit/rng.hpp"

namespace steerkit::simkit {

using models::ControlInput;
using models::ErrorState;
using models::Pose;
using models::VehicleParams;
using pathkit::PathProjection;
using pathkit::RefPath;

// ---------------------------------------------------------------------------
// Integration

template <std::size_t N>
using Vec = std::array<double, N>;

namespace detail {

template <std::size_t N>
Vec<N> axpy(const Vec<N>& x, double a, const Vec<N>& y) {
    Vec<N> r;
    for (std::size_t i = 0; i < N; ++i) r[i] = x[i] + a * y[i];
    return r;
}

template <std::size_t N>
void require_finite(const Vec<N>& v) {
    for (double e : v)
        if (!std::isfinite(e)) throw SimulationError("rk4_step: non-finite derivative");
}

}  // namespace detail

/// Classical fourth-order Runge-Kutta step with the input held over the step.
template <std::size_t N, class Input, class Deriv>
Vec<N> rk4_step(Deriv&& deriv, const Vec<N>& x, const Input& u, double dt) {
    if (!(dt > 0.0)) throw InputError("rk4_step: dt must be positive");
    const Vec<N> k1 = deriv(x, u);
    detail::require_finite(k1);
    const Vec<N> k2 = deriv(detail::axpy(x, 0.5 * dt, k1), u);
    const Vec<N> k3 = deriv(detail::axpy(x, 0.5 * dt, k2), u);
    const Vec<N> k4 = deriv(detail::axpy(x, dt, k3), u);
    detail::require_finite(k2);
    detail::require_finite(k3);
    detail::require_finite(k4);
    Vec<N> r;
    for (std::size_t i = 0; i < N; ++i) r[i] = x[i] + dt / 6.0 * (k1[i] + 2.0 * k2[i] + 2.0 * k3[i] + k4[i]);
    return r;
}

/// Kinematic bicycle on (X, Y, psi) of the rear axle.
inline auto kinematic_plant(const VehicleParams& p) {
    return [p](const Vec<3>& x, const ControlInput& u) -> Vec<3> {
        const auto r = models::kinematic_derivative({x[0], x[1], x[2]}, u, p);
        return {r.dX, r.dY, r.dpsi};
    };
}

/// Single-track model with linear tires on (X, Y, psi, vy, r) of the CoG.
/// Longitudinal speed is the input's v.
inline auto dynamic_plant(const VehicleParams& p) {
    return [p](const Vec<5>& x, const ControlInput& u) -> Vec<5> {
        const double psi = x[2], vy = x[3], r = x[4], vx = u.v;
        const double alpha_f = u.delta - (vy + p.Lf * r) / vx;
        const double alpha_r = -(vy - p.Lr * r) / vx;
        const double fyf = 2.0 * p.Caf * alpha_f;
        const double fyr = 2.0 * p.Car * alpha_r;
        return {vx * std::cos(psi) - vy * std::sin(psi), vx * std::sin(psi) + vy * std::cos(psi), r,
                (fyf + fyr) / p.m - vx * r, (p.Lf * fyf - p.Lr * fyr) / p.Iz};
    };
}

// ---------------------------------------------------------------------------
// Controllers

struct SteerCommand {
    ControlInput input;
    double feedback = 0.0;
    double feedforward = 0.0;
    bool saturated = false;
};

namespace detail {

inline SteerCommand finish(double v, double fb, double ff, const VehicleParams& p) {
    const double raw = fb + ff;
    const double d = std::clamp(raw, -p.max_steer, p.max_steer);
    return {{v, d}, fb, ff, d != raw};
}

}  // namespace detail

/// delta = -k1 e_y - k2 e_psi + atan(kappa L), clamped to max_steer.
inline SteerCommand kinematic_controller(const PathProjection& proj, double v, const lqr::GainSchedule& schedule,
                                         const VehicleParams& p, bool feedforward = true) {
    if (schedule.designer() != lqr::Designer::kinematic) throw InputError("kinematic_controller: schedule is not kinematic");
    const auto g = schedule.lookup(v);
    const double e[2] = {proj.e_y, proj.e_psi};
    const double ff = feedforward ? curvkit::feedforward_steer(proj.kappa, p.L).delta : 0.0;
    return detail::finish(v, g.apply(e), ff, p);
}

/// delta = -k . err + atan(kappa L), clamped to max_steer.
inline SteerCommand dynamic_controller(const ErrorState& err, double vx, const lqr::GainSchedule& schedule, double kappa,
                                       const VehicleParams& p, bool feedforward = true) {
    models::require_dynamic_speed(vx, "dynamic_controller");
    if (schedule.designer() != lqr::Designer::dynamic) throw InputError("dynamic_controller: schedule is not dynamic");
    const auto g = schedule.lookup(vx);
    const double e[4] = {err.e_y, err.e_y_dot, err.e_psi, err.e_psi_dot};
    const double ff = feedforward ? curvkit::feedforward_steer(kappa, p.L).delta : 0.0;
    return detail::finish(vx, g.apply(e), ff, p);
}

// ---------------------------------------------------------------------------
// Scenario description

enum class ModelKind { kinematic, dynamic };
enum class ControllerKind { kinematic_ff_fb, dynamic_lqr };

struct SensorChannel {
    double noise_std = 0.0;
    double quantization_step = 0.0;  // 0 = none
    double rate_hz = 0.0;            // 0 = every simulation step
    int delay_steps = 0;             // in samples of this channel
};

struct SensorConfig {
    SensorChannel position{0.0, 0.0, 100.0, 0};
    SensorChannel heading{0.0, 0.0, 100.0, 0};
    SensorChannel yaw_rate{0.0, 0.0, 200.0, 0};
    SensorChannel speed{0.0, 0.0, 100.0, 0};
    // 0.1 deg at the steering wheel through a 16:1 ratio.
    SensorChannel steer{0.0, 0.1 / 16.0 * 3.14159265358979323846 / 180.0, 100.0, 0};
    SensorChannel lateral_velocity{0.0, 0.0, 100.0, 0};
};

struct ActuatorConfig {
    double lag_tau = 0.1;    // s, first-order lag; 0 = none
    int delay_steps = 2;     // pure delay in control periods
    double rate_limit = 1.0; // rad/s at the road wheel; 0 = unlimited
};

/// Piecewise-linear speed over time, held constant beyond its ends.
struct SpeedProfile {
    std::vector<std::pair<double, double>> points{{0.0, 10.0}};

    static SpeedProfile constant(double v) { return {{{0.0, v}}}; }

    double at(double t) const {
        if (t <= points.front().first) return points.front().second;
        if (t >= points.back().first) return points.back().second;
        auto it = std::upper_bound(points.begin(), points.end(), t, [](double x, const auto& p) { return x < p.first; });
        const auto& hi = *it;
        const auto& lo = *(it - 1);
        return lo.second + (t - lo.first) / (hi.first - lo.first) * (hi.second - lo.second);
    }

    double min() const {
        double m = points.front().second;
        for (const auto& p : points) m = std::min(m, p.second);
        return m;
    }
    double max() const {
        double m = points.front().second;
        for (const auto& p : points) m = std::max(m, p.second);
        return m;
    }

    void validate() const {
        if (points.empty()) throw InputError("speed profile: empty");
        for (std::size_t i = 0; i < points.size(); ++i) {
            if (!(points[i].second > 0.0) || !std::isfinite(points[i].second))
                throw InputError("speed profile: speeds must be positive");
            if (i > 0 && !(points[i].first > points[i - 1].first)) throw InputError("speed profile: times must increase");
        }
    }
};

struct ScenarioConfig {
    ModelKind model = ModelKind::kinematic;
    ControllerKind controller = ControllerKind::kinematic_ff_fb;
    RefPath path;
    SpeedProfile speed;
    double t_end = 30.0;
    double sim_dt = 0.001;
    double control_dt = 0.02;
    double initial_e_y = 0.0;
    double initial_e_psi = 0.0;
    SensorConfig sensors;
    ActuatorConfig actuator;
    curvkit::KfState kf;
    std::uint64_t seed = 1;
    VehicleParams vehicle;
    bool feedforward = true;
    pathkit::ProjectOptions projection;

    int control_ratio() const { return static_cast<int>(std::lround(control_dt / sim_dt)); }

    void validate() const {
        vehicle.validate();
        speed.validate();
        if (path.size() < 2) throw InputError("scenario: reference path missing");
        if (!(t_end > 0.0)) throw InputError("scenario: t_end must be positive");
        if (!(sim_dt > 0.0) || !(control_dt > 0.0)) throw InputError("scenario: time steps must be positive");
        if (sim_dt > control_dt) throw InputError("scenario: sim_dt must not exceed control_dt");
        const double ratio = control_dt / sim_dt;
        if (std::abs(ratio - std::round(ratio)) > 1e-9 * ratio)
            throw InputError("scenario: control_dt must be an integer multiple of sim_dt");
        if (actuator.lag_tau < 0.0 || actuator.delay_steps < 0 || actuator.rate_limit < 0.0)
            throw InputError("scenario: actuator parameters must be non-negative");
        for (const auto* c : {&sensors.position, &sensors.heading, &sensors.yaw_rate, &sensors.speed, &sensors.steer,
                              &sensors.lateral_velocity})
            if (c->noise_std < 0.0 || c->quantization_step < 0.0 || c->rate_hz < 0.0 || c->delay_steps < 0)
                throw InputError("scenario: sensor parameters must be non-negative");
        if (model == ModelKind::dynamic && !(speed.min() > models::kMinDynamicSpeed))
            throw InputError("scenario: dynamic model needs speeds above 0.5 m/s");
        if (controller == ControllerKind::dynamic_lqr && !(speed.min() > models::kMinDynamicSpeed))
            throw InputError("scenario: dynamic controller needs speeds above 0.5 m/s");
        kf.validate();
    }
};

// ---------------------------------------------------------------------------
// Log and metrics

struct SimRecord {
    double t = 0.0;
    double distance = 0.0;
    Pose pose;
    double v = 0.0;
    double vy = 0.0;
    double yaw_rate = 0.0;
    double delta_cmd = 0.0;
    double delta_act = 0.0;
    bool saturated = false;
    double s = 0.0;
    ErrorState error;
    double kappa_path = 0.0;
    double kappa_ack = 0.0;
    double kappa_diff = 0.0;
    double kappa_fused = 0.0;
    double fused_variance = 0.0;
};

enum class RunStatus { completed, path_end, vehicle_lost, diverged };

inline const char* to_string(RunStatus s) {
    switch (s) {
        case RunStatus::completed: return "completed";
        case RunStatus::path_end: return "path_end";
        case RunStatus::vehicle_lost: return "vehicle_lost";
        case RunStatus::diverged: return "diverged";
    }
    return "unknown";
}

struct SimLog {
    ModelKind model = ModelKind::kinematic;
    double sim_dt = 0.0;
    std::vector<SimRecord> records;
    RunStatus status = RunStatus::completed;
    std::string message;

    bool ok() const { return status == RunStatus::completed || status == RunStatus::path_end; }
};

inline constexpr const char* kLogHeader =
    "t,distance,X,Y,psi,v,vy,yaw_rate,delta_cmd,delta_act,saturated,s,e_y,e_y_dot,e_psi,e_psi_dot,"
    "kappa_path,kappa_ack,kappa_diff,kappa_fused,fused_var";

inline void write_log_csv(std::ostream& out, const SimLog& log) {
    out << "# status=" << to_string(log.status) << '\n';
    out << kLogHeader << '\n';
    char buf[48];
    for (const auto& r : log.records) {
        const double vals[] = {r.t, r.distance, r.pose.X, r.pose.Y, r.pose.psi, r.v, r.vy, r.yaw_rate, r.delta_cmd,
                               r.delta_act, r.saturated ? 1.0 : 0.0, r.s, r.error.e_y, r.error.e_y_dot, r.error.e_psi,
                               r.error.e_psi_dot, r.kappa_path, r.kappa_ack, r.kappa_diff, r.kappa_fused, r.fused_variance};
        bool first = true;
        for (double v : vals) {
            std::snprintf(buf, sizeof buf, "%s%.17g", first ? "" : ",", v);
            out << buf;
            first = false;
        }
        out << '\n';
    }
}

struct ErrorStats {
    double max_abs_e_y = 0.0;
    double rms_e_y = 0.0;
    double max_abs_e_psi = 0.0;
};

struct Metrics {
    ErrorStats whole;
    ErrorStats post_contact;       // from the first entry into the settle band on
    double settle_distance = 0.0;  // distance travelled when |e_y| last enters the band
    bool settled = false;
    double distance = 0.0;
    double settle_band = 0.05;
};

namespace detail {

inline ErrorStats stats(const std::vector<SimRecord>& r, std::size_t from) {
    ErrorStats s;
    if (from >= r.size()) return s;
    double sq = 0.0;
    for (std::size_t i = from; i < r.size(); ++i) {
        s.max_abs_e_y = std::max(s.max_abs_e_y, std::abs(r[i].error.e_y));
        s.max_abs_e_psi = std::max(s.max_abs_e_psi, std::abs(r[i].error.e_psi));
        sq += r[i].error.e_y * r[i].error.e_y;
    }
    s.rms_e_y = std::sqrt(sq / static_cast<double>(r.size() - from));
    return s;
}

}  // namespace detail

inline Metrics compute_metrics(const SimLog& log, double band = 0.05) {
    const auto& r = log.records;
    if (r.empty()) throw InputError("compute_metrics: empty log");
    Metrics m;
    m.settle_band = band;
    m.distance = r.back().distance;
    m.whole = detail::stats(r, 0);
    std::size_t contact = r.size();
    for (std::size_t i = 0; i < r.size(); ++i)
        if (std::abs(r[i].error.e_y) < band) {
            contact = i;
            break;
        }
    m.post_contact = detail::stats(r, contact);
    std::size_t entry = r.size();
    for (std::size_t i = r.size(); i-- > 0;) {
        if (std::abs(r[i].error.e_y) >= band) break;
        entry = i;
    }
    m.settled = entry < r.size();
    m.settle_distance = m.settled ? r[entry].distance : m.distance;
    return m;
}

// ---------------------------------------------------------------------------
// Sensors and actuator

namespace detail {

// Sample-and-hold channel with Gaussian noise, quantization and a delay line.
template <std::size_t N>
class Sensor {
public:
    Sensor(const SensorChannel& cfg, double sim_dt, std::uint64_t seed)
        : cfg_(cfg), rng_(seed), period_steps_(cfg.rate_hz > 0.0 ? std::max<long>(1, std::lround(1.0 / (cfg.rate_hz * sim_dt))) : 1) {}

    // Returns true when a new sample became visible at this step.
    bool step(long k, const Vec<N>& truth, bool wrap_angles = false) {
        if (k % period_steps_ != 0) return false;
        Vec<N> m;
        for (std::size_t i = 0; i < N; ++i) {
            double v = truth[i];
            if (cfg_.noise_std > 0.0) v += cfg_.noise_std * rng_.normal();
            if (cfg_.quantization_step > 0.0) v = cfg_.quantization_step * std::round(v / cfg_.quantization_step);
            if (wrap_angles) v = models::wrap_angle(v);
            m[i] = v;
        }
        line_.push_back(m);
        while (line_.size() > static_cast<std::size_t>(cfg_.delay_steps) + 1) line_.pop_front();
        value_ = line_.front();
        return true;
    }

    const Vec<N>& value() const { return value_; }

private:
    SensorChannel cfg_;
    Rng rng_;
    long period_steps_;
    std::deque<Vec<N>> line_;
    Vec<N> value_{};
};

class Actuator {
public:
    Actuator(const ActuatorConfig& cfg, double sim_dt, double initial, double max_steer)
        : cfg_(cfg), sim_dt_(sim_dt), max_steer_(max_steer), delta_(initial),
          line_(static_cast<std::size_t>(cfg.delay_steps) + 1, initial),
          alpha_(cfg.lag_tau > 0.0 ? 1.0 - std::exp(-sim_dt / cfg.lag_tau) : 1.0) {}

    void command(double delta_cmd) {
        line_.push_back(delta_cmd);
        line_.pop_front();
    }

    double step() {
        const double target = line_.front();
        double next = delta_ + alpha_ * (target - delta_);
        if (cfg_.rate_limit > 0.0) {
            const double lim = cfg_.rate_limit * sim_dt_;
            next = std::clamp(next, delta_ - lim, delta_ + lim);
        }
        delta_ = std::clamp(next, -max_steer_, max_steer_);
        return delta_;
    }

    double value() const { return delta_; }

private:
    ActuatorConfig cfg_;
    double sim_dt_;
    double max_steer_;
    double delta_;
    std::deque<double> line_;
    double alpha_;
};

}  // namespace detail

// ---------------------------------------------------------------------------
// Closed loop

/// Runs one scenario. The plant integrates at sim_dt; sensors sample at
/// their own rates; the controller and the curvature estimators run every
/// control_dt on the latest measurements. Deterministic for a given config
/// and seed. A lost vehicle or diverging state ends the run early with the
/// status recorded in the log.
inline SimLog run_scenario(const ScenarioConfig& cfg, const lqr::GainSchedule& gains) {
    cfg.validate();
    const bool kin_ctrl = cfg.controller == ControllerKind::kinematic_ff_fb;
    if ((kin_ctrl && gains.designer() != lqr::Designer::kinematic) ||
        (!kin_ctrl && gains.designer() != lqr::Designer::dynamic))
        throw InputError("run_scenario: gain schedule does not match the controller");

    const auto& p = cfg.vehicle;
    const bool dynamic = cfg.model == ModelKind::dynamic;
    const RefPath& path = cfg.path;
    const double dt = cfg.sim_dt;
    const int ratio = cfg.control_ratio();

    SimLog log;
    log.model = cfg.model;
    log.sim_dt = dt;

    // Plant state. The kinematic plant uses the first three entries.
    const Pose start = pathkit::pose_at(path, 0.0, cfg.initial_e_y, cfg.initial_e_psi);
    Vec<5> x{start.X, start.Y, start.psi, 0.0, cfg.speed.at(0.0) * path.front().kappa};

    std::uint64_t stream = 0;
    auto seed_for = [&] { return mix_seed(cfg.seed, ++stream); };
    detail::Sensor<2> pos_sensor(cfg.sensors.position, dt, seed_for());
    detail::Sensor<1> heading_sensor(cfg.sensors.heading, dt, seed_for());
    detail::Sensor<1> rate_sensor(cfg.sensors.yaw_rate, dt, seed_for());
    detail::Sensor<1> speed_sensor(cfg.sensors.speed, dt, seed_for());
    detail::Sensor<1> steer_sensor(cfg.sensors.steer, dt, seed_for());
    detail::Sensor<1> vy_sensor(cfg.sensors.lateral_velocity, dt, seed_for());

    std::optional<double> truth_s;
    std::optional<double> meas_s;
    // The wheels start at the steady steer for the start curvature, matching
    // the plant's initial yaw rate.
    detail::Actuator actuator(cfg.actuator, dt, curvkit::feedforward_steer(path.front().kappa, p.L, p.max_steer).delta,
                              p.max_steer);
    curvkit::KfState kf = cfg.kf;
    bool kf_started = false;
    double kappa_ack = 0.0, kappa_diff = 0.0;
    SteerCommand cmd;
    double distance = 0.0;

    const long steps = std::lround(cfg.t_end / dt);
    for (long k = 0; k <= steps; ++k) {
        const double t = static_cast<double>(k) * dt;
        const double v = cfg.speed.at(t);
        const double delta_now = actuator.value();
        const double yaw_rate = dynamic ? x[4] : v / p.L * std::tan(delta_now);
        const double vy = dynamic ? x[3] : 0.0;
        const Pose pose{x[0], x[1], x[2]};

        PathProjection truth;
        try {
            truth = pathkit::project(path, pose, truth_s, cfg.projection);
        } catch (const SimulationError& e) {
            log.status = RunStatus::vehicle_lost;
            log.message = e.what();
            break;
        }
        truth_s = truth.s;

        pos_sensor.step(k, {pose.X, pose.Y});
        heading_sensor.step(k, {pose.psi}, true);
        rate_sensor.step(k, {yaw_rate});
        speed_sensor.step(k, {v});
        steer_sensor.step(k, {delta_now});
        vy_sensor.step(k, {vy});

        if (k % ratio == 0) {
            const Pose meas{pos_sensor.value()[0], pos_sensor.value()[1], heading_sensor.value()[0]};
            const double v_meas = speed_sensor.value()[0];
            PathProjection mp;
            try {
                mp = pathkit::project(path, meas, meas_s, cfg.projection);
            } catch (const SimulationError& e) {
                log.status = RunStatus::vehicle_lost;
                log.message = e.what();
                break;
            }
            meas_s = mp.s;
            const double v_ctrl = std::max(v_meas, 1e-3);
            if (kin_ctrl) {
                cmd = kinematic_controller(mp, v_ctrl, gains, p, cfg.feedforward);
            } else {
                const double vx = std::max(v_meas, models::kMinDynamicSpeed + 1e-6);
                const ErrorState err{mp.e_y, vy_sensor.value()[0] * std::cos(mp.e_psi) + vx * std::sin(mp.e_psi), mp.e_psi,
                                     rate_sensor.value()[0] - mp.kappa * vx};
                cmd = dynamic_controller(err, vx, gains, mp.kappa, p, cfg.feedforward);
            }
            actuator.command(cmd.input.delta);

            // Curvature sources on the latest measurements, heading taken
            // relative to the path so the differential formula stays regular.
            const double cdt = cfg.control_dt;
            kappa_ack = curvkit::ackermann_curvature(steer_sensor.value()[0], p.L);
            std::optional<curvkit::CurvatureSample> z_ack =
                curvkit::CurvatureSample{t, kappa_ack, curvkit::Source::ackermann, kf.r_ack};
            std::optional<curvkit::CurvatureSample> z_diff;
            try {
                kappa_diff = curvkit::differential_curvature(models::wrap_angle(meas.psi - mp.psi_d), rate_sensor.value()[0], v_meas);
                z_diff = curvkit::CurvatureSample{t, kappa_diff, curvkit::Source::differential, kf.diff_variance_at(v_meas)};
            } catch (const InputError&) {
                kappa_diff = kappa_ack;
            }
            if (!kf_started) {
                kf.kappa_hat = kappa_ack;
                kf.P = kf.r_ack;
                kf_started = true;
            } else {
                kf = curvkit::kf_update(kf, cdt, z_ack, z_diff);
            }
        }

        SimRecord rec;
        rec.t = t;
        rec.distance = distance;
        rec.pose = pose;
        rec.v = v;
        rec.vy = vy;
        rec.yaw_rate = yaw_rate;
        rec.delta_cmd = cmd.input.delta;
        rec.saturated = cmd.saturated;
        rec.delta_act = actuator.value();
        rec.s = truth.s;
        rec.kappa_path = truth.kappa;
        const double e_psi = truth.e_psi;
        rec.error = {truth.e_y, vy * std::cos(e_psi) + v * std::sin(e_psi), e_psi, yaw_rate - truth.kappa * v};
        rec.kappa_ack = kappa_ack;
        rec.kappa_diff = kappa_diff;
        rec.kappa_fused = kf.kappa_hat;
        rec.fused_variance = kf.P;
        log.records.push_back(rec);

        if (!path.closed() && truth.s >= path.length() - 1.0) {
            log.status = RunStatus::path_end;
            break;
        }
        if (k == steps) break;

        const double delta = actuator.step();
        try {
            if (dynamic) {
                x = rk4_step(dynamic_plant(p), x, ControlInput{v, delta}, dt);
            } else {
                const Vec<3> xk = rk4_step(kinematic_plant(p), Vec<3>{x[0], x[1], x[2]}, ControlInput{v, delta}, dt);
                x = {xk[0], xk[1], xk[2], 0.0, 0.0};
            }
        } catch (const SimulationError& e) {
            log.status = RunStatus::diverged;
            log.message = e.what();
            break;
        }
        for (double e : x)
            if (!std::isfinite(e)) {
                log.status = RunStatus::diverged;
                log.message = "non-finite plant state";
            }
        if (log.status == RunStatus::diverged) break;
        distance += (dynamic ? std::hypot(v, x[3]) : v) * dt;
    }
    return log;
}

// ---------------------------------------------------------------------------
// Open-loop drives for recorded-style reference logs

/// Drives the kinematic model open loop with steering delta(t) and logs
/// t, pose, yaw rate, speed and steering at `log_rate_hz`.
inline pathkit::RecordedLog record_drive(const std::function<double(double)>& steer, double v, double duration,
                                         const VehicleParams& p, double log_rate_hz = 50.0, Pose start = {},
                                         double sim_dt = 0.001) {
    if (!(v > 0.0) || !(duration > 0.0) || !(log_rate_hz > 0.0)) throw InputError("record_drive: invalid arguments");
    const long every = std::max<long>(1, std::lround(1.0 / (log_rate_hz * sim_dt)));
    const long steps = std::lround(duration / sim_dt);
    Vec<3> x{start.X, start.Y, start.psi};
    pathkit::RecordedLog log;
    for (long k = 0; k <= steps; ++k) {
        const double t = static_cast<double>(k) * sim_dt;
        const double d = steer(t);
        if (k % every == 0)
            log.push_back({t, x[0], x[1], models::wrap_angle(x[2]), v / p.L * std::tan(d), v, d});
        if (k == steps) break;
        x = rk4_step(kinematic_plant(p), x, ControlInput{v, d}, sim_dt);
    }
    return log;
}

/// Low-speed drive into a parking slot: straight approach, a smooth quarter
/// turn to the left, then a straight run to the final spot.
inline pathkit::RecordedLog parking_drive_log(const VehicleParams& p, double v = 1.5) {
    const double peak = 0.35;
    auto ramp = [](double u) { return u <= 0.0 ? 0.0 : u >= 1.0 ? 1.0 : u * u * (3.0 - 2.0 * u); };
    // Times are for 1.5 m/s and scale with speed so the geometry stays fixed.
    const double scale = 1.5 / v;
    auto steer = [=](double t) {
        const double u = t / scale;
        return peak * (ramp((u - 6.0) / 2.0) - ramp((u - 13.75) / 2.0));
    };
    return record_drive(steer, v, 24.0 * scale, p, 50.0);
}

}  // namespace steerkit::simkit
