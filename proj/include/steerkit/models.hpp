#pragma once

// Vehicle models: rear-axle kinematic bicycle, linear single-track lateral
// dynamics, their error-coordinate forms, slip angles and the non-holonomic
// velocity constraints.

#include <cmath>
#include <numbers>
#include <string>

#include "steerkit/error.hpp"
#include "steerkit/numkit.hpp"

namespace steerkit::models {

using numkit::Mat;
using numkit::StateSpace;

/// Below this longitudinal speed the single-track model is not used.
inline constexpr double kMinDynamicSpeed = 0.5;
/// Slip angles beyond ~10 degrees leave the linear tire region.
inline constexpr double kSmallAngleLimit = 0.17;

/// Mass, geometry and tire data. Cornering stiffnesses are per tire; the
/// equations apply the factor 2 for the axle pair.
struct VehicleParams {
    double m = 1500.0;        // kg
    double Iz = 3000.0;       // kg m^2
    double Lf = 1.2;          // CoG to front axle, m
    double Lr = 1.5;          // CoG to rear axle, m
    double L = 2.7;           // wheelbase, m
    double Caf = 60000.0;     // N/rad
    double Car = 60000.0;     // N/rad
    double max_steer = 0.6;   // rad, road wheel

    void validate() const {
        for (double v : {m, Iz, Lf, Lr, L, Caf, Car, max_steer})
            if (!(v > 0.0) || !std::isfinite(v)) throw InputError("VehicleParams: all parameters must be finite and > 0");
        if (std::abs(L - (Lf + Lr)) > 1e-9) throw InputError("VehicleParams: L must equal Lf + Lr");
        if (max_steer >= std::numbers::pi / 2) throw InputError("VehicleParams: max_steer must be below pi/2");
    }
};

inline VehicleParams default_params() { return VehicleParams{}; }

/// Wraps an angle to (-pi, pi].
inline double wrap_angle(double a) {
    constexpr double two_pi = 2.0 * std::numbers::pi;
    a = std::remainder(a, two_pi);  // [-pi, pi]
    if (a <= -std::numbers::pi) a += two_pi;
    return a;
}

struct Pose {
    double X = 0.0;    // m, east
    double Y = 0.0;    // m, north
    double psi = 0.0;  // rad
};

struct ControlInput {
    double v = 0.0;      // m/s
    double delta = 0.0;  // rad, road wheel
};

struct PoseRate {
    double dX = 0.0;
    double dY = 0.0;
    double dpsi = 0.0;
};

struct DynamicState {
    double y = 0.0;
    double y_dot = 0.0;
    double psi = 0.0;
    double psi_dot = 0.0;
};

struct ErrorState {
    double e_y = 0.0;
    double e_y_dot = 0.0;
    double e_psi = 0.0;
    double e_psi_dot = 0.0;
};

struct SlipAngles {
    double beta = 0.0;
    double beta_f = 0.0;
    double beta_r = 0.0;

    bool outside_small_angle() const {
        return std::abs(beta) > kSmallAngleLimit || std::abs(beta_f) > kSmallAngleLimit ||
               std::abs(beta_r) > kSmallAngleLimit;
    }
};

/// Configuration-space rates of the rear axle center.
inline PoseRate kinematic_derivative(const Pose& pose, const ControlInput& u, const VehicleParams& p) {
    if (!(std::abs(u.delta) < std::numbers::pi / 2))
        throw InputError("kinematic_derivative: |delta| must be below pi/2");
    return {u.v * std::cos(pose.psi), u.v * std::sin(pose.psi), u.v / p.L * std::tan(u.delta)};
}

struct Point2 {
    double x = 0.0;
    double y = 0.0;
};

inline Point2 front_axle_pose(const Pose& pose, const VehicleParams& p) {
    return {pose.X + p.L * std::cos(pose.psi), pose.Y + p.L * std::sin(pose.psi)};
}

struct PfaffianResiduals {
    double rear = 0.0;   // m/s
    double front = 0.0;  // m/s
};

/// Residuals of the two rolling-without-slipping constraints. The front row
/// uses L cos(delta), which is what substituting the front-axle position
/// into the front constraint yields.
inline PfaffianResiduals pfaffian_residuals(const Pose& pose, const PoseRate& vel, const ControlInput& u,
                                            const VehicleParams& p) {
    const double sp = std::sin(pose.psi), cp = std::cos(pose.psi);
    const double spd = std::sin(pose.psi + u.delta), cpd = std::cos(pose.psi + u.delta);
    return {vel.dX * sp - vel.dY * cp, vel.dX * spd - vel.dY * cpd - vel.dpsi * p.L * std::cos(u.delta)};
}

inline void require_dynamic_speed(double vx, const char* who) {
    if (!(vx > kMinDynamicSpeed))
        throw InputError(std::string(who) + ": vx must exceed " + std::to_string(kMinDynamicSpeed) +
                         " m/s; use the kinematic model below it");
}

/// Linearized slip angles at the CoG and both axles.
inline SlipAngles slip_angles(const DynamicState& s, double vx, const VehicleParams& p) {
    require_dynamic_speed(vx, "slip_angles");
    return {s.y_dot / vx, (s.y_dot + p.Lf * s.psi_dot) / vx, (s.y_dot - p.Lr * s.psi_dot) / vx};
}

namespace detail {

struct LateralCoefficients {
    double a_vy_vy, a_vy_r, a_r_vy, a_r_r;  // without the -vx coupling term
    double b_vy, b_r;
};

inline LateralCoefficients lateral_coefficients(double vx, const VehicleParams& p) {
    return {
        -2.0 * (p.Caf + p.Car) / (p.m * vx),
        -2.0 * (p.Caf * p.Lf - p.Car * p.Lr) / (p.m * vx),
        -2.0 * (p.Lf * p.Caf - p.Lr * p.Car) / (p.Iz * vx),
        -2.0 * (p.Lf * p.Lf * p.Caf + p.Lr * p.Lr * p.Car) / (p.Iz * vx),
        2.0 * p.Caf / p.m,
        2.0 * p.Lf * p.Caf / p.Iz,
    };
}

}  // namespace detail

/// Continuous lateral dynamics on (y, y_dot, psi, psi_dot) with input delta.
inline StateSpace dynamic_matrices(double vx, const VehicleParams& p) {
    require_dynamic_speed(vx, "dynamic_matrices");
    const auto c = detail::lateral_coefficients(vx, p);
    Mat a(4, 4);
    a(0, 1) = 1.0;
    a(1, 1) = c.a_vy_vy;
    a(1, 3) = -vx + c.a_vy_r;
    a(2, 3) = 1.0;
    a(3, 1) = c.a_r_vy;
    a(3, 3) = c.a_r_r;
    Mat b(4, 1);
    b(1, 0) = c.b_vy;
    b(3, 0) = c.b_r;
    return {a, b, Mat::identity(4), 0.0};
}

/// Path-error dynamics on (e_y, e_y_dot, e_psi, e_psi_dot).
struct ErrorModel {
    StateSpace sys;   // input: delta
    Mat disturbance;  // 4x1 column multiplying the desired yaw rate
};

/// Error model obtained from the single-track equations with
/// e_y_dot = y_dot + vx e_psi and e_psi_dot = psi_dot - psi_dot_desired.
inline ErrorModel error_dynamics_matrices(double vx, const VehicleParams& p) {
    require_dynamic_speed(vx, "error_dynamics_matrices");
    const auto c = detail::lateral_coefficients(vx, p);
    Mat a(4, 4);
    a(0, 1) = 1.0;
    a(1, 1) = c.a_vy_vy;
    a(1, 2) = -c.a_vy_vy * vx;
    a(1, 3) = c.a_vy_r;
    a(2, 3) = 1.0;
    a(3, 1) = c.a_r_vy;
    a(3, 2) = -c.a_r_vy * vx;
    a(3, 3) = c.a_r_r;
    Mat b(4, 1);
    b(1, 0) = c.b_vy;
    b(3, 0) = c.b_r;
    Mat d(4, 1);
    d(1, 0) = c.a_vy_r - vx;
    d(3, 0) = c.a_r_r;
    return {{a, b, Mat::identity(4), 0.0}, d};
}

/// Derivative of the error state under steering delta and desired yaw rate.
inline ErrorState error_derivative(const ErrorModel& model, const ErrorState& e, double delta, double desired_yaw_rate) {
    const Mat& a = model.sys.A;
    const double x[4] = {e.e_y, e.e_y_dot, e.e_psi, e.e_psi_dot};
    double dx[4];
    for (int i = 0; i < 4; ++i) {
        double s = model.sys.B(i, 0) * delta + model.disturbance(i, 0) * desired_yaw_rate;
        for (int j = 0; j < 4; ++j) s += a(i, j) * x[j];
        dx[i] = s;
    }
    return {dx[0], dx[1], dx[2], dx[3]};
}

/// Linearized kinematic path-error model on (e_y, e_psi) with input delta_fb.
inline StateSpace kinematic_error_model(double v, double L) {
    if (!(v > 0.0)) throw InputError("kinematic_error_model: v must be positive");
    if (!(L > 0.0)) throw InputError("kinematic_error_model: L must be positive");
    return {Mat{{0.0, v}, {0.0, 0.0}}, Mat{{0.0}, {v / L}}, Mat::identity(2), 0.0};
}

/// Nonlinear kinematic error rates (lateral, heading) for heading error
/// e_psi and steering deviation delta_e from the feedforward angle.
inline Point2 kinematic_error_rates(double e_psi, double delta_e, double v, double L) {
    return {v * std::sin(e_psi), v / L * std::tan(delta_e)};
}

}  // namespace steerkit::models
