#pragma once

// Path curvature from three sources: steering geometry, heading/yaw-rate
// kinematics, and a scalar Kalman filter fusing the two.

#include <algorithm>
#include <cmath>
#include <numbers>
#include <optional>

#include "steerkit/error.hpp"

namespace steerkit::curvkit {

inline constexpr double kMinSpeed = 0.5;        // m/s
inline constexpr double kMinCosHeading = 0.05;  // |cos psi| guard

enum class Source { ackermann, differential, fused };

struct CurvatureSample {
    double t = 0.0;
    double kappa = 0.0;
    Source source = Source::fused;
    double variance = 1.0;
};

/// Curvature implied by the road-wheel angle: tan(delta) / L.
inline double ackermann_curvature(double delta, double L) {
    if (!(std::abs(delta) < std::numbers::pi / 2)) throw InputError("ackermann_curvature: |delta| must be below pi/2");
    if (!(L > 0.0)) throw InputError("ackermann_curvature: L must be positive");
    return std::tan(delta) / L;
}

struct FeedforwardSteer {
    double delta = 0.0;
    bool clamped = false;
};

/// Steering angle that drives curvature kappa, atan(kappa L), optionally
/// limited to +/- max_steer.
inline FeedforwardSteer feedforward_steer(double kappa, double L, std::optional<double> max_steer = std::nullopt) {
    double d = std::atan(kappa * L);
    if (max_steer && std::abs(d) > *max_steer) return {std::copysign(*max_steer, d), true};
    return {d, false};
}

/// Plane-curve curvature Y'' / (1 + Y'^2)^(3/2) with Y' = tan(psi) and
/// Y'' = psi_dot / (|v cos psi| cos^2 psi). Heading is measured in whatever
/// frame the caller chose; near psi = +/-pi/2 the formula is singular and the
/// caller must rotate into a path-aligned frame.
inline double differential_curvature(double psi, double psi_dot, double v) {
    if (!(v >= kMinSpeed)) throw InputError("differential_curvature: speed below 0.5 m/s");
    const double c = std::cos(psi);
    if (!(std::abs(c) >= kMinCosHeading))
        throw InputError("differential_curvature: heading too close to +/-pi/2 (rotate frame or use Ackermann source)");
    const double y1 = std::tan(psi);
    const double y2 = psi_dot / (std::abs(v * c) * c * c);
    return y2 / std::pow(1.0 + y1 * y1, 1.5);
}

struct KfState {
    double kappa_hat = 0.0;
    double P = 1e-2;
    double q_process = 1e-6;  // random-walk intensity, (1/m)^2 / s
    double r_ack = 4e-6;
    double r_diff = 1e-4;     // at 1 m/s; see diff_variance_at()

    void validate() const {
        if (!(P > 0.0) || !(q_process > 0.0) || !(r_ack > 0.0) || !(r_diff > 0.0))
            throw InputError("KfState: variances must be positive");
        if (!std::isfinite(kappa_hat)) throw InputError("KfState: kappa_hat not finite");
    }

    /// Yaw-rate derived curvature noise grows as 1/v^2 at low speed.
    double diff_variance_at(double v) const {
        const double s = std::max(v, 1.0);
        return r_diff / (s * s);
    }
};

/// Random-walk predict then one scalar update per available measurement.
/// Each measurement carries its own variance.
inline KfState kf_update(KfState s, double dt, const std::optional<CurvatureSample>& z_ack,
                         const std::optional<CurvatureSample>& z_diff) {
    s.validate();
    if (!(dt > 0.0)) throw InputError("kf_update: dt must be positive");
    s.P += s.q_process * dt;
    for (const auto* z : {&z_ack, &z_diff}) {
        if (!z->has_value()) continue;
        const double r = (*z)->variance;
        if (!(r > 0.0)) throw InputError("kf_update: measurement variance must be positive");
        const double k = s.P / (s.P + r);
        s.kappa_hat += k * ((*z)->kappa - s.kappa_hat);
        s.P = (1.0 - k) * s.P;
    }
    return s;
}

}  // namespace steerkit::curvkit
