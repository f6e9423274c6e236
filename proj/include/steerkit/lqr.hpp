#pragma once

// Discrete LQR synthesis for the kinematic and dynamic path-error models,
// speed-scheduled gain tables, and closed-loop stability certification.

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <istream>
#include <map>
#include <memory>
#include <mutex>
#include <optional>
#include <ostream>
#include <span>
#include <string>
#include <vector>

#include "steerkit/error.hpp"
#include "steerkit/models.hpp"
#include "steerkit/numkit.hpp"
#include "steerkit/pathkit.hpp"

namespace steerkit::lqr {

using models::VehicleParams;
using numkit::Mat;
using numkit::StateSpace;

inline constexpr double kDefaultDt = 0.02;
inline constexpr double kStabilityMargin = 1e-6;

enum class Designer { kinematic, dynamic };

inline const char* to_string(Designer d) { return d == Designer::kinematic ? "kinematic" : "dynamic"; }

inline std::size_t state_count(Designer d) { return d == Designer::kinematic ? 2 : 4; }

struct LqrWeights {
    std::vector<double> q_diag{1.0, 1.0};
    double r = 1.0;

    static LqrWeights equal(Designer d) { return {std::vector<double>(state_count(d), 1.0), 1.0}; }

    void validate(std::size_t states) const {
        if (q_diag.size() != states)
            throw InputError("LqrWeights: expected " + std::to_string(states) + " state weights, got " +
                             std::to_string(q_diag.size()));
        bool any = false;
        for (double q : q_diag) {
            if (!(q >= 0.0) || !std::isfinite(q)) throw InputError("LqrWeights: state weights must be finite and >= 0");
            any = any || q > 0.0;
        }
        if (!any) throw InputError("LqrWeights: at least one state weight must be positive");
        if (!(r > 0.0) || !std::isfinite(r)) throw InputError("LqrWeights: control weight must be positive");
    }
};

/// Feedback row for delta_fb = -k . e at design speed v and period dt.
struct GainSet {
    std::vector<double> k;
    double v = 0.0;
    double dt = kDefaultDt;
    double closed_loop_radius = 0.0;  // spectral radius of Ad - Bd k; 0 when not certified

    double apply(std::span<const double> error) const {
        double u = 0.0;
        for (std::size_t i = 0; i < k.size(); ++i) u -= k[i] * error[i];
        return u;
    }
};

/// Zero-order-hold model the designer regulates at speed v.
inline StateSpace design_model(Designer d, double v, const VehicleParams& p, double dt) {
    const StateSpace cont =
        d == Designer::kinematic ? models::kinematic_error_model(v, p.L) : models::error_dynamics_matrices(v, p).sys;
    return numkit::c2d(cont, dt);
}

inline double closed_loop_radius(const StateSpace& sys, std::span<const double> k) {
    const Mat cl = sys.A - sys.B * Mat::row(k);
    return numkit::spectral_radius(cl);
}

namespace detail {

inline void check_dt(double dt) {
    if (!(dt > 0.001 && dt <= 0.1)) throw InputError("LQR design: dt must lie in (0.001, 0.1] s");
}

inline GainSet design(Designer d, double v, const VehicleParams& p, const LqrWeights& w, double dt) {
    check_dt(dt);
    w.validate(state_count(d));
    p.validate();
    const StateSpace sys = design_model(d, v, p, dt);
    const Mat q = Mat::diag(w.q_diag);
    const Mat r{{w.r}};
    Mat x(1, 1);
    try {
        x = numkit::solve_dare(sys.A, sys.B, q, r);
    } catch (const NumericError& e) {
        throw DesignError(std::string("LQR design failed at v=") + std::to_string(v) + " m/s: " + e.what(), v);
    }
    const Mat k = numkit::lqr_gain(sys.A, sys.B, r, x);
    GainSet g{std::vector<double>(k.data().begin(), k.data().end()), v, dt, 0.0};
    g.closed_loop_radius = closed_loop_radius(sys, g.k);
    if (!(g.closed_loop_radius < 1.0 - kStabilityMargin))
        throw DesignError("LQR design at v=" + std::to_string(v) + " m/s is not stabilizing (spectral radius " +
                              std::to_string(g.closed_loop_radius) + ")",
                          v);
    return g;
}

}  // namespace detail

inline GainSet design_kinematic(double v, const VehicleParams& p, const LqrWeights& w = {}, double dt = kDefaultDt) {
    if (!(v > 0.0)) throw DesignError("design_kinematic: speed must be positive", v);
    return detail::design(Designer::kinematic, v, p, w, dt);
}

/// The desired-yaw-rate disturbance column is not part of the regulated
/// input; only the steering column enters the Riccati equation.
inline GainSet design_dynamic(double vx, const VehicleParams& p, const LqrWeights& w = LqrWeights::equal(Designer::dynamic),
                              double dt = kDefaultDt) {
    if (!(vx > models::kMinDynamicSpeed))
        throw DesignError("design_dynamic: vx must exceed 0.5 m/s, got " + std::to_string(vx), vx);
    return detail::design(Designer::dynamic, vx, p, w, dt);
}

inline GainSet design(Designer d, double v, const VehicleParams& p, const LqrWeights& w, double dt) {
    return d == Designer::kinematic ? design_kinematic(v, p, w, dt) : design_dynamic(v, p, w, dt);
}

/// Gain table over an ascending speed grid. Lookups interpolate linearly in
/// gain space and clamp outside the grid. When the schedule knows its plant
/// (built here, or loaded with parameters attached) each interpolated gain
/// is certified on first use and replaced by a point design if it fails.
class GainSchedule {
public:
    GainSchedule(Designer designer, std::vector<GainSet> gains, double dt, std::optional<VehicleParams> plant = std::nullopt,
                 std::optional<LqrWeights> weights = std::nullopt)
        : designer_(designer), gains_(std::move(gains)), dt_(dt), plant_(plant), weights_(std::move(weights)),
          cache_(std::make_shared<Cache>()) {
        if (gains_.size() < 2) throw InputError("GainSchedule: need at least two grid speeds");
        for (std::size_t i = 0; i < gains_.size(); ++i) {
            if (gains_[i].k.size() != state_count(designer_))
                throw InputError("GainSchedule: gain row has wrong length for the " + std::string(to_string(designer_)) +
                                 " designer");
            if (i > 0 && !(gains_[i].v > gains_[i - 1].v)) throw InputError("GainSchedule: speeds must be ascending");
        }
    }

    Designer designer() const noexcept { return designer_; }
    double dt() const noexcept { return dt_; }
    const std::vector<GainSet>& gains() const noexcept { return gains_; }
    const std::optional<VehicleParams>& plant() const noexcept { return plant_; }
    std::vector<double> speeds() const {
        std::vector<double> s;
        for (const auto& g : gains_) s.push_back(g.v);
        return s;
    }

    /// Attaches plant parameters so lookups can certify interpolated gains.
    GainSchedule with_plant(const VehicleParams& p, std::optional<LqrWeights> w = std::nullopt) const {
        return GainSchedule(designer_, gains_, dt_, p, w ? w : weights_);
    }

    /// Interpolated (uncertified) gain at v.
    GainSet interpolate(double v) const {
        if (v <= gains_.front().v) return gains_.front();
        if (v >= gains_.back().v) return gains_.back();
        auto it = std::upper_bound(gains_.begin(), gains_.end(), v, [](double x, const GainSet& g) { return x < g.v; });
        const GainSet& hi = *it;
        const GainSet& lo = *(it - 1);
        if (v == lo.v) return lo;
        const double f = (v - lo.v) / (hi.v - lo.v);
        GainSet g{std::vector<double>(lo.k.size()), v, dt_, 0.0};
        for (std::size_t i = 0; i < g.k.size(); ++i) g.k[i] = lo.k[i] + f * (hi.k[i] - lo.k[i]);
        return g;
    }

    GainSet lookup(double v) const {
        GainSet g = interpolate(v);
        if (!plant_ || g.closed_loop_radius > 0.0) return g;
        const double key = g.v;
        std::lock_guard lock(cache_->mutex);
        if (auto it = cache_->certified.find(key); it != cache_->certified.end()) return it->second;
        const StateSpace sys = design_model(designer_, key, *plant_, dt_);
        g.closed_loop_radius = closed_loop_radius(sys, g.k);
        if (!(g.closed_loop_radius < 1.0 - kStabilityMargin)) {
            g = design(designer_, key, *plant_, weights_ ? *weights_ : LqrWeights::equal(designer_), dt_);
        }
        cache_->certified.emplace(key, g);
        return g;
    }

private:
    struct Cache {
        std::mutex mutex;
        std::map<double, GainSet> certified;
    };

    Designer designer_;
    std::vector<GainSet> gains_;
    double dt_;
    std::optional<VehicleParams> plant_;
    std::optional<LqrWeights> weights_;
    std::shared_ptr<Cache> cache_;
};

inline GainSchedule build_schedule(std::span<const double> speeds, Designer designer, const VehicleParams& p,
                                   const LqrWeights& w, double dt = kDefaultDt) {
    if (speeds.size() < 2) throw InputError("build_schedule: grid needs at least two speeds");
    for (std::size_t i = 0; i < speeds.size(); ++i) {
        if (i > 0 && !(speeds[i] > speeds[i - 1])) throw InputError("build_schedule: grid must be strictly ascending");
        if (!(speeds[i] >= 0.5 && speeds[i] <= 30.0))
            throw DesignError("build_schedule: grid speed " + std::to_string(speeds[i]) + " m/s outside [0.5, 30]",
                              speeds[i]);
    }
    std::vector<GainSet> gains;
    gains.reserve(speeds.size());
    for (double v : speeds) gains.push_back(design(designer, v, p, w, dt));
    return GainSchedule(designer, std::move(gains), dt, p, w);
}

/// `v,k1,k2[,k3,k4],dt` with round-trip precision.
inline void write_gains_csv(std::ostream& out, const GainSchedule& s) {
    const std::size_t n = state_count(s.designer());
    out << "v";
    for (std::size_t i = 1; i <= n; ++i) out << ",k" << i;
    out << ",dt\n";
    char buf[64];
    for (const auto& g : s.gains()) {
        std::snprintf(buf, sizeof buf, "%.17g", g.v);
        out << buf;
        for (double k : g.k) {
            std::snprintf(buf, sizeof buf, ",%.17g", k);
            out << buf;
        }
        std::snprintf(buf, sizeof buf, ",%.17g\n", g.dt);
        out << buf;
    }
}

/// Reads a gain table; the designer is inferred from the column count.
inline GainSchedule read_gains_csv(std::istream& in, std::optional<VehicleParams> plant = std::nullopt) {
    const auto table = pathkit::read_csv(in);
    const auto cv = table.column("v");
    const auto cdt = table.column("dt");
    if (!cv || !cdt || !table.column("k1") || !table.column("k2")) throw InputError("gains CSV: need columns v,k1,k2,...,dt");
    const Designer d = table.column("k4") ? Designer::dynamic : Designer::kinematic;
    const std::size_t n = state_count(d);
    std::vector<std::size_t> kc;
    for (std::size_t i = 1; i <= n; ++i) {
        const auto c = table.column("k" + std::to_string(i));
        if (!c) throw InputError("gains CSV: missing column k" + std::to_string(i));
        kc.push_back(*c);
    }
    std::vector<GainSet> gains;
    double dt = 0.0;
    for (const auto& row : table.rows) {
        GainSet g;
        g.v = row[*cv];
        g.dt = row[*cdt];
        for (std::size_t c : kc) g.k.push_back(row[c]);
        if (!gains.empty() && g.dt != dt) throw InputError("gains CSV: mixed design periods");
        dt = g.dt;
        gains.push_back(std::move(g));
    }
    if (gains.empty()) throw InputError("gains CSV: no rows");
    return GainSchedule(d, std::move(gains), dt, plant);
}

}  // namespace steerkit::lqr
