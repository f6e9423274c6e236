#pragma once

// Frequency response of a discrete state-feedback loop broken at the plant
// input, and gain/phase margins read off that response.

#include <cmath>
#include <complex>
#include <limits>
#include <numbers>
#include <ostream>
#include <span>
#include <vector>

#include "steerkit/error.hpp"
#include "steerkit/lqr.hpp"
#include "steerkit/numkit.hpp"

namespace steerkit::margins {

using cplx = std::complex<double>;
using numkit::StateSpace;

struct FreqResponse {
    std::vector<double> omegas;     // rad/s
    std::vector<double> mag_db;
    std::vector<double> phase_deg;  // unwrapped
    std::vector<bool> singular;     // evaluation hit an open-loop eigenvalue
};

struct MarginReport {
    double gm = std::numeric_limits<double>::infinity();      // ratio
    double gm_freq = std::numeric_limits<double>::quiet_NaN();
    double pm = std::numeric_limits<double>::quiet_NaN();     // degrees
    double pm_freq = std::numeric_limits<double>::quiet_NaN();
    bool has_phase_crossover = false;
    bool has_gain_crossover = false;
    int phase_crossovers = 0;
    int gain_crossovers = 0;

    double gm_db() const { return 20.0 * std::log10(gm); }
    /// Extra input delay the loop tolerates, PM / omega_pm, in seconds.
    double delay_margin() const {
        if (!has_gain_crossover) return std::numeric_limits<double>::infinity();
        return pm * std::numbers::pi / 180.0 / pm_freq;
    }
};

/// Logarithmic grid over [w_min, 0.99 pi / dt].
inline std::vector<double> default_grid(double dt, std::size_t points = 400, double w_min = 1e-2) {
    if (!(dt > 0.0)) throw InputError("default_grid: dt must be positive");
    if (points < 2) throw InputError("default_grid: need at least two points");
    const double w_max = 0.99 * std::numbers::pi / dt;
    std::vector<double> w(points);
    const double a = std::log10(w_min), b = std::log10(w_max);
    for (std::size_t i = 0; i < points; ++i) w[i] = std::pow(10.0, a + (b - a) * static_cast<double>(i) / static_cast<double>(points - 1));
    return w;
}

namespace detail {

// Solves (zI - A) x = b for complex z by Gaussian elimination with partial
// pivoting. Returns false when the pivot vanishes.
inline bool resolvent_apply(const StateSpace& sys, cplx z, std::vector<cplx>& x) {
    const std::size_t n = sys.states();
    std::vector<cplx> m(n * n);
    x.assign(n, cplx{});
    for (std::size_t i = 0; i < n; ++i) {
        for (std::size_t j = 0; j < n; ++j) m[i * n + j] = -sys.A(i, j);
        m[i * n + i] += z;
        x[i] = sys.B(i, 0);
    }
    const double scale = 1.0 + sys.A.max_abs();
    for (std::size_t k = 0; k < n; ++k) {
        std::size_t p = k;
        for (std::size_t i = k + 1; i < n; ++i)
            if (std::abs(m[i * n + k]) > std::abs(m[p * n + k])) p = i;
        if (std::abs(m[p * n + k]) < 1e-14 * scale) return false;
        if (p != k) {
            for (std::size_t j = 0; j < n; ++j) std::swap(m[p * n + j], m[k * n + j]);
            std::swap(x[p], x[k]);
        }
        for (std::size_t i = k + 1; i < n; ++i) {
            const cplx f = m[i * n + k] / m[k * n + k];
            for (std::size_t j = k; j < n; ++j) m[i * n + j] -= f * m[k * n + j];
            x[i] -= f * x[k];
        }
    }
    for (std::size_t i = n; i-- > 0;) {
        cplx s = x[i];
        for (std::size_t j = i + 1; j < n; ++j) s -= m[i * n + j] * x[j];
        x[i] = s / m[i * n + i];
    }
    return true;
}

}  // namespace detail

/// L(z) = k (zI - Ad)^-1 Bd at z = exp(j w dt).
inline cplx loop_value(const StateSpace& sys, std::span<const double> k, double omega) {
    const cplx z = std::polar(1.0, omega * sys.dt);
    std::vector<cplx> x;
    if (!detail::resolvent_apply(sys, z, x)) return {std::numeric_limits<double>::infinity(), 0.0};
    cplx l{};
    for (std::size_t i = 0; i < k.size(); ++i) l += k[i] * x[i];
    return l;
}

inline FreqResponse loop_response(const StateSpace& sys, const lqr::GainSet& gains, std::span<const double> omegas) {
    sys.validate();
    if (!sys.is_discrete()) throw InputError("loop_response: system must be discrete");
    if (sys.inputs() != 1) throw InputError("loop_response: single-input systems only");
    if (gains.k.size() != sys.states()) throw InputError("loop_response: gain length does not match state count");
    if (omegas.empty()) throw InputError("loop_response: empty frequency grid");
    const double nyquist = std::numbers::pi / sys.dt;
    FreqResponse fr;
    double prev = 0.0;
    for (std::size_t i = 0; i < omegas.size(); ++i) {
        const double w = omegas[i];
        if (!(w > 0.0 && w < nyquist)) throw InputError("loop_response: frequency outside (0, pi/dt)");
        if (i > 0 && !(w > omegas[i - 1])) throw InputError("loop_response: frequencies must be ascending");
        const cplx l = loop_value(sys, gains.k, w);
        fr.omegas.push_back(w);
        if (!std::isfinite(l.real()) || !std::isfinite(l.imag())) {
            fr.mag_db.push_back(std::numeric_limits<double>::infinity());
            fr.phase_deg.push_back(prev);
            fr.singular.push_back(true);
            continue;
        }
        double ph = std::arg(l) * 180.0 / std::numbers::pi;  // (-180, 180]
        if (i == 0) {
            if (ph > 0.0) ph -= 360.0;  // anchor in (-360, 0]
        } else {
            ph += 360.0 * std::round((prev - ph) / 360.0);
        }
        prev = ph;
        fr.mag_db.push_back(20.0 * std::log10(std::abs(l)));
        fr.phase_deg.push_back(ph);
        fr.singular.push_back(false);
    }
    return fr;
}

/// Gain margin at phase crossovers (phase = -180 deg modulo 360) and phase
/// margin at gain crossovers (|L| = 1), both located by linear
/// interpolation in log frequency. With several crossings the smallest
/// margin is reported and the crossing count says so.
inline MarginReport compute_margins(const FreqResponse& fr) {
    const std::size_t n = fr.omegas.size();
    if (n == 0 || fr.mag_db.size() != n || fr.phase_deg.size() != n) throw InputError("compute_margins: empty or ragged response");
    MarginReport rep;
    auto interp = [&](std::size_t i, double f, const std::vector<double>& v) { return v[i] + f * (v[i + 1] - v[i]); };
    auto interp_w = [&](std::size_t i, double f) {
        return std::exp(std::log(fr.omegas[i]) + f * (std::log(fr.omegas[i + 1]) - std::log(fr.omegas[i])));
    };
    for (std::size_t i = 0; i + 1 < n; ++i) {
        if (fr.singular[i] || fr.singular[i + 1]) continue;
        const double p0 = fr.phase_deg[i], p1 = fr.phase_deg[i + 1];
        // Odd multiples of 180 deg between p0 and p1 (exclusive of p0).
        const double lo = std::min(p0, p1), hi = std::max(p0, p1);
        for (double line = std::ceil((lo - 180.0) / 360.0) * 360.0 + 180.0; line <= hi; line += 360.0) {
            if (line == p0 || p0 == p1) continue;
            const double f = (line - p0) / (p1 - p0);
            const double gm = std::pow(10.0, -interp(i, f, fr.mag_db) / 20.0);
            ++rep.phase_crossovers;
            if (!rep.has_phase_crossover || gm < rep.gm) {
                rep.gm = gm;
                rep.gm_freq = interp_w(i, f);
            }
            rep.has_phase_crossover = true;
        }
        const double m0 = fr.mag_db[i], m1 = fr.mag_db[i + 1];
        if ((m0 > 0.0 && m1 <= 0.0) || (m0 <= 0.0 && m1 > 0.0)) {
            const double f = m0 / (m0 - m1);
            double pm = 180.0 + interp(i, f, fr.phase_deg);
            pm = std::remainder(pm, 360.0);
            if (pm <= -180.0) pm += 360.0;
            ++rep.gain_crossovers;
            if (!rep.has_gain_crossover || pm < rep.pm) {
                rep.pm = pm;
                rep.pm_freq = interp_w(i, f);
            }
            rep.has_gain_crossover = true;
        }
    }
    return rep;
}

/// Response and margins of the loop designed at gains.v.
struct LoopAnalysis {
    FreqResponse response;
    MarginReport margins;
};

inline LoopAnalysis analyze_design(lqr::Designer d, const lqr::GainSet& g, const models::VehicleParams& p,
                                   std::size_t points = 400) {
    const auto sys = lqr::design_model(d, g.v, p, g.dt);
    const auto grid = default_grid(g.dt, points);
    auto fr = loop_response(sys, g, grid);
    auto m = compute_margins(fr);
    return {std::move(fr), m};
}

}  // namespace steerkit::margins
