#pragma once

// Reference paths: analytic generators, recorded-log ingestion and
// resampling, and projection of a pose onto the path in error coordinates.

#include <algorithm>
#include <array>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <istream>
#include <limits>
#include <numbers>
#include <optional>
#include <ostream>
#include <sstream>
#include <string>
#include <vector>

#include "steerkit/curvkit.hpp"
#include "steerkit/error.hpp"
#include "steerkit/models.hpp"

namespace steerkit::pathkit {

using models::Pose;
using models::wrap_angle;

struct PathPoint {
    double s = 0.0;      // arc length from start, m
    double X = 0.0;
    double Y = 0.0;
    double psi_d = 0.0;  // rad
    double kappa = 0.0;  // 1/m, positive turns left
};

class RefPath {
public:
    RefPath() = default;

    /// `closing_length` is the length of the segment from the last sample
    /// back to the first; it is only meaningful for closed paths.
    RefPath(std::vector<PathPoint> points, bool closed, double closing_length = 0.0)
        : points_(std::move(points)), closed_(closed) {
        if (points_.size() < 2) throw InputError("RefPath: need at least two samples");
        for (std::size_t i = 0; i < points_.size(); ++i) {
            const auto& p = points_[i];
            if (!std::isfinite(p.s) || !std::isfinite(p.X) || !std::isfinite(p.Y) || !std::isfinite(p.psi_d) ||
                !std::isfinite(p.kappa))
                throw InputError("RefPath: non-finite sample");
            if (i > 0 && !(p.s > points_[i - 1].s)) throw InputError("RefPath: arc length must be strictly increasing");
        }
        if (closed_ && !(closing_length > 0.0)) throw InputError("RefPath: closed path needs a positive closing length");
        length_ = points_.back().s + (closed_ ? closing_length : 0.0);
    }

    const std::vector<PathPoint>& points() const noexcept { return points_; }
    std::size_t size() const noexcept { return points_.size(); }
    const PathPoint& operator[](std::size_t i) const { return points_[i]; }
    bool closed() const noexcept { return closed_; }
    double length() const noexcept { return length_; }
    const PathPoint& front() const { return points_.front(); }
    const PathPoint& back() const { return points_.back(); }

    double max_spacing() const {
        double m = 0.0;
        for (std::size_t i = 1; i < points_.size(); ++i) m = std::max(m, points_[i].s - points_[i - 1].s);
        if (closed_) m = std::max(m, length_ - points_.back().s);
        return m;
    }

    /// Index of the last sample with s <= query (query already wrapped for
    /// closed paths).
    std::size_t index_at(double s) const {
        auto it = std::upper_bound(points_.begin(), points_.end(), s,
                                   [](double v, const PathPoint& p) { return v < p.s; });
        if (it == points_.begin()) return 0;
        return static_cast<std::size_t>(std::distance(points_.begin(), it) - 1);
    }

    double wrap_s(double s) const {
        if (!closed_) return std::clamp(s, 0.0, length_);
        s = std::fmod(s, length_);
        return s < 0.0 ? s + length_ : s;
    }

private:
    std::vector<PathPoint> points_;
    bool closed_ = false;
    double length_ = 0.0;
};

/// Largest deviation between each chord's direction and the mean heading of
/// its two end samples.
inline double max_heading_inconsistency(const RefPath& path) {
    double worst = 0.0;
    const auto& pts = path.points();
    for (std::size_t i = 1; i < pts.size(); ++i) {
        const double chord = std::atan2(pts[i].Y - pts[i - 1].Y, pts[i].X - pts[i - 1].X);
        const double mid = pts[i - 1].psi_d + 0.5 * wrap_angle(pts[i].psi_d - pts[i - 1].psi_d);
        worst = std::max(worst, std::abs(wrap_angle(chord - mid)));
    }
    return worst;
}

/// Trapezoidal integral of curvature over arc length.
inline double integrated_curvature(const RefPath& path) {
    const auto& pts = path.points();
    double sum = 0.0;
    for (std::size_t i = 1; i < pts.size(); ++i) sum += 0.5 * (pts[i].kappa + pts[i - 1].kappa) * (pts[i].s - pts[i - 1].s);
    if (path.closed()) sum += 0.5 * (pts.back().kappa + pts.front().kappa) * (path.length() - pts.back().s);
    return sum;
}

// ---------------------------------------------------------------------------
// Analytic generators

enum class PathKind { line, circle, lane_change, s_curve };

struct PathShape {
    PathKind kind = PathKind::line;
    double length = 100.0;                       // line
    double radius = 50.0;                        // circle
    double arc_angle = 2.0 * std::numbers::pi;   // circle; a full turn yields a closed path
    bool left = true;                            // circle turn direction
    double entry = 0.0;                          // circle: straight run-in before the arc (opens the path)
    double offset = 3.5;                         // lane_change / s_curve lateral shift, + = left
    double transition = 50.0;                    // lane_change / s_curve longitudinal length
    double lead_in = 20.0;                       // lane_change straight before the shift
    double lead_out = 20.0;                      // lane_change straight after the shift
};

/// Quintic smoothstep 10u^3 - 15u^4 + 6u^5 with zero slope and curvature at
/// both ends, and its first two derivatives in u. Clamped outside [0, 1].
struct Smoothstep {
    static double value(double u) {
        if (u <= 0.0) return 0.0;
        if (u >= 1.0) return 1.0;
        return u * u * u * (10.0 + u * (-15.0 + 6.0 * u));
    }
    static double d1(double u) {
        if (u <= 0.0 || u >= 1.0) return 0.0;
        return 30.0 * u * u * (1.0 - u) * (1.0 - u);
    }
    static double d2(double u) {
        if (u <= 0.0 || u >= 1.0) return 0.0;
        return 60.0 * u * (1.0 - u) * (1.0 - 2.0 * u);
    }
};

namespace detail {

// y(x) = offset * smoothstep((x - x0) / w) over x in [0, x_end].
struct ShiftProfile {
    double x0, w, offset, x_end;
    double y(double x) const { return offset * Smoothstep::value((x - x0) / w); }
    double dy(double x) const { return offset / w * Smoothstep::d1((x - x0) / w); }
    double ddy(double x) const { return offset / (w * w) * Smoothstep::d2((x - x0) / w); }
    double speed(double x) const {
        const double d = dy(x);
        return std::sqrt(1.0 + d * d);
    }
};

// Arc length of the graph of y(x), tabulated with 5-point Gauss-Legendre
// panels and inverted by Newton within a panel.
class ArcLengthTable {
public:
    explicit ArcLengthTable(const ShiftProfile& prof, int panels = 4000) : prof_(prof), h_(prof.x_end / panels) {
        cum_.resize(static_cast<std::size_t>(panels) + 1, 0.0);
        for (int k = 0; k < panels; ++k) cum_[k + 1] = cum_[k] + integrate(k * h_, (k + 1) * h_);
    }

    double total() const { return cum_.back(); }

    double x_at(double s) const {
        s = std::clamp(s, 0.0, total());
        auto it = std::upper_bound(cum_.begin(), cum_.end(), s);
        std::size_t k = it == cum_.begin() ? 0 : static_cast<std::size_t>(std::distance(cum_.begin(), it) - 1);
        k = std::min(k, cum_.size() - 2);
        const double a = static_cast<double>(k) * h_;
        double x = a + (s - cum_[k]) / prof_.speed(a);
        for (int it2 = 0; it2 < 8; ++it2) {
            const double f = cum_[k] + integrate(a, x) - s;
            x -= f / prof_.speed(x);
        }
        return std::clamp(x, 0.0, prof_.x_end);
    }

private:
    double integrate(double a, double b) const {
        static constexpr std::array<double, 5> nodes{0.0, -0.5384693101056831, 0.5384693101056831, -0.9061798459386640,
                                                     0.9061798459386640};
        static constexpr std::array<double, 5> weights{0.5688888888888889, 0.4786286704993665, 0.4786286704993665,
                                                       0.2369268850561891, 0.2369268850561891};
        const double c = 0.5 * (a + b), r = 0.5 * (b - a);
        double sum = 0.0;
        for (std::size_t i = 0; i < 5; ++i) sum += weights[i] * prof_.speed(c + r * nodes[i]);
        return sum * r;
    }

    ShiftProfile prof_;
    double h_;
    std::vector<double> cum_;
};

inline void check_spacing(double spacing) {
    if (!(spacing > 0.01 && spacing <= 0.5)) throw InputError("gen_path: spacing must lie in (0.01, 0.5] m");
}

}  // namespace detail

/// Samples an analytic path starting at the origin heading east. Headings
/// and curvatures are evaluated from closed-form derivatives at each sample.
inline RefPath gen_path(const PathShape& shape, double spacing, double wheelbase = models::VehicleParams{}.L) {
    detail::check_spacing(spacing);
    std::vector<PathPoint> pts;
    switch (shape.kind) {
        case PathKind::line: {
            if (!(shape.length > 0.0)) throw InputError("gen_path: line length must be positive");
            const int n = static_cast<int>(std::ceil(shape.length / spacing - 1e-12));
            const double ds = shape.length / n;
            for (int k = 0; k <= n; ++k) pts.push_back({k * ds, k * ds, 0.0, 0.0, 0.0});
            return RefPath(std::move(pts), false);
        }
        case PathKind::circle: {
            const double R = shape.radius;
            if (!(R >= 2.0 * wheelbase)) throw InputError("gen_path: circle radius must be at least twice the wheelbase");
            if (!(shape.arc_angle > 0.0 && shape.arc_angle <= 2.0 * std::numbers::pi + 1e-12))
                throw InputError("gen_path: arc angle must lie in (0, 2 pi]");
            if (!(shape.entry >= 0.0) || !std::isfinite(shape.entry)) throw InputError("gen_path: entry must be >= 0");
            const double e = shape.entry;
            const bool full = shape.arc_angle >= 2.0 * std::numbers::pi - 1e-12 && e == 0.0;
            if (e > 0.0) {
                const int m = static_cast<int>(std::ceil(e / spacing - 1e-12));
                for (int k = 0; k < m; ++k) {
                    const double x = e * static_cast<double>(k) / m;
                    pts.push_back({x, x, 0.0, 0.0, 0.0});
                }
            }
            const double total = R * shape.arc_angle;
            const int n = static_cast<int>(std::ceil(total / spacing - 1e-12));
            const double ds = total / n;
            const double sgn = shape.left ? 1.0 : -1.0;
            const int last = full ? n - 1 : n;
            for (int k = 0; k <= last; ++k) {
                const double s = static_cast<double>(k) * ds;
                const double th = s / R;
                // The junction sample keeps the straight's zero curvature.
                const double kappa = (k == 0 && e > 0.0) ? 0.0 : sgn / R;
                pts.push_back({e + s, e + R * std::sin(th), sgn * R * (1.0 - std::cos(th)), wrap_angle(sgn * th), kappa});
            }
            return RefPath(std::move(pts), full, full ? ds : 0.0);
        }
        case PathKind::lane_change:
        case PathKind::s_curve: {
            const bool lane = shape.kind == PathKind::lane_change;
            const double lead_in = lane ? shape.lead_in : 0.0;
            const double lead_out = lane ? shape.lead_out : 0.0;
            if (!(shape.transition > 0.0) || lead_in < 0.0 || lead_out < 0.0 || !std::isfinite(shape.offset))
                throw InputError("gen_path: invalid lane-change parameters");
            const detail::ShiftProfile prof{lead_in, shape.transition, shape.offset, lead_in + shape.transition + lead_out};
            // Peak |y''| of the quintic is 10/sqrt(3) * |offset| / w^2.
            const double peak = 10.0 / std::sqrt(3.0) * std::abs(shape.offset) / (shape.transition * shape.transition);
            if (peak > 2.0 / wheelbase) throw InputError("gen_path: lateral shift too abrupt for the vehicle");
            const detail::ArcLengthTable table(prof);
            const double total = table.total();
            const int n = static_cast<int>(std::ceil(total / spacing - 1e-12));
            const double ds = total / n;
            for (int k = 0; k <= n; ++k) {
                const double s = k * ds;
                const double x = k == n ? prof.x_end : table.x_at(s);
                const double d1 = prof.dy(x), d2 = prof.ddy(x);
                pts.push_back({s, x, prof.y(x), std::atan(d1), d2 / std::pow(1.0 + d1 * d1, 1.5)});
            }
            return RefPath(std::move(pts), false);
        }
    }
    throw InputError("gen_path: unknown path kind");
}

// ---------------------------------------------------------------------------
// Recorded logs

struct RecordedSample {
    double t = 0.0;
    double X = 0.0;
    double Y = 0.0;
    double psi = 0.0;
    std::optional<double> yaw_rate;
    std::optional<double> speed;
    std::optional<double> steer;
};

using RecordedLog = std::vector<RecordedSample>;

namespace detail {

inline std::vector<std::string> split_csv(const std::string& line) {
    std::vector<std::string> out;
    std::string cell;
    std::istringstream ss(line);
    while (std::getline(ss, cell, ',')) {
        const auto b = cell.find_first_not_of(" \t\r");
        const auto e = cell.find_last_not_of(" \t\r");
        out.push_back(b == std::string::npos ? std::string{} : cell.substr(b, e - b + 1));
    }
    if (!line.empty() && line.back() == ',') out.emplace_back();
    return out;
}

inline double parse_double(const std::string& s, std::size_t line_no) {
    std::size_t used = 0;
    double v = 0.0;
    try {
        v = std::stod(s, &used);
    } catch (const std::exception&) {
        throw InputError("line " + std::to_string(line_no) + ": cannot parse number '" + s + "'");
    }
    if (used != s.size() || !std::isfinite(v))
        throw InputError("line " + std::to_string(line_no) + ": invalid number '" + s + "'");
    return v;
}

}  // namespace detail

/// Parsed CSV table: named columns of doubles. '#' starts a comment line.
struct CsvTable {
    std::vector<std::string> header;
    std::vector<std::vector<double>> rows;

    std::optional<std::size_t> column(const std::string& name) const {
        for (std::size_t i = 0; i < header.size(); ++i)
            if (header[i] == name) return i;
        return std::nullopt;
    }
};

inline CsvTable read_csv(std::istream& in) {
    CsvTable table;
    std::string line;
    std::size_t line_no = 0;
    while (std::getline(in, line)) {
        ++line_no;
        if (!line.empty() && line.back() == '\r') line.pop_back();
        const auto first = line.find_first_not_of(" \t");
        if (first == std::string::npos || line[first] == '#') continue;
        auto cells = detail::split_csv(line);
        if (table.header.empty()) {
            table.header = std::move(cells);
            continue;
        }
        if (cells.size() != table.header.size())
            throw InputError("line " + std::to_string(line_no) + ": expected " + std::to_string(table.header.size()) +
                             " fields, got " + std::to_string(cells.size()));
        std::vector<double> row;
        row.reserve(cells.size());
        for (const auto& c : cells) row.push_back(detail::parse_double(c, line_no));
        table.rows.push_back(std::move(row));
    }
    if (table.header.empty()) throw InputError("CSV: missing header");
    return table;
}

inline RecordedLog recorded_from_table(const CsvTable& table) {
    for (const char* req : {"t", "X", "Y", "psi"})
        if (!table.column(req)) throw InputError(std::string("recorded log: missing column '") + req + "'");
    const auto ct = *table.column("t"), cx = *table.column("X"), cy = *table.column("Y"), cp = *table.column("psi");
    const auto cr = table.column("yaw_rate"), cv = table.column("speed"), cs = table.column("steer");
    RecordedLog log;
    log.reserve(table.rows.size());
    for (const auto& r : table.rows) {
        RecordedSample s{r[ct], r[cx], r[cy], r[cp], {}, {}, {}};
        if (cr) s.yaw_rate = r[*cr];
        if (cv) s.speed = r[*cv];
        if (cs) s.steer = r[*cs];
        log.push_back(s);
    }
    return log;
}

inline RecordedLog read_recorded_csv(std::istream& in) { return recorded_from_table(read_csv(in)); }

inline RecordedLog read_recorded_csv(const std::string& path) {
    std::ifstream f(path);
    if (!f) throw InputError("cannot open recorded log '" + path + "'");
    return read_recorded_csv(f);
}

/// Writes `t,X,Y,psi[,yaw_rate,speed,steer]`; optional channels are written
/// only when every sample has them.
inline void write_recorded_csv(std::ostream& out, const RecordedLog& log) {
    const bool rate = std::all_of(log.begin(), log.end(), [](const auto& s) { return s.yaw_rate.has_value(); });
    const bool speed = std::all_of(log.begin(), log.end(), [](const auto& s) { return s.speed.has_value(); });
    const bool steer = std::all_of(log.begin(), log.end(), [](const auto& s) { return s.steer.has_value(); });
    out << "t,X,Y,psi";
    if (rate) out << ",yaw_rate";
    if (speed) out << ",speed";
    if (steer) out << ",steer";
    out << '\n';
    char buf[64];
    auto put = [&](double v) {
        std::snprintf(buf, sizeof buf, "%.17g", v);
        out << buf;
    };
    for (const auto& s : log) {
        put(s.t);
        for (double v : {s.X, s.Y, s.psi}) {
            out << ',';
            put(v);
        }
        if (rate) {
            out << ',';
            put(*s.yaw_rate);
        }
        if (speed) {
            out << ',';
            put(*s.speed);
        }
        if (steer) {
            out << ',';
            put(*s.steer);
        }
        out << '\n';
    }
}

struct LoadOptions {
    double spacing = 0.25;
    std::size_t min_samples = 10;
};

/// Resamples a recorded drive to uniform arc length. Headings come from
/// central differences of the resampled positions. Curvature comes from the
/// yaw-rate channel when yaw rate and speed are logged, otherwise from
/// heading differences.
inline RefPath load_recorded(const RecordedLog& log, const LoadOptions& opt = {}) {
    if (log.size() < opt.min_samples)
        throw InputError("load_recorded: need at least " + std::to_string(opt.min_samples) + " samples, got " +
                         std::to_string(log.size()));
    detail::check_spacing(opt.spacing);
    for (std::size_t i = 1; i < log.size(); ++i)
        if (log[i].t < log[i - 1].t) throw InputError("load_recorded: timestamps must be monotone");

    std::vector<RecordedSample> pts;
    pts.reserve(log.size());
    for (const auto& s : log) {
        if (!std::isfinite(s.X) || !std::isfinite(s.Y) || !std::isfinite(s.t))
            throw InputError("load_recorded: non-finite sample");
        if (!pts.empty() && std::hypot(s.X - pts.back().X, s.Y - pts.back().Y) < 1e-9) continue;
        pts.push_back(s);
    }
    std::vector<double> cum(pts.size(), 0.0);
    for (std::size_t i = 1; i < pts.size(); ++i)
        cum[i] = cum[i - 1] + std::hypot(pts[i].X - pts[i - 1].X, pts[i].Y - pts[i - 1].Y);
    const double total = cum.back();
    if (pts.size() < 2 || total < 1e-6) throw InputError("load_recorded: zero net displacement");

    const bool have_rate = std::all_of(pts.begin(), pts.end(), [](const auto& s) { return s.yaw_rate && s.speed; });
    const int n = std::max(2, static_cast<int>(std::ceil(total / opt.spacing - 1e-12)));
    const double ds = total / n;
    struct Resampled {
        double X, Y, psi, rate, speed;
    };
    std::vector<Resampled> rs;
    rs.reserve(static_cast<std::size_t>(n) + 1);
    std::size_t seg = 0;
    for (int k = 0; k <= n; ++k) {
        const double s = k == n ? total : k * ds;
        while (seg + 2 < pts.size() && cum[seg + 1] < s) ++seg;
        const double len = cum[seg + 1] - cum[seg];
        const double f = std::clamp((s - cum[seg]) / len, 0.0, 1.0);
        const auto& a = pts[seg];
        const auto& b = pts[seg + 1];
        // Cubic Hermite in arc length with central-difference tangents; linear
        // chords would cut inside curves and alias into curvature.
        auto tangent = [&](std::size_t i) {
            const std::size_t lo = i == 0 ? 0 : i - 1;
            const std::size_t hi = i + 1 == pts.size() ? i : i + 1;
            const double d = cum[hi] - cum[lo];
            return std::pair{(pts[hi].X - pts[lo].X) / d, (pts[hi].Y - pts[lo].Y) / d};
        };
        const auto [tax, tay] = tangent(seg);
        const auto [tbx, tby] = tangent(seg + 1);
        const double f2 = f * f, f3 = f2 * f;
        const double h00 = 2 * f3 - 3 * f2 + 1, h10 = f3 - 2 * f2 + f, h01 = -2 * f3 + 3 * f2, h11 = f3 - f2;
        Resampled r{h00 * a.X + h10 * len * tax + h01 * b.X + h11 * len * tbx,
                    h00 * a.Y + h10 * len * tay + h01 * b.Y + h11 * len * tby, a.psi + f * wrap_angle(b.psi - a.psi),
                    0.0, 0.0};
        if (have_rate) {
            r.rate = *a.yaw_rate + f * (*b.yaw_rate - *a.yaw_rate);
            r.speed = *a.speed + f * (*b.speed - *a.speed);
        }
        rs.push_back(r);
    }

    std::vector<PathPoint> out(rs.size());
    for (std::size_t i = 0; i < rs.size(); ++i) {
        const std::size_t lo = i == 0 ? 0 : i - 1;
        const std::size_t hi = i + 1 == rs.size() ? i : i + 1;
        out[i] = {static_cast<double>(i) * ds, rs[i].X, rs[i].Y, std::atan2(rs[hi].Y - rs[lo].Y, rs[hi].X - rs[lo].X), 0.0};
    }
    out.back().s = total;
    for (std::size_t i = 0; i < out.size(); ++i) {
        const std::size_t lo = i == 0 ? 0 : i - 1;
        const std::size_t hi = i + 1 == out.size() ? i : i + 1;
        const double by_heading = wrap_angle(out[hi].psi_d - out[lo].psi_d) / (out[hi].s - out[lo].s);
        double kappa = by_heading;
        if (have_rate) {
            try {
                // Heading measured relative to the local track keeps the
                // formula away from its +/-pi/2 singularity.
                kappa = curvkit::differential_curvature(wrap_angle(rs[i].psi - out[i].psi_d), rs[i].rate, rs[i].speed);
            } catch (const InputError&) {
                kappa = by_heading;
            }
        }
        out[i].kappa = kappa;
    }
    return RefPath(std::move(out), false);
}

// ---------------------------------------------------------------------------
// Projection

struct PathProjection {
    double s = 0.0;
    double e_y = 0.0;    // + = vehicle left of path
    double e_psi = 0.0;  // psi - psi_d, wrapped
    double kappa = 0.0;
    double psi_d = 0.0;
    double distance = 0.0;  // distance to the foot point, m
};

struct ProjectOptions {
    double horizon = 50.0;        // farther than this from the path: vehicle lost
    double window_back = 5.0;     // search window around the previous s, m
    double window_ahead = 10.0;
};

namespace detail {

struct SegmentFoot {
    double t = 0.0;
    double e_y = 0.0;
    double distance = 0.0;
};

// Foot point on the segment a->b, treating it as the circular arc through
// both samples with the segment's mean curvature.
inline SegmentFoot foot_on_segment(const PathPoint& a, const PathPoint& b, double px, double py) {
    const double dx = b.X - a.X, dy = b.Y - a.Y;
    const double len = std::hypot(dx, dy);
    const double tx = dx / len, ty = dy / len;
    const double nx = -ty, ny = tx;
    const double ox = px - a.X, oy = py - a.Y;
    const double along = ox * tx + oy * ty;
    const double lat = ox * nx + oy * ny;
    const double kappa = 0.5 * (a.kappa + b.kappa);
    const double half = 0.5 * len;
    if (std::abs(kappa) * half > 1e-12 && std::abs(kappa) * half < 0.5) {
        const double R = 1.0 / std::abs(kappa);
        const double sgn = kappa > 0.0 ? 1.0 : -1.0;
        const double h = std::sqrt(R * R - half * half);
        // Center in segment-local coordinates (along, lat).
        const double cu = half, cv = sgn * h;
        const double ru = along - cu, rv = lat - cv;
        const double rho = std::hypot(ru, rv);
        const double half_angle = std::asin(half / R);
        // Angle of the point around the center, measured from the start sample
        // in the direction of travel.
        const double start = std::atan2(-cv, -cu);
        double ang = std::atan2(rv, ru) - start;
        ang = wrap_angle(ang) * sgn;
        const double t = ang / (2.0 * half_angle);
        if (t >= 0.0 && t <= 1.0) return {t, sgn * (R - rho), std::abs(R - rho)};
        const double tc = t < 0.0 ? 0.0 : 1.0;
        const double ex = tc == 0.0 ? ox : px - b.X, ey = tc == 0.0 ? oy : py - b.Y;
        return {tc, sgn * (R - rho), std::hypot(ex, ey)};
    }
    const double t = along / len;
    if (t >= 0.0 && t <= 1.0) return {t, lat, std::abs(lat)};
    const double tc = t < 0.0 ? 0.0 : 1.0;
    const double ex = tc == 0.0 ? ox : px - b.X, ey = tc == 0.0 ? oy : py - b.Y;
    return {tc, lat, std::hypot(ex, ey)};
}

}  // namespace detail

/// Projects a pose onto the path. `previous_s` is the caller-owned progress
/// memory: when given, only samples within the window around it are
/// searched, which keeps the foot point from jumping between nearby parts
/// of the path.
inline PathProjection project(const RefPath& path, const Pose& pose, std::optional<double> previous_s = std::nullopt,
                              const ProjectOptions& opt = {}) {
    const auto& pts = path.points();
    const std::size_t n = pts.size();
    auto seg_count = path.closed() ? n : n - 1;

    // Candidate sample range [first, first + count) in (possibly wrapped) index space.
    long first = 0;
    long count = static_cast<long>(n);
    if (previous_s) {
        const double s0 = *previous_s;
        const double lo_s = s0 - opt.window_back, hi_s = s0 + opt.window_ahead;
        if (path.closed()) {
            if (hi_s - lo_s < path.length()) {
                first = static_cast<long>(path.index_at(path.wrap_s(lo_s)));
                const long last = static_cast<long>(path.index_at(path.wrap_s(hi_s)));
                count = last - first + 1;
                if (count <= 0) count += static_cast<long>(n);
                count = std::min<long>(count + 1, static_cast<long>(n));
            }
        } else {
            first = static_cast<long>(path.index_at(std::max(lo_s, 0.0)));
            const long last = static_cast<long>(path.index_at(std::min(hi_s, path.length())));
            count = std::min<long>(last - first + 2, static_cast<long>(n) - first);
        }
    }

    auto idx = [&](long k) { return static_cast<std::size_t>(((k % static_cast<long>(n)) + static_cast<long>(n)) % static_cast<long>(n)); };
    std::size_t nearest = idx(first);
    double best = std::numeric_limits<double>::infinity();
    for (long k = first; k < first + count; ++k) {
        const auto& p = pts[idx(k)];
        const double d = std::hypot(pose.X - p.X, pose.Y - p.Y);
        if (d < best) {
            best = d;
            nearest = idx(k);
        }
    }

    bool found = false;
    detail::SegmentFoot foot;
    std::size_t seg_a = 0;
    for (int offset : {-1, 0}) {
        const long a = static_cast<long>(nearest) + offset;
        if (!path.closed() && (a < 0 || a >= static_cast<long>(seg_count))) continue;
        const std::size_t ia = idx(a);
        const std::size_t ib = idx(a + 1);
        const auto f = detail::foot_on_segment(pts[ia], pts[ib], pose.X, pose.Y);
        if (!found || f.distance < foot.distance) {
            foot = f;
            seg_a = ia;
            found = true;
        }
    }
    if (!found || foot.distance > opt.horizon)
        throw SimulationError("project: vehicle lost (" + std::to_string(found ? foot.distance : best) +
                              " m from path, horizon " + std::to_string(opt.horizon) + " m)");

    const auto& a = pts[seg_a];
    const auto& b = pts[idx(static_cast<long>(seg_a) + 1)];
    const double sa = a.s;
    const double sb = (path.closed() && seg_a + 1 == n) ? path.length() : b.s;
    PathProjection out;
    out.s = path.closed() ? path.wrap_s(sa + foot.t * (sb - sa)) : sa + foot.t * (sb - sa);
    out.psi_d = wrap_angle(a.psi_d + foot.t * wrap_angle(b.psi_d - a.psi_d));
    out.kappa = a.kappa + foot.t * (b.kappa - a.kappa);
    out.e_y = foot.e_y;
    out.e_psi = wrap_angle(pose.psi - out.psi_d);
    out.distance = foot.distance;
    return out;
}

/// Pose on the path at arc length s, displaced laterally by e_y and rotated
/// by e_psi.
inline Pose pose_at(const RefPath& path, double s, double e_y = 0.0, double e_psi = 0.0) {
    s = path.wrap_s(s);
    const std::size_t i = path.index_at(s);
    const auto& pts = path.points();
    const PathPoint& a = pts[i];
    const bool wrap = i + 1 == pts.size();
    if (wrap && !path.closed()) {
        return {a.X - e_y * std::sin(a.psi_d), a.Y + e_y * std::cos(a.psi_d), wrap_angle(a.psi_d + e_psi)};
    }
    const PathPoint& b = wrap ? pts.front() : pts[i + 1];
    const double sb = wrap ? path.length() : b.s;
    const double f = (s - a.s) / (sb - a.s);
    const double psi = wrap_angle(a.psi_d + f * wrap_angle(b.psi_d - a.psi_d));
    // Same arc model as project(), so the two invert each other.
    const double dx = b.X - a.X, dy = b.Y - a.Y;
    const double len = std::hypot(dx, dy);
    const double chord = std::atan2(dy, dx);
    const double kappa = 0.5 * (a.kappa + b.kappa);
    const double half = 0.5 * len;
    double X = a.X + f * dx, Y = a.Y + f * dy, normal = chord;
    if (std::abs(kappa) * half > 1e-12 && std::abs(kappa) * half < 0.5) {
        const double R = 1.0 / std::abs(kappa);
        const double sgn = kappa > 0.0 ? 1.0 : -1.0;
        const double h = std::sqrt(R * R - half * half);
        const double half_angle = std::asin(half / R);
        const double cx = a.X + half * std::cos(chord) - sgn * h * std::sin(chord);
        const double cy = a.Y + half * std::sin(chord) + sgn * h * std::cos(chord);
        normal = chord + sgn * half_angle * (2.0 * f - 1.0);
        X = cx + sgn * R * std::sin(normal);
        Y = cy - sgn * R * std::cos(normal);
    }
    return {X - e_y * std::sin(normal), Y + e_y * std::cos(normal), wrap_angle(psi + e_psi)};
}

}  // namespace steerkit::pathkit
