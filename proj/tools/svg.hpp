#pragma once

// Minimal SVG line charts. Plots are views of data that is also written to
// CSV next to them; nothing is computed here beyond axis scaling.

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <limits>
#include <optional>
#include <ostream>
#include <string>
#include <utility>
#include <vector>

namespace steerkit::cli::svg {

struct Series {
    std::string label;
    std::vector<double> x;
    std::vector<double> y;
    std::string color = "#1f77b4";
    bool dashed = false;
};

struct Marker {
    double x = 0.0;
    std::string label;
};

struct Panel {
    std::string title;
    std::string x_label;
    std::string y_label;
    std::vector<Series> series;
    std::vector<Marker> markers;  // vertical lines
    std::vector<double> hlines;   // horizontal reference lines
    bool log_x = false;
    bool equal_aspect = false;
    // Optional fixed y range, e.g. a zoomed view.
    std::optional<std::pair<double, double>> y_range;
};

inline std::string escape(const std::string& s) {
    std::string o;
    for (char c : s) {
        switch (c) {
            case '&': o += "&amp;"; break;
            case '<': o += "&lt;"; break;
            case '>': o += "&gt;"; break;
            case '"': o += "&quot;"; break;
            case '\'': o += "&apos;"; break;
            default: o += c;
        }
    }
    return o;
}

inline std::string fmt(double v) {
    char buf[32];
    std::snprintf(buf, sizeof buf, "%.6g", v);
    return buf;
}

inline const char* palette(std::size_t i) {
    static const char* colors[] = {"#1f77b4", "#d62728", "#2ca02c", "#ff7f0e", "#9467bd", "#8c564b"};
    return colors[i % 6];
}

namespace detail {

struct Range {
    double lo = std::numeric_limits<double>::infinity();
    double hi = -std::numeric_limits<double>::infinity();
    void add(double v) {
        if (!std::isfinite(v)) return;
        lo = std::min(lo, v);
        hi = std::max(hi, v);
    }
    void settle() {
        if (!(lo <= hi)) {
            lo = 0.0;
            hi = 1.0;
        }
        if (hi - lo < 1e-12 * std::max(1.0, std::abs(hi))) {
            const double pad = std::max(1e-9, 0.05 * std::abs(hi));
            lo -= pad;
            hi += pad;
        }
    }
};

inline std::vector<double> ticks(double lo, double hi, int target = 6) {
    const double span = hi - lo;
    const double raw = span / target;
    const double mag = std::pow(10.0, std::floor(std::log10(raw)));
    double step = mag;
    for (double m : {1.0, 2.0, 5.0, 10.0})
        if (m * mag >= raw) {
            step = m * mag;
            break;
        }
    std::vector<double> t;
    for (double v = std::ceil(lo / step) * step; v <= hi + 1e-9 * step; v += step) t.push_back(std::abs(v) < 1e-12 * step ? 0.0 : v);
    return t;
}

}  // namespace detail

/// Writes the panels stacked vertically into one SVG document.
inline void write(std::ostream& out, const std::string& title, const std::vector<Panel>& panels) {
    const double width = 800, panel_h = 320, top = 40, left = 80, right = 180, gap = 70;
    const double height = top + static_cast<double>(panels.size()) * (panel_h + gap);
    out << "<?xml version=\"1.0\" encoding=\"UTF-8\"?>\n";
    out << "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"" << width << "\" height=\"" << height
        << "\" viewBox=\"0 0 " << width << ' ' << height << "\" font-family=\"sans-serif\" font-size=\"12\">\n";
    out << "<rect width=\"100%\" height=\"100%\" fill=\"white\"/>\n";
    out << "<text x=\"" << width / 2 << "\" y=\"22\" text-anchor=\"middle\" font-size=\"16\">" << escape(title) << "</text>\n";

    for (std::size_t pi = 0; pi < panels.size(); ++pi) {
        const Panel& p = panels[pi];
        const double y0 = top + static_cast<double>(pi) * (panel_h + gap) + 20;
        const double pw = width - left - right, ph = panel_h - 40;
        auto tx = [&](double x) { return p.log_x ? std::log10(std::max(x, 1e-300)) : x; };

        detail::Range rx, ry;
        for (const auto& s : p.series)
            for (std::size_t i = 0; i < s.x.size() && i < s.y.size(); ++i) {
                if (!std::isfinite(s.x[i]) || !std::isfinite(s.y[i])) continue;
                rx.add(tx(s.x[i]));
                if (!p.y_range) ry.add(s.y[i]);
            }
        if (p.y_range) {
            ry.lo = p.y_range->first;
            ry.hi = p.y_range->second;
        }
        for (double h : p.hlines)
            if (!p.y_range) ry.add(h);
        rx.settle();
        ry.settle();
        if (p.equal_aspect) {
            const double sx = (rx.hi - rx.lo) / pw, sy = (ry.hi - ry.lo) / ph;
            if (sx > sy) {
                const double c = 0.5 * (ry.lo + ry.hi), h = 0.5 * sx * ph;
                ry.lo = c - h;
                ry.hi = c + h;
            } else {
                const double c = 0.5 * (rx.lo + rx.hi), w = 0.5 * sy * pw;
                rx.lo = c - w;
                rx.hi = c + w;
            }
        }
        auto px = [&](double x) { return left + (tx(x) - rx.lo) / (rx.hi - rx.lo) * pw; };
        auto py = [&](double y) { return y0 + ph - (y - ry.lo) / (ry.hi - ry.lo) * ph; };
        auto inside = [&](double y) { return y >= ry.lo && y <= ry.hi; };

        out << "<g>\n<text x=\"" << left + pw / 2 << "\" y=\"" << y0 - 6 << "\" text-anchor=\"middle\" font-size=\"13\">"
            << escape(p.title) << "</text>\n";
        out << "<rect x=\"" << left << "\" y=\"" << y0 << "\" width=\"" << pw << "\" height=\"" << ph
            << "\" fill=\"none\" stroke=\"#333\"/>\n";
        for (double t : detail::ticks(rx.lo, rx.hi)) {
            const double X = left + (t - rx.lo) / (rx.hi - rx.lo) * pw;
            out << "<line x1=\"" << fmt(X) << "\" y1=\"" << y0 << "\" x2=\"" << fmt(X) << "\" y2=\"" << y0 + ph
                << "\" stroke=\"#eee\"/>\n";
            out << "<text x=\"" << fmt(X) << "\" y=\"" << y0 + ph + 15 << "\" text-anchor=\"middle\">"
                << (p.log_x ? "1e" + fmt(t) : fmt(t)) << "</text>\n";
        }
        for (double t : detail::ticks(ry.lo, ry.hi)) {
            const double Y = py(t);
            out << "<line x1=\"" << left << "\" y1=\"" << fmt(Y) << "\" x2=\"" << left + pw << "\" y2=\"" << fmt(Y)
                << "\" stroke=\"#eee\"/>\n";
            out << "<text x=\"" << left - 6 << "\" y=\"" << fmt(Y + 4) << "\" text-anchor=\"end\">" << fmt(t) << "</text>\n";
        }
        out << "<text x=\"" << left + pw / 2 << "\" y=\"" << y0 + ph + 32 << "\" text-anchor=\"middle\">"
            << escape(p.x_label) << "</text>\n";
        out << "<text x=\"" << 18 << "\" y=\"" << y0 + ph / 2 << "\" text-anchor=\"middle\" transform=\"rotate(-90 18 "
            << y0 + ph / 2 << ")\">" << escape(p.y_label) << "</text>\n";
        for (double h : p.hlines)
            if (inside(h))
                out << "<line x1=\"" << left << "\" y1=\"" << fmt(py(h)) << "\" x2=\"" << left + pw << "\" y2=\""
                    << fmt(py(h)) << "\" stroke=\"#888\" stroke-dasharray=\"2,3\"/>\n";

        for (std::size_t si = 0; si < p.series.size(); ++si) {
            const Series& s = p.series[si];
            out << "<polyline fill=\"none\" stroke=\"" << s.color << "\" stroke-width=\"1.3\""
                << (s.dashed ? " stroke-dasharray=\"6,4\"" : "") << " points=\"";
            const std::size_t n = std::min(s.x.size(), s.y.size());
            // Thin very long series; the CSV keeps every sample.
            const std::size_t stride = std::max<std::size_t>(1, n / 4000);
            bool first = true;
            for (std::size_t i = 0; i < n; i += stride) {
                if (!std::isfinite(s.x[i]) || !std::isfinite(s.y[i])) continue;
                const double yc = std::clamp(s.y[i], ry.lo, ry.hi);
                out << (first ? "" : " ") << fmt(px(s.x[i])) << ',' << fmt(py(yc));
                first = false;
            }
            out << "\"/>\n";
            const double ly = y0 + 14 + 16 * static_cast<double>(si);
            out << "<line x1=\"" << left + pw + 10 << "\" y1=\"" << ly - 4 << "\" x2=\"" << left + pw + 30 << "\" y2=\""
                << ly - 4 << "\" stroke=\"" << s.color << "\"" << (s.dashed ? " stroke-dasharray=\"6,4\"" : "") << "/>\n";
            out << "<text x=\"" << left + pw + 35 << "\" y=\"" << ly << "\">" << escape(s.label) << "</text>\n";
        }
        for (const auto& m : p.markers) {
            if (!std::isfinite(m.x) || tx(m.x) < rx.lo || tx(m.x) > rx.hi) continue;
            out << "<line x1=\"" << fmt(px(m.x)) << "\" y1=\"" << y0 << "\" x2=\"" << fmt(px(m.x)) << "\" y2=\"" << y0 + ph
                << "\" stroke=\"#555\" stroke-dasharray=\"4,3\"/>\n";
            out << "<text x=\"" << fmt(px(m.x) + 4) << "\" y=\"" << y0 + 14 << "\">" << escape(m.label) << "</text>\n";
        }
        out << "</g>\n";
    }
    out << "</svg>\n";
}

}  // namespace steerkit::cli::svg
