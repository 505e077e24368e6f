#pragma once

#include "ecgi/csv.hpp"
#include "ecgi/error.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <string>
#include <vector>

// Small self-contained SVG charts. Plots are companions to CSV files, never
// the only record of a number, so the drawing stays deliberately simple:
// fixed canvas, linear axes, a handful of colors.
namespace ecgi::svg {

namespace detail {

inline std::string num(double v) { return csv::format(v); }

inline const char* palette(std::size_t i) {
    static constexpr const char* colors[] = {"#4878d0", "#ee854a", "#6acc64", "#d65f5f",
                                             "#956cb4", "#8c613c", "#dc7ec0", "#797979"};
    return colors[i % 8];
}

struct Canvas {
    std::string body;
    double width = 640, height = 420;
    double left = 64, right = 24, top = 44, bottom = 56;
    double x_min = 0, x_max = 1, y_min = 0, y_max = 1;

    double px(double x) const {
        return left + (x - x_min) / (x_max - x_min) * (width - left - right);
    }
    double py(double y) const {
        return height - bottom - (y - y_min) / (y_max - y_min) * (height - top - bottom);
    }

    void fit_y(double lo, double hi) {
        if (lo == hi) {
            lo -= 0.5;
            hi += 0.5;
        }
        const double pad = 0.06 * (hi - lo);
        y_min = lo - pad;
        y_max = hi + pad;
    }

    void text(double x, double y, const std::string& s, const char* anchor = "middle",
              int size = 12) {
        body += "<text x='" + num(x) + "' y='" + num(y) + "' font-size='" + std::to_string(size) +
                "' text-anchor='" + anchor + "' font-family='sans-serif'>" + s + "</text>\n";
    }

    void line(double x1, double y1, double x2, double y2, const std::string& stroke,
              double width_px = 1.0) {
        body += "<line x1='" + num(x1) + "' y1='" + num(y1) + "' x2='" + num(x2) + "' y2='" +
                num(y2) + "' stroke='" + stroke + "' stroke-width='" + num(width_px) + "'/>\n";
    }

    void rect(double x, double y, double w, double h, const std::string& fill,
              double opacity = 1.0) {
        body += "<rect x='" + num(x) + "' y='" + num(y) + "' width='" + num(w) + "' height='" +
                num(h) + "' fill='" + fill + "' fill-opacity='" + num(opacity) + "'/>\n";
    }

    void axes(const std::string& title, const std::string& x_label, const std::string& y_label) {
        text(width / 2, 22, title, "middle", 14);
        text(width / 2, height - 12, x_label);
        body += "<text x='16' y='" + num(height / 2) +
                "' font-size='12' text-anchor='middle' font-family='sans-serif' transform='rotate(-90 16 " +
                num(height / 2) + ")'>" + y_label + "</text>\n";
        line(left, height - bottom, width - right, height - bottom, "#333");
        line(left, top, left, height - bottom, "#333");
        for (int i = 0; i <= 4; ++i) {
            const double v = y_min + (y_max - y_min) * i / 4.0;
            const double y = py(v);
            line(left - 4, y, left, y, "#333");
            char buf[32];
            std::snprintf(buf, sizeof(buf), "%.3g", v);
            text(left - 8, y + 4, buf, "end", 10);
        }
    }

    void save(const std::string& path) const {
        std::ofstream out(path, std::ios::binary);
        if (!out) throw IoError("svg: cannot write " + path);
        out << "<svg xmlns='http://www.w3.org/2000/svg' viewBox='0 0 " << num(width) << " "
            << num(height) << "'>\n<rect width='100%' height='100%' fill='white'/>\n"
            << body << "</svg>\n";
    }
};

} // namespace detail

// Bar chart with optional error whiskers.
inline void bar_chart(const std::string& path, const std::string& title,
                      const std::vector<std::string>& labels, const std::vector<double>& values,
                      const std::vector<double>& errors = {}, const std::string& y_label = "") {
    detail::Canvas c;
    double lo = 0, hi = 0;
    for (std::size_t i = 0; i < values.size(); ++i) {
        const double e = i < errors.size() ? errors[i] : 0.0;
        lo = std::min(lo, values[i] - e);
        hi = std::max(hi, values[i] + e);
    }
    c.fit_y(lo, hi);
    c.x_min = 0;
    c.x_max = static_cast<double>(values.size());
    c.axes(title, "", y_label);
    const double slot = (c.width - c.left - c.right) / static_cast<double>(values.size());
    for (std::size_t i = 0; i < values.size(); ++i) {
        const double x = c.left + slot * (static_cast<double>(i) + 0.15);
        const double y0 = c.py(std::max(0.0, c.y_min));
        const double y1 = c.py(values[i]);
        c.rect(x, std::min(y0, y1), slot * 0.7, std::abs(y0 - y1), detail::palette(i));
        if (i < errors.size() && errors[i] > 0) {
            const double cx = x + slot * 0.35;
            c.line(cx, c.py(values[i] - errors[i]), cx, c.py(values[i] + errors[i]), "#222", 1.5);
        }
        c.text(x + slot * 0.35, c.height - c.bottom + 16, labels[i], "middle", 10);
    }
    c.save(path);
}

struct Series {
    std::string label;
    std::vector<double> x, y;
    std::vector<double> band_lo, band_hi; // optional shaded band
};

inline void line_plot(const std::string& path, const std::string& title,
                      const std::vector<Series>& series, const std::string& x_label = "",
                      const std::string& y_label = "") {
    detail::Canvas c;
    double xlo = 1e300, xhi = -1e300, ylo = 1e300, yhi = -1e300;
    for (const auto& s : series) {
        for (double v : s.x) {
            xlo = std::min(xlo, v);
            xhi = std::max(xhi, v);
        }
        for (double v : s.y) {
            ylo = std::min(ylo, v);
            yhi = std::max(yhi, v);
        }
        for (double v : s.band_lo) ylo = std::min(ylo, v);
        for (double v : s.band_hi) yhi = std::max(yhi, v);
    }
    if (xlo > xhi) {
        xlo = 0;
        xhi = 1;
    }
    c.x_min = xlo;
    c.x_max = xhi == xlo ? xlo + 1 : xhi;
    c.fit_y(ylo > yhi ? 0 : ylo, ylo > yhi ? 1 : yhi);
    c.axes(title, x_label, y_label);
    for (std::size_t si = 0; si < series.size(); ++si) {
        const auto& s = series[si];
        if (s.band_lo.size() == s.x.size() && s.band_hi.size() == s.x.size()) {
            std::string pts;
            for (std::size_t i = 0; i < s.x.size(); ++i)
                pts += detail::num(c.px(s.x[i])) + "," + detail::num(c.py(s.band_hi[i])) + " ";
            for (std::size_t i = s.x.size(); i-- > 0;)
                pts += detail::num(c.px(s.x[i])) + "," + detail::num(c.py(s.band_lo[i])) + " ";
            c.body += "<polygon points='" + pts + "' fill='" + detail::palette(si) +
                      "' fill-opacity='0.2'/>\n";
        }
        std::string pts;
        for (std::size_t i = 0; i < s.x.size(); ++i)
            pts += detail::num(c.px(s.x[i])) + "," + detail::num(c.py(s.y[i])) + " ";
        c.body += "<polyline points='" + pts + "' fill='none' stroke='" + detail::palette(si) +
                  "' stroke-width='1.5'/>\n";
        c.text(c.width - c.right - 8, c.top + 16 + 14 * static_cast<double>(si), s.label, "end",
               11);
    }
    c.save(path);
}

// Value-annotated matrix with a blue-to-red shade, for confusions and
// p-value matrices.
inline void heatmap(const std::string& path, const std::string& title,
                    const std::vector<std::string>& row_labels,
                    const std::vector<std::string>& col_labels,
                    const std::vector<std::vector<double>>& values) {
    detail::Canvas c;
    c.left = 80;
    const std::size_t rows = values.size();
    const std::size_t cols = rows ? values[0].size() : 0;
    double lo = 1e300, hi = -1e300;
    for (const auto& row : values)
        for (double v : row) {
            lo = std::min(lo, v);
            hi = std::max(hi, v);
        }
    if (lo > hi) {
        lo = 0;
        hi = 1;
    }
    if (lo == hi) hi = lo + 1;
    c.text(c.width / 2, 22, title, "middle", 14);
    const double cw = (c.width - c.left - c.right) / static_cast<double>(cols);
    const double ch = (c.height - c.top - c.bottom) / static_cast<double>(rows);
    for (std::size_t r = 0; r < rows; ++r) {
        for (std::size_t k = 0; k < cols; ++k) {
            const double t = (values[r][k] - lo) / (hi - lo);
            const int red = static_cast<int>(40 + 215 * t);
            const int blue = static_cast<int>(255 - 215 * t);
            char color[8];
            std::snprintf(color, sizeof(color), "#%02x50%02x", red, blue);
            const double x = c.left + cw * static_cast<double>(k);
            const double y = c.top + ch * static_cast<double>(r);
            c.rect(x, y, cw - 1, ch - 1, color);
            char buf[32];
            std::snprintf(buf, sizeof(buf), "%.3g", values[r][k]);
            c.text(x + cw / 2, y + ch / 2 + 4, buf, "middle", 9);
        }
        c.text(c.left - 6, c.top + ch * (static_cast<double>(r) + 0.5) + 4, row_labels[r], "end",
               10);
    }
    for (std::size_t k = 0; k < cols; ++k)
        c.text(c.left + cw * (static_cast<double>(k) + 0.5), c.height - c.bottom + 16,
               col_labels[k], "middle", 10);
    c.save(path);
}

// A beat trace with a saliency heat strip underneath: the figure style used
// for the per-beat explanations.
inline void saliency_overlay(const std::string& path, const std::string& title,
                             const std::vector<double>& beat,
                             const std::vector<double>& saliency,
                             const std::vector<double>& segment_weights = {}) {
    detail::Canvas c;
    double lo = 1e300, hi = -1e300;
    for (double v : beat) {
        lo = std::min(lo, v);
        hi = std::max(hi, v);
    }
    c.fit_y(lo, hi);
    c.x_min = 0;
    c.x_max = static_cast<double>(beat.size());
    c.axes(title, "sample", "z-scored voltage");
    // heat strip
    const double strip_y = c.height - c.bottom + 22;
    const double w = (c.width - c.left - c.right) / static_cast<double>(saliency.size());
    for (std::size_t i = 0; i < saliency.size(); ++i) {
        const double t = std::clamp(saliency[i], 0.0, 1.0);
        const int red = static_cast<int>(40 + 215 * t);
        const int blue = static_cast<int>(255 - 215 * t);
        char color[8];
        std::snprintf(color, sizeof(color), "#%02x30%02x", red, blue);
        c.rect(c.left + w * static_cast<double>(i), strip_y, w + 0.5, 10, color);
    }
    // segment weight steps, rescaled into the beat range
    if (!segment_weights.empty()) {
        const std::size_t seg_width = beat.size() / segment_weights.size();
        std::string pts;
        for (std::size_t k = 0; k < segment_weights.size(); ++k) {
            const double y = c.py(c.y_min + segment_weights[k] * (c.y_max - c.y_min));
            pts += detail::num(c.px(static_cast<double>(k * seg_width))) + "," + detail::num(y) +
                   " " + detail::num(c.px(static_cast<double>((k + 1) * seg_width))) + "," +
                   detail::num(y) + " ";
        }
        c.body += "<polyline points='" + pts + "' fill='none' stroke='#2ca02c' stroke-width='1.5'/>\n";
    }
    std::string pts;
    for (std::size_t i = 0; i < beat.size(); ++i)
        pts += detail::num(c.px(static_cast<double>(i))) + "," + detail::num(c.py(beat[i])) + " ";
    c.body += "<polyline points='" + pts + "' fill='none' stroke='#333' stroke-width='1'/>\n";
    c.save(path);
}

} // namespace ecgi::svg
