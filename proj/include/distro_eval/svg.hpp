#pragma once

// Deterministic SVG rendering of inverse-CDF performance profiles.

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <limits>
#include <string>
#include <utility>
#include <vector>

namespace distro_eval {

struct PlotSeries {
    std::string label;
    std::string color;
    std::vector<std::pair<double, double>> points;  ///< (quantile, metric)
};

struct PlotLayout {
    int width = 800;
    int height = 500;
    std::string x_label = "quantile";
    std::string y_label = "metric";
};

inline std::string xml_escape(const std::string& s)
{
    std::string out;
    for (char c : s) {
        switch (c) {
        case '&': out += "&amp;"; break;
        case '<': out += "&lt;"; break;
        case '>': out += "&gt;"; break;
        case '"': out += "&quot;"; break;
        case '\'': out += "&apos;"; break;
        default: out += c;
        }
    }
    return out;
}

inline std::string fixed3(double v)
{
    char buf[64];
    std::snprintf(buf, sizeof buf, "%.3f", v);
    // Avoid "-0.000".
    if (std::string(buf) == "-0.000") {
        return "0.000";
    }
    return buf;
}

/// Plot frame inside the canvas; the legend sits to the right.
struct PlotFrame {
    double left, top, right, bottom;
    double y_min, y_max;

    double x_px(double q) const { return left + q * (right - left); }
    double y_px(double v) const { return bottom - (v - y_min) / (y_max - y_min) * (bottom - top); }
};

inline PlotFrame plot_frame(const PlotLayout& layout, const std::vector<PlotSeries>& series)
{
    double lo = std::numeric_limits<double>::infinity();
    double hi = -lo;
    for (const auto& s : series) {
        for (const auto& [q, v] : s.points) {
            lo = std::min(lo, v);
            hi = std::max(hi, v);
        }
    }
    if (!std::isfinite(lo)) {
        lo = 0.0;
        hi = 1.0;
    }
    if (hi == lo) {
        const double pad = std::max(std::abs(lo) * 0.1, 0.1);
        lo -= pad;
        hi += pad;
    }
    return {70.0, 30.0, static_cast<double>(layout.width) - 170.0, static_cast<double>(layout.height) - 50.0, lo, hi};
}

inline std::string render_icdf_svg(const PlotLayout& layout, const std::vector<PlotSeries>& series)
{
    const PlotFrame f = plot_frame(layout, series);
    std::string out;
    out += "<?xml version=\"1.0\" encoding=\"UTF-8\"?>\n";
    out += "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"" + std::to_string(layout.width) + "\" height=\"" +
           std::to_string(layout.height) + "\" viewBox=\"0 0 " + std::to_string(layout.width) + " " +
           std::to_string(layout.height) + "\" data-y-min=\"" + fixed3(f.y_min) + "\" data-y-max=\"" +
           fixed3(f.y_max) + "\">\n";
    out += "<rect x=\"0.000\" y=\"0.000\" width=\"" + fixed3(layout.width) + "\" height=\"" + fixed3(layout.height) +
           "\" fill=\"white\"/>\n";

    // Axes.
    out += "<line class=\"axis\" x1=\"" + fixed3(f.left) + "\" y1=\"" + fixed3(f.bottom) + "\" x2=\"" +
           fixed3(f.right) + "\" y2=\"" + fixed3(f.bottom) + "\" stroke=\"black\"/>\n";
    out += "<line class=\"axis\" x1=\"" + fixed3(f.left) + "\" y1=\"" + fixed3(f.top) + "\" x2=\"" + fixed3(f.left) +
           "\" y2=\"" + fixed3(f.bottom) + "\" stroke=\"black\"/>\n";
    for (int i = 0; i <= 4; ++i) {
        const double q = i / 4.0;
        out += "<text x=\"" + fixed3(f.x_px(q)) + "\" y=\"" + fixed3(f.bottom + 18.0) +
               "\" font-size=\"12.000\" text-anchor=\"middle\">" + fixed3(q) + "</text>\n";
        const double v = f.y_min + (f.y_max - f.y_min) * q;
        out += "<text x=\"" + fixed3(f.left - 6.0) + "\" y=\"" + fixed3(f.y_px(v) + 4.0) +
               "\" font-size=\"12.000\" text-anchor=\"end\">" + fixed3(v) + "</text>\n";
    }
    out += "<text x=\"" + fixed3((f.left + f.right) / 2.0) + "\" y=\"" + fixed3(layout.height - 10.0) +
           "\" font-size=\"14.000\" text-anchor=\"middle\">" + xml_escape(layout.x_label) + "</text>\n";
    out += "<text x=\"16.000\" y=\"" + fixed3((f.top + f.bottom) / 2.0) +
           "\" font-size=\"14.000\" text-anchor=\"middle\" transform=\"rotate(-90 16.000 " +
           fixed3((f.top + f.bottom) / 2.0) + ")\">" + xml_escape(layout.y_label) + "</text>\n";

    for (std::size_t i = 0; i < series.size(); ++i) {
        const auto& s = series[i];
        std::string pts;
        for (const auto& [q, v] : s.points) {
            pts += (pts.empty() ? "" : " ") + fixed3(f.x_px(q)) + "," + fixed3(f.y_px(v));
        }
        out += "<polyline class=\"series\" data-label=\"" + xml_escape(s.label) + "\" fill=\"none\" stroke=\"" +
               xml_escape(s.color) + "\" stroke-width=\"2.000\" points=\"" + pts + "\"/>\n";
        const double ly = f.top + 10.0 + 20.0 * static_cast<double>(i);
        out += "<line x1=\"" + fixed3(f.right + 15.0) + "\" y1=\"" + fixed3(ly) + "\" x2=\"" + fixed3(f.right + 40.0) +
               "\" y2=\"" + fixed3(ly) + "\" stroke=\"" + xml_escape(s.color) + "\" stroke-width=\"2.000\"/>\n";
        out += "<text class=\"legend\" x=\"" + fixed3(f.right + 46.0) + "\" y=\"" + fixed3(ly + 4.0) +
               "\" font-size=\"12.000\">" + xml_escape(s.label) + "</text>\n";
    }
    out += "</svg>\n";
    return out;
}

/// Default palette for series without an explicit color.
inline std::string palette_color(std::size_t i)
{
    static const char* colors[] = {"#1f77b4", "#d62728", "#2ca02c", "#9467bd", "#ff7f0e", "#8c564b"};
    return colors[i % (sizeof colors / sizeof colors[0])];
}

}  // namespace distro_eval
