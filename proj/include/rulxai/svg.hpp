#pragma once

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <string>
#include <vector>

namespace rulxai {

// Minimal deterministic SVG emitter for the report figures. Coordinates
// are printed with fixed precision so identical inputs give identical
// bytes.
namespace svg {

inline std::string esc(const std::string& s) {
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

inline std::string num(double v) {
    char buf[48];
    std::snprintf(buf, sizeof(buf), "%.3f", v);
    return buf;
}

inline std::string label_num(double v) {
    char buf[48];
    std::snprintf(buf, sizeof(buf), "%.4g", v);
    return buf;
}

struct Canvas {
    double width = 720, height = 440;
    double ml = 90, mr = 30, mt = 46, mb = 52;
    std::string body;

    double plot_w() const { return width - ml - mr; }
    double plot_h() const { return height - mt - mb; }

    void text(double x, double y, const std::string& s, const std::string& attrs = "") {
        body += "<text x=\"" + num(x) + "\" y=\"" + num(y) + "\" " + attrs + ">" + esc(s) + "</text>\n";
    }
    void line(double x1, double y1, double x2, double y2, const std::string& stroke) {
        body += "<line x1=\"" + num(x1) + "\" y1=\"" + num(y1) + "\" x2=\"" + num(x2) + "\" y2=\"" + num(y2) +
                "\" stroke=\"" + stroke + "\"/>\n";
    }
    void rect(double x, double y, double w, double h, const std::string& fill) {
        body += "<rect x=\"" + num(x) + "\" y=\"" + num(y) + "\" width=\"" + num(w) + "\" height=\"" + num(h) +
                "\" fill=\"" + fill + "\"/>\n";
    }
    void circle(double x, double y, double r, const std::string& fill) {
        body += "<circle cx=\"" + num(x) + "\" cy=\"" + num(y) + "\" r=\"" + num(r) + "\" fill=\"" + fill + "\"/>\n";
    }

    std::string finish(const std::string& title) const {
        std::string out = "<?xml version=\"1.0\" encoding=\"UTF-8\"?>\n";
        out += "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"" + num(width) + "\" height=\"" + num(height) +
               "\" font-family=\"sans-serif\" font-size=\"12\">\n";
        out += "<rect x=\"0\" y=\"0\" width=\"" + num(width) + "\" height=\"" + num(height) + "\" fill=\"white\"/>\n";
        out += "<text x=\"" + num(width / 2) + "\" y=\"24\" text-anchor=\"middle\" font-size=\"15\">" + esc(title) +
               "</text>\n";
        out += body;
        out += "</svg>\n";
        return out;
    }
};

inline const char* palette(std::size_t k) {
    static const char* colors[] = {"#1f77b4", "#d62728", "#2ca02c", "#ff7f0e", "#9467bd", "#8c564b"};
    return colors[k % 6];
}

// Horizontal bar chart; handles negative values around a zero line.
inline std::string bar_chart(const std::string& title, const std::vector<std::string>& labels,
                             const std::vector<double>& values) {
    Canvas c;
    c.height = std::max(200.0, c.mt + c.mb + 24.0 * static_cast<double>(labels.size()));
    double lo = 0.0, hi = 0.0;
    for (double v : values) {
        lo = std::min(lo, v);
        hi = std::max(hi, v);
    }
    if (hi == lo) hi = lo + 1.0;
    const double scale = c.plot_w() / (hi - lo);
    const double x0 = c.ml + (0.0 - lo) * scale;
    const double row_h = c.plot_h() / static_cast<double>(labels.size());

    c.line(x0, c.mt, x0, c.mt + c.plot_h(), "#888888");
    for (std::size_t i = 0; i < labels.size(); ++i) {
        const double y = c.mt + row_h * static_cast<double>(i) + row_h * 0.15;
        const double v = values[i];
        const double x = c.ml + (std::min(v, 0.0) - lo) * scale;
        const double w = std::abs(v) * scale;
        c.rect(x, y, w, row_h * 0.7, v >= 0 ? "#1f77b4" : "#d62728");
        c.text(c.ml - 6, y + row_h * 0.55, labels[i], "text-anchor=\"end\"");
        c.text(std::max(x + w + 4, x0 + 4), y + row_h * 0.55, label_num(v), "font-size=\"10\"");
    }
    c.text(c.ml, c.height - 14, label_num(lo), "font-size=\"10\"");
    c.text(c.ml + c.plot_w(), c.height - 14, label_num(hi), "font-size=\"10\" text-anchor=\"end\"");
    return c.finish(title);
}

struct Series {
    std::string name;
    std::vector<double> x, y;
};

inline std::string line_chart(const std::string& title, const std::vector<Series>& series,
                              const std::string& xlabel = "", const std::string& ylabel = "") {
    Canvas c;
    double xlo = 0, xhi = 1, ylo = 0, yhi = 1;
    bool first = true;
    for (const auto& s : series)
        for (std::size_t i = 0; i < s.x.size(); ++i) {
            if (first) {
                xlo = xhi = s.x[i];
                ylo = yhi = s.y[i];
                first = false;
            }
            xlo = std::min(xlo, s.x[i]);
            xhi = std::max(xhi, s.x[i]);
            ylo = std::min(ylo, s.y[i]);
            yhi = std::max(yhi, s.y[i]);
        }
    if (xhi == xlo) xhi = xlo + 1;
    if (yhi == ylo) yhi = ylo + 1;
    auto px = [&](double x) { return c.ml + (x - xlo) / (xhi - xlo) * c.plot_w(); };
    auto py = [&](double y) { return c.mt + c.plot_h() - (y - ylo) / (yhi - ylo) * c.plot_h(); };

    c.line(c.ml, c.mt + c.plot_h(), c.ml + c.plot_w(), c.mt + c.plot_h(), "#333333");
    c.line(c.ml, c.mt, c.ml, c.mt + c.plot_h(), "#333333");
    for (std::size_t k = 0; k < series.size(); ++k) {
        const auto& s = series[k];
        std::string pts;
        for (std::size_t i = 0; i < s.x.size(); ++i)
            pts += num(px(s.x[i])) + "," + num(py(s.y[i])) + " ";
        c.body += "<polyline fill=\"none\" stroke=\"" + std::string(palette(k)) + "\" stroke-width=\"1.5\" points=\"" +
                  pts + "\"/>\n";
        c.text(c.ml + c.plot_w() - 6, c.mt + 16 + 16 * static_cast<double>(k), s.name,
               "text-anchor=\"end\" fill=\"" + std::string(palette(k)) + "\"");
    }
    c.text(c.ml, c.mt + c.plot_h() + 18, label_num(xlo), "font-size=\"10\"");
    c.text(c.ml + c.plot_w(), c.mt + c.plot_h() + 18, label_num(xhi), "font-size=\"10\" text-anchor=\"end\"");
    c.text(c.ml - 6, c.mt + c.plot_h(), label_num(ylo), "font-size=\"10\" text-anchor=\"end\"");
    c.text(c.ml - 6, c.mt + 10, label_num(yhi), "font-size=\"10\" text-anchor=\"end\"");
    if (!xlabel.empty()) c.text(c.ml + c.plot_w() / 2, c.height - 14, xlabel, "text-anchor=\"middle\"");
    if (!ylabel.empty())
        c.text(16, c.mt + c.plot_h() / 2, ylabel,
               "text-anchor=\"middle\" transform=\"rotate(-90 16 " + num(c.mt + c.plot_h() / 2) + ")\"");
    return c.finish(title);
}

inline std::string scatter(const std::string& title, const std::vector<Series>& series,
                           const std::string& xlabel = "", const std::string& ylabel = "") {
    Canvas c;
    double xlo = 0, xhi = 1, ylo = 0, yhi = 1;
    bool first = true;
    for (const auto& s : series)
        for (std::size_t i = 0; i < s.x.size(); ++i) {
            if (first) {
                xlo = xhi = s.x[i];
                ylo = yhi = s.y[i];
                first = false;
            }
            xlo = std::min(xlo, s.x[i]);
            xhi = std::max(xhi, s.x[i]);
            ylo = std::min(ylo, s.y[i]);
            yhi = std::max(yhi, s.y[i]);
        }
    if (xhi == xlo) xhi = xlo + 1;
    if (yhi == ylo) yhi = ylo + 1;
    auto px = [&](double x) { return c.ml + (x - xlo) / (xhi - xlo) * c.plot_w(); };
    auto py = [&](double y) { return c.mt + c.plot_h() - (y - ylo) / (yhi - ylo) * c.plot_h(); };
    c.line(c.ml, c.mt + c.plot_h(), c.ml + c.plot_w(), c.mt + c.plot_h(), "#333333");
    c.line(c.ml, c.mt, c.ml, c.mt + c.plot_h(), "#333333");
    if (ylo < 0.0 && yhi > 0.0) c.line(c.ml, py(0.0), c.ml + c.plot_w(), py(0.0), "#bbbbbb");
    for (std::size_t k = 0; k < series.size(); ++k) {
        for (std::size_t i = 0; i < series[k].x.size(); ++i)
            c.circle(px(series[k].x[i]), py(series[k].y[i]), 2.2, palette(k));
        c.text(c.ml + c.plot_w() - 6, c.mt + 16 + 16 * static_cast<double>(k), series[k].name,
               "text-anchor=\"end\" fill=\"" + std::string(palette(k)) + "\"");
    }
    c.text(c.ml, c.mt + c.plot_h() + 18, label_num(xlo), "font-size=\"10\"");
    c.text(c.ml + c.plot_w(), c.mt + c.plot_h() + 18, label_num(xhi), "font-size=\"10\" text-anchor=\"end\"");
    c.text(c.ml - 6, c.mt + c.plot_h(), label_num(ylo), "font-size=\"10\" text-anchor=\"end\"");
    c.text(c.ml - 6, c.mt + 10, label_num(yhi), "font-size=\"10\" text-anchor=\"end\"");
    if (!xlabel.empty()) c.text(c.ml + c.plot_w() / 2, c.height - 14, xlabel, "text-anchor=\"middle\"");
    if (!ylabel.empty())
        c.text(16, c.mt + c.plot_h() / 2, ylabel,
               "text-anchor=\"middle\" transform=\"rotate(-90 16 " + num(c.mt + c.plot_h() / 2) + ")\"");
    return c.finish(title);
}

// One polyline per row over vertical feature axes, each axis scaled to its
// own range.
inline std::string parallel_coordinates(const std::string& title, const std::vector<std::string>& axes,
                                        const std::vector<std::vector<double>>& rows) {
    Canvas c;
    const std::size_t m = axes.size();
    std::vector<double> lo(m, 0.0), hi(m, 1.0);
    for (std::size_t j = 0; j < m; ++j) {
        bool first = true;
        for (const auto& r : rows) {
            if (first) {
                lo[j] = hi[j] = r[j];
                first = false;
            }
            lo[j] = std::min(lo[j], r[j]);
            hi[j] = std::max(hi[j], r[j]);
        }
        if (hi[j] == lo[j]) hi[j] = lo[j] + 1.0;
    }
    auto ax = [&](std::size_t j) {
        return c.ml + (m > 1 ? c.plot_w() * static_cast<double>(j) / static_cast<double>(m - 1) : c.plot_w() / 2);
    };
    for (std::size_t j = 0; j < m; ++j) {
        c.line(ax(j), c.mt, ax(j), c.mt + c.plot_h(), "#999999");
        c.text(ax(j), c.mt + c.plot_h() + 16, axes[j],
               "text-anchor=\"middle\" font-size=\"10\" transform=\"rotate(30 " + num(ax(j)) + " " +
                   num(c.mt + c.plot_h() + 16) + ")\"");
    }
    for (std::size_t r = 0; r < rows.size(); ++r) {
        std::string pts;
        for (std::size_t j = 0; j < m; ++j) {
            const double y = c.mt + c.plot_h() - (rows[r][j] - lo[j]) / (hi[j] - lo[j]) * c.plot_h();
            pts += num(ax(j)) + "," + num(y) + " ";
        }
        c.body += "<polyline fill=\"none\" stroke=\"" + std::string(palette(r)) +
                  "\" stroke-opacity=\"0.65\" points=\"" + pts + "\"/>\n";
    }
    return c.finish(title);
}

} // namespace svg
} // namespace rulxai
