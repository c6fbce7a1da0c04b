#include "plabel/svg.hpp"

#include <algorithm>
#include <cmath>
#include <sstream>

#include "plabel/error.hpp"
#include "plabel/format.hpp"

namespace plabel {

namespace {

constexpr double kWidth = 640, kHeight = 420, kLeft = 70, kRight = 150, kTop = 40, kBottom = 55;
const char* const kPalette[] = {"#1f77b4", "#d62728", "#2ca02c", "#ff7f0e", "#9467bd", "#8c564b"};

std::string escape(const std::string& s) {
    std::string out;
    for (char c : s) {
        switch (c) {
            case '&': out += "&amp;"; break;
            case '<': out += "&lt;"; break;
            case '>': out += "&gt;"; break;
            default: out += c;
        }
    }
    return out;
}

std::string fmt(double v) {
    char buf[32];
    std::snprintf(buf, sizeof(buf), "%.2f", v);
    return buf;
}

std::string tick(double v) {
    char buf[32];
    std::snprintf(buf, sizeof(buf), "%.3g", v);
    return buf;
}

struct Frame {
    double x0, x1, y0, y1;
    double px(double x) const { return kLeft + (x - x0) / (x1 - x0) * (kWidth - kLeft - kRight); }
    double py(double y) const { return kHeight - kBottom - (y - y0) / (y1 - y0) * (kHeight - kTop - kBottom); }
};

void axes(std::ostringstream& out, const Frame& f, const std::string& title, const std::string& xl,
          const std::string& yl) {
    const double plot_w = kWidth - kLeft - kRight, plot_h = kHeight - kTop - kBottom;
    out << "<rect x=\"" << fmt(kLeft) << "\" y=\"" << fmt(kTop) << "\" width=\"" << fmt(plot_w) << "\" height=\""
        << fmt(plot_h) << "\" fill=\"none\" stroke=\"#333\"/>\n";
    for (int i = 0; i <= 4; ++i) {
        const double xv = f.x0 + (f.x1 - f.x0) * i / 4.0, yv = f.y0 + (f.y1 - f.y0) * i / 4.0;
        out << "<text x=\"" << fmt(f.px(xv)) << "\" y=\"" << fmt(kHeight - kBottom + 18)
            << "\" font-size=\"11\" text-anchor=\"middle\">" << tick(xv) << "</text>\n";
        out << "<text x=\"" << fmt(kLeft - 6) << "\" y=\"" << fmt(f.py(yv) + 4)
            << "\" font-size=\"11\" text-anchor=\"end\">" << tick(yv) << "</text>\n";
    }
    out << "<text x=\"" << fmt(kLeft + plot_w / 2) << "\" y=\"22\" font-size=\"15\" text-anchor=\"middle\">"
        << escape(title) << "</text>\n";
    out << "<text x=\"" << fmt(kLeft + plot_w / 2) << "\" y=\"" << fmt(kHeight - 12)
        << "\" font-size=\"12\" text-anchor=\"middle\">" << escape(xl) << "</text>\n";
    out << "<text transform=\"translate(16," << fmt(kTop + plot_h / 2)
        << ") rotate(-90)\" font-size=\"12\" text-anchor=\"middle\">" << escape(yl) << "</text>\n";
}

std::string header() {
    return "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"" + fmt(kWidth) + "\" height=\"" + fmt(kHeight) +
           "\" font-family=\"sans-serif\">\n<rect width=\"100%\" height=\"100%\" fill=\"white\"/>\n";
}

// blue (0) -> white (0.5) -> red (1)
std::string score_colour(double s) {
    s = std::clamp(s, 0.0, 1.0);
    int r, g, b;
    if (s < 0.5) {
        const double t = s / 0.5;
        r = static_cast<int>(std::lround(59 + t * (255 - 59)));
        g = static_cast<int>(std::lround(76 + t * (255 - 76)));
        b = static_cast<int>(std::lround(192 + t * (255 - 192)));
    } else {
        const double t = (s - 0.5) / 0.5;
        r = static_cast<int>(std::lround(255 + t * (180 - 255)));
        g = static_cast<int>(std::lround(255 + t * (4 - 255)));
        b = static_cast<int>(std::lround(255 + t * (38 - 255)));
    }
    char buf[8];
    std::snprintf(buf, sizeof(buf), "#%02x%02x%02x", r, g, b);
    return buf;
}

}  // namespace

std::string svg_line_plot(std::span<const LineSeries> series, const std::string& title, const std::string& x_label,
                          const std::string& y_label) {
    if (series.empty()) throw ArgumentError("nothing to plot");
    double x0 = INFINITY, x1 = -INFINITY, y0 = INFINITY, y1 = -INFINITY;
    for (const auto& s : series) {
        if (s.x.size() != s.y.size()) throw ArgumentError("series '" + s.label + "' has mismatched x and y");
        for (double v : s.x) x0 = std::min(x0, v), x1 = std::max(x1, v);
        for (double v : s.y) y0 = std::min(y0, v), y1 = std::max(y1, v);
    }
    if (!std::isfinite(x0) || !std::isfinite(y0)) throw ArgumentError("no finite points to plot");
    if (x1 <= x0) x0 -= 0.5, x1 += 0.5;
    const double pad = y1 > y0 ? 0.05 * (y1 - y0) : 0.5;
    Frame f{x0, x1, y0 - pad, y1 + pad};

    std::ostringstream out;
    out << header();
    axes(out, f, title, x_label, y_label);
    for (std::size_t i = 0; i < series.size(); ++i) {
        const auto& s = series[i];
        const char* colour = kPalette[i % std::size(kPalette)];
        out << "<polyline fill=\"none\" stroke=\"" << colour << "\" stroke-width=\"2\" points=\"";
        for (std::size_t j = 0; j < s.x.size(); ++j) out << (j ? " " : "") << fmt(f.px(s.x[j])) << ',' << fmt(f.py(s.y[j]));
        out << "\"/>\n";
        for (std::size_t j = 0; j < s.x.size(); ++j)
            out << "<circle cx=\"" << fmt(f.px(s.x[j])) << "\" cy=\"" << fmt(f.py(s.y[j])) << "\" r=\"3\" fill=\""
                << colour << "\"/>\n";
        const double ly = kTop + 14 + 18 * static_cast<double>(i);
        out << "<line x1=\"" << fmt(kWidth - kRight + 10) << "\" y1=\"" << fmt(ly) << "\" x2=\""
            << fmt(kWidth - kRight + 30) << "\" y2=\"" << fmt(ly) << "\" stroke=\"" << colour
            << "\" stroke-width=\"2\"/>\n";
        out << "<text x=\"" << fmt(kWidth - kRight + 35) << "\" y=\"" << fmt(ly + 4) << "\" font-size=\"11\">"
            << escape(s.label) << "</text>\n";
    }
    out << "</svg>\n";
    return out.str();
}

std::string svg_boundary_plot(const BoundaryGrid& grid, std::span<const ScatterPoint> points,
                              const std::string& title) {
    if (grid.nx < 2 || grid.ny < 2) throw ArgumentError("boundary plot needs at least a 2x2 grid");
    Frame f{grid.x.lo, grid.x.hi, grid.y.lo, grid.y.hi};
    const double cw = (kWidth - kLeft - kRight) / static_cast<double>(grid.nx - 1);
    const double ch = (kHeight - kTop - kBottom) / static_cast<double>(grid.ny - 1);

    std::ostringstream out;
    out << header();
    // one cell per interior grid square, coloured by its mean corner score
    for (std::size_t r = 0; r + 1 < grid.ny; ++r)
        for (std::size_t c = 0; c + 1 < grid.nx; ++c) {
            const double s =
                0.25 * (grid.at(r, c) + grid.at(r, c + 1) + grid.at(r + 1, c) + grid.at(r + 1, c + 1));
            out << "<rect x=\"" << fmt(f.px(grid.x_at(c))) << "\" y=\"" << fmt(f.py(grid.y_at(r + 1)))
                << "\" width=\"" << fmt(cw + 0.3) << "\" height=\"" << fmt(ch + 0.3) << "\" fill=\""
                << score_colour(s) << "\"/>\n";
        }

    // marching squares on the 0.5 level, one segment per crossed cell edge pair
    out << "<path fill=\"none\" stroke=\"black\" stroke-width=\"2\" d=\"";
    auto interp = [&](std::size_t r0, std::size_t c0, std::size_t r1, std::size_t c1) {
        const double a = grid.at(r0, c0) - 0.5, b = grid.at(r1, c1) - 0.5;
        const double t = a == b ? 0.5 : a / (a - b);
        const double x = grid.x_at(c0) + t * (grid.x_at(c1) - grid.x_at(c0));
        const double y = grid.y_at(r0) + t * (grid.y_at(r1) - grid.y_at(r0));
        return std::pair{f.px(x), f.py(y)};
    };
    for (std::size_t r = 0; r + 1 < grid.ny; ++r)
        for (std::size_t c = 0; c + 1 < grid.nx; ++c) {
            std::vector<std::pair<double, double>> hits;
            auto edge = [&](std::size_t r0, std::size_t c0, std::size_t r1, std::size_t c1) {
                if ((grid.at(r0, c0) >= 0.5) != (grid.at(r1, c1) >= 0.5)) hits.push_back(interp(r0, c0, r1, c1));
            };
            edge(r, c, r, c + 1);
            edge(r, c + 1, r + 1, c + 1);
            edge(r + 1, c + 1, r + 1, c);
            edge(r + 1, c, r, c);
            for (std::size_t h = 0; h + 1 < hits.size(); h += 2)
                out << 'M' << fmt(hits[h].first) << ',' << fmt(hits[h].second) << 'L' << fmt(hits[h + 1].first)
                    << ',' << fmt(hits[h + 1].second);
        }
    out << "\"/>\n";

    for (const auto& p : points) {
        if (p.x < grid.x.lo || p.x > grid.x.hi || p.y < grid.y.lo || p.y > grid.y.hi) continue;
        out << "<circle cx=\"" << fmt(f.px(p.x)) << "\" cy=\"" << fmt(f.py(p.y)) << "\" r=\"2.5\" fill=\""
            << (p.label == 1 ? "#b40426" : "#3b4cc0") << "\" stroke=\"white\" stroke-width=\"0.5\"/>\n";
    }
    axes(out, f, title, "x1", "x2");
    out << "</svg>\n";
    return out.str();
}

}  // namespace plabel
