#pragma once

#include <span>
#include <string>
#include <vector>

#include "plabel/metrics.hpp"

namespace plabel {

struct LineSeries {
    std::string label;
    std::vector<double> x;
    std::vector<double> y;
};

/// Minimal standalone SVG line chart with markers and a legend.
std::string svg_line_plot(std::span<const LineSeries> series, const std::string& title, const std::string& x_label,
                          const std::string& y_label);

struct ScatterPoint {
    double x = 0.0;
    double y = 0.0;
    int label = 0;
};

/// Score heatmap over the grid, the 0.5 contour (marching squares) and an
/// optional labelled scatter on top.
std::string svg_boundary_plot(const BoundaryGrid& grid, std::span<const ScatterPoint> points,
                              const std::string& title);

}  // namespace plabel
