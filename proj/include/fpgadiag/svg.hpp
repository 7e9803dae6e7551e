#pragma once

#include <string>
#include <utility>
#include <vector>

#include "fpgadiag/diagnosis.hpp"
#include "fpgadiag/report.hpp"

namespace fpgadiag {

struct PlotSeries {
    std::string name;
    std::vector<double> x;
    std::vector<double> y;
    bool dashed = false;
    int color = -1;  // palette slot; -1 uses the series index
};

struct DeltaBar {
    std::string label;
    double delta_mu_steps = 0.0;
    double delta_sigma_steps = 0.0;
};

// Diverging blue-white-red colour for r, clamped to [-1, 1].
std::string correlation_color(double r);

/// All renderers return a standalone SVG document and throw EmptyGrid when
/// there is nothing to draw.
std::string render_heatmap_svg(const HeatmapGrid& grid, const std::string& title = "Correlation heatmap");
std::string render_profiles_svg(const std::vector<PlotSeries>& profiles, const std::string& title = "BER profiles");
std::string render_cdf_svg(const std::vector<PlotSeries>& cdfs, const std::string& title = "Transition-time CDF");
std::string render_delta_chart_svg(const std::vector<DeltaBar>& bars, const std::string& title = "Delay shift and spread");
std::string render_correlation_svg(const CorrelationCurve& curve, const std::string& title = "Spatial correlation");

/// Every figure derivable from a report document, as (file name, SVG).
std::vector<std::pair<std::string, std::string>> render_report(const Json& report);

}  // namespace fpgadiag
