#include "fpgadiag/svg.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <sstream>

#include "fpgadiag/error.hpp"

namespace fpgadiag {

namespace {

constexpr const char* kPalette[] = {"#1b9e77", "#d95f02", "#7570b3", "#e7298a",
                                    "#66a61e", "#e6ab02", "#a6761d", "#666666"};

std::string fmt(double v, int digits = 2) {
    char buf[64];
    std::snprintf(buf, sizeof buf, "%.*f", digits, v);
    std::string s = buf;
    return s == "-0.00" || s == "-0.0" || s == "-0" ? s.substr(1) : s;
}

std::string escape(const std::string& s) {
    std::string out;
    for (char c : s) {
        switch (c) {
            case '&': out += "&amp;"; break;
            case '<': out += "&lt;"; break;
            case '>': out += "&gt;"; break;
            case '"': out += "&quot;"; break;
            default: out += c;
        }
    }
    return out;
}

std::string header(int w, int h, const std::string& title) {
    std::ostringstream o;
    o << "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"" << w << "\" height=\"" << h << "\" viewBox=\"0 0 " << w
      << ' ' << h << "\" font-family=\"sans-serif\" font-size=\"11\">\n"
      << "<title>" << escape(title) << "</title>\n"
      << "<rect width=\"100%\" height=\"100%\" fill=\"white\"/>\n"
      << "<text x=\"" << w / 2 << "\" y=\"18\" text-anchor=\"middle\" font-size=\"14\">" << escape(title)
      << "</text>\n";
    return o.str();
}

struct Range {
    double lo = std::numeric_limits<double>::infinity();
    double hi = -std::numeric_limits<double>::infinity();

    void add(double v) {
        if (!std::isfinite(v)) return;
        lo = std::min(lo, v);
        hi = std::max(hi, v);
    }
    void settle() {
        if (!(lo <= hi)) lo = 0.0, hi = 1.0;
        if (hi - lo < 1e-12) lo -= 0.5, hi += 0.5;
    }
};

// Plot area with linear axes and tick labels.
struct Axes {
    double left = 60, top = 32, width = 440, height = 260;
    Range x, y;

    double px(double v) const { return left + (v - x.lo) / (x.hi - x.lo) * width; }
    double py(double v) const { return top + height - (v - y.lo) / (y.hi - y.lo) * height; }

    std::string draw(const std::string& xlabel, const std::string& ylabel) const {
        std::ostringstream o;
        o << "<rect x=\"" << left << "\" y=\"" << top << "\" width=\"" << width << "\" height=\"" << height
          << "\" fill=\"none\" stroke=\"#333\"/>\n";
        for (int k = 0; k <= 4; ++k) {
            const double xv = x.lo + (x.hi - x.lo) * k / 4.0;
            const double yv = y.lo + (y.hi - y.lo) * k / 4.0;
            o << "<text x=\"" << fmt(px(xv), 1) << "\" y=\"" << fmt(top + height + 14, 1)
              << "\" text-anchor=\"middle\">" << fmt(xv, std::abs(x.hi - x.lo) < 10 ? 2 : 0) << "</text>\n";
            o << "<text x=\"" << fmt(left - 6, 1) << "\" y=\"" << fmt(py(yv) + 4, 1) << "\" text-anchor=\"end\">"
              << fmt(yv, 2) << "</text>\n";
        }
        o << "<text x=\"" << fmt(left + width / 2, 1) << "\" y=\"" << fmt(top + height + 32, 1)
          << "\" text-anchor=\"middle\">" << escape(xlabel) << "</text>\n";
        o << "<text transform=\"translate(14," << fmt(top + height / 2, 1)
          << ") rotate(-90)\" text-anchor=\"middle\">" << escape(ylabel) << "</text>\n";
        return o.str();
    }
};

std::string legend_entry(double x, double y, const std::string& color, const std::string& label, bool dashed,
                         bool marker = false) {
    std::ostringstream o;
    if (marker)
        o << "<circle cx=\"" << fmt(x + 9, 1) << "\" cy=\"" << fmt(y - 4, 1) << "\" r=\"3\" fill=\"" << color
          << "\"/>\n";
    else
        o << "<line x1=\"" << fmt(x, 1) << "\" y1=\"" << fmt(y - 4, 1) << "\" x2=\"" << fmt(x + 18, 1) << "\" y2=\""
          << fmt(y - 4, 1) << "\" stroke=\"" << color << "\" stroke-width=\"2\""
          << (dashed ? " stroke-dasharray=\"5,3\"" : "") << "/>\n";
    o << "<text x=\"" << fmt(x + 24, 1) << "\" y=\"" << fmt(y, 1) << "\">" << escape(label) << "</text>\n";
    return o.str();
}

std::string line_chart(const std::vector<PlotSeries>& series, const std::string& title, const std::string& xlabel,
                       const std::string& ylabel, std::optional<Range> fixed_y) {
    Axes ax;
    std::size_t points = 0;
    for (const auto& s : series) {
        for (double v : s.x) ax.x.add(v);
        for (double v : s.y) ax.y.add(v);
        points += std::min(s.x.size(), s.y.size());
    }
    if (points == 0) throw DiagError(ErrorCode::EmptyGrid, "nothing to plot in '" + title + "'");
    ax.x.settle();
    if (fixed_y) ax.y = *fixed_y;
    ax.y.settle();

    const int legend_rows = static_cast<int>(series.size());
    const int w = 700;
    const int h = std::max(340, 50 + legend_rows * 16);
    std::ostringstream o;
    o << header(w, h, title) << ax.draw(xlabel, ylabel);
    for (std::size_t i = 0; i < series.size(); ++i) {
        const auto& s = series[i];
        const char* color = kPalette[(s.color >= 0 ? static_cast<std::size_t>(s.color) : i) % std::size(kPalette)];
        o << "<polyline fill=\"none\" stroke=\"" << color << "\" stroke-width=\"1.5\""
          << (s.dashed ? " stroke-dasharray=\"5,3\"" : "") << " points=\"";
        for (std::size_t k = 0; k < std::min(s.x.size(), s.y.size()); ++k) {
            if (!std::isfinite(s.x[k]) || !std::isfinite(s.y[k])) continue;
            o << fmt(ax.px(s.x[k]), 1) << ',' << fmt(ax.py(s.y[k]), 1) << ' ';
        }
        o << "\"/>\n";
        o << legend_entry(ax.left + ax.width + 20, ax.top + 10 + 16 * static_cast<double>(i), color, s.name, s.dashed);
    }
    o << "</svg>\n";
    return o.str();
}

std::string file_stem(const std::string& name) {
    std::string out;
    for (char c : name) out += (std::isalnum(static_cast<unsigned char>(c)) || c == '-' || c == '_') ? c : '_';
    return out;
}

double json_number(const Json& j) {
    return j.is_number() ? j.get<double>() : std::numeric_limits<double>::quiet_NaN();
}

}  // namespace

std::string correlation_color(double r) {
    if (!std::isfinite(r)) return "#dddddd";
    r = std::clamp(r, -1.0, 1.0);
    // -1 -> (33,102,172), 0 -> white, +1 -> (178,24,43)
    const double t = std::abs(r);
    const int end[3] = {r < 0 ? 33 : 178, r < 0 ? 102 : 24, r < 0 ? 172 : 43};
    char buf[8];
    int c[3];
    for (int k = 0; k < 3; ++k) c[k] = static_cast<int>(std::lround(255.0 + (end[k] - 255.0) * t));
    std::snprintf(buf, sizeof buf, "#%02x%02x%02x", c[0], c[1], c[2]);
    return buf;
}

std::string render_heatmap_svg(const HeatmapGrid& grid, const std::string& title) {
    const bool any = std::any_of(grid.cells.begin(), grid.cells.end(), [](const auto& c) { return c.has_value(); });
    if (grid.width < 1 || grid.height < 1 || !any)
        throw DiagError(ErrorCode::EmptyGrid, "heatmap has no instrumented cells");

    const double cell = std::clamp(360.0 / std::max(grid.width, grid.height), 12.0, 60.0);
    const double left = 40, top = 34;
    const double gw = cell * grid.width, gh = cell * grid.height;
    const int w = static_cast<int>(left + gw + 140);
    const int h = static_cast<int>(std::max(top + gh + 40, 260.0));

    std::ostringstream o;
    o << header(w, h, title);
    o << "<defs><linearGradient id=\"rscale\" x1=\"0\" y1=\"1\" x2=\"0\" y2=\"0\">"
      << "<stop offset=\"0\" stop-color=\"" << correlation_color(-1) << "\"/>"
      << "<stop offset=\"0.5\" stop-color=\"" << correlation_color(0) << "\"/>"
      << "<stop offset=\"1\" stop-color=\"" << correlation_color(1) << "\"/>"
      << "</linearGradient></defs>\n";

    // Row 0 at the top, matching tile coordinates.
    for (int r = 0; r < grid.height; ++r)
        for (int c = 0; c < grid.width; ++c) {
            const auto v = grid.at({c, r});
            const double x = left + c * cell, y = top + r * cell;
            o << "<rect x=\"" << fmt(x, 1) << "\" y=\"" << fmt(y, 1) << "\" width=\"" << fmt(cell, 1)
              << "\" height=\"" << fmt(cell, 1) << "\" fill=\"" << (v ? correlation_color(*v) : "#eeeeee")
              << "\" stroke=\"#ffffff\" stroke-width=\"0.5\"";
            if (v) o << " data-r=\"" << fmt(std::clamp(*v, -1.0, 1.0), 4) << "\"";
            o << "/>\n";
            if (v && cell >= 28)
                o << "<text x=\"" << fmt(x + cell / 2, 1) << "\" y=\"" << fmt(y + cell / 2 + 4, 1)
                  << "\" text-anchor=\"middle\" font-size=\"9\">" << fmt(*v, 2) << "</text>\n";
        }
    const double rx = left + grid.reference.col * cell, ry = top + grid.reference.row * cell;
    o << "<rect id=\"reference\" x=\"" << fmt(rx + 1.5, 1) << "\" y=\"" << fmt(ry + 1.5, 1) << "\" width=\""
      << fmt(cell - 3, 1) << "\" height=\"" << fmt(cell - 3, 1)
      << "\" fill=\"none\" stroke=\"black\" stroke-width=\"3\"/>\n";
    for (int c = 0; c < grid.width; ++c)
        o << "<text x=\"" << fmt(left + (c + 0.5) * cell, 1) << "\" y=\"" << fmt(top + gh + 14, 1)
          << "\" text-anchor=\"middle\" font-size=\"9\">" << c << "</text>\n";
    for (int r = 0; r < grid.height; ++r)
        o << "<text x=\"" << fmt(left - 6, 1) << "\" y=\"" << fmt(top + (r + 0.5) * cell + 3, 1)
          << "\" text-anchor=\"end\" font-size=\"9\">" << r << "</text>\n";

    const double lx = left + gw + 24, ly = top, lh = 160;
    o << "<g id=\"legend\">\n"
      << "<rect x=\"" << fmt(lx, 1) << "\" y=\"" << fmt(ly, 1) << "\" width=\"14\" height=\"" << lh
      << "\" fill=\"url(#rscale)\" stroke=\"#333\"/>\n";
    for (double t : {1.0, 0.5, 0.0, -0.5, -1.0})
        o << "<text x=\"" << fmt(lx + 20, 1) << "\" y=\"" << fmt(ly + (1.0 - t) / 2.0 * lh + 4, 1) << "\">"
          << fmt(t, 1) << "</text>\n";
    o << "<text x=\"" << fmt(lx, 1) << "\" y=\"" << fmt(ly + lh + 18, 1) << "\">Pearson r</text>\n"
      << "<rect x=\"" << fmt(lx, 1) << "\" y=\"" << fmt(ly + lh + 28, 1)
      << "\" width=\"14\" height=\"14\" fill=\"none\" stroke=\"black\" stroke-width=\"3\"/>\n"
      << "<text x=\"" << fmt(lx + 20, 1) << "\" y=\"" << fmt(ly + lh + 39, 1) << "\">reference DME "
      << grid.reference_dme << "</text>\n"
      << "</g>\n</svg>\n";
    return o.str();
}

std::string render_profiles_svg(const std::vector<PlotSeries>& profiles, const std::string& title) {
    return line_chart(profiles, title, "sample phase (ps)", "BER", Range{0.0, 1.0});
}

std::string render_cdf_svg(const std::vector<PlotSeries>& cdfs, const std::string& title) {
    return line_chart(cdfs, title, "transition time (ps)", "F(t) = 1 - BER", Range{0.0, 1.0});
}

std::string render_delta_chart_svg(const std::vector<DeltaBar>& bars, const std::string& title) {
    if (bars.empty()) throw DiagError(ErrorCode::EmptyGrid, "no deltas to chart");
    Axes ax;
    ax.width = std::max(300.0, 22.0 * static_cast<double>(bars.size()));
    ax.x = {0.0, static_cast<double>(bars.size())};
    ax.y.add(0.0);
    for (const auto& b : bars) {
        ax.y.add(b.delta_mu_steps);
        ax.y.add(b.delta_sigma_steps);
    }
    ax.y.settle();
    const int w = static_cast<int>(ax.left + ax.width + 160);
    std::ostringstream o;
    o << header(w, 360, title);
    o << "<rect x=\"" << ax.left << "\" y=\"" << ax.top << "\" width=\"" << fmt(ax.width, 1) << "\" height=\""
      << ax.height << "\" fill=\"none\" stroke=\"#333\"/>\n";
    for (int k = 0; k <= 4; ++k) {
        const double yv = ax.y.lo + (ax.y.hi - ax.y.lo) * k / 4.0;
        o << "<text x=\"" << fmt(ax.left - 6, 1) << "\" y=\"" << fmt(ax.py(yv) + 4, 1) << "\" text-anchor=\"end\">"
          << fmt(yv, 2) << "</text>\n";
    }
    o << "<line x1=\"" << ax.left << "\" y1=\"" << fmt(ax.py(0), 1) << "\" x2=\"" << fmt(ax.left + ax.width, 1)
      << "\" y2=\"" << fmt(ax.py(0), 1) << "\" stroke=\"#333\"/>\n";
    const double slot = ax.width / static_cast<double>(bars.size());
    for (std::size_t i = 0; i < bars.size(); ++i) {
        const double x0 = ax.left + slot * static_cast<double>(i);
        const double bw = slot * 0.38;
        auto bar = [&](double x, double v, const char* color) {
            const double y0 = ax.py(std::max(v, 0.0)), y1 = ax.py(std::min(v, 0.0));
            o << "<rect x=\"" << fmt(x, 1) << "\" y=\"" << fmt(y0, 1) << "\" width=\"" << fmt(bw, 1)
              << "\" height=\"" << fmt(std::max(y1 - y0, 0.5), 1) << "\" fill=\"" << color << "\"/>\n";
        };
        bar(x0 + slot * 0.1, bars[i].delta_mu_steps, kPalette[0]);
        bar(x0 + slot * 0.1 + bw, bars[i].delta_sigma_steps, kPalette[1]);
        o << "<text transform=\"translate(" << fmt(x0 + slot / 2 + 3, 1) << ',' << fmt(ax.top + ax.height + 8, 1)
          << ") rotate(60)\" font-size=\"9\">" << escape(bars[i].label) << "</text>\n";
    }
    o << "<text transform=\"translate(14," << fmt(ax.top + ax.height / 2, 1)
      << ") rotate(-90)\" text-anchor=\"middle\">phase steps</text>\n";
    const double lx = ax.left + ax.width + 20;
    o << "<g id=\"legend\">\n"
      << "<rect x=\"" << fmt(lx, 1) << "\" y=\"" << fmt(ax.top + 2, 1) << "\" width=\"12\" height=\"10\" fill=\""
      << kPalette[0] << "\"/><text x=\"" << fmt(lx + 18, 1) << "\" y=\"" << fmt(ax.top + 11, 1)
      << "\">delta mu</text>\n"
      << "<rect x=\"" << fmt(lx, 1) << "\" y=\"" << fmt(ax.top + 20, 1) << "\" width=\"12\" height=\"10\" fill=\""
      << kPalette[1] << "\"/><text x=\"" << fmt(lx + 18, 1) << "\" y=\"" << fmt(ax.top + 29, 1)
      << "\">delta sigma</text>\n</g>\n</svg>\n";
    return o.str();
}

std::string render_correlation_svg(const CorrelationCurve& curve, const std::string& title) {
    if (curve.pairs.empty()) throw DiagError(ErrorCode::EmptyGrid, "correlation curve has no pairs");
    Axes ax;
    ax.x.add(0.0);
    for (const auto& p : curve.pairs) ax.x.add(p.distance);
    ax.x.settle();
    ax.y = {-1.0, 1.0};
    const int w = 720;
    std::ostringstream o;
    o << header(w, 340, title) << ax.draw("distance (CLB)", "Pearson r");
    o << "<line x1=\"" << ax.left << "\" y1=\"" << fmt(ax.py(0), 1) << "\" x2=\"" << fmt(ax.left + ax.width, 1)
      << "\" y2=\"" << fmt(ax.py(0), 1) << "\" stroke=\"#bbb\" stroke-dasharray=\"2,2\"/>\n";
    for (const auto& p : curve.pairs)
        o << "<circle cx=\"" << fmt(ax.px(p.distance), 1) << "\" cy=\"" << fmt(ax.py(std::clamp(p.r, -1.0, 1.0)), 1)
          << "\" r=\"2\" fill=\"" << kPalette[7] << "\" fill-opacity=\"0.5\"/>\n";
    o << "<polyline fill=\"none\" stroke=\"" << kPalette[1] << "\" stroke-width=\"2\" points=\"";
    for (const auto& b : curve.bins)
        o << fmt(ax.px(b.mean_distance), 1) << ',' << fmt(ax.py(std::clamp(b.mean_r, -1.0, 1.0)), 1) << ' ';
    o << "\"/>\n";
    const bool fitted = std::isfinite(curve.decay_length) || std::isinf(curve.decay_length);
    if (fitted) {
        o << "<polyline fill=\"none\" stroke=\"" << kPalette[2] << "\" stroke-width=\"1.5\" stroke-dasharray=\"5,3\" points=\"";
        for (int k = 0; k <= 60; ++k) {
            const double d = ax.x.lo + (ax.x.hi - ax.x.lo) * k / 60.0;
            const double r = std::isinf(curve.decay_length) ? 1.0 : std::exp(-d / curve.decay_length);
            o << fmt(ax.px(d), 1) << ',' << fmt(ax.py(r), 1) << ' ';
        }
        o << "\"/>\n";
    }
    const double lx = ax.left + ax.width + 20;
    o << "<g id=\"legend\">\n"
      << legend_entry(lx, ax.top + 10, kPalette[7], "monitor pair", false, true)
      << legend_entry(lx, ax.top + 26, kPalette[1], "binned mean", false);
    if (fitted)
        o << legend_entry(lx, ax.top + 42, kPalette[2],
                          "exp fit, l = " + (std::isinf(curve.decay_length) ? std::string("inf")
                                                                             : fmt(curve.decay_length, 2)),
                          true);
    o << "</g>\n</svg>\n";
    return o.str();
}

std::vector<std::pair<std::string, std::string>> render_report(const Json& report) {
    std::vector<std::pair<std::string, std::string>> out;
    const auto& campaign = report.at("campaign");
    const double start = campaign.at("phase_start").get<double>();
    const double step = campaign.at("phase_step").get<double>();
    const auto& monitors = report.at("monitors");
    const auto& conditions = report.at("conditions");
    if (conditions.empty()) throw DiagError(ErrorCode::EmptyGrid, "report has no conditions");

    // Profiles and CDFs show the first region only, to stay legible.
    std::vector<std::size_t> shown;
    for (std::size_t i = 0; i < monitors.size() && shown.size() < std::size(kPalette); ++i)
        if (monitors[i].at("region").get<int>() == monitors[0].at("region").get<int>()) shown.push_back(i);
    auto tap_name = [&](std::size_t i) {
        return "DME " + std::to_string(monitors[i].at("dme_id").get<int>()) + " " +
               monitors[i].at("label").get<std::string>();
    };
    auto profile_series = [&](const Json& cond, std::size_t i, bool cdf, bool dashed) -> std::optional<PlotSeries> {
        const auto& p = cond.at("taps")[i].at("profile");
        if (p.is_null()) return std::nullopt;
        PlotSeries s;
        s.name = tap_name(i) + (dashed ? " (" + cond.at("name").get<std::string>() + ")" : "");
        s.dashed = dashed;
        const int first = p.at("first_phase_index").get<int>();
        int k = 0;
        for (const auto& b : p.at("ber")) {
            s.x.push_back(start + (first + k++) * step);
            const double v = json_number(b);
            s.y.push_back(cdf ? 1.0 - v : v);
        }
        return s;
    };

    const auto& base = conditions[0];
    for (const auto& cond : conditions) {
        const std::string name = cond.at("name").get<std::string>();
        const std::string stem = file_stem(name);
        const bool is_base = &cond == &base;

        std::vector<PlotSeries> profiles;
        for (std::size_t i : shown)
            if (auto s = profile_series(cond, i, false, false)) profiles.push_back(std::move(*s));
        if (!profiles.empty())
            out.emplace_back("profiles_" + stem + ".svg", render_profiles_svg(profiles, "BER profiles: " + name));

        if (!is_base) {
            std::vector<PlotSeries> cdfs;
            for (std::size_t i : shown) {
                auto b = profile_series(base, i, true, false);
                auto s = profile_series(cond, i, true, true);
                if (b && s) {
                    b->color = s->color = static_cast<int>(cdfs.size() / 2);
                    cdfs.push_back(std::move(*b));
                    cdfs.push_back(std::move(*s));
                }
            }
            if (!cdfs.empty())
                out.emplace_back("cdf_" + stem + ".svg", render_cdf_svg(cdfs, "CDF, baseline vs " + name));

            std::vector<DeltaBar> bars;
            for (std::size_t i = 0; i < monitors.size(); ++i) {
                const auto& d = cond.at("taps")[i].at("delta");
                if (d.is_null()) continue;
                bars.push_back({tap_name(i), json_number(d.at("delta_mu_steps")), json_number(d.at("delta_sigma_steps"))});
            }
            if (!bars.empty())
                out.emplace_back("delta_" + stem + ".svg", render_delta_chart_svg(bars, "Delta mu / delta sigma: " + name));
        }

        if (const auto& c = cond.at("correlation"); !c.is_null()) {
            CorrelationCurve curve;
            curve.decay_length = c.at("decay_length_infinite").get<bool>()
                                     ? std::numeric_limits<double>::infinity()
                                     : json_number(c.at("decay_length"));
            for (const auto& p : c.at("pairs"))
                curve.pairs.push_back({p.at("a").get<std::size_t>(), p.at("b").get<std::size_t>(),
                                       json_number(p.at("distance")), json_number(p.at("normalized_distance")),
                                       json_number(p.at("r")), p.at("n_sweeps").get<int>()});
            for (const auto& b : c.at("bins"))
                curve.bins.push_back({json_number(b.at("lo")), json_number(b.at("hi")), json_number(b.at("mean_distance")),
                                      json_number(b.at("mean_r")), b.at("count").get<int>()});
            out.emplace_back("correlation_" + stem + ".svg", render_correlation_svg(curve, "Spatial correlation: " + name));
        }

        if (const auto& hm = cond.at("heatmap"); !hm.is_null()) {
            HeatmapGrid g;
            g.width = hm.at("width").get<int>();
            g.height = hm.at("height").get<int>();
            g.reference_dme = hm.at("reference_dme").get<int>();
            g.reference = {hm.at("reference").at("col").get<int>(), hm.at("reference").at("row").get<int>()};
            for (const auto& row : hm.at("cells"))
                for (const auto& v : row)
                    g.cells.push_back(v.is_null() ? std::nullopt : std::optional<double>(v.get<double>()));
            out.emplace_back("heatmap_" + stem + ".svg", render_heatmap_svg(g, "Correlation heatmap: " + name));
        }
    }
    return out;
}

}  // namespace fpgadiag
