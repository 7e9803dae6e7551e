#include <doctest.h>

#include <regex>
#include <set>

#include "fpgadiag/error.hpp"
#include "fpgadiag/report.hpp"
#include "fpgadiag/svg.hpp"

using namespace fpgadiag;

namespace {

const char* kSmall = R"(
[fabric]
seed = 5
[dmes]
count = 8
[sweep]
num_sweeps = 6
[condition.baseline]
type = baseline
[condition.pdn]
type = pdn
[analysis]
subset_sizes = 4, 8, 16
bootstrap_reps = 40
)";

const PipelineResult& small_run() {
    static const PipelineResult r = run_pipeline(parse_scenario(kSmall));
    return r;
}

int count_of(const std::string& text, const std::string& needle) {
    int n = 0;
    for (auto p = text.find(needle); p != std::string::npos; p = text.find(needle, p + 1)) ++n;
    return n;
}

}  // namespace

TEST_CASE("report carries the documented sections") {
    const auto j = Json::parse(small_run().report_json);
    CHECK(j.at("tool").at("name") == "fpgadiag");
    CHECK(j.at("tool").at("version") == kToolVersion);
    CHECK(j.at("seed") == 5);
    CHECK(j.at("scenario").at("fabric").at("width") == 9);
    REQUIRE(j.at("conditions").size() == 2);
    const auto& pdn = j.at("conditions")[1];
    CHECK(pdn.at("name") == "pdn");
    CHECK(pdn.at("taps").size() == 8);
    CHECK(pdn.at("taps")[0].contains("stats"));
    CHECK(pdn.at("taps")[0].contains("delta"));
    CHECK(pdn.at("correlation").contains("decay_length"));
    CHECK(pdn.at("verdict").at("mechanism") == "PdnInduced");
    CHECK(pdn.at("verdict").contains("thresholds"));
    CHECK(pdn.at("scaling").size() == 2);
    CHECK(pdn.at("skipped").size() == 1);
}

TEST_CASE("pipeline output is reproducible and survives re-analysis") {
    const auto& a = small_run();
    const auto scenario = parse_scenario(kSmall);
    CHECK(run_pipeline(scenario, 3).records_csv == a.records_csv);
    const auto again = analyze_pipeline(scenario, a.records_csv);
    CHECK(again.report_json == a.report_json);
}

TEST_CASE("re-analysis rejects foreign records") {
    const auto scenario = parse_scenario(kSmall);
    const std::string csv = std::string(kRecordCsvHeader) + "\n0,0,0,0,9,1,1000\n";
    CHECK_THROWS_AS(analyze_pipeline(scenario, csv), DiagError);
}

TEST_CASE("colour scale endpoints") {
    CHECK(correlation_color(-1.0) == "#2166ac");
    CHECK(correlation_color(0.0) == "#ffffff");
    CHECK(correlation_color(1.0) == "#b2182b");
    CHECK(correlation_color(7.0) == correlation_color(1.0));
    CHECK(correlation_color(std::nan("")) == "#dddddd");
}

TEST_CASE("1x1 heatmap") {
    HeatmapGrid g;
    g.width = g.height = 1;
    g.cells = {1.0};
    const auto svg = render_heatmap_svg(g);
    CHECK(svg.rfind("<svg", 0) == 0);
    CHECK(svg.find("</svg>") != std::string::npos);
    CHECK(count_of(svg, "data-r=") == 1);
    CHECK(svg.find("id=\"reference\"") != std::string::npos);
    CHECK(svg.find("id=\"legend\"") != std::string::npos);
}

TEST_CASE("nothing to draw") {
    HeatmapGrid g;
    g.width = 3;
    g.height = 2;
    g.cells.assign(6, std::nullopt);
    CHECK_THROWS_WITH_AS(render_heatmap_svg(g), doctest::Contains("EmptyGrid"), DiagError);
    CHECK_THROWS_WITH_AS(render_profiles_svg({}), doctest::Contains("EmptyGrid"), DiagError);
    CHECK_THROWS_WITH_AS(render_delta_chart_svg({}), doctest::Contains("EmptyGrid"), DiagError);
    CHECK_THROWS_WITH_AS(render_correlation_svg(CorrelationCurve{}), doctest::Contains("EmptyGrid"), DiagError);
}

TEST_CASE("rendered heatmap values stay on the scale") {
    const auto* pdn = small_run().analysis.find("pdn");
    REQUIRE(pdn != nullptr);
    REQUIRE(pdn->heatmap.has_value());
    const auto svg = render_heatmap_svg(*pdn->heatmap);
    const std::regex value("data-r=\"([^\"]+)\"");
    int cells = 0;
    for (auto it = std::sregex_iterator(svg.begin(), svg.end(), value); it != std::sregex_iterator(); ++it) {
        const double r = std::stod((*it)[1]);
        CHECK(r >= -1.0);
        CHECK(r <= 1.0);
        ++cells;
    }
    CHECK(cells == 8);
}

TEST_CASE("report renders every figure") {
    const auto files = render_report(Json::parse(small_run().report_json));
    std::set<std::string> names;
    for (const auto& f : files) names.insert(f.first);
    CHECK(names.count("heatmap_pdn.svg") == 1);
    CHECK(names.count("correlation_pdn.svg") == 1);
    CHECK(names.count("delta_pdn.svg") == 1);
    for (const auto& [name, svg] : files) {
        CAPTURE(name);
        CHECK(name.ends_with(".svg"));
        CHECK(svg.rfind("<svg", 0) == 0);
        CHECK(svg.find("</svg>") != std::string::npos);
    }
}
