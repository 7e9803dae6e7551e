#pragma once

#include <optional>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "fpgadiag/campaign.hpp"
#include "fpgadiag/diagnosis.hpp"
#include "fpgadiag/scenario.hpp"

namespace fpgadiag {

inline constexpr const char* kToolName = "fpgadiag";
inline constexpr const char* kToolVersion = "0.1.0";

using Json = nlohmann::ordered_json;

struct TapResult {
    ScheduleEntry key;
    std::string label;
    int region = 0;
    int branch_hops = 0;
    Coord position;  // monitor tile
    std::optional<BerProfile> profile;  // pooled over sweeps
    std::optional<DelayStats> stats;
    std::optional<DeltaStats> delta;  // against the baseline; unset for the baseline itself
    std::string error;
};

struct ConditionAnalysis {
    ConditionInfo info;
    std::vector<TapResult> taps;  // schedule order
    DelaySeries series;
    std::optional<CorrelationCurve> correlation;
    std::optional<HeatmapGrid> heatmap;
    std::vector<ScalingRow> scaling;
    std::optional<MechanismVerdict> verdict;
    // Why an optional stage above is missing, keyed by stage name.
    std::vector<std::pair<std::string, std::string>> skipped;
};

struct Analysis {
    CampaignMetadata metadata;
    PhaseGrid grid;
    int width = 0;
    int height = 0;
    std::size_t record_count = 0;
    std::vector<ConditionAnalysis> conditions;  // baseline first

    const ConditionAnalysis* find(const std::string& name) const;
};

/// Full offline analysis of a record store. The experiment supplies monitor
/// positions and tap labels; the store must carry matching metadata.
Analysis analyze_records(const Scenario& scenario, const Experiment& experiment, const RecordStore& store);

Json scenario_to_json(const Scenario& scenario);
Json report_to_json(const Scenario& scenario, const Analysis& analysis);
std::string dump_report(const Json& report);

struct PipelineResult {
    RecordStore store;
    Analysis analysis;
    std::string records_csv;
    std::string report_json;
};

/// Plan, execute and analyze. `threads` only affects wall time.
PipelineResult run_pipeline(const Scenario& scenario, unsigned threads = 1);

/// Re-analyze previously recorded measurements against their scenario.
PipelineResult analyze_pipeline(const Scenario& scenario, const std::string& records_csv);

}  // namespace fpgadiag
