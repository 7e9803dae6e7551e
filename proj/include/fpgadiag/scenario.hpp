#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "fpgadiag/campaign.hpp"
#include "fpgadiag/degradation.hpp"
#include "fpgadiag/diagnosis.hpp"
#include "fpgadiag/fabric.hpp"
#include "fpgadiag/sensing.hpp"

namespace fpgadiag {

struct FabricSection {
    int width = 9;
    int height = 8;
    std::uint64_t seed = 1;
    FabricParams params;
};

struct ExplicitPath {
    std::string name;
    Coord source;
    Coord dest;
};

struct ExplicitTap {
    std::string label;
    std::string path;
    int node_index = 0;  // index into the path's switch-matrix nodes
    int dme_id = 0;
};

enum class TapPlacement { Auto, Explicit };

struct TapsSection {
    TapPlacement placement = TapPlacement::Auto;
    int per_region = 8;
    std::vector<ExplicitPath> paths;
    std::vector<ExplicitTap> taps;
};

struct DmesSection {
    int count = 32;
    std::vector<std::pair<int, Coord>> explicit_positions;  // used with explicit taps
};

struct SweepSection {
    PhaseSweepConfig config;
    bool auto_range = true;
};

struct ConditionSpec {
    std::string name;
    ConditionKind kind = ConditionKind::Baseline;
    PdnStressConfig pdn;
    UpsetPlan upsets;
    RoutingVariability variability;
};

struct AnalysisSection {
    Thresholds thresholds;
    std::vector<int> subset_sizes{8, 16, 32};
    int bootstrap_reps = 200;
    std::optional<int> reference_dme;  // nullopt: monitor nearest the grid centre
};

struct OutputsSection {
    std::string directory = ".";
    bool svg = true;
};

struct Scenario {
    FabricSection fabric;
    TapsSection taps;
    DmesSection dmes;
    SweepSection sweep;
    std::vector<ConditionSpec> conditions;  // baseline first after parsing
    AnalysisSection analysis;
    OutputsSection outputs;
};

/// Parses the line-oriented `key = value` format with `[section]` headers and
/// `#` comments. The result is fully defaulted and validated.
Scenario parse_scenario(const std::string& text);
Scenario load_scenario(const std::string& path);

/// Instantiates fabric, paths, taps, monitors and condition states.
Experiment build_experiment(const Scenario& scenario);

}  // namespace fpgadiag
