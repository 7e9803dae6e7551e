#pragma once

#include <cstdint>
#include <iosfwd>
#include <optional>
#include <span>
#include <string>
#include <tuple>
#include <vector>

#include "fpgadiag/degradation.hpp"
#include "fpgadiag/fabric.hpp"
#include "fpgadiag/sensing.hpp"

namespace fpgadiag {

/// Everything a campaign needs, instantiated from a scenario.
struct Experiment {
    FabricGrid fabric{1, 1, 0};
    std::vector<RoutedPath> paths;
    std::vector<DelayTap> taps;
    std::vector<DmePlacement> dmes;
    std::vector<ConditionState> conditions;
    PhaseSweepConfig sweep;
    bool auto_phase_range = true;
    std::uint64_t seed = 0;

    const RoutedPath& path(int id) const;
    const DelayTap& tap(int id) const;
    const DmePlacement& dme(int id) const;
};

struct ScheduleEntry {
    int dme_id = 0;
    int tap_id = 0;
    bool operator==(const ScheduleEntry&) const = default;
};

struct CampaignPlan {
    std::vector<ConditionState> conditions;  // baseline first
    std::vector<ScheduleEntry> schedule;
    PhaseSweepConfig sweep;
    std::uint64_t seed = 0;

    std::size_t phase_count() const { return static_cast<std::size_t>(sweep.phase_count()); }
    std::size_t window_count() const {
        return conditions.size() * schedule.size() * static_cast<std::size_t>(sweep.num_sweeps) * phase_count();
    }
};

// Per-condition stream seed; realizations of a condition depend only on it.
std::uint64_t condition_seed(std::uint64_t seed, int config_state_id);

CampaignPlan plan_campaign(const Experiment& experiment);

struct MeasurementRecord {
    int sweep_id = 0;
    int dme_id = 0;
    int dt_id = 0;
    int phase_index = 0;
    int config_state_id = 0;
    int error_count = 0;
    int window_cycles = 0;

    auto key() const { return std::tuple(config_state_id, dme_id, dt_id, sweep_id, phase_index); }
    bool operator==(const MeasurementRecord&) const = default;
};

struct ConditionInfo {
    int config_state_id = 0;
    std::string name;
    ConditionKind kind = ConditionKind::Baseline;
};

struct CampaignMetadata {
    std::uint64_t seed = 0;
    double phase_start = 0.0;
    double phase_step = 0.0;
    int phase_count = 0;
    int window_cycles = 0;
    int settle_cycles = 0;
    int num_sweeps = 0;
    SamplingMode mode = SamplingMode::Exact;
    std::vector<ConditionInfo> conditions;
    std::vector<ScheduleEntry> schedule;
    std::uint64_t settle_cycles_logged = 0;
};

CampaignMetadata metadata_for(const CampaignPlan& plan);

struct RecordFilter {
    std::optional<int> config_state_id;
    std::optional<int> dme_id;
    std::optional<int> dt_id;
    std::optional<int> sweep_id;
    std::optional<int> phase_index;

    bool matches(const MeasurementRecord& r) const;
};

/// Immutable-after-build record container in canonical key order
/// (config_state_id, dme_id, dt_id, sweep_id, phase_index).
class RecordStore {
public:
    RecordStore() = default;
    RecordStore(std::vector<MeasurementRecord> records, CampaignMetadata metadata);

    const std::vector<MeasurementRecord>& records() const { return records_; }
    const CampaignMetadata& metadata() const { return metadata_; }
    void set_metadata(CampaignMetadata m) { metadata_ = std::move(m); }
    std::size_t size() const { return records_.size(); }

    std::vector<MeasurementRecord> query(const RecordFilter& filter) const;
    // Contiguous run of one (condition, dme, tap), sweeps then phases.
    std::span<const MeasurementRecord> slice(int config_state_id, int dme_id, int dt_id) const;

private:
    std::vector<MeasurementRecord> records_;
    CampaignMetadata metadata_;
};

std::vector<MeasurementRecord> query(const RecordStore& store, const RecordFilter& filter);

inline constexpr const char* kRecordCsvHeader =
    "sweep_id,dme_id,dt_id,phase_index,config_state_id,error_count,window_cycles";

void write_records_csv(const RecordStore& store, std::ostream& out);
std::string records_to_csv(const RecordStore& store);
// Metadata is not part of the CSV; attach it afterwards if needed.
RecordStore read_records_csv(std::istream& in);
RecordStore records_from_csv(const std::string& text);

/// threads == 0 picks the hardware concurrency. Output is independent of it.
RecordStore execute_campaign(const CampaignPlan& plan, const Experiment& experiment, unsigned threads = 1);

}  // namespace fpgadiag
