#pragma once

#include <cstdint>
#include <limits>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "fpgadiag/campaign.hpp"
#include "fpgadiag/fabric.hpp"

namespace fpgadiag {

struct PhaseGrid {
    double start = 0.0;
    double step = 20.0;

    double time(int phase_index) const { return start + phase_index * step; }
};

// ---------------------------------------------------------------------------
// Profiles and single-location statistics

struct BerProfile {
    int first_phase_index = 0;
    std::vector<double> phase;  // ps
    std::vector<double> raw;    // error_count / window_cycles before clamping
    std::vector<double> ber;    // monotone non-increasing
    bool monotone_clamped = false;
    bool coverage_complete = false;
};

/// L2 projection onto non-increasing sequences (pool adjacent violators).
/// Empty weights means uniform.
std::vector<double> pav_nonincreasing(std::span<const double> values, std::span<const double> weights = {});

/// Records must all belong to one (dme, tap, condition). With `sweep` set only
/// that sweep is used, otherwise errors and cycles are pooled across sweeps.
BerProfile reconstruct_profile(std::span<const MeasurementRecord> records, PhaseGrid grid,
                               std::optional<int> sweep = std::nullopt);

struct DelayStats {
    double median = 0.0;     // ps, F = 0.5 crossing
    double sigma_est = 0.0;  // ps, half the 15.87 %..84.13 % spread
    double q05 = 0.0;
    double q95 = 0.0;
};

DelayStats extract_delay_stats(const BerProfile& profile);

/// F(t) = 1 - BER(t) on the phase grid. Between grid points F is
/// interpolated as Phi(z(t)), with z = Phi^-1(F) interpolated by a monotone
/// piecewise cubic (Fritsch-Carlson); a Gaussian CDF is reproduced exactly.
struct CdfCurve {
    std::vector<double> times;
    std::vector<double> values;
    std::vector<double> scores;  // Phi^-1 of values, clamped to +-kCdfScoreLimit
    std::vector<double> slopes;  // of scores

    double at(double t) const;  // clamped outside the grid
    // Linear-interpolation quantile of the tabulated values.
    double quantile(double p) const;
};

inline constexpr double kCdfScoreLimit = 4.0;

CdfCurve empirical_cdf(const BerProfile& profile);

struct DeltaStats {
    double delta_mu = 0.0;
    double delta_mu_rel = 0.0;
    double delta_sigma = 0.0;
    double delta_mu_steps = 0.0;
    double delta_sigma_steps = 0.0;
};

DeltaStats compute_delta(const DelayStats& baseline, const DelayStats& stressed, double phase_step);

// ---------------------------------------------------------------------------
// Correlation statistics

/// Pearson r, or nullopt when either series has zero variance.
std::optional<double> pearson(std::span<const double> x, std::span<const double> y);
/// Spearman rank correlation with average ranks for ties.
std::optional<double> spearman(std::span<const double> x, std::span<const double> y);

/// Per-sweep medians, one row per (dme, tap). Failed sweeps are NaN and
/// flagged in `degenerate`.
struct DelaySeries {
    std::vector<ScheduleEntry> keys;
    std::vector<std::vector<double>> medians;
    std::vector<std::vector<bool>> degenerate;
    std::vector<bool> zero_variance;

    std::size_t sweeps() const { return medians.empty() ? 0 : medians.front().size(); }
};

DelaySeries per_sweep_delay_series(const RecordStore& store, int config_state_id, PhaseGrid grid,
                                   const std::vector<ScheduleEntry>& schedule, int num_sweeps);

struct CorrelationPair {
    std::size_t a = 0;
    std::size_t b = 0;
    double distance = 0.0;             // CLB
    double normalized_distance = 0.0;  // distance / region diagonal
    double r = 0.0;
    int n_sweeps = 0;
};

struct CorrelationBin {
    double lo = 0.0;
    double hi = 0.0;
    double mean_distance = 0.0;
    double mean_r = 0.0;
    int count = 0;
};

struct CorrelationCurve {
    std::vector<CorrelationPair> pairs;
    std::vector<CorrelationBin> bins;  // unit-width distance bins
    double decay_length = std::numeric_limits<double>::quiet_NaN();
    std::string fit_method;
    int excluded_pairs = 0;
};

/// Decay length l of r(d) = exp(-d / l), fitted to the binned means. Falls
/// back to the first 0.5 crossing with fewer than two bins. Infinity when r
/// never decays.
double fit_decay_length(std::span<const CorrelationPair> pairs, std::span<const CorrelationBin> bins,
                        std::string* method = nullptr);

CorrelationCurve spatial_correlation_curve(const DelaySeries& series, std::span<const Coord> positions,
                                           double region_diagonal);

struct ScalingRow {
    int n = 0;
    double mean_r = 0.0;
    double ci_low = 0.0;
    double ci_high = 0.0;
};

/// For each size n: `reps` draws of a spatially compact monitor subset (the n
/// nearest to a random anchor), resampled with replacement; mean pairwise r
/// and its 2.5/97.5 percentile band. Pairs without a defined r are skipped.
std::vector<ScalingRow> dme_count_scaling(const DelaySeries& series, std::span<const Coord> positions,
                                          std::span<const int> sizes, int reps, std::uint64_t seed);

struct HeatmapGrid {
    int width = 0;
    int height = 0;
    int reference_dme = 0;
    Coord reference;
    std::vector<std::optional<double>> cells;  // row-major

    std::optional<double> at(Coord c) const {
        return cells.at(static_cast<std::size_t>(c.row) * static_cast<std::size_t>(width) +
                        static_cast<std::size_t>(c.col));
    }
};

// Series index nearest the grid centre (lowest index on ties).
std::size_t central_series(std::span<const Coord> positions, int width, int height);

HeatmapGrid correlation_heatmap(const DelaySeries& series, std::span<const Coord> positions,
                                std::size_t reference, int width, int height);

// ---------------------------------------------------------------------------
// Classification

enum class Mechanism { NoDegradation, PdnInduced, RoutingInduced, Mixed };

std::string_view to_string(Mechanism m);

struct Thresholds {
    double detect = 0.005;      // mean |relative shift|
    double uniformity = 0.15;   // CV of relative shift
    double spread = 0.5;        // median delta sigma, phase steps
    double routing_spread = 1.0;  // max-tap delta sigma, phase steps
    double pdn_decay = 4.0;     // CLB
    double routing_decay = 2.0; // CLB

    bool operator==(const Thresholds&) const = default;
};

struct Evidence {
    double mean_abs_shift_rel = 0.0;  // s
    double uniformity_cv = 0.0;       // u
    double median_dsigma_steps = 0.0; // v
    double max_dsigma_steps = 0.0;
    double decay_length = std::numeric_limits<double>::quiet_NaN();  // l, NaN if unavailable
    int taps = 0;
};

Evidence gather_evidence(std::span<const DeltaStats> deltas, double decay_length);

struct MechanismVerdict {
    Mechanism mechanism = Mechanism::NoDegradation;
    Evidence evidence;
    Thresholds thresholds;
};

MechanismVerdict classify_mechanism(const Evidence& evidence, const Thresholds& thresholds = {});

}  // namespace fpgadiag
