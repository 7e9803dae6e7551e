#pragma once

#include <cstdint>
#include <vector>

#include "fpgadiag/degradation.hpp"
#include "fpgadiag/fabric.hpp"
#include "fpgadiag/rng.hpp"

namespace fpgadiag {

enum class SamplingMode { MonteCarlo, Exact };

struct PhaseSweepConfig {
    double phase_start = 0.0;  // ps
    double phase_end = 0.0;    // ps
    double phase_step = 20.0;  // ps
    int window_cycles = 1000;
    int settle_cycles = 64;
    int num_sweeps = 10;
    SamplingMode mode = SamplingMode::Exact;

    // floor((end - start) / step) + 1, or <= 0 for an empty range.
    int phase_count() const;
    double sample_time(int phase_index) const { return phase_start + phase_index * phase_step; }
    void validate() const;
    bool operator==(const PhaseSweepConfig&) const = default;
};

struct SampleWindowResult {
    int error_count = 0;
    int window_cycles = 0;
    int phase_index = 0;
    double sample_time = 0.0;

    bool operator==(const SampleWindowResult&) const = default;
};

/// Probability that a sample at `sample_time` still captures the stale value,
/// i.e. P(T > sample_time) for T ~ N(mu, sigma). Ties go to 0 when sigma = 0.
double error_probability(const TransitionStats& stats, double sample_time);

/// Identity of one observation window; the Monte Carlo stream is a pure
/// function of it.
struct WindowKey {
    std::uint64_t seed = 0;
    int config_state_id = 0;
    int sweep_id = 0;
    int dme_id = 0;
    int dt_id = 0;
    int phase_index = 0;

    Engine engine() const;
};

SampleWindowResult sample_error_count(const TransitionStats& stats, int phase_index, double sample_time,
                                      int window_cycles, SamplingMode mode, Engine& rng);

struct PhaseSweep {
    std::vector<SampleWindowResult> windows;
    std::uint64_t settle_cycles_consumed = 0;
};

PhaseSweep run_phase_sweep(const DmePlacement& dme, const RoutedPath& path, const DelayTap& tap,
                           const ConditionState& condition, const SweepRealization& realization,
                           const PhaseSweepConfig& cfg, std::uint64_t seed);

}  // namespace fpgadiag
