#include "fpgadiag/sensing.hpp"

#include <cmath>

#include "fpgadiag/error.hpp"

namespace fpgadiag {

int PhaseSweepConfig::phase_count() const {
    if (!(phase_step > 0.0) || phase_end < phase_start) return 0;
    // Tolerate representation error when the range is an exact multiple of the step.
    return static_cast<int>(std::floor((phase_end - phase_start) / phase_step + 1e-9)) + 1;
}

void PhaseSweepConfig::validate() const {
    if (!(phase_step > 0.0)) throw DiagError(ErrorCode::ConstraintViolation, "phase_step must be > 0");
    if (!(phase_end > phase_start))
        throw DiagError(ErrorCode::EmptyPhaseRange, "phase_end must exceed phase_start");
    if (window_cycles < 1) throw DiagError(ErrorCode::ConstraintViolation, "window_cycles must be >= 1");
    if (settle_cycles < 0) throw DiagError(ErrorCode::ConstraintViolation, "settle_cycles must be >= 0");
    if (num_sweeps < 1) throw DiagError(ErrorCode::ConstraintViolation, "num_sweeps must be >= 1");
}

double error_probability(const TransitionStats& stats, double sample_time) {
    if (stats.sigma <= 0.0) return sample_time < stats.mu ? 1.0 : 0.0;
    return 0.5 * std::erfc((sample_time - stats.mu) / (stats.sigma * std::sqrt(2.0)));
}

Engine WindowKey::engine() const {
    return keyed_engine({seed, stream::window, static_cast<std::uint64_t>(config_state_id),
                         static_cast<std::uint64_t>(sweep_id), static_cast<std::uint64_t>(dme_id),
                         static_cast<std::uint64_t>(dt_id), static_cast<std::uint64_t>(phase_index)});
}

SampleWindowResult sample_error_count(const TransitionStats& stats, int phase_index, double sample_time,
                                      int window_cycles, SamplingMode mode, Engine& rng) {
    const double p = error_probability(stats, sample_time);
    SampleWindowResult r;
    r.window_cycles = window_cycles;
    r.phase_index = phase_index;
    r.sample_time = sample_time;
    if (mode == SamplingMode::Exact) {
        r.error_count = static_cast<int>(std::lround(window_cycles * p));
    } else if (p >= 1.0) {
        r.error_count = window_cycles;
    } else if (p > 0.0) {
        std::binomial_distribution<int> binom(window_cycles, p);
        r.error_count = binom(rng);
    }
    return r;
}

PhaseSweep run_phase_sweep(const DmePlacement& dme, const RoutedPath& path, const DelayTap& tap,
                           const ConditionState& condition, const SweepRealization& realization,
                           const PhaseSweepConfig& cfg, std::uint64_t seed) {
    const int k = cfg.phase_count();
    if (k <= 0) throw DiagError(ErrorCode::EmptyPhaseRange, "phase sweep has no phase indices");
    if (!dme.assigned(tap.id))
        throw DiagError(ErrorCode::TapNotAssigned,
                        "tap " + std::to_string(tap.id) + " is not in the chain of monitor " + std::to_string(dme.id));

    // The realization is fixed for the whole sweep.
    const auto stats = effective_transition_distribution(path, tap, condition, realization);
    PhaseSweep out;
    out.windows.reserve(static_cast<std::size_t>(k));
    Engine unused;  // exact mode draws nothing
    for (int i = 0; i < k; ++i) {
        out.settle_cycles_consumed += static_cast<std::uint64_t>(cfg.settle_cycles);
        const double t = cfg.sample_time(i);
        if (cfg.mode == SamplingMode::MonteCarlo) {
            auto rng = WindowKey{seed, condition.config_state_id, realization.sweep_id, dme.id, tap.id, i}.engine();
            out.windows.push_back(sample_error_count(stats, i, t, cfg.window_cycles, cfg.mode, rng));
        } else {
            out.windows.push_back(sample_error_count(stats, i, t, cfg.window_cycles, cfg.mode, unused));
        }
    }
    return out;
}

}  // namespace fpgadiag
