#pragma once

#include <cstdint>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "fpgadiag/fabric.hpp"
#include "fpgadiag/rng.hpp"

namespace fpgadiag {

enum class PdnMode { Multiplicative, Additive };

/// Behavioural PDN stressor. The droop field is a zero-mean Gaussian process
/// over the CLB grid with covariance fluct_std^2 * exp(-d / corr_length),
/// redrawn once per sweep.
struct PdnStressConfig {
    double intensity = 1.0;
    double kappa = 0.04;
    double corr_length = 200.0;  // CLB
    double fluct_std = 0.1;
    PdnMode mode = PdnMode::Multiplicative;
    double ref_delay = 800.0;    // ps, additive mode only

    void validate() const;
    bool operator==(const PdnStressConfig&) const = default;
};

enum class UpsetTarget { Branch, Functional };

struct RoutingUpset {
    int tap_id = 0;
    UpsetTarget target = UpsetTarget::Branch;
    int segment_index = 0;
    double delta_delay = 0.0;      // ps
    double local_jitter_std = 0.0; // ps

    bool operator==(const RoutingUpset&) const = default;
};

struct RoutingUpsetSet {
    std::vector<RoutingUpset> entries;

    // Throws FunctionalPathViolation / InvalidUpsetTarget / InvalidConfig.
    static RoutingUpsetSet create(std::vector<RoutingUpset> entries, const std::vector<DelayTap>& taps);

    bool touches(int tap_id) const;
    bool operator==(const RoutingUpsetSet&) const = default;
};

/// How default upsets are generated: one upset on every branch segment of
/// each targeted tap, magnitudes picked from the choice lists by hash.
struct UpsetPlan {
    std::vector<std::string> target_labels{"L3", "L4", "L5", "L6", "L7", "L8"};
    std::vector<double> delta_choices{20.0, 30.0, 40.0};
    std::vector<double> jitter_choices{25.0, 30.0};

    bool operator==(const UpsetPlan&) const = default;
};

RoutingUpsetSet generate_upsets(const UpsetPlan& plan, const std::vector<DelayTap>& taps, std::uint64_t seed);

/// Sweep-to-sweep variability of perturbed branches: each perturbed tap gets
/// a per-sweep offset scale * sqrt(sum local_jitter^2) * z, with z a
/// unit-variance field of correlation length local_corr_length evaluated at
/// the tap's observation buffer.
struct RoutingVariability {
    double sweep_offset_scale = 0.5;
    double local_corr_length = 1.0;  // CLB

    bool operator==(const RoutingVariability&) const = default;
};

enum class ConditionKind { Baseline, PdnStress, RoutingPerturb, Combined };

std::string_view to_string(ConditionKind kind);

struct ConditionState {
    std::string name;
    ConditionKind kind = ConditionKind::Baseline;
    int config_state_id = 0;
    std::optional<PdnStressConfig> pdn;
    std::optional<RoutingUpsetSet> upsets;
    RoutingVariability variability;

    bool has_pdn() const { return kind == ConditionKind::PdnStress || kind == ConditionKind::Combined; }
    bool has_routing() const {
        return kind == ConditionKind::RoutingPerturb || kind == ConditionKind::Combined;
    }
};

struct SweepRealization {
    int sweep_id = 0;
    int width = 1;
    std::vector<double> field_sample;  // row-major per site; empty = no PDN field
    std::map<int, double> local_draws; // tap id -> ps

    double field_at(Coord c) const;
    double local_draw(int tap_id) const;
};

/// Cholesky-factored sampler for a stationary exponential-kernel field on
/// the fabric sites.
class GaussianFieldSampler {
public:
    GaussianFieldSampler(const FabricGrid& fabric, double corr_length, double std_dev);

    std::vector<double> sample(Engine& rng) const;
    std::size_t size() const { return size_; }

private:
    std::size_t size_;
    double std_dev_;
    Eigen::MatrixXd chol_;  // lower factor; empty when std_dev == 0
};

inline constexpr double kCovarianceRidge = 1e-9;

std::vector<double> sample_pdn_field(const FabricGrid& fabric, const PdnStressConfig& cfg, int sweep_id,
                                     std::uint64_t seed);

double pdn_delay_multiplier(const PdnStressConfig& cfg, double field_value);

struct BranchPerturbation {
    double delta_delay = 0.0;     // ps
    double added_variance = 0.0;  // ps^2
};

BranchPerturbation apply_routing_upsets(const DelayTap& tap, const RoutingUpsetSet& upsets);

TransitionStats effective_transition_distribution(const RoutedPath& path, const DelayTap& tap,
                                                  const ConditionState& condition,
                                                  const SweepRealization& realization);

/// Draws the per-sweep realizations of one condition. Factorisations are
/// built once; realize() is const and deterministic in (seed, sweep_id).
class ConditionSampler {
public:
    ConditionSampler(const FabricGrid& fabric, const ConditionState& condition,
                     const std::vector<DelayTap>& taps, std::uint64_t seed);

    SweepRealization realize(int sweep_id) const;

private:
    int width_;
    std::uint64_t seed_;
    ConditionState condition_;
    std::optional<GaussianFieldSampler> pdn_;
    std::optional<GaussianFieldSampler> local_;
    std::vector<std::pair<int, double>> local_amplitude_;  // tap id -> ps
    std::vector<std::size_t> local_site_;
};

}  // namespace fpgadiag
