#include "fpgadiag/degradation.hpp"

#include <algorithm>
#include <cmath>

#include "fpgadiag/error.hpp"

namespace fpgadiag {

void PdnStressConfig::validate() const {
    if (intensity < 0.0) throw DiagError(ErrorCode::InvalidConfig, "pdn intensity must be >= 0");
    if (kappa < 0.0) throw DiagError(ErrorCode::InvalidConfig, "pdn kappa must be >= 0");
    if (!(corr_length > 0.0)) throw DiagError(ErrorCode::InvalidConfig, "pdn corr_length must be > 0");
    if (fluct_std < 0.0) throw DiagError(ErrorCode::InvalidConfig, "pdn fluct_std must be >= 0");
    if (mode == PdnMode::Additive && !(ref_delay > 0.0))
        throw DiagError(ErrorCode::InvalidConfig, "pdn ref_delay must be > 0");
}

RoutingUpsetSet RoutingUpsetSet::create(std::vector<RoutingUpset> entries, const std::vector<DelayTap>& taps) {
    for (const auto& e : entries) {
        if (e.target == UpsetTarget::Functional)
            throw DiagError(ErrorCode::FunctionalPathViolation,
                            "upset on tap " + std::to_string(e.tap_id) + " addresses a functional-path segment");
        const auto it = std::find_if(taps.begin(), taps.end(), [&](const DelayTap& t) { return t.id == e.tap_id; });
        if (it == taps.end())
            throw DiagError(ErrorCode::InvalidUpsetTarget, "unknown tap " + std::to_string(e.tap_id));
        if (e.segment_index < 0 || e.segment_index >= it->branch_hops)
            throw DiagError(ErrorCode::InvalidUpsetTarget,
                            "branch segment " + std::to_string(e.segment_index) + " out of range for tap " +
                                std::to_string(e.tap_id));
        if (e.delta_delay < 0.0 || e.local_jitter_std < 0.0)
            throw DiagError(ErrorCode::InvalidConfig, "upset delay and jitter must be >= 0");
    }
    return RoutingUpsetSet{std::move(entries)};
}

bool RoutingUpsetSet::touches(int tap_id) const {
    return std::any_of(entries.begin(), entries.end(), [&](const RoutingUpset& e) { return e.tap_id == tap_id; });
}

RoutingUpsetSet generate_upsets(const UpsetPlan& plan, const std::vector<DelayTap>& taps, std::uint64_t seed) {
    if (plan.delta_choices.empty() || plan.jitter_choices.empty())
        throw DiagError(ErrorCode::InvalidConfig, "upset choice lists must be non-empty");
    std::vector<RoutingUpset> entries;
    for (const auto& tap : taps) {
        const bool targeted = std::find(plan.target_labels.begin(), plan.target_labels.end(), tap.label) !=
                              plan.target_labels.end();
        if (!targeted) continue;
        for (int k = 0; k < tap.branch_hops; ++k) {
            const auto h = mix_key({seed, stream::upsets, static_cast<std::uint64_t>(tap.id),
                                    static_cast<std::uint64_t>(k)});
            const auto pick = [&](const std::vector<double>& v, std::uint64_t salt) {
                return v[splitmix64(h ^ salt) % v.size()];
            };
            entries.push_back({tap.id, UpsetTarget::Branch, k, pick(plan.delta_choices, 1),
                               pick(plan.jitter_choices, 2)});
        }
    }
    return RoutingUpsetSet::create(std::move(entries), taps);
}

std::string_view to_string(ConditionKind kind) {
    switch (kind) {
        case ConditionKind::Baseline: return "baseline";
        case ConditionKind::PdnStress: return "pdn";
        case ConditionKind::RoutingPerturb: return "routing";
        case ConditionKind::Combined: return "combined";
    }
    return "unknown";
}

double SweepRealization::field_at(Coord c) const {
    if (field_sample.empty()) return 0.0;
    return field_sample.at(static_cast<std::size_t>(c.row) * static_cast<std::size_t>(width) +
                          static_cast<std::size_t>(c.col));
}

double SweepRealization::local_draw(int tap_id) const {
    const auto it = local_draws.find(tap_id);
    return it == local_draws.end() ? 0.0 : it->second;
}

GaussianFieldSampler::GaussianFieldSampler(const FabricGrid& fabric, double corr_length, double std_dev)
    : size_(fabric.site_count()), std_dev_(std_dev) {
    if (!(corr_length > 0.0) || std_dev < 0.0)
        throw DiagError(ErrorCode::InvalidConfig, "field needs corr_length > 0 and std >= 0");
    if (std_dev == 0.0) return;

    const auto sites = fabric.sites();
    const auto n = static_cast<Eigen::Index>(sites.size());
    Eigen::MatrixXd cov(n, n);
    for (Eigen::Index i = 0; i < n; ++i)
        for (Eigen::Index j = 0; j <= i; ++j) {
            const double d = euclidean(sites[static_cast<std::size_t>(i)], sites[static_cast<std::size_t>(j)]);
            cov(i, j) = cov(j, i) = std_dev * std_dev * std::exp(-d / corr_length);
        }
    cov.diagonal().array() += kCovarianceRidge;
    Eigen::LLT<Eigen::MatrixXd> llt(cov);
    if (llt.info() != Eigen::Success)
        throw DiagError(ErrorCode::SingularCovariance,
                        "field covariance not positive definite (corr_length=" + std::to_string(corr_length) + ")");
    chol_ = llt.matrixL();
}

std::vector<double> GaussianFieldSampler::sample(Engine& rng) const {
    std::vector<double> out(size_, 0.0);
    if (std_dev_ == 0.0) return out;
    std::normal_distribution<double> normal(0.0, 1.0);
    Eigen::VectorXd z(static_cast<Eigen::Index>(size_));
    for (Eigen::Index i = 0; i < z.size(); ++i) z(i) = normal(rng);
    const Eigen::VectorXd x = chol_.triangularView<Eigen::Lower>() * z;
    for (Eigen::Index i = 0; i < x.size(); ++i) out[static_cast<std::size_t>(i)] = x(i);
    return out;
}

std::vector<double> sample_pdn_field(const FabricGrid& fabric, const PdnStressConfig& cfg, int sweep_id,
                                     std::uint64_t seed) {
    cfg.validate();
    GaussianFieldSampler sampler(fabric, cfg.corr_length, cfg.fluct_std);
    auto rng = keyed_engine({seed, stream::pdn_field, static_cast<std::uint64_t>(sweep_id)});
    return sampler.sample(rng);
}

double pdn_delay_multiplier(const PdnStressConfig& cfg, double field_value) {
    return std::max(1.0, 1.0 + cfg.kappa * (cfg.intensity + field_value));
}

BranchPerturbation apply_routing_upsets(const DelayTap& tap, const RoutingUpsetSet& upsets) {
    BranchPerturbation out;
    for (const auto& e : upsets.entries) {
        if (e.tap_id != tap.id) continue;
        if (e.target == UpsetTarget::Functional)
            throw DiagError(ErrorCode::FunctionalPathViolation,
                            "upset on tap " + std::to_string(tap.id) + " addresses a functional-path segment");
        if (e.segment_index < 0 || e.segment_index >= tap.branch_hops)
            throw DiagError(ErrorCode::InvalidUpsetTarget,
                            "branch segment " + std::to_string(e.segment_index) + " out of range for tap " +
                                std::to_string(tap.id));
        out.delta_delay += e.delta_delay;
        out.added_variance += e.local_jitter_std * e.local_jitter_std;
    }
    return out;
}

TransitionStats effective_transition_distribution(const RoutedPath& path, const DelayTap& tap,
                                                  const ConditionState& condition,
                                                  const SweepRealization& realization) {
    TransitionStats s = nominal_transition_stats(path, tap);
    if (condition.has_routing() && condition.upsets) {
        const auto p = apply_routing_upsets(tap, *condition.upsets);
        s.mu += p.delta_delay + realization.local_draw(tap.id);
        s.sigma = std::sqrt(s.sigma * s.sigma + p.added_variance);
    }
    if (condition.has_pdn() && condition.pdn) {
        const auto& cfg = *condition.pdn;
        const double field = realization.field_at(tap.position);
        if (cfg.mode == PdnMode::Multiplicative) {
            const double m = pdn_delay_multiplier(cfg, field);
            s.mu *= m;
            s.sigma *= m;
        } else {
            s.mu += std::max(0.0, cfg.kappa * (cfg.intensity + field)) * cfg.ref_delay;
        }
    }
    return s;
}

ConditionSampler::ConditionSampler(const FabricGrid& fabric, const ConditionState& condition,
                                   const std::vector<DelayTap>& taps, std::uint64_t seed)
    : width_(fabric.width()), seed_(seed), condition_(condition) {
    if (condition_.has_pdn() && condition_.pdn) {
        condition_.pdn->validate();
        pdn_.emplace(fabric, condition_.pdn->corr_length, condition_.pdn->fluct_std);
    }
    if (condition_.has_routing() && condition_.upsets && condition_.variability.sweep_offset_scale > 0.0) {
        for (const auto& tap : taps) {
            const auto p = apply_routing_upsets(tap, *condition_.upsets);
            if (p.added_variance <= 0.0) continue;
            local_amplitude_.emplace_back(tap.id,
                                          condition_.variability.sweep_offset_scale * std::sqrt(p.added_variance));
            local_site_.push_back(fabric.site_index(tap.observer));
        }
        if (!local_amplitude_.empty()) local_.emplace(fabric, condition_.variability.local_corr_length, 1.0);
    }
}

SweepRealization ConditionSampler::realize(int sweep_id) const {
    SweepRealization r;
    r.sweep_id = sweep_id;
    r.width = width_;
    const auto sweep = static_cast<std::uint64_t>(sweep_id);
    if (pdn_) {
        auto rng = keyed_engine({seed_, stream::pdn_field, sweep});
        r.field_sample = pdn_->sample(rng);
    }
    if (local_) {
        auto rng = keyed_engine({seed_, stream::local_field, sweep});
        const auto z = local_->sample(rng);
        for (std::size_t i = 0; i < local_amplitude_.size(); ++i)
            r.local_draws[local_amplitude_[i].first] = local_amplitude_[i].second * z[local_site_[i]];
    }
    return r;
}

}  // namespace fpgadiag
