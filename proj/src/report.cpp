#include "fpgadiag/report.hpp"

#include <algorithm>
#include <cmath>
#include <sstream>

#include "fpgadiag/error.hpp"
#include "fpgadiag/rng.hpp"

namespace fpgadiag {

namespace {

// JSON has no NaN or infinity; both become null.
Json num(double v) { return std::isfinite(v) ? Json(v) : Json(nullptr); }

Json coord_json(Coord c) { return Json{{"col", c.col}, {"row", c.row}}; }

std::string_view mode_name(SamplingMode m) { return m == SamplingMode::Exact ? "exact" : "monte_carlo"; }

Json stats_json(const DelayStats& s) {
    return Json{{"median", num(s.median)}, {"sigma_est", num(s.sigma_est)}, {"q05", num(s.q05)}, {"q95", num(s.q95)}};
}

Json delta_json(const DeltaStats& d) {
    return Json{{"delta_mu", num(d.delta_mu)},
                {"delta_mu_rel", num(d.delta_mu_rel)},
                {"delta_sigma", num(d.delta_sigma)},
                {"delta_mu_steps", num(d.delta_mu_steps)},
                {"delta_sigma_steps", num(d.delta_sigma_steps)}};
}

Json thresholds_json(const Thresholds& t) {
    return Json{{"theta_detect", t.detect},
                {"theta_uniformity", t.uniformity},
                {"theta_spread", t.spread},
                {"theta_routing_spread", t.routing_spread},
                {"theta_pdn_decay", t.pdn_decay},
                {"theta_routing_decay", t.routing_decay}};
}

Json correlation_json(const CorrelationCurve& c) {
    Json pairs = Json::array();
    for (const auto& p : c.pairs)
        pairs.push_back(Json{{"a", p.a},
                             {"b", p.b},
                             {"distance", num(p.distance)},
                             {"normalized_distance", num(p.normalized_distance)},
                             {"r", num(p.r)},
                             {"n_sweeps", p.n_sweeps}});
    Json bins = Json::array();
    for (const auto& b : c.bins)
        bins.push_back(Json{{"lo", b.lo},
                            {"hi", b.hi},
                            {"mean_distance", num(b.mean_distance)},
                            {"mean_r", num(b.mean_r)},
                            {"count", b.count}});
    return Json{{"decay_length", num(c.decay_length)},
                {"decay_length_infinite", std::isinf(c.decay_length)},
                {"fit_method", c.fit_method},
                {"excluded_pairs", c.excluded_pairs},
                {"bins", std::move(bins)},
                {"pairs", std::move(pairs)}};
}

Json heatmap_json(const HeatmapGrid& g) {
    Json rows = Json::array();
    for (int r = 0; r < g.height; ++r) {
        Json row = Json::array();
        for (int c = 0; c < g.width; ++c) {
            const auto v = g.at({c, r});
            row.push_back(v ? num(*v) : Json(nullptr));
        }
        rows.push_back(std::move(row));
    }
    return Json{{"width", g.width},
                {"height", g.height},
                {"reference_dme", g.reference_dme},
                {"reference", coord_json(g.reference)},
                {"cells", std::move(rows)}};
}

Json verdict_json(const MechanismVerdict& v) {
    const auto& e = v.evidence;
    return Json{{"mechanism", to_string(v.mechanism)},
                {"evidence",
                 Json{{"mean_abs_shift_rel", num(e.mean_abs_shift_rel)},
                      {"uniformity_cv", num(e.uniformity_cv)},
                      {"median_dsigma_steps", num(e.median_dsigma_steps)},
                      {"max_dsigma_steps", num(e.max_dsigma_steps)},
                      {"decay_length", num(e.decay_length)},
                      {"taps", e.taps}}},
                {"thresholds", thresholds_json(v.thresholds)}};
}

std::string skip_reason(const DiagError& e) { return e.what(); }

}  // namespace

const ConditionAnalysis* Analysis::find(const std::string& name) const {
    const auto it = std::find_if(conditions.begin(), conditions.end(),
                                 [&](const ConditionAnalysis& c) { return c.info.name == name; });
    return it == conditions.end() ? nullptr : &*it;
}

Analysis analyze_records(const Scenario& scenario, const Experiment& experiment, const RecordStore& store) {
    const auto& meta = store.metadata();
    if (meta.conditions.empty() || meta.schedule.empty())
        throw DiagError(ErrorCode::EmptyInput, "record store carries no campaign metadata");

    Analysis a;
    a.metadata = meta;
    a.grid = {meta.phase_start, meta.phase_step};
    a.width = experiment.fabric.width();
    a.height = experiment.fabric.height();
    a.record_count = store.size();

    std::vector<Coord> positions;
    for (const auto& k : meta.schedule) positions.push_back(experiment.dme(k.dme_id).position);

    for (const auto& info : meta.conditions) {
        ConditionAnalysis ca;
        ca.info = info;
        for (const auto& k : meta.schedule) {
            const auto& tap = experiment.tap(k.tap_id);
            TapResult t;
            t.key = k;
            t.label = tap.label;
            t.region = tap.region;
            t.branch_hops = tap.branch_hops;
            t.position = experiment.dme(k.dme_id).position;
            try {
                t.profile = reconstruct_profile(store.slice(info.config_state_id, k.dme_id, k.tap_id), a.grid);
                t.stats = extract_delay_stats(*t.profile);
            } catch (const DiagError& e) {
                t.error = e.what();
            }
            ca.taps.push_back(std::move(t));
        }
        a.conditions.push_back(std::move(ca));
    }

    const auto& base = a.conditions.front();
    for (std::size_t c = 1; c < a.conditions.size(); ++c)
        for (std::size_t i = 0; i < base.taps.size(); ++i) {
            auto& t = a.conditions[c].taps[i];
            if (base.taps[i].stats && t.stats) t.delta = compute_delta(*base.taps[i].stats, *t.stats, a.grid.step);
        }

    for (auto& ca : a.conditions) {
        const auto cid = static_cast<std::uint64_t>(ca.info.config_state_id);
        try {
            ca.series = per_sweep_delay_series(store, ca.info.config_state_id, a.grid, meta.schedule, meta.num_sweeps);
        } catch (const DiagError& e) {
            ca.skipped.emplace_back("series", skip_reason(e));
            continue;
        }
        try {
            ca.correlation = spatial_correlation_curve(ca.series, positions, experiment.fabric.diagonal());
        } catch (const DiagError& e) {
            ca.skipped.emplace_back("correlation", skip_reason(e));
        }
        try {
            std::size_t ref = central_series(positions, a.width, a.height);
            if (scenario.analysis.reference_dme) {
                const auto it = std::find_if(meta.schedule.begin(), meta.schedule.end(), [&](const ScheduleEntry& k) {
                    return k.dme_id == *scenario.analysis.reference_dme;
                });
                if (it == meta.schedule.end())
                    throw DiagError(ErrorCode::InvalidConfig,
                                    "reference_dme " + std::to_string(*scenario.analysis.reference_dme) +
                                        " is not scheduled");
                ref = static_cast<std::size_t>(it - meta.schedule.begin());
            }
            ca.heatmap = correlation_heatmap(ca.series, positions, ref, a.width, a.height);
        } catch (const DiagError& e) {
            ca.skipped.emplace_back("heatmap", skip_reason(e));
        }
        try {
            std::vector<int> sizes;
            for (int n : scenario.analysis.subset_sizes)
                if (static_cast<std::size_t>(n) <= ca.series.keys.size()) sizes.push_back(n);
                else ca.skipped.emplace_back("scaling_n" + std::to_string(n), "subset larger than monitor count");
            ca.scaling = dme_count_scaling(ca.series, positions, sizes, scenario.analysis.bootstrap_reps,
                                           mix_key({meta.seed, stream::bootstrap, cid}));
        } catch (const DiagError& e) {
            ca.skipped.emplace_back("scaling", skip_reason(e));
        }
    }

    for (std::size_t c = 1; c < a.conditions.size(); ++c) {
        auto& ca = a.conditions[c];
        std::vector<DeltaStats> deltas;
        for (const auto& t : ca.taps)
            if (t.delta) deltas.push_back(*t.delta);
        if (deltas.empty()) {
            ca.skipped.emplace_back("verdict", "no tap has delay statistics under both conditions");
            continue;
        }
        const double ell = ca.correlation ? ca.correlation->decay_length : std::numeric_limits<double>::quiet_NaN();
        ca.verdict = classify_mechanism(gather_evidence(deltas, ell), scenario.analysis.thresholds);
    }
    return a;
}

Json scenario_to_json(const Scenario& s) {
    const auto& fp = s.fabric.params;
    Json fabric{{"width", s.fabric.width},
                {"height", s.fabric.height},
                {"seed", s.fabric.seed},
                {"delay_min", fp.delay_min},
                {"delay_max", fp.delay_max},
                {"jitter_min", fp.jitter_min},
                {"jitter_max", fp.jitter_max},
                {"launch_delay", fp.launch_delay},
                {"launch_jitter", fp.launch_jitter}};

    Json taps{{"placement", s.taps.placement == TapPlacement::Auto ? "auto" : "explicit"},
              {"per_region", s.taps.per_region}};
    if (s.taps.placement == TapPlacement::Explicit) {
        Json paths = Json::array();
        for (const auto& p : s.taps.paths)
            paths.push_back(Json{{"name", p.name}, {"source", coord_json(p.source)}, {"dest", coord_json(p.dest)}});
        Json list = Json::array();
        for (const auto& t : s.taps.taps)
            list.push_back(Json{{"label", t.label}, {"path", t.path}, {"node_index", t.node_index}, {"dme_id", t.dme_id}});
        taps["paths"] = std::move(paths);
        taps["taps"] = std::move(list);
    }

    Json dmes{{"count", s.dmes.count}, {"placement", s.taps.placement == TapPlacement::Auto ? "grid" : "explicit"}};
    if (!s.dmes.explicit_positions.empty()) {
        Json list = Json::array();
        for (const auto& [id, pos] : s.dmes.explicit_positions)
            list.push_back(Json{{"id", id}, {"col", pos.col}, {"row", pos.row}});
        dmes["positions"] = std::move(list);
    }

    const auto& sw = s.sweep.config;
    Json sweep{{"phase_step", sw.phase_step},
               {"phase_range", s.sweep.auto_range ? "auto" : "explicit"},
               {"window_cycles", sw.window_cycles},
               {"settle_cycles", sw.settle_cycles},
               {"num_sweeps", sw.num_sweeps},
               {"mode", mode_name(sw.mode)}};
    if (!s.sweep.auto_range) {
        sweep["phase_start"] = sw.phase_start;
        sweep["phase_end"] = sw.phase_end;
    }

    Json conditions = Json::array();
    for (const auto& c : s.conditions) {
        Json j{{"name", c.name}, {"type", to_string(c.kind)}};
        if (c.kind == ConditionKind::PdnStress || c.kind == ConditionKind::Combined) {
            j["intensity"] = c.pdn.intensity;
            j["kappa"] = c.pdn.kappa;
            j["corr_length"] = c.pdn.corr_length;
            j["fluct_std"] = c.pdn.fluct_std;
            j["pdn_mode"] = c.pdn.mode == PdnMode::Multiplicative ? "multiplicative" : "additive";
            j["ref_delay"] = c.pdn.ref_delay;
        }
        if (c.kind == ConditionKind::RoutingPerturb || c.kind == ConditionKind::Combined) {
            j["upset_labels"] = c.upsets.target_labels;
            j["upset_deltas"] = c.upsets.delta_choices;
            j["upset_jitters"] = c.upsets.jitter_choices;
            j["sweep_offset_scale"] = c.variability.sweep_offset_scale;
            j["local_corr_length"] = c.variability.local_corr_length;
        }
        conditions.push_back(std::move(j));
    }

    Json analysis = thresholds_json(s.analysis.thresholds);
    analysis["subset_sizes"] = s.analysis.subset_sizes;
    analysis["bootstrap_reps"] = s.analysis.bootstrap_reps;
    analysis["reference_dme"] = s.analysis.reference_dme ? Json(*s.analysis.reference_dme) : Json("auto");

    return Json{{"fabric", std::move(fabric)},
                {"taps", std::move(taps)},
                {"dmes", std::move(dmes)},
                {"sweep", std::move(sweep)},
                {"conditions", std::move(conditions)},
                {"analysis", std::move(analysis)},
                {"outputs", Json{{"directory", s.outputs.directory}, {"svg", s.outputs.svg}}}};
}

Json report_to_json(const Scenario& scenario, const Analysis& a) {
    const auto& m = a.metadata;
    Json campaign{{"phase_start", m.phase_start},
                  {"phase_step", m.phase_step},
                  {"phase_count", m.phase_count},
                  {"window_cycles", m.window_cycles},
                  {"settle_cycles", m.settle_cycles},
                  {"num_sweeps", m.num_sweeps},
                  {"mode", mode_name(m.mode)},
                  {"record_count", a.record_count},
                  {"settle_cycles_logged", m.settle_cycles_logged},
                  {"fabric_width", a.width},
                  {"fabric_height", a.height}};

    Json monitors = Json::array();
    if (!a.conditions.empty())
        for (const auto& t : a.conditions.front().taps)
            monitors.push_back(Json{{"dme_id", t.key.dme_id},
                                    {"dt_id", t.key.tap_id},
                                    {"label", t.label},
                                    {"region", t.region},
                                    {"branch_hops", t.branch_hops},
                                    {"col", t.position.col},
                                    {"row", t.position.row}});

    Json conditions = Json::array();
    for (const auto& ca : a.conditions) {
        Json taps = Json::array();
        for (const auto& t : ca.taps) {
            Json j{{"dme_id", t.key.dme_id}, {"dt_id", t.key.tap_id}};
            j["stats"] = t.stats ? stats_json(*t.stats) : Json(nullptr);
            j["delta"] = t.delta ? delta_json(*t.delta) : Json(nullptr);
            if (!t.error.empty()) j["error"] = t.error;
            if (t.profile) {
                Json ber = Json::array();
                for (double b : t.profile->ber) ber.push_back(num(b));
                j["profile"] = Json{{"first_phase_index", t.profile->first_phase_index},
                                    {"monotone_clamped", t.profile->monotone_clamped},
                                    {"coverage_complete", t.profile->coverage_complete},
                                    {"ber", std::move(ber)}};
            } else {
                j["profile"] = nullptr;
            }
            taps.push_back(std::move(j));
        }

        Json series = Json::array();
        for (std::size_t i = 0; i < ca.series.keys.size(); ++i) {
            Json med = Json::array();
            for (double v : ca.series.medians[i]) med.push_back(num(v));
            series.push_back(Json{{"dme_id", ca.series.keys[i].dme_id},
                                  {"dt_id", ca.series.keys[i].tap_id},
                                  {"zero_variance", static_cast<bool>(ca.series.zero_variance[i])},
                                  {"medians", std::move(med)}});
        }

        Json scaling = Json::array();
        for (const auto& r : ca.scaling)
            scaling.push_back(
                Json{{"n", r.n}, {"mean_r", num(r.mean_r)}, {"ci_low", num(r.ci_low)}, {"ci_high", num(r.ci_high)}});

        Json skipped = Json::object();
        for (const auto& [stage, why] : ca.skipped) skipped[stage] = why;

        conditions.push_back(Json{{"config_state_id", ca.info.config_state_id},
                                  {"name", ca.info.name},
                                  {"kind", to_string(ca.info.kind)},
                                  {"taps", std::move(taps)},
                                  {"per_sweep_medians", std::move(series)},
                                  {"correlation", ca.correlation ? correlation_json(*ca.correlation) : Json(nullptr)},
                                  {"heatmap", ca.heatmap ? heatmap_json(*ca.heatmap) : Json(nullptr)},
                                  {"scaling", std::move(scaling)},
                                  {"verdict", ca.verdict ? verdict_json(*ca.verdict) : Json(nullptr)},
                                  {"skipped", std::move(skipped)}});
    }

    return Json{{"tool", Json{{"name", kToolName}, {"version", kToolVersion}}},
                {"seed", m.seed},
                {"scenario", scenario_to_json(scenario)},
                {"campaign", std::move(campaign)},
                {"monitors", std::move(monitors)},
                {"conditions", std::move(conditions)}};
}

std::string dump_report(const Json& report) { return report.dump(2) + "\n"; }

namespace {

PipelineResult finish(const Scenario& scenario, const Experiment& experiment, RecordStore store) {
    PipelineResult r;
    r.analysis = analyze_records(scenario, experiment, store);
    r.records_csv = records_to_csv(store);
    r.report_json = dump_report(report_to_json(scenario, r.analysis));
    r.store = std::move(store);
    return r;
}

}  // namespace

PipelineResult run_pipeline(const Scenario& scenario, unsigned threads) {
    const auto experiment = build_experiment(scenario);
    const auto plan = plan_campaign(experiment);
    return finish(scenario, experiment, execute_campaign(plan, experiment, threads));
}

PipelineResult analyze_pipeline(const Scenario& scenario, const std::string& records_csv) {
    const auto experiment = build_experiment(scenario);
    const auto plan = plan_campaign(experiment);
    auto store = records_from_csv(records_csv);
    auto meta = metadata_for(plan);
    for (const auto& r : store.records()) {
        const bool known_condition = std::any_of(meta.conditions.begin(), meta.conditions.end(),
                                                 [&](const ConditionInfo& c) { return c.config_state_id == r.config_state_id; });
        if (!known_condition)
            throw DiagError(ErrorCode::InvalidConfig,
                            "records reference config_state_id " + std::to_string(r.config_state_id) +
                                " which the scenario does not define");
    }
    // Settle cycles are not recorded in the CSV; reconstruct the count the campaign consumed.
    meta.settle_cycles_logged = static_cast<std::uint64_t>(meta.settle_cycles) * plan.window_count();
    store.set_metadata(std::move(meta));
    return finish(scenario, experiment, std::move(store));
}

}  // namespace fpgadiag
