#include "fpgadiag/campaign.hpp"

#include <algorithm>
#include <atomic>
#include <charconv>
#include <cmath>
#include <exception>
#include <istream>
#include <limits>
#include <ostream>
#include <set>
#include <sstream>
#include <thread>

#include "fpgadiag/error.hpp"

namespace fpgadiag {

namespace {

template <typename T>
const T& find_by_id(const std::vector<T>& items, int id, const char* what) {
    const auto it = std::find_if(items.begin(), items.end(), [id](const T& x) { return x.id == id; });
    if (it == items.end()) throw DiagError(ErrorCode::InvalidConfig, std::string("unknown ") + what + " " + std::to_string(id));
    return *it;
}

}  // namespace

const RoutedPath& Experiment::path(int id) const { return find_by_id(paths, id, "path"); }
const DelayTap& Experiment::tap(int id) const { return find_by_id(taps, id, "tap"); }
const DmePlacement& Experiment::dme(int id) const { return find_by_id(dmes, id, "monitor"); }

std::uint64_t condition_seed(std::uint64_t seed, int config_state_id) {
    return mix_key({seed, static_cast<std::uint64_t>(config_state_id)});
}

CampaignPlan plan_campaign(const Experiment& experiment) {
    CampaignPlan plan;
    plan.seed = experiment.seed;

    const auto base = std::find_if(experiment.conditions.begin(), experiment.conditions.end(),
                                   [](const ConditionState& c) { return c.kind == ConditionKind::Baseline; });
    if (base == experiment.conditions.end())
        throw DiagError(ErrorCode::MissingBaseline, "campaign has no baseline condition");
    plan.conditions.push_back(*base);
    for (auto it = experiment.conditions.begin(); it != experiment.conditions.end(); ++it)
        if (it != base) plan.conditions.push_back(*it);
    std::set<int> ids;
    for (const auto& c : plan.conditions)
        if (!ids.insert(c.config_state_id).second)
            throw DiagError(ErrorCode::InvalidConfig, "duplicate config_state_id " + std::to_string(c.config_state_id));

    for (const auto& d : experiment.dmes)
        for (int t : d.assigned_taps) {
            const auto& tap = experiment.tap(t);
            (void)experiment.path(tap.path_id);
            plan.schedule.push_back({d.id, t});
        }
    if (plan.schedule.empty()) throw DiagError(ErrorCode::EmptySchedule, "no (monitor, tap) pairs to measure");

    plan.sweep = experiment.sweep;
    if (experiment.auto_phase_range) {
        // Cover every realized distribution with +-6 sigma, snapped to the step grid.
        double lo_mu = std::numeric_limits<double>::infinity();
        double hi_mu = -lo_mu;
        double max_sigma = 0.0;
        for (const auto& c : plan.conditions) {
            ConditionSampler sampler(experiment.fabric, c, experiment.taps, condition_seed(plan.seed, c.config_state_id));
            for (int s = 0; s < plan.sweep.num_sweeps; ++s) {
                const auto real = sampler.realize(s);
                for (const auto& e : plan.schedule) {
                    const auto& tap = experiment.tap(e.tap_id);
                    const auto st = effective_transition_distribution(experiment.path(tap.path_id), tap, c, real);
                    lo_mu = std::min(lo_mu, st.mu);
                    hi_mu = std::max(hi_mu, st.mu);
                    max_sigma = std::max(max_sigma, st.sigma);
                }
            }
        }
        const double step = plan.sweep.phase_step;
        if (!(step > 0.0)) throw DiagError(ErrorCode::ConstraintViolation, "phase_step must be > 0");
        plan.sweep.phase_start = std::floor((lo_mu - 6.0 * max_sigma) / step) * step;
        plan.sweep.phase_end = std::ceil((hi_mu + 6.0 * max_sigma) / step) * step;
        if (plan.sweep.phase_end <= plan.sweep.phase_start) plan.sweep.phase_end = plan.sweep.phase_start + step;
    }
    plan.sweep.validate();
    return plan;
}

CampaignMetadata metadata_for(const CampaignPlan& plan) {
    CampaignMetadata m;
    m.seed = plan.seed;
    m.phase_start = plan.sweep.phase_start;
    m.phase_step = plan.sweep.phase_step;
    m.phase_count = plan.sweep.phase_count();
    m.window_cycles = plan.sweep.window_cycles;
    m.settle_cycles = plan.sweep.settle_cycles;
    m.num_sweeps = plan.sweep.num_sweeps;
    m.mode = plan.sweep.mode;
    for (const auto& c : plan.conditions) m.conditions.push_back({c.config_state_id, c.name, c.kind});
    m.schedule = plan.schedule;
    m.settle_cycles_logged = static_cast<std::uint64_t>(plan.window_count()) *
                             static_cast<std::uint64_t>(plan.sweep.settle_cycles);
    return m;
}

bool RecordFilter::matches(const MeasurementRecord& r) const {
    return (!config_state_id || *config_state_id == r.config_state_id) && (!dme_id || *dme_id == r.dme_id) &&
           (!dt_id || *dt_id == r.dt_id) && (!sweep_id || *sweep_id == r.sweep_id) &&
           (!phase_index || *phase_index == r.phase_index);
}

RecordStore::RecordStore(std::vector<MeasurementRecord> records, CampaignMetadata metadata)
    : records_(std::move(records)), metadata_(std::move(metadata)) {
    std::sort(records_.begin(), records_.end(), [](const auto& a, const auto& b) { return a.key() < b.key(); });
    const auto dup = std::adjacent_find(records_.begin(), records_.end(),
                                        [](const auto& a, const auto& b) { return a.key() == b.key(); });
    if (dup != records_.end())
        throw DiagError(ErrorCode::DuplicateRecord,
                        "duplicate record (config " + std::to_string(dup->config_state_id) + ", dme " +
                            std::to_string(dup->dme_id) + ", dt " + std::to_string(dup->dt_id) + ", sweep " +
                            std::to_string(dup->sweep_id) + ", phase " + std::to_string(dup->phase_index) + ")");
}

std::vector<MeasurementRecord> RecordStore::query(const RecordFilter& filter) const {
    std::vector<MeasurementRecord> out;
    for (const auto& r : records_)
        if (filter.matches(r)) out.push_back(r);
    return out;
}

std::span<const MeasurementRecord> RecordStore::slice(int config_state_id, int dme_id, int dt_id) const {
    const auto lo = std::tuple(config_state_id, dme_id, dt_id, std::numeric_limits<int>::min(), 0);
    const auto hi = std::tuple(config_state_id, dme_id, dt_id + 1, std::numeric_limits<int>::min(), 0);
    const auto first = std::lower_bound(records_.begin(), records_.end(), lo,
                                        [](const MeasurementRecord& r, const auto& k) { return r.key() < k; });
    const auto last = std::lower_bound(first, records_.end(), hi,
                                       [](const MeasurementRecord& r, const auto& k) { return r.key() < k; });
    return {first, last};
}

std::vector<MeasurementRecord> query(const RecordStore& store, const RecordFilter& filter) {
    return store.query(filter);
}

void write_records_csv(const RecordStore& store, std::ostream& out) {
    out << kRecordCsvHeader << '\n';
    for (const auto& r : store.records())
        out << r.sweep_id << ',' << r.dme_id << ',' << r.dt_id << ',' << r.phase_index << ',' << r.config_state_id
            << ',' << r.error_count << ',' << r.window_cycles << '\n';
}

std::string records_to_csv(const RecordStore& store) {
    std::ostringstream os;
    write_records_csv(store, os);
    return os.str();
}

RecordStore read_records_csv(std::istream& in) {
    std::string line;
    if (!std::getline(in, line)) throw DiagError(ErrorCode::MalformedCsv, "empty input");
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line != kRecordCsvHeader) throw DiagError(ErrorCode::MalformedCsv, "line 1: unexpected header '" + line + "'");

    std::vector<MeasurementRecord> records;
    int lineno = 1;
    while (std::getline(in, line)) {
        ++lineno;
        if (!line.empty() && line.back() == '\r') line.pop_back();
        if (line.empty()) continue;
        int v[7];
        const char* p = line.data();
        const char* end = line.data() + line.size();
        for (int i = 0; i < 7; ++i) {
            const auto [next, ec] = std::from_chars(p, end, v[i]);
            if (ec != std::errc{} || (i < 6 && (next == end || *next != ',')) || (i == 6 && next != end))
                throw DiagError(ErrorCode::MalformedCsv, "line " + std::to_string(lineno) + ": expected 7 integers");
            p = next + 1;
        }
        MeasurementRecord r{v[0], v[1], v[2], v[3], v[4], v[5], v[6]};
        if (r.window_cycles < 1 || r.error_count < 0 || r.error_count > r.window_cycles || r.phase_index < 0 ||
            r.sweep_id < 0)
            throw DiagError(ErrorCode::MalformedCsv, "line " + std::to_string(lineno) + ": value out of range");
        records.push_back(r);
    }
    return RecordStore(std::move(records), {});
}

RecordStore records_from_csv(const std::string& text) {
    std::istringstream is(text);
    return read_records_csv(is);
}

RecordStore execute_campaign(const CampaignPlan& plan, const Experiment& experiment, unsigned threads) {
    const int sweeps = plan.sweep.num_sweeps;
    const std::size_t n_cond = plan.conditions.size();
    const std::size_t n_sched = plan.schedule.size();

    // One realization per (condition, sweep), shared by every monitor.
    std::vector<std::vector<SweepRealization>> realizations(n_cond);
    for (std::size_t c = 0; c < n_cond; ++c) {
        const auto& cond = plan.conditions[c];
        ConditionSampler sampler(experiment.fabric, cond, experiment.taps, condition_seed(plan.seed, cond.config_state_id));
        for (int s = 0; s < sweeps; ++s) realizations[c].push_back(sampler.realize(s));
    }

    const std::size_t units = n_cond * static_cast<std::size_t>(sweeps) * n_sched;
    std::vector<PhaseSweep> results(units);
    auto run_unit = [&](std::size_t u) {
        const std::size_t c = u / (static_cast<std::size_t>(sweeps) * n_sched);
        const std::size_t s = (u / n_sched) % static_cast<std::size_t>(sweeps);
        const auto& e = plan.schedule[u % n_sched];
        const auto& tap = experiment.tap(e.tap_id);
        results[u] = run_phase_sweep(experiment.dme(e.dme_id), experiment.path(tap.path_id), tap, plan.conditions[c],
                                     realizations[c][s], plan.sweep, plan.seed);
    };

    if (threads == 0) threads = std::max(1u, std::thread::hardware_concurrency());
    if (threads <= 1 || units < 2) {
        for (std::size_t u = 0; u < units; ++u) run_unit(u);
    } else {
        std::atomic<std::size_t> next{0};
        std::exception_ptr failure;
        std::atomic<bool> failed{false};
        std::vector<std::thread> pool;
        for (unsigned t = 0; t < std::min<std::size_t>(threads, units); ++t)
            pool.emplace_back([&] {
                for (std::size_t u = next++; u < units && !failed; u = next++) {
                    try {
                        run_unit(u);
                    } catch (...) {
                        if (!failed.exchange(true)) failure = std::current_exception();
                    }
                }
            });
        for (auto& th : pool) th.join();
        if (failure) std::rethrow_exception(failure);
    }

    // Single-writer merge; the store sorts into canonical key order.
    std::vector<MeasurementRecord> records;
    records.reserve(plan.window_count());
    std::uint64_t settle = 0;
    for (std::size_t u = 0; u < units; ++u) {
        const std::size_t c = u / (static_cast<std::size_t>(sweeps) * n_sched);
        const int s = static_cast<int>((u / n_sched) % static_cast<std::size_t>(sweeps));
        const auto& e = plan.schedule[u % n_sched];
        settle += results[u].settle_cycles_consumed;
        for (const auto& w : results[u].windows)
            records.push_back({s, e.dme_id, e.tap_id, w.phase_index, plan.conditions[c].config_state_id, w.error_count,
                               w.window_cycles});
    }
    auto meta = metadata_for(plan);
    meta.settle_cycles_logged = settle;
    return RecordStore(std::move(records), std::move(meta));
}

}  // namespace fpgadiag
