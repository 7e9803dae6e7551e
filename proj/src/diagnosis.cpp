#include "fpgadiag/diagnosis.hpp"

#include <algorithm>
#include <cmath>
#include <map>
#include <numeric>

#include <boost/math/distributions/normal.hpp>

#include "fpgadiag/error.hpp"
#include "fpgadiag/rng.hpp"

namespace fpgadiag {

namespace {

constexpr double kNaN = std::numeric_limits<double>::quiet_NaN();
constexpr double kInf = std::numeric_limits<double>::infinity();

// Fritsch-Carlson derivatives for monotone cubic Hermite interpolation.
std::vector<double> pchip_slopes(const std::vector<double>& x, const std::vector<double>& y) {
    const std::size_t n = x.size();
    std::vector<double> d(n, 0.0);
    if (n < 2) return d;
    std::vector<double> h(n - 1), del(n - 1);
    for (std::size_t k = 0; k + 1 < n; ++k) {
        h[k] = x[k + 1] - x[k];
        del[k] = (y[k + 1] - y[k]) / h[k];
    }
    if (n == 2) {
        d[0] = d[1] = del[0];
        return d;
    }
    for (std::size_t k = 1; k + 1 < n; ++k) {
        if (del[k - 1] * del[k] <= 0.0) continue;
        const double w1 = 2.0 * h[k] + h[k - 1];
        const double w2 = h[k] + 2.0 * h[k - 1];
        d[k] = (w1 + w2) / (w1 / del[k - 1] + w2 / del[k]);
    }
    auto edge = [](double h0, double h1, double m0, double m1) {
        double e = ((2.0 * h0 + h1) * m0 - h0 * m1) / (h0 + h1);
        if (std::signbit(e) != std::signbit(m0) || m0 == 0.0) return 0.0;
        if (std::signbit(m0) != std::signbit(m1) && std::abs(e) > 3.0 * std::abs(m0)) return 3.0 * m0;
        return e;
    };
    d[0] = edge(h[0], h[1], del[0], del[1]);
    d[n - 1] = edge(h[n - 2], h[n - 3], del[n - 2], del[n - 3]);
    return d;
}

double quantile_linear(const std::vector<double>& t, const std::vector<double>& f, double p) {
    const auto it = std::lower_bound(f.begin(), f.end(), p);
    if (it == f.begin()) return t.front();
    if (it == f.end()) return t.back();
    const auto i = static_cast<std::size_t>(it - f.begin());
    return t[i - 1] + (p - f[i - 1]) / (f[i] - f[i - 1]) * (t[i] - t[i - 1]);
}

double percentile(std::vector<double> v, double q) {
    std::sort(v.begin(), v.end());
    if (v.empty()) return kNaN;
    const double pos = q * static_cast<double>(v.size() - 1);
    const auto lo = static_cast<std::size_t>(std::floor(pos));
    const auto hi = std::min(lo + 1, v.size() - 1);
    return v[lo] + (pos - static_cast<double>(lo)) * (v[hi] - v[lo]);
}

// Pearson over the sweeps where both series are valid; nullopt if < 3 remain.
std::optional<double> joint_pearson(const std::vector<double>& x, const std::vector<double>& y, int* used = nullptr) {
    std::vector<double> a, b;
    for (std::size_t s = 0; s < x.size(); ++s)
        if (!std::isnan(x[s]) && !std::isnan(y[s])) {
            a.push_back(x[s]);
            b.push_back(y[s]);
        }
    if (used) *used = static_cast<int>(a.size());
    if (a.size() < 3) return std::nullopt;
    return pearson(a, b);
}

}  // namespace

std::vector<double> pav_nonincreasing(std::span<const double> values, std::span<const double> weights) {
    if (!weights.empty() && weights.size() != values.size())
        throw DiagError(ErrorCode::InvalidConfig, "PAV weights must match values");
    struct Block {
        double value;
        double weight;
        std::size_t count;
    };
    std::vector<Block> blocks;
    blocks.reserve(values.size());
    for (std::size_t i = 0; i < values.size(); ++i) {
        blocks.push_back({values[i], weights.empty() ? 1.0 : weights[i], 1});
        // A later block above an earlier one violates non-increasing order.
        while (blocks.size() > 1 && blocks[blocks.size() - 2].value < blocks.back().value) {
            const Block top = blocks.back();
            blocks.pop_back();
            Block& prev = blocks.back();
            const double w = prev.weight + top.weight;
            prev.value = (prev.value * prev.weight + top.value * top.weight) / w;
            prev.weight = w;
            prev.count += top.count;
        }
    }
    std::vector<double> out;
    out.reserve(values.size());
    for (const auto& b : blocks) out.insert(out.end(), b.count, b.value);
    return out;
}

BerProfile reconstruct_profile(std::span<const MeasurementRecord> records, PhaseGrid grid, std::optional<int> sweep) {
    std::map<int, std::pair<long long, long long>> by_phase;  // errors, cycles
    for (const auto& r : records) {
        if (sweep && r.sweep_id != *sweep) continue;
        auto& acc = by_phase[r.phase_index];
        acc.first += r.error_count;
        acc.second += r.window_cycles;
    }
    if (by_phase.empty()) throw DiagError(ErrorCode::EmptyInput, "no records for the requested profile");
    const int first = by_phase.begin()->first;
    const int last = by_phase.rbegin()->first;
    if (static_cast<std::size_t>(last - first + 1) != by_phase.size())
        throw DiagError(ErrorCode::GapInPhaseGrid, "phase indices " + std::to_string(first) + ".." +
                                                       std::to_string(last) + " are not contiguous");

    BerProfile p;
    p.first_phase_index = first;
    std::vector<double> w;
    for (const auto& [idx, acc] : by_phase) {
        p.phase.push_back(grid.time(idx));
        p.raw.push_back(static_cast<double>(acc.first) / static_cast<double>(acc.second));
        w.push_back(static_cast<double>(acc.second));
    }
    p.ber = pav_nonincreasing(p.raw, w);
    p.monotone_clamped = p.ber != p.raw;
    p.coverage_complete = p.ber.front() >= 0.99 && p.ber.back() <= 0.01;
    return p;
}

DelayStats extract_delay_stats(const BerProfile& profile) {
    if (profile.ber.empty()) throw DiagError(ErrorCode::EmptyInput, "empty profile");
    if (!profile.coverage_complete)
        throw DiagError(ErrorCode::TransitionOutOfRange,
                        "BER does not saturate at both ends of the sweep (start " + std::to_string(profile.ber.front()) +
                            ", end " + std::to_string(profile.ber.back()) + ")");
    std::vector<double> f(profile.ber.size());
    std::transform(profile.ber.begin(), profile.ber.end(), f.begin(), [](double b) { return 1.0 - b; });
    DelayStats s;
    s.median = quantile_linear(profile.phase, f, 0.5);
    s.sigma_est = std::max(0.0, (quantile_linear(profile.phase, f, 0.8413) - quantile_linear(profile.phase, f, 0.1587)) / 2.0);
    s.q05 = quantile_linear(profile.phase, f, 0.05);
    s.q95 = quantile_linear(profile.phase, f, 0.95);
    return s;
}

double CdfCurve::at(double t) const {
    if (times.empty()) return kNaN;
    if (t <= times.front()) return values.front();
    if (t >= times.back()) return values.back();
    const auto i = static_cast<std::size_t>(std::upper_bound(times.begin(), times.end(), t) - times.begin()) - 1;
    const double h = times[i + 1] - times[i];
    const double s = (t - times[i]) / h;
    const double h00 = (1 + 2 * s) * (1 - s) * (1 - s);
    const double h10 = s * (1 - s) * (1 - s);
    const double h01 = s * s * (3 - 2 * s);
    const double h11 = s * s * (s - 1);
    const double z = h00 * scores[i] + h10 * h * slopes[i] + h01 * scores[i + 1] + h11 * h * slopes[i + 1];
    return boost::math::cdf(boost::math::normal(), z);
}

double CdfCurve::quantile(double p) const { return quantile_linear(times, values, p); }

CdfCurve empirical_cdf(const BerProfile& profile) {
    const boost::math::normal unit;
    const double floor = boost::math::cdf(unit, -kCdfScoreLimit);
    CdfCurve c;
    c.times = profile.phase;
    for (double b : profile.ber) {
        const double v = std::clamp(1.0 - b, 0.0, 1.0);
        c.values.push_back(v);
        c.scores.push_back(boost::math::quantile(unit, std::clamp(v, floor, 1.0 - floor)));
    }
    c.slopes = pchip_slopes(c.times, c.scores);
    return c;
}

DeltaStats compute_delta(const DelayStats& baseline, const DelayStats& stressed, double phase_step) {
    DeltaStats d;
    d.delta_mu = stressed.median - baseline.median;
    d.delta_mu_rel = baseline.median != 0.0 ? d.delta_mu / baseline.median : kNaN;
    d.delta_sigma = stressed.sigma_est - baseline.sigma_est;
    d.delta_mu_steps = d.delta_mu / phase_step;
    d.delta_sigma_steps = d.delta_sigma / phase_step;
    return d;
}

std::optional<double> pearson(std::span<const double> x, std::span<const double> y) {
    if (x.size() != y.size() || x.size() < 2) return std::nullopt;
    // Single-pass co-moment update.
    double mx = 0.0, my = 0.0, sxx = 0.0, syy = 0.0, sxy = 0.0;
    for (std::size_t i = 0; i < x.size(); ++i) {
        const double n = static_cast<double>(i + 1);
        const double dx = x[i] - mx;
        const double dy = y[i] - my;
        mx += dx / n;
        my += dy / n;
        sxx += dx * (x[i] - mx);
        syy += dy * (y[i] - my);
        sxy += dx * (y[i] - my);
    }
    if (!(sxx > 0.0) || !(syy > 0.0)) return std::nullopt;
    return std::clamp(sxy / std::sqrt(sxx * syy), -1.0, 1.0);
}

std::optional<double> spearman(std::span<const double> x, std::span<const double> y) {
    if (x.size() != y.size()) return std::nullopt;
    auto ranks = [](std::span<const double> v) {
        std::vector<std::size_t> idx(v.size());
        std::iota(idx.begin(), idx.end(), 0);
        std::stable_sort(idx.begin(), idx.end(), [&](auto a, auto b) { return v[a] < v[b]; });
        std::vector<double> r(v.size());
        for (std::size_t i = 0; i < idx.size();) {
            std::size_t j = i;
            while (j + 1 < idx.size() && v[idx[j + 1]] == v[idx[i]]) ++j;
            const double avg = (static_cast<double>(i) + static_cast<double>(j)) / 2.0 + 1.0;
            for (std::size_t k = i; k <= j; ++k) r[idx[k]] = avg;
            i = j + 1;
        }
        return r;
    };
    const auto rx = ranks(x);
    const auto ry = ranks(y);
    return pearson(rx, ry);
}

DelaySeries per_sweep_delay_series(const RecordStore& store, int config_state_id, PhaseGrid grid,
                                   const std::vector<ScheduleEntry>& schedule, int num_sweeps) {
    if (num_sweeps < 2)
        throw DiagError(ErrorCode::InsufficientSweeps, "need at least 2 sweeps, have " + std::to_string(num_sweeps));
    DelaySeries out;
    for (const auto& key : schedule) {
        const auto recs = store.slice(config_state_id, key.dme_id, key.tap_id);
        std::vector<double> row(static_cast<std::size_t>(num_sweeps), kNaN);
        std::vector<bool> bad(static_cast<std::size_t>(num_sweeps), true);
        for (int s = 0; s < num_sweeps; ++s) {
            try {
                row[static_cast<std::size_t>(s)] = extract_delay_stats(reconstruct_profile(recs, grid, s)).median;
                bad[static_cast<std::size_t>(s)] = false;
            } catch (const DiagError& e) {
                if (e.code() != ErrorCode::EmptyInput && e.code() != ErrorCode::TransitionOutOfRange &&
                    e.code() != ErrorCode::GapInPhaseGrid)
                    throw;
            }
        }
        double lo = kInf, hi = -kInf;
        int valid = 0;
        for (double v : row)
            if (!std::isnan(v)) {
                lo = std::min(lo, v);
                hi = std::max(hi, v);
                ++valid;
            }
        out.keys.push_back(key);
        out.medians.push_back(std::move(row));
        out.degenerate.push_back(std::move(bad));
        out.zero_variance.push_back(valid < 2 || lo == hi);
    }
    return out;
}

double fit_decay_length(std::span<const CorrelationPair> pairs, std::span<const CorrelationBin> bins,
                        std::string* method) {
    (void)pairs;
    // Count-weighted least squares of the binned means against exp(-d / l),
    // scanned on a log grid of l and refined by golden section.
    std::vector<const CorrelationBin*> used;
    for (const auto& b : bins)
        if (b.count > 0 && b.mean_distance > 0.0) used.push_back(&b);
    auto sse = [&](double log_l) {
        const double l = std::exp(log_l);
        double acc = 0.0;
        for (const auto* b : used) {
            const double e = b->mean_r - std::exp(-b->mean_distance / l);
            acc += b->count * e * e;
        }
        return acc;
    };
    if (used.size() >= 2) {
        constexpr double lo = -4.0;  // l = 0.018 CLB
        constexpr double hi = 12.0;  // l = 1.6e5 CLB
        constexpr int steps = 320;
        int best = 0;
        double best_v = kInf;
        for (int k = 0; k <= steps; ++k) {
            const double v = sse(lo + (hi - lo) * k / steps);
            if (v < best_v) {
                best_v = v;
                best = k;
            }
        }
        if (method) *method = "binned_least_squares";
        if (best == steps) return kInf;
        double a = lo + (hi - lo) * std::max(0, best - 1) / steps;
        double b = lo + (hi - lo) * std::min(steps, best + 1) / steps;
        const double g = (std::sqrt(5.0) - 1.0) / 2.0;
        for (int it = 0; it < 60; ++it) {
            const double c = b - g * (b - a);
            const double d = a + g * (b - a);
            if (sse(c) <= sse(d)) b = d;
            else a = c;
        }
        return std::exp((a + b) / 2.0);
    }

    if (method) *method = "threshold_fallback";
    double prev_d = 0.0, prev_r = 1.0;
    for (const auto& b : bins) {
        if (b.count == 0) continue;
        if (b.mean_r < 0.5) {
            // Interpolate the 0.5 crossing, then convert to the exponential scale.
            const double d = prev_d + (prev_r - 0.5) / (prev_r - b.mean_r) * (b.mean_distance - prev_d);
            return d / std::log(2.0);
        }
        prev_d = b.mean_distance;
        prev_r = b.mean_r;
    }
    return kInf;
}

CorrelationCurve spatial_correlation_curve(const DelaySeries& series, std::span<const Coord> positions,
                                           double region_diagonal) {
    if (positions.size() != series.keys.size())
        throw DiagError(ErrorCode::InvalidConfig, "one position per series required");
    CorrelationCurve c;
    const std::size_t n = series.keys.size();
    for (std::size_t i = 0; i < n; ++i)
        for (std::size_t j = i + 1; j < n; ++j) {
            if (series.zero_variance[i] || series.zero_variance[j]) {
                ++c.excluded_pairs;
                continue;
            }
            int used = 0;
            const auto r = joint_pearson(series.medians[i], series.medians[j], &used);
            if (!r) {
                ++c.excluded_pairs;
                continue;
            }
            CorrelationPair p;
            p.a = i;
            p.b = j;
            p.distance = euclidean(positions[i], positions[j]);
            p.normalized_distance = region_diagonal > 0.0 ? p.distance / region_diagonal : 0.0;
            p.r = *r;
            p.n_sweeps = used;
            c.pairs.push_back(p);
        }
    if (c.pairs.empty())
        throw DiagError(ErrorCode::TooFewPairs, "no monitor pair has two non-constant delay series");

    std::map<int, CorrelationBin> bins;
    for (const auto& p : c.pairs) {
        const int b = static_cast<int>(std::floor(p.distance));
        auto& bin = bins[b];
        bin.lo = b;
        bin.hi = b + 1;
        bin.mean_distance += p.distance;
        bin.mean_r += p.r;
        ++bin.count;
    }
    for (auto& [k, bin] : bins) {
        bin.mean_distance /= bin.count;
        bin.mean_r /= bin.count;
        c.bins.push_back(bin);
    }
    c.decay_length = fit_decay_length(c.pairs, c.bins, &c.fit_method);
    return c;
}

std::vector<ScalingRow> dme_count_scaling(const DelaySeries& series, std::span<const Coord> positions,
                                          std::span<const int> sizes, int reps, std::uint64_t seed) {
    const std::size_t m = series.keys.size();
    if (positions.size() != m) throw DiagError(ErrorCode::InvalidConfig, "one position per series required");
    if (reps < 1) throw DiagError(ErrorCode::InvalidConfig, "bootstrap reps must be >= 1");

    std::vector<double> r(m * m, kNaN);
    for (std::size_t a = 0; a < m; ++a)
        for (std::size_t b = a + 1; b < m; ++b)
            if (!series.zero_variance[a] && !series.zero_variance[b])
                if (const auto v = joint_pearson(series.medians[a], series.medians[b])) r[a * m + b] = r[b * m + a] = *v;

    std::vector<ScalingRow> out;
    for (int n : sizes) {
        if (n < 2) throw DiagError(ErrorCode::InvalidConfig, "subset size must be >= 2");
        if (static_cast<std::size_t>(n) > m)
            throw DiagError(ErrorCode::SubsetTooLarge,
                            "subset size " + std::to_string(n) + " exceeds " + std::to_string(m) + " monitors");
        std::vector<double> means;
        for (int rep = 0; rep < reps; ++rep) {
            auto rng = keyed_engine({seed, stream::bootstrap, static_cast<std::uint64_t>(n), static_cast<std::uint64_t>(rep)});
            const std::size_t anchor = std::uniform_int_distribution<std::size_t>(0, m - 1)(rng);
            std::vector<std::size_t> subset(m);
            std::iota(subset.begin(), subset.end(), 0);
            std::stable_sort(subset.begin(), subset.end(), [&](std::size_t a, std::size_t b) {
                return euclidean(positions[a], positions[anchor]) < euclidean(positions[b], positions[anchor]);
            });
            subset.resize(static_cast<std::size_t>(n));

            // Resample monitors of the subset with replacement; repeated draws of one monitor form no pair.
            std::vector<std::size_t> pick(subset.size());
            std::uniform_int_distribution<std::size_t> draw(0, subset.size() - 1);
            for (auto& p : pick) p = subset[draw(rng)];
            double sum = 0.0;
            int count = 0;
            for (std::size_t a = 0; a < pick.size(); ++a)
                for (std::size_t b = a + 1; b < pick.size(); ++b) {
                    const double v = r[pick[a] * m + pick[b]];
                    if (pick[a] == pick[b] || std::isnan(v)) continue;
                    sum += v;
                    ++count;
                }
            if (count > 0) means.push_back(sum / count);
        }
        ScalingRow row;
        row.n = n;
        row.mean_r = means.empty() ? kNaN : std::accumulate(means.begin(), means.end(), 0.0) / static_cast<double>(means.size());
        row.ci_low = percentile(means, 0.025);
        row.ci_high = percentile(means, 0.975);
        out.push_back(row);
    }
    return out;
}

std::size_t central_series(std::span<const Coord> positions, int width, int height) {
    if (positions.empty()) throw DiagError(ErrorCode::EmptyInput, "no monitor positions");
    const double cx = (width - 1) / 2.0;
    const double cy = (height - 1) / 2.0;
    std::size_t best = 0;
    double best_d = kInf;
    for (std::size_t i = 0; i < positions.size(); ++i) {
        const double d = std::hypot(positions[i].col - cx, positions[i].row - cy);
        if (d < best_d - 1e-12) {
            best_d = d;
            best = i;
        }
    }
    return best;
}

HeatmapGrid correlation_heatmap(const DelaySeries& series, std::span<const Coord> positions, std::size_t reference,
                                int width, int height) {
    if (reference >= series.keys.size() || positions.size() != series.keys.size())
        throw DiagError(ErrorCode::InvalidConfig, "reference series out of range");
    if (series.zero_variance[reference])
        throw DiagError(ErrorCode::ZeroVarianceReference,
                        "reference monitor " + std::to_string(series.keys[reference].dme_id) + " has a constant series");
    HeatmapGrid g;
    g.width = width;
    g.height = height;
    g.reference_dme = series.keys[reference].dme_id;
    g.reference = positions[reference];
    g.cells.assign(static_cast<std::size_t>(width) * static_cast<std::size_t>(height), std::nullopt);
    auto cell = [&](Coord c) -> std::optional<double>& {
        return g.cells.at(static_cast<std::size_t>(c.row) * static_cast<std::size_t>(width) + static_cast<std::size_t>(c.col));
    };
    cell(g.reference) = 1.0;
    for (std::size_t i = 0; i < series.keys.size(); ++i) {
        if (i == reference || series.zero_variance[i] || cell(positions[i])) continue;
        cell(positions[i]) = joint_pearson(series.medians[reference], series.medians[i]);
    }
    return g;
}

std::string_view to_string(Mechanism m) {
    switch (m) {
        case Mechanism::NoDegradation: return "NoDegradation";
        case Mechanism::PdnInduced: return "PdnInduced";
        case Mechanism::RoutingInduced: return "RoutingInduced";
        case Mechanism::Mixed: return "Mixed";
    }
    return "Unknown";
}

Evidence gather_evidence(std::span<const DeltaStats> deltas, double decay_length) {
    if (deltas.empty()) throw DiagError(ErrorCode::MissingBaseline, "no baseline/stressed pairs to compare");
    Evidence e;
    e.taps = static_cast<int>(deltas.size());
    e.decay_length = decay_length;
    double sum = 0.0, sum_abs = 0.0;
    std::vector<double> ds;
    for (const auto& d : deltas) {
        sum += d.delta_mu_rel;
        sum_abs += std::abs(d.delta_mu_rel);
        ds.push_back(d.delta_sigma_steps);
    }
    const double n = static_cast<double>(deltas.size());
    const double mean = sum / n;
    double var = 0.0;
    for (const auto& d : deltas) var += (d.delta_mu_rel - mean) * (d.delta_mu_rel - mean);
    var /= n;
    e.mean_abs_shift_rel = sum_abs / n;
    e.uniformity_cv = mean != 0.0 ? std::sqrt(var) / std::abs(mean) : kInf;
    e.max_dsigma_steps = *std::max_element(ds.begin(), ds.end());
    std::sort(ds.begin(), ds.end());
    e.median_dsigma_steps = ds.size() % 2 ? ds[ds.size() / 2] : (ds[ds.size() / 2 - 1] + ds[ds.size() / 2]) / 2.0;
    return e;
}

MechanismVerdict classify_mechanism(const Evidence& evidence, const Thresholds& thresholds) {
    MechanismVerdict v;
    v.evidence = evidence;
    v.thresholds = thresholds;
    const auto& e = evidence;
    if (e.mean_abs_shift_rel < thresholds.detect)
        v.mechanism = Mechanism::NoDegradation;
    else if (e.uniformity_cv < thresholds.uniformity && e.median_dsigma_steps < thresholds.spread &&
             e.decay_length > thresholds.pdn_decay)
        v.mechanism = Mechanism::PdnInduced;
    else if (e.max_dsigma_steps >= thresholds.routing_spread && e.decay_length < thresholds.routing_decay)
        v.mechanism = Mechanism::RoutingInduced;
    else
        v.mechanism = Mechanism::Mixed;
    return v;
}

}  // namespace fpgadiag
