#include <doctest.h>

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>
#include <random>

#include "fpgadiag/diagnosis.hpp"
#include "fpgadiag/error.hpp"
#include "fpgadiag/rng.hpp"

using namespace fpgadiag;

namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();

// Exact-mode records of one (dme, tap, condition) run.
std::vector<MeasurementRecord> exact_records(TransitionStats st, PhaseGrid grid, int phases, int window = 1000,
                                             int sweep = 0) {
    std::vector<MeasurementRecord> out;
    for (int i = 0; i < phases; ++i) {
        const double p = st.sigma > 0.0 ? 0.5 * std::erfc((grid.time(i) - st.mu) / (st.sigma * std::sqrt(2.0)))
                                        : (grid.time(i) < st.mu ? 1.0 : 0.0);
        out.push_back({sweep, 0, 0, i, 0, static_cast<int>(std::lround(p * window)), window});
    }
    return out;
}

BerProfile exact_profile(TransitionStats st, PhaseGrid grid = {0.0, 20.0}, int phases = 76) {
    return reconstruct_profile(exact_records(st, grid, phases), grid);
}

double normal_cdf(double x) { return 0.5 * std::erfc(-x / std::sqrt(2.0)); }

// Textbook two-pass Pearson.
double two_pass(const std::vector<double>& x, const std::vector<double>& y) {
    const double n = static_cast<double>(x.size());
    const double mx = std::accumulate(x.begin(), x.end(), 0.0) / n;
    const double my = std::accumulate(y.begin(), y.end(), 0.0) / n;
    double sxy = 0, sxx = 0, syy = 0;
    for (std::size_t i = 0; i < x.size(); ++i) {
        sxy += (x[i] - mx) * (y[i] - my);
        sxx += (x[i] - mx) * (x[i] - mx);
        syy += (y[i] - my) * (y[i] - my);
    }
    return sxy / std::sqrt(sxx * syy);
}

// Least-squares non-increasing fit by enumerating every contiguous partition.
double brute_force_sse(const std::vector<double>& v) {
    const std::size_t n = v.size();
    double best = kInf;
    for (unsigned mask = 0; mask < (1u << (n - 1)); ++mask) {
        std::vector<double> fit;
        std::size_t start = 0;
        double prev = kInf;
        bool ok = true;
        for (std::size_t i = 0; i < n && ok; ++i) {
            if (i + 1 == n || (mask >> i) & 1u) {
                const double m = std::accumulate(v.begin() + start, v.begin() + i + 1, 0.0) / (i + 1 - start);
                if (m > prev + 1e-12) ok = false;
                prev = m;
                fit.insert(fit.end(), i + 1 - start, m);
                start = i + 1;
            }
        }
        if (!ok) continue;
        double sse = 0.0;
        for (std::size_t i = 0; i < n; ++i) sse += (v[i] - fit[i]) * (v[i] - fit[i]);
        best = std::min(best, sse);
    }
    return best;
}

DelaySeries make_series(std::vector<std::vector<double>> rows) {
    DelaySeries s;
    for (std::size_t i = 0; i < rows.size(); ++i) {
        s.keys.push_back({static_cast<int>(i), static_cast<int>(i)});
        s.degenerate.emplace_back(rows[i].size(), false);
        const auto [lo, hi] = std::minmax_element(rows[i].begin(), rows[i].end());
        s.zero_variance.push_back(*lo == *hi);
        s.medians.push_back(std::move(rows[i]));
    }
    return s;
}

}  // namespace

TEST_CASE("PAV hand example") {
    const std::vector<double> v{1.0, 0.7, 0.8, 0.2, 0.0};
    const auto out = pav_nonincreasing(v);
    const std::vector<double> expected{1.0, 0.75, 0.75, 0.2, 0.0};
    REQUIRE(out.size() == expected.size());
    for (std::size_t i = 0; i < out.size(); ++i) CHECK(out[i] == doctest::Approx(expected[i]));
}

TEST_CASE("PAV matches exhaustive search") {
    Engine rng(5);
    std::uniform_real_distribution<double> u(0.0, 1.0);
    for (int trial = 0; trial < 300; ++trial) {
        std::vector<double> v(1 + trial % 8);
        for (auto& x : v) x = u(rng);
        const auto fit = pav_nonincreasing(v);
        double sse = 0.0;
        for (std::size_t i = 0; i < v.size(); ++i) sse += (v[i] - fit[i]) * (v[i] - fit[i]);
        CHECK(sse == doctest::Approx(brute_force_sse(v)).epsilon(1e-9));
        CHECK(std::is_sorted(fit.rbegin(), fit.rend()));
    }
}

TEST_CASE("weighted PAV pools by weight") {
    const std::vector<double> v{0.2, 0.8};
    const std::vector<double> w{3.0, 1.0};
    const auto out = pav_nonincreasing(v, w);
    CHECK(out[0] == doctest::Approx(0.35));
    CHECK(out[1] == doctest::Approx(0.35));
}

TEST_CASE("exact profile follows the Gaussian survival function") {
    const auto p = exact_profile({500.0, 20.0});
    CHECK_FALSE(p.monotone_clamped);
    CHECK(p.coverage_complete);
    for (std::size_t i = 0; i < p.phase.size(); ++i)
        CHECK(std::abs(p.ber[i] - (1.0 - normal_cdf((p.phase[i] - 500.0) / 20.0))) <= 0.5 / 1000 + 1e-12);
}

TEST_CASE("profile reconstruction errors") {
    const PhaseGrid grid{0.0, 20.0};
    auto recs = exact_records({500.0, 20.0}, grid, 76);
    CHECK_THROWS_WITH_AS(reconstruct_profile(recs, grid, 3), doctest::Contains("EmptyInput"), DiagError);
    recs.erase(recs.begin() + 10);
    CHECK_THROWS_WITH_AS(reconstruct_profile(recs, grid), doctest::Contains("GapInPhaseGrid"), DiagError);
}

TEST_CASE("delay stats resolve a Gaussian within one phase step") {
    const auto s = extract_delay_stats(exact_profile({500.0, 20.0}));
    CHECK(std::abs(s.median - 500.0) <= 20.0);
    CHECK(std::abs(s.sigma_est - 20.0) <= 5.0);
    CHECK(s.q05 < s.median);
    CHECK(s.q95 > s.median);
}

TEST_CASE("step profile has sub-step spread") {
    const auto s = extract_delay_stats(exact_profile({510.0, 0.0}));
    CHECK(s.sigma_est <= 20.0);
    CHECK(std::abs(s.median - 510.0) <= 20.0);
}

TEST_CASE("saturated profile is out of range") {
    const auto p = exact_profile({5000.0, 20.0});
    CHECK_FALSE(p.coverage_complete);
    CHECK_THROWS_WITH_AS(extract_delay_stats(p), doctest::Contains("TransitionOutOfRange"), DiagError);
}

TEST_CASE("CDF interpolation reproduces a Gaussian") {
    const auto cdf = empirical_cdf(exact_profile({500.0, 20.0}));
    for (double t = 430.0; t <= 570.0; t += 5.0) CHECK(std::abs(cdf.at(t) - normal_cdf((t - 500.0) / 20.0)) < 2e-3);
    CHECK(cdf.at(-100.0) == cdf.values.front());
    CHECK(cdf.at(1e6) == cdf.values.back());
    CHECK(cdf.quantile(0.5) == doctest::Approx(500.0).epsilon(0.01));
}

TEST_CASE("a multiplicative stress translates the CDF laterally") {
    const auto base = empirical_cdf(exact_profile({800.0, 25.0}, {500.0, 20.0}, 36));
    const auto stressed = empirical_cdf(exact_profile({840.0, 26.25}, {500.0, 20.0}, 36));
    double gap = 0.0;
    for (double t = 700.0; t <= 900.0; t += 1.0) gap = std::max(gap, std::abs(stressed.at(t + 40.0) - base.at(t)));
    CHECK(gap < 0.02);
}

TEST_CASE("extra branch variance flattens the CDF at its median") {
    const auto base = empirical_cdf(exact_profile({800.0, 6.0}, {600.0, 20.0}, 25));
    const auto routed = empirical_cdf(exact_profile({860.0, 10.0}, {600.0, 20.0}, 25));
    const double slope_base = (base.at(805.0) - base.at(795.0)) / 10.0;
    const double slope_routed = (routed.at(865.0) - routed.at(855.0)) / 10.0;
    CHECK(slope_routed < slope_base);
}

TEST_CASE("compute_delta") {
    const auto zero = compute_delta({800.0, 6.0}, {800.0, 6.0}, 20.0);
    CHECK(zero.delta_mu == 0.0);
    CHECK(zero.delta_sigma == 0.0);
    CHECK(zero.delta_mu_rel == 0.0);

    const auto pdn = compute_delta({800.0, 6.0}, {840.0, 6.3}, 20.0);
    CHECK(pdn.delta_mu == doctest::Approx(40.0));
    CHECK(pdn.delta_mu_rel == doctest::Approx(0.05));
    CHECK(pdn.delta_sigma == doctest::Approx(0.3));
    CHECK(pdn.delta_mu_steps == doctest::Approx(2.0));

    const auto routing = compute_delta({800.0, 6.0}, {860.0, 10.0}, 20.0);
    CHECK(routing.delta_mu == doctest::Approx(60.0));
    CHECK(routing.delta_sigma == doctest::Approx(4.0));
    CHECK(routing.delta_sigma_steps == doctest::Approx(0.2));
}

TEST_CASE("a common offset of whole phase steps cancels in the deltas") {
    const PhaseGrid grid{0.0, 20.0};
    const auto d0 = compute_delta(extract_delay_stats(exact_profile({500.0, 20.0}, grid)),
                                  extract_delay_stats(exact_profile({540.0, 25.0}, grid)), 20.0);
    const auto d1 = compute_delta(extract_delay_stats(exact_profile({560.0, 20.0}, grid)),
                                  extract_delay_stats(exact_profile({600.0, 25.0}, grid)), 20.0);
    CHECK(d1.delta_mu == doctest::Approx(d0.delta_mu).epsilon(1e-9));
    CHECK(d1.delta_sigma == doctest::Approx(d0.delta_sigma).epsilon(1e-9));
}

TEST_CASE("pearson") {
    const std::vector<double> x{1, 2, 3, 4};
    const std::vector<double> y{2, 4, 6, 8};
    CHECK(*pearson(x, y) == 1.0);
    CHECK(*pearson(x, x) == 1.0);
    const std::vector<double> neg{8, 6, 4, 2};
    CHECK(*pearson(x, neg) == doctest::Approx(-1.0));
    const std::vector<double> flat{3, 3, 3, 3};
    CHECK_FALSE(pearson(x, flat).has_value());
    CHECK_FALSE(pearson(std::vector<double>{1.0}, std::vector<double>{2.0}).has_value());
}

TEST_CASE("pearson agrees with the two-pass formula") {
    Engine rng(11);
    std::normal_distribution<double> n(1e4, 3.0);
    for (int trial = 0; trial < 100; ++trial) {
        std::vector<double> x(20), y(20);
        for (std::size_t i = 0; i < x.size(); ++i) {
            x[i] = n(rng);
            y[i] = 0.3 * x[i] + n(rng);
        }
        CHECK(*pearson(x, y) == doctest::Approx(two_pass(x, y)).epsilon(1e-9));
    }
}

TEST_CASE("pearson null distribution") {
    int small = 0;
    const int seeds = 1000;
    for (int s = 0; s < seeds; ++s) {
        auto rng = keyed_engine({static_cast<std::uint64_t>(s), 0x6e756c6cULL});
        std::normal_distribution<double> n(0.0, 1.0);
        std::vector<double> x(200), y(200);
        for (auto& v : x) v = n(rng);
        for (auto& v : y) v = n(rng);
        if (std::abs(*pearson(x, y)) < 0.2) ++small;
    }
    CHECK(small >= 0.99 * seeds);
}

TEST_CASE("spearman uses average ranks") {
    const std::vector<double> x{1, 2, 2, 3};
    const std::vector<double> y{1, 3, 2, 4};
    CHECK(*spearman(x, y) == doctest::Approx(4.5 / std::sqrt(22.5)));
    const std::vector<double> a{1, 2, 3, 4, 5};
    const std::vector<double> b{1, 8, 27, 64, 125};
    CHECK(*spearman(a, b) == doctest::Approx(1.0));
}

TEST_CASE("decay length fit") {
    std::vector<CorrelationBin> bins;
    for (int d = 0; d < 8; ++d) bins.push_back({double(d), d + 1.0, d + 0.5, std::exp(-(d + 0.5) / 1.5), 10});
    std::string method;
    CHECK(fit_decay_length({}, bins, &method) == doctest::Approx(1.5).epsilon(1e-3));
    CHECK_FALSE(method.empty());

    for (auto& b : bins) b.mean_r = 1.0;
    CHECK(fit_decay_length({}, bins) == kInf);

    const std::vector<CorrelationBin> one{{1.0, 2.0, 1.5, 0.25, 4}};
    CHECK(fit_decay_length({}, one, &method) == doctest::Approx(1.0 / std::log(2.0)));
    CHECK(method == "threshold_fallback");
}

TEST_CASE("correlation curve on synthetic series") {
    const auto s = make_series({{1, 2, 3, 4, 5}, {2, 4, 6, 8, 10}, {5, 1, 4, 2, 3}, {7, 7, 7, 7, 7}});
    const std::vector<Coord> pos{{0, 0}, {1, 0}, {5, 0}, {6, 0}};
    const auto c = spatial_correlation_curve(s, pos, 6.0);
    CHECK(c.excluded_pairs == 3);
    REQUIRE(c.pairs.size() == 3);
    CHECK(c.pairs[0].r == doctest::Approx(1.0));
    CHECK(c.pairs[0].distance == 1.0);
    CHECK(c.pairs[0].normalized_distance == doctest::Approx(1.0 / 6.0));
    CHECK(c.pairs[0].n_sweeps == 5);

    const auto flat = make_series({{1, 1, 1}, {2, 2, 2}});
    const std::vector<Coord> two{{0, 0}, {1, 0}};
    CHECK_THROWS_WITH_AS(spatial_correlation_curve(flat, two, 1.0), doctest::Contains("TooFewPairs"), DiagError);
}

TEST_CASE("per-sweep series needs two sweeps") {
    RecordStore store;
    CHECK_THROWS_WITH_AS(per_sweep_delay_series(store, 0, {}, {{0, 0}}, 1), doctest::Contains("InsufficientSweeps"),
                         DiagError);
}

TEST_CASE("per-sweep series of an unchanging run is flagged constant") {
    const PhaseGrid grid{0.0, 20.0};
    std::vector<MeasurementRecord> recs;
    for (int s = 0; s < 10; ++s) {
        const auto r = exact_records({500.0, 20.0}, grid, 76, 1000, s);
        recs.insert(recs.end(), r.begin(), r.end());
    }
    const RecordStore store(recs, {});
    const auto series = per_sweep_delay_series(store, 0, grid, {{0, 0}}, 10);
    CHECK(series.sweeps() == 10);
    CHECK(series.zero_variance[0]);
    const auto missing = per_sweep_delay_series(store, 0, grid, {{1, 1}}, 10);
    CHECK(std::isnan(missing.medians[0][0]));
    CHECK(missing.degenerate[0][0]);
}

TEST_CASE("heatmap reference, symmetry and errors") {
    const auto s = make_series({{1, 2, 3, 4, 6}, {2, 1, 4, 3, 5}, {5, 1, 4, 2, 3}, {7, 7, 7, 7, 7}});
    const std::vector<Coord> pos{{0, 0}, {2, 1}, {1, 2}, {2, 2}};
    const auto h0 = correlation_heatmap(s, pos, 0, 3, 3);
    const auto h1 = correlation_heatmap(s, pos, 1, 3, 3);
    CHECK(*h0.at({0, 0}) == 1.0);
    CHECK(h0.reference_dme == 0);
    CHECK(*h0.at({2, 1}) == doctest::Approx(*h1.at({0, 0})));
    CHECK_FALSE(h0.at({2, 2}).has_value());
    CHECK_FALSE(h0.at({1, 1}).has_value());
    CHECK_THROWS_WITH_AS(correlation_heatmap(s, pos, 3, 3, 3), doctest::Contains("ZeroVarianceReference"), DiagError);
    CHECK(central_series(pos, 3, 3) == 1);
}

TEST_CASE("scaling on a single pair and oversize subsets") {
    const auto s = make_series({{1, 2, 3, 4, 6}, {2, 1, 4, 3, 5}});
    const std::vector<Coord> pos{{0, 0}, {1, 0}};
    const double r = *pearson(s.medians[0], s.medians[1]);
    const std::vector<int> two{2};
    const auto rows = dme_count_scaling(s, pos, two, 50, 1);
    REQUIRE(rows.size() == 1);
    CHECK(rows[0].mean_r == doctest::Approx(r));
    CHECK(rows[0].ci_low == doctest::Approx(r));
    CHECK(rows[0].ci_high == doctest::Approx(r));
    const std::vector<int> three{3};
    CHECK_THROWS_WITH_AS(dme_count_scaling(s, pos, three, 50, 1), doctest::Contains("SubsetTooLarge"), DiagError);
    CHECK(dme_count_scaling(s, pos, two, 50, 1)[0].ci_low == rows[0].ci_low);
}

TEST_CASE("classifier rule examples") {
    Evidence none;
    none.mean_abs_shift_rel = 0.0;
    CHECK(classify_mechanism(none).mechanism == Mechanism::NoDegradation);

    Evidence pdn;
    pdn.mean_abs_shift_rel = 0.04;
    pdn.uniformity_cv = 0.03;
    pdn.median_dsigma_steps = 0.1;
    pdn.max_dsigma_steps = 0.1;
    pdn.decay_length = 10.0;
    CHECK(classify_mechanism(pdn).mechanism == Mechanism::PdnInduced);

    Evidence routing;
    routing.mean_abs_shift_rel = 0.05;
    routing.uniformity_cv = 0.6;
    routing.median_dsigma_steps = 1.8;
    routing.max_dsigma_steps = 1.8;
    routing.decay_length = 1.2;
    CHECK(classify_mechanism(routing).mechanism == Mechanism::RoutingInduced);

    auto mixed = routing;
    mixed.decay_length = 3.0;
    CHECK(classify_mechanism(mixed).mechanism == Mechanism::Mixed);
    mixed.decay_length = std::numeric_limits<double>::quiet_NaN();
    CHECK(classify_mechanism(mixed).mechanism == Mechanism::Mixed);

    Thresholds strict;
    strict.detect = 0.1;
    CHECK(classify_mechanism(pdn, strict).mechanism == Mechanism::NoDegradation);
    CHECK(classify_mechanism(pdn, strict).thresholds == strict);
}

TEST_CASE("evidence summary") {
    const std::vector<DeltaStats> d{{40, 0.05, 2, 2, 0.1}, {40, 0.05, 4, 2, 0.2}, {20, 0.02, 60, 1, 3.0}};
    const auto e = gather_evidence(d, 5.0);
    CHECK(e.taps == 3);
    CHECK(e.mean_abs_shift_rel == doctest::Approx(0.04));
    CHECK(e.uniformity_cv == doctest::Approx(std::sqrt(0.0002) / 0.04));
    CHECK(e.median_dsigma_steps == doctest::Approx(0.2));
    CHECK(e.max_dsigma_steps == doctest::Approx(3.0));
    CHECK(e.decay_length == 5.0);
    CHECK_THROWS_AS(gather_evidence({}, 1.0), DiagError);
}
