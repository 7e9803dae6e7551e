#include <doctest.h>

#include <cmath>

#include "fpgadiag/error.hpp"
#include "fpgadiag/sensing.hpp"

using namespace fpgadiag;

namespace {

// One-tile fabric whose co-located tap sees exactly N(500, 20).
struct Gaussian500 {
    FabricGrid fabric = build_fabric(2, 1, 1, [] {
        FabricParams p;
        p.delay_min = p.delay_max = 300.0;
        p.jitter_min = p.jitter_max = 0.0;
        p.launch_delay = 200.0;
        p.launch_jitter = 20.0;
        return p;
    }());
    RoutedPath path = route_functional_path(fabric, {0, 0}, {0, 0});
    DelayTap tap = attach_delay_tap(fabric, path, {0, 0}, {0, 0}, 0, "L1");
    DmePlacement dme{0, {0, 0}, {0}};
    ConditionState baseline;
    SweepRealization realization;
};

PhaseSweepConfig sweep_cfg(SamplingMode mode, int window) {
    PhaseSweepConfig c;
    c.phase_start = 0.0;
    c.phase_end = 1500.0;
    c.phase_step = 20.0;
    c.window_cycles = window;
    c.mode = mode;
    return c;
}

}  // namespace

TEST_CASE("error_probability") {
    const TransitionStats s{500.0, 20.0};
    CHECK(error_probability(s, 500.0) == doctest::Approx(0.5));
    CHECK(error_probability(s, 400.0) > 0.999999);
    CHECK(error_probability(s, 520.0) == doctest::Approx(0.15865525393145707));
    CHECK(error_probability({500.0, 0.0}, 500.0) == 0.0);
    CHECK(error_probability({500.0, 0.0}, 499.0) == 1.0);
    CHECK(error_probability(s, 460.0) >= error_probability(s, 480.0));
}

TEST_CASE("exact-mode counts round N*p") {
    Engine rng;
    CHECK(sample_error_count({500.0, 20.0}, 0, 0.0, 1000, SamplingMode::Exact, rng).error_count == 1000);
    CHECK(sample_error_count({500.0, 20.0}, 0, 500.0, 1000, SamplingMode::Exact, rng).error_count == 500);
    CHECK(sample_error_count({500.0, 20.0}, 0, 520.0, 1000, SamplingMode::Exact, rng).error_count == 159);
}

TEST_CASE("Monte Carlo counts follow Binomial(N, 1/2)") {
    int inside = 0;
    const int seeds = 2000;
    for (int s = 0; s < seeds; ++s) {
        auto rng = WindowKey{static_cast<std::uint64_t>(s), 0, 0, 0, 0, 0}.engine();
        const int c = sample_error_count({500.0, 20.0}, 0, 500.0, 1000, SamplingMode::MonteCarlo, rng).error_count;
        if (std::abs(c - 500) <= 47.4) ++inside;
    }
    CHECK(inside >= 0.995 * seeds);
}

TEST_CASE("window streams are keyed, not sequential") {
    const WindowKey k{5, 1, 2, 3, 4, 6};
    auto a = k.engine();
    auto b = k.engine();
    CHECK(a() == b());
    auto other = WindowKey{5, 1, 2, 3, 4, 7}.engine();
    auto same = k.engine();
    CHECK(other() != same());
}

TEST_CASE("phase sweep window count and monotonicity") {
    Gaussian500 g;
    const auto cfg = sweep_cfg(SamplingMode::Exact, 1000);
    CHECK(cfg.phase_count() == 76);
    const auto sweep = run_phase_sweep(g.dme, g.path, g.tap, g.baseline, g.realization, cfg, 1);
    REQUIRE(sweep.windows.size() == 76);
    CHECK(sweep.settle_cycles_consumed == 76u * 64u);
    for (std::size_t i = 1; i < sweep.windows.size(); ++i)
        CHECK(sweep.windows[i].error_count <= sweep.windows[i - 1].error_count);
    for (const auto& w : sweep.windows) {
        const double p = error_probability({500.0, 20.0}, w.sample_time);
        CHECK(std::abs(w.error_count / 1000.0 - p) <= 0.5 / 1000.0 + 1e-12);
    }
}

TEST_CASE("phase sweep preconditions") {
    Gaussian500 g;
    auto cfg = sweep_cfg(SamplingMode::Exact, 1000);
    DmePlacement other{1, {1, 0}, {}};
    CHECK_THROWS_WITH_AS(run_phase_sweep(other, g.path, g.tap, g.baseline, g.realization, cfg, 1),
                         doctest::Contains("TapNotAssigned"), DiagError);
    cfg.phase_end = -20.0;
    CHECK_THROWS_WITH_AS(run_phase_sweep(g.dme, g.path, g.tap, g.baseline, g.realization, cfg, 1),
                         doctest::Contains("EmptyPhaseRange"), DiagError);
}

TEST_CASE("Monte Carlo error shrinks like 1/sqrt(N)") {
    Gaussian500 g;
    std::vector<double> worst;
    for (int n : {1000, 10000, 100000}) {
        const auto cfg = sweep_cfg(SamplingMode::MonteCarlo, n);
        const auto sweep = run_phase_sweep(g.dme, g.path, g.tap, g.baseline, g.realization, cfg, 9);
        double w = 0.0;
        for (const auto& win : sweep.windows)
            w = std::max(w, std::abs(static_cast<double>(win.error_count) / n -
                                     error_probability({500.0, 20.0}, win.sample_time)));
        worst.push_back(w);
    }
    CHECK(worst[1] < worst[0]);
    CHECK(worst[2] < worst[1]);
    CHECK(worst[2] < 0.3 * worst[0]);
}

TEST_CASE("Monte Carlo sweeps are reproducible") {
    Gaussian500 g;
    const auto cfg = sweep_cfg(SamplingMode::MonteCarlo, 1000);
    const auto a = run_phase_sweep(g.dme, g.path, g.tap, g.baseline, g.realization, cfg, 4);
    const auto b = run_phase_sweep(g.dme, g.path, g.tap, g.baseline, g.realization, cfg, 4);
    CHECK(a.windows == b.windows);
}
