#include <doctest.h>

#include <cmath>
#include <set>

#include "fpgadiag/error.hpp"
#include "fpgadiag/fabric.hpp"

using namespace fpgadiag;

namespace {

FabricParams fixed_params(double delay, double jitter, double launch_jitter) {
    FabricParams p;
    p.delay_min = p.delay_max = delay;
    p.jitter_min = p.jitter_max = jitter;
    p.launch_delay = 200.0;
    p.launch_jitter = launch_jitter;
    return p;
}

ErrorCode code_of(auto&& fn) {
    try {
        fn();
    } catch (const DiagError& e) {
        return e.code();
    }
    FAIL("expected DiagError");
    return ErrorCode::Io;
}

}  // namespace

TEST_CASE("build_fabric sizes") {
    CHECK(build_fabric(9, 8, 42).site_count() == 72);
    CHECK(build_fabric(1, 1, 0).site_count() == 1);
    CHECK(code_of([] { build_fabric(0, 5, 0); }) == ErrorCode::ZeroDimension);
    CHECK(code_of([] { build_fabric(3, -1, 0); }) == ErrorCode::ZeroDimension);
}

TEST_CASE("build_fabric is a pure function of its inputs") {
    const auto a = build_fabric(9, 8, 7);
    const auto b = build_fabric(9, 8, 7);
    CHECK(a == b);
    CHECK(make_segment(a, WireKind::Functional, 3, 4) == make_segment(b, WireKind::Functional, 3, 4));
    const auto c = build_fabric(9, 8, 8);
    CHECK(make_segment(a, WireKind::Functional, 3, 4).nominal_delay !=
          make_segment(c, WireKind::Functional, 3, 4).nominal_delay);
}

TEST_CASE("segment parameters stay inside the configured ranges") {
    const auto f = build_fabric(9, 8, 3);
    for (NodeId n = 0; n + 1 < 72; ++n) {
        const auto s = make_segment(f, WireKind::Functional, n, n + 1);
        CHECK(s.nominal_delay >= f.params().delay_min);
        CHECK(s.nominal_delay <= f.params().delay_max);
        CHECK(s.jitter_std >= f.params().jitter_min);
        CHECK(s.jitter_std <= f.params().jitter_max);
    }
}

TEST_CASE("L-router switch-matrix counts") {
    const auto f = build_fabric(9, 8, 1);
    CHECK(route_functional_path(f, {4, 4}, {4, 4}).sb_count == 1);
    CHECK(route_functional_path(f, {0, 0}, {3, 0}).sb_count == 4);

    const auto p = route_functional_path(f, {0, 0}, {2, 2});
    CHECK(p.sb_count == 5);
    const std::vector<NodeId> expected{f.node_of({0, 0}), f.node_of({1, 0}), f.node_of({2, 0}),
                                       f.node_of({2, 1}), f.node_of({2, 2})};
    CHECK(p.nodes() == expected);
    CHECK(f.coord_of(p.nodes()[2]) == Coord{2, 0});
}

TEST_CASE("router matches hand enumeration for every endpoint pair on a small grid") {
    const auto f = build_fabric(4, 3, 5);
    for (const auto s : f.sites()) {
        for (const auto d : f.sites()) {
            std::vector<NodeId> expected{f.node_of(s)};
            Coord c = s;
            while (c.col != d.col) {
                c.col += d.col > c.col ? 1 : -1;
                expected.push_back(f.node_of(c));
            }
            while (c.row != d.row) {
                c.row += d.row > c.row ? 1 : -1;
                expected.push_back(f.node_of(c));
            }
            const auto p = route_functional_path(f, s, d);
            CHECK(p.nodes() == expected);
            CHECK(p.sb_count == manhattan(s, d) + 1);
        }
    }
    CHECK(code_of([&] { route_functional_path(f, {0, 0}, {4, 0}); }) == ErrorCode::OutOfGrid);
}

TEST_CASE("attach_delay_tap") {
    const auto f = build_fabric(9, 8, 1);
    const auto p = route_functional_path(f, {0, 0}, {4, 0});
    const auto before = p;

    CHECK(attach_delay_tap(f, p, {2, 0}, {2, 0}).branch_hops == 0);
    const auto t = attach_delay_tap(f, p, {2, 0}, {2, 3}, 7, "L1");
    CHECK(t.branch_hops == 3);
    CHECK(t.tap_index == 2);
    CHECK(t.id == 7);
    CHECK(t.label == "L1");
    CHECK(p == before);

    CHECK(code_of([&] { attach_delay_tap(f, p, {2, 1}, {2, 3}); }) == ErrorCode::NodeNotOnPath);
    CHECK(code_of([&] { attach_delay_tap(f, p, {2, 0}, {20, 3}); }) == ErrorCode::OutOfGrid);
}

TEST_CASE("nominal stats: single segment root-sum-square") {
    const auto f = build_fabric(3, 3, 1, fixed_params(120.0, 3.0, 5.0));
    const auto p = route_functional_path(f, {1, 1}, {1, 1});
    const auto t = attach_delay_tap(f, p, {1, 1}, {1, 1});
    const auto s = nominal_transition_stats(p, t);
    CHECK(s.mu == doctest::Approx(320.0));
    CHECK(s.sigma == doctest::Approx(5.830951894845301));
}

TEST_CASE("nominal stats: k identical segments") {
    const auto f = build_fabric(8, 1, 1, fixed_params(110.0, 4.0, 5.0));
    for (int k = 1; k <= 6; ++k) {
        const auto p = route_functional_path(f, {0, 0}, {k - 1, 0});
        const auto t = attach_delay_tap(f, p, {k - 1, 0}, {k - 1, 0});
        const auto s = nominal_transition_stats(p, t);
        CHECK(s.mu == doctest::Approx(200.0 + 110.0 * k));
        CHECK(s.sigma == doctest::Approx(std::sqrt(25.0 + 16.0 * k)));
    }
}

TEST_CASE("nominal stats: zero-jitter fabric leaves only the launch jitter") {
    const auto f = build_fabric(9, 8, 1, fixed_params(120.0, 0.0, 5.0));
    const auto p = route_functional_path(f, {0, 0}, {6, 5});
    const auto t = attach_delay_tap(f, p, {6, 2}, {2, 7});
    CHECK(nominal_transition_stats(p, t).sigma == 5.0);
}

TEST_CASE("tap stats include the branch, endpoint stats do not") {
    const auto f = build_fabric(9, 8, 4);
    const auto p = route_functional_path(f, {0, 0}, {5, 3});
    const auto t = attach_delay_tap(f, p, {5, 0}, {5, 0});
    const auto far = attach_delay_tap(f, p, {5, 0}, {8, 0});
    CHECK(nominal_transition_stats(p, far).mu > nominal_transition_stats(p, t).mu);
    CHECK(endpoint_transition_stats(p).mu > nominal_transition_stats(p, t).mu);
}

TEST_CASE("grid placement of 32 monitors on 9x8") {
    const auto f = build_fabric(9, 8, 1);
    const auto dmes = place_dmes_grid(f, 32);
    REQUIRE(dmes.size() == 32);
    std::set<int> cols;
    std::set<int> rows;
    std::set<Coord> unique;
    for (const auto& d : dmes) {
        cols.insert(d.position.col);
        rows.insert(d.position.row);
        unique.insert(d.position);
        CHECK(f.contains(d.position));
    }
    CHECK(unique.size() == 32);
    CHECK(cols == std::set<int>{0, 1, 2, 3, 5, 6, 7, 8});
    CHECK(rows == std::set<int>{1, 3, 5, 7});
    CHECK(code_of([&] { place_dmes_grid(f, 73); }) == ErrorCode::InvalidConfig);
}
