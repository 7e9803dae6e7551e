#include <doctest.h>

#include "fpgadiag/error.hpp"
#include "fpgadiag/scenario.hpp"

using namespace fpgadiag;

namespace {

ErrorCode parse_code(const std::string& text) {
    try {
        parse_scenario(text);
    } catch (const DiagError& e) {
        return e.code();
    }
    FAIL("scenario parsed");
    return ErrorCode::Io;
}

}  // namespace

TEST_CASE("fabric-only scenario takes every default") {
    const auto s = parse_scenario("[fabric]\n");
    CHECK(s.fabric.width == 9);
    CHECK(s.fabric.height == 8);
    CHECK(s.fabric.seed == 1);
    CHECK(s.fabric.params == FabricParams{});
    CHECK(s.taps.placement == TapPlacement::Auto);
    CHECK(s.taps.per_region == 8);
    CHECK(s.dmes.count == 32);
    CHECK(s.sweep.auto_range);
    CHECK(s.sweep.config.phase_step == 20.0);
    CHECK(s.sweep.config.window_cycles == 1000);
    CHECK(s.analysis.thresholds == Thresholds{});
    CHECK(s.analysis.subset_sizes == std::vector<int>{8, 16, 32});
    CHECK(s.analysis.bootstrap_reps == 200);
    CHECK_FALSE(s.analysis.reference_dme.has_value());
    REQUIRE(s.conditions.size() == 1);
    CHECK(s.conditions[0].kind == ConditionKind::Baseline);
}

TEST_CASE("parse errors carry their category") {
    CHECK(parse_code("[fabric]\nwidht = 9\n") == ErrorCode::UnknownKey);
    CHECK(parse_code("[fabric]\n[sweep]\nphase_step = 0\n") == ErrorCode::ConstraintViolation);
    CHECK(parse_code("[sweep]\nnum_sweeps = 3\n") == ErrorCode::MissingSection);
    CHECK(parse_code("[fabric]\nwidth = nine\n") == ErrorCode::TypeMismatch);
    CHECK(parse_code("[fabric]\n[bogus]\n") == ErrorCode::UnknownKey);
    CHECK(parse_code("[fabric]\n[fabric]\n") == ErrorCode::ConstraintViolation);
    CHECK(parse_code("[fabric]\nwidth = 0\n") == ErrorCode::ConstraintViolation);
    CHECK(parse_code("[fabric]\n[condition.x]\ntype = sideways\n") == ErrorCode::TypeMismatch);
}

TEST_CASE("unknown key reports its line") {
    CHECK_THROWS_WITH_AS(parse_scenario("# comment\n[fabric]\nwidth = 9\nwidht = 9\n"),
                         doctest::Contains("line 4"), DiagError);
}

TEST_CASE("conditions keep file order with the baseline first") {
    const auto s = parse_scenario(R"(
[fabric]
[condition.stress]
type = pdn
kappa = 0.05
corr_length = 30
[condition.base]
type = baseline
[condition.upset]
type = routing
upset_labels = L1, L2
upset_deltas = 10
)");
    REQUIRE(s.conditions.size() == 3);
    CHECK(s.conditions[0].name == "base");
    CHECK(s.conditions[1].name == "stress");
    CHECK(s.conditions[1].pdn.kappa == 0.05);
    CHECK(s.conditions[1].pdn.corr_length == 30.0);
    CHECK(s.conditions[2].upsets.target_labels == std::vector<std::string>{"L1", "L2"});
    CHECK(s.conditions[2].upsets.delta_choices == std::vector<double>{10.0});
}

TEST_CASE("auto layout instantiates one tap per monitor") {
    const auto e = build_experiment(parse_scenario("[fabric]\n[condition.b]\ntype = baseline\n[condition.r]\ntype = routing\n"));
    CHECK(e.dmes.size() == 32);
    CHECK(e.taps.size() == 32);
    CHECK(e.paths.size() == 32);
    for (const auto& d : e.dmes) {
        REQUIRE(d.assigned_taps.size() == 1);
        const auto& t = e.tap(d.assigned_taps[0]);
        CHECK(t.observer == d.position);
        CHECK(t.label == "L" + std::to_string(d.id % 8 + 1));
    }
    REQUIRE(e.conditions.size() == 2);
    CHECK(e.conditions[1].upsets.has_value());
    CHECK_FALSE(e.conditions[1].upsets->touches(0));
    CHECK(e.conditions[1].upsets->touches(2));
}

TEST_CASE("explicit layout") {
    const auto e = build_experiment(parse_scenario(R"(
[fabric]
[taps]
placement = explicit
path.main = 0 0 8 7
tap.A = main 1 0
tap.B = main 9 1
[dmes]
dme.0 = 1 1
dme.1 = 7 1
)"));
    REQUIRE(e.paths.size() == 1);
    REQUIRE(e.taps.size() == 2);
    CHECK(e.taps[0].label == "A");
    CHECK(e.taps[0].position == Coord{1, 0});
    CHECK(e.taps[1].position == Coord{8, 1});
    CHECK(e.taps[1].branch_hops == 1);
    CHECK(e.dme(1).assigned(e.taps[1].id));

    CHECK_THROWS_AS(build_experiment(parse_scenario(R"(
[fabric]
[taps]
placement = explicit
path.main = 0 0 8 7
tap.A = main 40 0
[dmes]
dme.0 = 1 1
)")),
                    DiagError);
}
