#include "fpgadiag/scenario.hpp"

#include <algorithm>
#include <charconv>
#include <fstream>
#include <functional>
#include <map>
#include <set>
#include <sstream>

#include "fpgadiag/error.hpp"
#include "fpgadiag/rng.hpp"

namespace fpgadiag {

namespace {

std::string trim(std::string_view s) {
    const auto b = s.find_first_not_of(" \t\r");
    if (b == std::string_view::npos) return {};
    const auto e = s.find_last_not_of(" \t\r");
    return std::string(s.substr(b, e - b + 1));
}

std::vector<std::string> split_list(const std::string& v) {
    std::vector<std::string> out;
    std::string cur;
    for (char c : v) {
        if (c == ',' || c == ' ' || c == '\t') {
            if (!cur.empty()) out.push_back(std::move(cur));
            cur.clear();
        } else {
            cur += c;
        }
    }
    if (!cur.empty()) out.push_back(std::move(cur));
    return out;
}

struct Line {
    int number = 0;
    std::string key;
    std::string value;
};

[[noreturn]] void mismatch(const Line& l, const char* expected) {
    throw DiagError(ErrorCode::TypeMismatch, "line " + std::to_string(l.number) + ": '" + l.key + "' expects " +
                                                 expected + ", got '" + l.value + "'");
}

template <typename T>
T parse_number(const Line& l, const std::string& text, const char* expected) {
    T v{};
    const char* b = text.data();
    const char* e = b + text.size();
    const auto [p, ec] = std::from_chars(b, e, v);
    if (ec != std::errc{} || p != e) mismatch(l, expected);
    return v;
}

int as_int(const Line& l) { return parse_number<int>(l, l.value, "an integer"); }
std::uint64_t as_u64(const Line& l) { return parse_number<std::uint64_t>(l, l.value, "an unsigned integer"); }
double as_double(const Line& l) { return parse_number<double>(l, l.value, "a number"); }

bool as_bool(const Line& l) {
    if (l.value == "true" || l.value == "yes" || l.value == "1") return true;
    if (l.value == "false" || l.value == "no" || l.value == "0") return false;
    mismatch(l, "a boolean");
}

std::vector<double> as_doubles(const Line& l) {
    std::vector<double> out;
    for (const auto& t : split_list(l.value)) out.push_back(parse_number<double>(l, t, "a list of numbers"));
    return out;
}

std::vector<int> as_ints(const Line& l) {
    std::vector<int> out;
    for (const auto& t : split_list(l.value)) out.push_back(parse_number<int>(l, t, "a list of integers"));
    return out;
}

std::vector<int> as_int_tuple(const Line& l, std::size_t n, const char* expected) {
    const auto parts = split_list(l.value);
    if (parts.size() != n) mismatch(l, expected);
    std::vector<int> out;
    for (const auto& t : parts) out.push_back(parse_number<int>(l, t, expected));
    return out;
}

[[noreturn]] void unknown(const Line& l, const std::string& section) {
    throw DiagError(ErrorCode::UnknownKey,
                    "line " + std::to_string(l.number) + ": unknown key '" + l.key + "' in [" + section + "]");
}

ConditionKind parse_kind(const Line& l) {
    if (l.value == "baseline") return ConditionKind::Baseline;
    if (l.value == "pdn") return ConditionKind::PdnStress;
    if (l.value == "routing") return ConditionKind::RoutingPerturb;
    if (l.value == "combined") return ConditionKind::Combined;
    mismatch(l, "one of baseline|pdn|routing|combined");
}

using Handler = std::function<void(const Line&)>;
using HandlerTable = std::map<std::string, Handler>;

HandlerTable fabric_keys(FabricSection& f) {
    auto& p = f.params;
    return {
        {"width", [&](const Line& l) { f.width = as_int(l); }},
        {"height", [&](const Line& l) { f.height = as_int(l); }},
        {"seed", [&](const Line& l) { f.seed = as_u64(l); }},
        {"delay_min", [&](const Line& l) { p.delay_min = as_double(l); }},
        {"delay_max", [&](const Line& l) { p.delay_max = as_double(l); }},
        {"jitter_min", [&](const Line& l) { p.jitter_min = as_double(l); }},
        {"jitter_max", [&](const Line& l) { p.jitter_max = as_double(l); }},
        {"launch_delay", [&](const Line& l) { p.launch_delay = as_double(l); }},
        {"launch_jitter", [&](const Line& l) { p.launch_jitter = as_double(l); }},
    };
}

HandlerTable sweep_keys(SweepSection& s, bool& has_start, bool& has_end) {
    auto& c = s.config;
    return {
        {"phase_step", [&](const Line& l) { c.phase_step = as_double(l); }},
        {"phase_start", [&](const Line& l) { c.phase_start = as_double(l); has_start = true; }},
        {"phase_end", [&](const Line& l) { c.phase_end = as_double(l); has_end = true; }},
        {"window_cycles", [&](const Line& l) { c.window_cycles = as_int(l); }},
        {"settle_cycles", [&](const Line& l) { c.settle_cycles = as_int(l); }},
        {"num_sweeps", [&](const Line& l) { c.num_sweeps = as_int(l); }},
        {"mode",
         [&](const Line& l) {
             if (l.value == "exact") c.mode = SamplingMode::Exact;
             else if (l.value == "monte_carlo") c.mode = SamplingMode::MonteCarlo;
             else mismatch(l, "exact|monte_carlo");
         }},
    };
}

HandlerTable condition_keys(ConditionSpec& c) {
    auto& p = c.pdn;
    return {
        {"type", [&](const Line& l) { c.kind = parse_kind(l); }},
        {"intensity", [&](const Line& l) { p.intensity = as_double(l); }},
        {"kappa", [&](const Line& l) { p.kappa = as_double(l); }},
        {"corr_length", [&](const Line& l) { p.corr_length = as_double(l); }},
        {"fluct_std", [&](const Line& l) { p.fluct_std = as_double(l); }},
        {"ref_delay", [&](const Line& l) { p.ref_delay = as_double(l); }},
        {"pdn_mode",
         [&](const Line& l) {
             if (l.value == "multiplicative") p.mode = PdnMode::Multiplicative;
             else if (l.value == "additive") p.mode = PdnMode::Additive;
             else mismatch(l, "multiplicative|additive");
         }},
        {"upset_labels", [&](const Line& l) { c.upsets.target_labels = split_list(l.value); }},
        {"upset_deltas", [&](const Line& l) { c.upsets.delta_choices = as_doubles(l); }},
        {"upset_jitters", [&](const Line& l) { c.upsets.jitter_choices = as_doubles(l); }},
        {"sweep_offset_scale", [&](const Line& l) { c.variability.sweep_offset_scale = as_double(l); }},
        {"local_corr_length", [&](const Line& l) { c.variability.local_corr_length = as_double(l); }},
    };
}

HandlerTable analysis_keys(AnalysisSection& a) {
    auto& t = a.thresholds;
    return {
        {"theta_detect", [&](const Line& l) { t.detect = as_double(l); }},
        {"theta_uniformity", [&](const Line& l) { t.uniformity = as_double(l); }},
        {"theta_spread", [&](const Line& l) { t.spread = as_double(l); }},
        {"theta_routing_spread", [&](const Line& l) { t.routing_spread = as_double(l); }},
        {"theta_pdn_decay", [&](const Line& l) { t.pdn_decay = as_double(l); }},
        {"theta_routing_decay", [&](const Line& l) { t.routing_decay = as_double(l); }},
        {"subset_sizes", [&](const Line& l) { a.subset_sizes = as_ints(l); }},
        {"bootstrap_reps", [&](const Line& l) { a.bootstrap_reps = as_int(l); }},
        {"reference_dme",
         [&](const Line& l) {
             if (l.value == "auto") a.reference_dme.reset();
             else a.reference_dme = as_int(l);
         }},
    };
}

HandlerTable outputs_keys(OutputsSection& o) {
    return {
        {"directory", [&](const Line& l) { o.directory = l.value; }},
        {"svg", [&](const Line& l) { o.svg = as_bool(l); }},
    };
}

ConditionSpec named_condition(std::string name) {
    ConditionSpec c;
    c.name = std::move(name);
    return c;
}

void constraint(bool ok, const std::string& what) {
    if (!ok) throw DiagError(ErrorCode::ConstraintViolation, what);
}

// Library validators report InvalidConfig; at parse time these are constraint violations.
template <typename F>
void revalidate(F&& f) {
    try {
        f();
    } catch (const DiagError& e) {
        if (e.code() != ErrorCode::InvalidConfig) throw;
        const std::string msg = e.what();
        const auto colon = msg.find(": ");
        throw DiagError(ErrorCode::ConstraintViolation, colon == std::string::npos ? msg : msg.substr(colon + 2));
    }
}

void validate(Scenario& s, bool has_start, bool has_end) {
    constraint(s.fabric.width >= 1 && s.fabric.height >= 1, "fabric width and height must be >= 1");
    revalidate([&] { s.fabric.params.validate(); });

    auto& sw = s.sweep.config;
    constraint(sw.phase_step > 0.0, "phase_step must be > 0");
    constraint(sw.window_cycles >= 1, "window_cycles must be >= 1");
    constraint(sw.settle_cycles >= 0, "settle_cycles must be >= 0");
    constraint(sw.num_sweeps >= 1, "num_sweeps must be >= 1");
    constraint(has_start == has_end, "phase_start and phase_end must be given together");
    s.sweep.auto_range = !has_start;
    if (has_start) constraint(sw.phase_end > sw.phase_start, "phase_end must exceed phase_start");

    if (s.taps.placement == TapPlacement::Auto) {
        constraint(s.taps.per_region >= 1, "per_region must be >= 1");
        constraint(s.dmes.count >= 1, "dme count must be >= 1");
        constraint(static_cast<std::size_t>(s.dmes.count) <=
                       static_cast<std::size_t>(s.fabric.width) * static_cast<std::size_t>(s.fabric.height),
                   "dme count exceeds fabric sites");
        constraint(s.taps.paths.empty() && s.taps.taps.empty() && s.dmes.explicit_positions.empty(),
                   "path./tap./dme. entries need placement = explicit");
    } else {
        constraint(!s.taps.taps.empty(), "explicit placement needs at least one tap entry");
        for (const auto& t : s.taps.taps) {
            const bool path_ok = std::any_of(s.taps.paths.begin(), s.taps.paths.end(),
                                             [&](const ExplicitPath& p) { return p.name == t.path; });
            constraint(path_ok, "tap " + t.label + " references unknown path " + t.path);
            const bool dme_ok = std::any_of(s.dmes.explicit_positions.begin(), s.dmes.explicit_positions.end(),
                                            [&](const auto& d) { return d.first == t.dme_id; });
            constraint(dme_ok, "tap " + t.label + " references unknown dme " + std::to_string(t.dme_id));
        }
        s.dmes.count = static_cast<int>(s.dmes.explicit_positions.size());
    }

    for (const auto& c : s.conditions) {
        if (c.kind == ConditionKind::PdnStress || c.kind == ConditionKind::Combined)
            revalidate([&] { c.pdn.validate(); });
        if (c.kind == ConditionKind::RoutingPerturb || c.kind == ConditionKind::Combined) {
            constraint(!c.upsets.delta_choices.empty() && !c.upsets.jitter_choices.empty(),
                       "condition " + c.name + ": upset choice lists must be non-empty");
            for (double v : c.upsets.delta_choices) constraint(v >= 0.0, "upset deltas must be >= 0");
            for (double v : c.upsets.jitter_choices) constraint(v >= 0.0, "upset jitters must be >= 0");
            constraint(c.variability.sweep_offset_scale >= 0.0, "sweep_offset_scale must be >= 0");
            constraint(c.variability.local_corr_length > 0.0, "local_corr_length must be > 0");
        }
    }

    constraint(s.analysis.bootstrap_reps >= 1, "bootstrap_reps must be >= 1");
    for (int n : s.analysis.subset_sizes) constraint(n >= 2, "subset sizes must be >= 2");

    if (s.conditions.empty()) s.conditions.push_back(named_condition("baseline"));
    const auto base = std::find_if(s.conditions.begin(), s.conditions.end(),
                                   [](const ConditionSpec& c) { return c.kind == ConditionKind::Baseline; });
    if (base != s.conditions.end()) std::rotate(s.conditions.begin(), base, base + 1);
}

}  // namespace

Scenario parse_scenario(const std::string& text) {
    Scenario s;
    bool has_start = false;
    bool has_end = false;
    bool saw_fabric = false;
    std::set<std::string> seen_sections;

    std::string section;
    HandlerTable table;
    ConditionSpec* condition = nullptr;

    std::istringstream in(text);
    std::string raw;
    int number = 0;
    while (std::getline(in, raw)) {
        ++number;
        const auto hash = raw.find('#');
        const std::string line = trim(std::string_view(raw).substr(0, hash));
        if (line.empty()) continue;

        if (line.front() == '[') {
            if (line.back() != ']')
                throw DiagError(ErrorCode::TypeMismatch, "line " + std::to_string(number) + ": malformed section header");
            section = trim(std::string_view(line).substr(1, line.size() - 2));
            if (!seen_sections.insert(section).second)
                throw DiagError(ErrorCode::ConstraintViolation,
                                "line " + std::to_string(number) + ": duplicate section [" + section + "]");
            condition = nullptr;
            if (section == "fabric") {
                saw_fabric = true;
                table = fabric_keys(s.fabric);
            } else if (section == "taps") {
                table = {{"placement", [&](const Line& l) {
                              if (l.value == "auto") s.taps.placement = TapPlacement::Auto;
                              else if (l.value == "explicit") s.taps.placement = TapPlacement::Explicit;
                              else mismatch(l, "auto|explicit");
                          }},
                         {"per_region", [&](const Line& l) { s.taps.per_region = as_int(l); }}};
            } else if (section == "dmes") {
                table = {{"count", [&](const Line& l) { s.dmes.count = as_int(l); }},
                         {"placement", [&](const Line& l) {
                              if (l.value != "grid") mismatch(l, "grid");
                          }}};
            } else if (section == "sweep") {
                table = sweep_keys(s.sweep, has_start, has_end);
            } else if (section.rfind("condition.", 0) == 0 && section.size() > 10) {
                s.conditions.push_back(named_condition(section.substr(10)));
                condition = &s.conditions.back();
                table = condition_keys(*condition);
            } else if (section == "analysis") {
                table = analysis_keys(s.analysis);
            } else if (section == "outputs") {
                table = outputs_keys(s.outputs);
            } else {
                throw DiagError(ErrorCode::UnknownKey,
                                "line " + std::to_string(number) + ": unknown section [" + section + "]");
            }
            continue;
        }

        const auto eq = line.find('=');
        if (eq == std::string::npos)
            throw DiagError(ErrorCode::TypeMismatch, "line " + std::to_string(number) + ": expected 'key = value'");
        Line l{number, trim(std::string_view(line).substr(0, eq)), trim(std::string_view(line).substr(eq + 1))};
        if (section.empty())
            throw DiagError(ErrorCode::UnknownKey,
                            "line " + std::to_string(number) + ": key '" + l.key + "' outside any section");

        if (section == "taps" && l.key.rfind("path.", 0) == 0) {
            const auto v = as_int_tuple(l, 4, "'c0 r0 c1 r1'");
            s.taps.paths.push_back({l.key.substr(5), {v[0], v[1]}, {v[2], v[3]}});
        } else if (section == "taps" && l.key.rfind("tap.", 0) == 0) {
            const auto parts = split_list(l.value);
            if (parts.size() != 3) mismatch(l, "'PATH NODE_INDEX DME_ID'");
            s.taps.taps.push_back({l.key.substr(4), parts[0],
                                   parse_number<int>(l, parts[1], "'PATH NODE_INDEX DME_ID'"),
                                   parse_number<int>(l, parts[2], "'PATH NODE_INDEX DME_ID'")});
        } else if (section == "dmes" && l.key.rfind("dme.", 0) == 0) {
            const auto v = as_int_tuple(l, 2, "'col row'");
            s.dmes.explicit_positions.emplace_back(parse_number<int>(l, l.key.substr(4), "an integer dme id"),
                                                   Coord{v[0], v[1]});
        } else {
            const auto it = table.find(l.key);
            if (it == table.end()) unknown(l, section);
            it->second(l);
        }
    }
    if (!saw_fabric) throw DiagError(ErrorCode::MissingSection, "scenario has no [fabric] section");
    validate(s, has_start, has_end);
    return s;
}

Scenario load_scenario(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw DiagError(ErrorCode::Io, "cannot open scenario " + path);
    std::ostringstream buf;
    buf << in.rdbuf();
    return parse_scenario(buf.str());
}

namespace {

// Stays inside [0, limit) moving `want` tiles from `at`, preferring the negative side.
int offset_within(int at, int want, int limit) {
    if (at - want >= 0) return at - want;
    if (at + want < limit) return at + want;
    return at >= limit - 1 - at ? 0 : limit - 1;
}

void auto_layout(const Scenario& s, Experiment& e) {
    const auto& f = e.fabric;
    e.dmes = place_dmes_grid(f, s.dmes.count);
    const auto sites = f.sites();
    for (auto& d : e.dmes) {
        const int slot = d.id % s.taps.per_region;
        const int region = d.id / s.taps.per_region;
        const auto h = mix_key({f.seed(), stream::placement, static_cast<std::uint64_t>(d.id)});

        // Tap tile at branch distance slot + 1 from the monitor, or as far as the grid allows.
        int hops = slot + 1;
        std::vector<Coord> ring;
        for (; hops >= 0 && ring.empty(); --hops)
            for (const auto& c : sites)
                if (manhattan(c, d.position) == hops) ring.push_back(c);
        const Coord q = ring[splitmix64(h ^ 1) % ring.size()];

        const int a = 2 + static_cast<int>(splitmix64(h ^ 2) % 3);
        const int b = 1 + static_cast<int>(splitmix64(h ^ 3) % 3);
        const Coord source{offset_within(q.col, a, f.width()), q.row};
        const Coord dest{q.col, offset_within(q.row, b, f.height())};
        e.paths.push_back(route_functional_path(f, source, dest, d.id));
        auto tap = attach_delay_tap(f, e.paths.back(), q, d.position, d.id, "L" + std::to_string(slot + 1));
        tap.region = region;
        e.taps.push_back(std::move(tap));
        d.assigned_taps.push_back(d.id);
    }
}

void explicit_layout(const Scenario& s, Experiment& e) {
    const auto& f = e.fabric;
    for (const auto& [id, pos] : s.dmes.explicit_positions) {
        if (!f.contains(pos))
            throw DiagError(ErrorCode::OutOfGrid, "dme " + std::to_string(id) + " lies outside the fabric");
        e.dmes.push_back({id, pos, {}});
    }
    std::map<std::string, int> path_ids;
    for (const auto& p : s.taps.paths) {
        const int id = static_cast<int>(e.paths.size());
        path_ids[p.name] = id;
        e.paths.push_back(route_functional_path(f, p.source, p.dest, id));
    }
    int tap_id = 0;
    for (const auto& t : s.taps.taps) {
        const auto& path = e.paths[static_cast<std::size_t>(path_ids.at(t.path))];
        const auto nodes = path.nodes();
        if (t.node_index < 0 || t.node_index >= static_cast<int>(nodes.size()))
            throw DiagError(ErrorCode::NodeNotOnPath, "tap " + t.label + " node index " + std::to_string(t.node_index) +
                                                          " is outside path " + t.path);
        auto dme = std::find_if(e.dmes.begin(), e.dmes.end(), [&](const DmePlacement& d) { return d.id == t.dme_id; });
        e.taps.push_back(attach_delay_tap(f, path, f.coord_of(nodes[static_cast<std::size_t>(t.node_index)]),
                                          dme->position, tap_id, t.label));
        dme->assigned_taps.push_back(tap_id);
        ++tap_id;
    }
}

}  // namespace

Experiment build_experiment(const Scenario& s) {
    Experiment e;
    e.fabric = build_fabric(s.fabric.width, s.fabric.height, s.fabric.seed, s.fabric.params);
    e.seed = s.fabric.seed;
    e.sweep = s.sweep.config;
    e.auto_phase_range = s.sweep.auto_range;

    if (s.taps.placement == TapPlacement::Auto) auto_layout(s, e);
    else explicit_layout(s, e);

    int id = 0;
    for (const auto& spec : s.conditions) {
        ConditionState c;
        c.name = spec.name;
        c.kind = spec.kind;
        c.config_state_id = id;
        c.variability = spec.variability;
        if (c.has_pdn()) c.pdn = spec.pdn;
        if (c.has_routing())
            c.upsets = generate_upsets(spec.upsets, e.taps, mix_key({e.seed, static_cast<std::uint64_t>(id)}));
        e.conditions.push_back(std::move(c));
        ++id;
    }
    return e;
}

}  // namespace fpgadiag
