#include "fpgadiag/fabric.hpp"

#include <algorithm>
#include <cmath>
#include <cstdlib>
#include <limits>

#include "fpgadiag/error.hpp"
#include "fpgadiag/rng.hpp"

namespace fpgadiag {

namespace {

std::string coord_str(Coord c) {
    return "(" + std::to_string(c.col) + "," + std::to_string(c.row) + ")";
}

// Horizontal leg first, then vertical. Includes both endpoints.
std::vector<Coord> l_route_tiles(Coord from, Coord to) {
    std::vector<Coord> tiles;
    tiles.reserve(static_cast<std::size_t>(manhattan(from, to)) + 1);
    Coord c = from;
    tiles.push_back(c);
    const int dc = to.col > from.col ? 1 : -1;
    while (c.col != to.col) {
        c.col += dc;
        tiles.push_back(c);
    }
    const int dr = to.row > from.row ? 1 : -1;
    while (c.row != to.row) {
        c.row += dr;
        tiles.push_back(c);
    }
    return tiles;
}

double lerp_hash(std::uint64_t h, double lo, double hi) { return lo + (hi - lo) * hash_unit(h); }

}  // namespace

int manhattan(Coord a, Coord b) { return std::abs(a.col - b.col) + std::abs(a.row - b.row); }

double euclidean(Coord a, Coord b) {
    return std::hypot(static_cast<double>(a.col - b.col), static_cast<double>(a.row - b.row));
}

void FabricParams::validate() const {
    if (!(delay_min > 0.0) || delay_max < delay_min)
        throw DiagError(ErrorCode::InvalidConfig, "segment delay range must satisfy 0 < min <= max");
    if (jitter_min < 0.0 || jitter_max < jitter_min)
        throw DiagError(ErrorCode::InvalidConfig, "segment jitter range must satisfy 0 <= min <= max");
    if (!(launch_delay > 0.0) || launch_jitter < 0.0)
        throw DiagError(ErrorCode::InvalidConfig, "launch delay must be > 0 and launch jitter >= 0");
}

FabricGrid::FabricGrid(int width, int height, std::uint64_t seed, FabricParams params)
    : width_(width), height_(height), seed_(seed), params_(params) {
    if (width < 1 || height < 1)
        throw DiagError(ErrorCode::ZeroDimension,
                        "fabric must be at least 1x1, got " + std::to_string(width) + "x" +
                            std::to_string(height));
    params_.validate();
}

std::vector<Coord> FabricGrid::sites() const {
    std::vector<Coord> out;
    out.reserve(site_count());
    for (int r = 0; r < height_; ++r)
        for (int c = 0; c < width_; ++c) out.push_back({c, r});
    return out;
}

bool FabricGrid::contains(Coord c) const {
    return c.col >= 0 && c.col < width_ && c.row >= 0 && c.row < height_;
}

double FabricGrid::diagonal() const { return euclidean({0, 0}, {width_ - 1, height_ - 1}); }

Coord FabricGrid::coord_of(NodeId n) const {
    return {static_cast<int>(n % width_), static_cast<int>(n / width_)};
}

FabricGrid build_fabric(int width, int height, std::uint64_t seed, FabricParams params) {
    return FabricGrid(width, height, seed, params);
}

RoutingSegment make_segment(const FabricGrid& fabric, WireKind kind, NodeId from, NodeId to) {
    const auto& p = fabric.params();
    RoutingSegment seg;
    seg.id = mix_key({static_cast<std::uint64_t>(kind), static_cast<std::uint64_t>(from),
                      static_cast<std::uint64_t>(to)});
    seg.from_node = from;
    seg.to_node = to;
    seg.nominal_delay =
        lerp_hash(mix_key({fabric.seed(), stream::segment_delay, seg.id}), p.delay_min, p.delay_max);
    seg.jitter_std =
        lerp_hash(mix_key({fabric.seed(), stream::segment_jitter, seg.id}), p.jitter_min, p.jitter_max);
    return seg;
}

std::vector<NodeId> RoutedPath::nodes() const {
    std::vector<NodeId> out;
    out.reserve(segments.size());
    for (const auto& s : segments) out.push_back(s.to_node);
    return out;
}

RoutedPath route_functional_path(const FabricGrid& fabric, Coord source, Coord dest, int path_id) {
    if (!fabric.contains(source) || !fabric.contains(dest))
        throw DiagError(ErrorCode::OutOfGrid,
                        "route endpoint outside grid: " + coord_str(source) + " -> " + coord_str(dest));
    RoutedPath path;
    path.id = path_id;
    path.source = source;
    path.dest = dest;
    path.launch_delay = fabric.params().launch_delay;
    path.launch_jitter = fabric.params().launch_jitter;

    const auto tiles = l_route_tiles(source, dest);
    const NodeId first = fabric.node_of(tiles.front());
    path.segments.push_back(make_segment(fabric, WireKind::Local, first, first));
    for (std::size_t k = 1; k < tiles.size(); ++k)
        path.segments.push_back(make_segment(fabric, WireKind::Functional, fabric.node_of(tiles[k - 1]),
                                             fabric.node_of(tiles[k])));
    path.sb_count = static_cast<int>(path.segments.size());
    return path;
}

DelayTap attach_delay_tap(const FabricGrid& fabric, const RoutedPath& path, Coord tap_at,
                          Coord dme_position, int tap_id, std::string label) {
    if (!fabric.contains(dme_position))
        throw DiagError(ErrorCode::OutOfGrid, "monitor position outside grid: " + coord_str(dme_position));
    const NodeId tap_node = fabric.contains(tap_at) ? fabric.node_of(tap_at) : -1;
    const auto nodes = path.nodes();
    const auto it = std::find(nodes.begin(), nodes.end(), tap_node);
    if (tap_node < 0 || it == nodes.end())
        throw DiagError(ErrorCode::NodeNotOnPath,
                        "tile " + coord_str(tap_at) + " is not on path " + std::to_string(path.id));

    DelayTap tap;
    tap.id = tap_id;
    tap.label = std::move(label);
    tap.path_id = path.id;
    tap.tap_node = tap_node;
    tap.tap_index = static_cast<int>(it - nodes.begin());
    tap.position = tap_at;
    tap.observer = dme_position;
    const auto tiles = l_route_tiles(tap_at, dme_position);
    for (std::size_t k = 1; k < tiles.size(); ++k)
        tap.branch.push_back(make_segment(fabric, WireKind::Branch, fabric.node_of(tiles[k - 1]),
                                          fabric.node_of(tiles[k])));
    tap.branch_hops = static_cast<int>(tap.branch.size());
    return tap;
}

bool DmePlacement::assigned(int tap_id) const {
    return std::find(assigned_taps.begin(), assigned_taps.end(), tap_id) != assigned_taps.end();
}

std::vector<DmePlacement> place_dmes_grid(const FabricGrid& fabric, int count) {
    const int w = fabric.width();
    const int h = fabric.height();
    if (count < 1 || static_cast<std::size_t>(count) > fabric.site_count())
        throw DiagError(ErrorCode::InvalidConfig, "monitor count must be in [1, " +
                                                      std::to_string(fabric.site_count()) + "]");

    // Prefer an exact cols x rows factorisation whose aspect ratio matches the grid.
    const double target = std::log(static_cast<double>(w) / h);
    int cols = 0;
    int rows = 0;
    double best = std::numeric_limits<double>::infinity();
    for (int c = 1; c <= count; ++c) {
        if (count % c != 0) continue;
        const int r = count / c;
        if (c > w || r > h) continue;
        const double score = std::abs(std::log(static_cast<double>(c) / r) - target);
        const bool tie_wins = std::abs(score - best) < 1e-12 && ((w >= h) ? c > cols : r > rows);
        if (score < best - 1e-12 || tie_wins) {
            best = score;
            cols = c;
            rows = r;
        }
    }
    if (cols == 0) {
        cols = std::clamp(static_cast<int>(std::lround(std::sqrt(static_cast<double>(count) * w / h))), 1, w);
        rows = (count + cols - 1) / cols;
        if (rows > h) {
            cols = w;
            rows = (count + w - 1) / w;
        }
    }

    std::vector<DmePlacement> out;
    out.reserve(static_cast<std::size_t>(count));
    for (int j = 0; j < rows && static_cast<int>(out.size()) < count; ++j) {
        for (int i = 0; i < cols && static_cast<int>(out.size()) < count; ++i) {
            DmePlacement d;
            d.id = static_cast<int>(out.size());
            d.position = {static_cast<int>(std::floor((i + 0.5) * w / cols)),
                          static_cast<int>(std::floor((j + 0.5) * h / rows))};
            out.push_back(std::move(d));
        }
    }
    return out;
}

TransitionStats nominal_transition_stats(const RoutedPath& path, const DelayTap& tap) {
    if (tap.path_id != path.id || tap.tap_index < 0 ||
        tap.tap_index >= static_cast<int>(path.segments.size()) ||
        path.segments[static_cast<std::size_t>(tap.tap_index)].to_node != tap.tap_node)
        throw DiagError(ErrorCode::NodeNotOnPath,
                        "tap " + std::to_string(tap.id) + " is not attached to path " + std::to_string(path.id));
    double mu = path.launch_delay;
    double var = path.launch_jitter * path.launch_jitter;
    for (int k = 0; k <= tap.tap_index; ++k) {
        const auto& s = path.segments[static_cast<std::size_t>(k)];
        mu += s.nominal_delay;
        var += s.jitter_std * s.jitter_std;
    }
    for (const auto& s : tap.branch) {
        mu += s.nominal_delay;
        var += s.jitter_std * s.jitter_std;
    }
    return {mu, std::sqrt(var)};
}

TransitionStats endpoint_transition_stats(const RoutedPath& path) {
    double mu = path.launch_delay;
    double var = path.launch_jitter * path.launch_jitter;
    for (const auto& s : path.segments) {
        mu += s.nominal_delay;
        var += s.jitter_std * s.jitter_std;
    }
    return {mu, std::sqrt(var)};
}

}  // namespace fpgadiag
