#pragma once

#include <compare>
#include <cstdint>
#include <string>
#include <vector>

namespace fpgadiag {

struct Coord {
    int col = 0;
    int row = 0;

    auto operator<=>(const Coord&) const = default;
};

int manhattan(Coord a, Coord b);
double euclidean(Coord a, Coord b);

using NodeId = std::int64_t;

/// Delay parameters of the abstract fabric. Per-segment values are drawn
/// uniformly from [min, max] by hashing the fabric seed with the wire
/// identity, so the same wire always has the same delay.
struct FabricParams {
    double delay_min = 100.0;   // ps
    double delay_max = 140.0;   // ps
    double jitter_min = 5.0;    // ps, per-segment standard deviation
    double jitter_max = 8.0;    // ps
    double launch_delay = 200.0;  // ps, source register clock-to-out
    double launch_jitter = 15.0;  // ps

    void validate() const;
    bool operator==(const FabricParams&) const = default;
};

/// CLB grid with one switch-matrix block per tile. Pure function of
/// (width, height, seed, params).
class FabricGrid {
public:
    FabricGrid(int width, int height, std::uint64_t seed, FabricParams params = {});

    int width() const { return width_; }
    int height() const { return height_; }
    std::uint64_t seed() const { return seed_; }
    const FabricParams& params() const { return params_; }

    std::size_t site_count() const { return static_cast<std::size_t>(width_) * height_; }
    std::vector<Coord> sites() const;  // row-major
    bool contains(Coord c) const;
    double diagonal() const;

    NodeId node_of(Coord c) const { return static_cast<NodeId>(c.row) * width_ + c.col; }
    Coord coord_of(NodeId n) const;
    std::size_t site_index(Coord c) const { return static_cast<std::size_t>(node_of(c)); }

    bool operator==(const FabricGrid&) const = default;

private:
    int width_;
    int height_;
    std::uint64_t seed_;
    FabricParams params_;
};

FabricGrid build_fabric(int width, int height, std::uint64_t seed, FabricParams params = {});

enum class WireKind : std::uint8_t { Local, Functional, Branch };

struct RoutingSegment {
    std::uint64_t id = 0;  // wire identity, hashed from (kind, from, to)
    NodeId from_node = 0;
    NodeId to_node = 0;
    double nominal_delay = 0.0;  // ps
    double jitter_std = 0.0;     // ps

    bool operator==(const RoutingSegment&) const = default;
};

// Delay/jitter of the wire (kind, from, to) on this fabric.
RoutingSegment make_segment(const FabricGrid& fabric, WireKind kind, NodeId from, NodeId to);

/// Functional route. segments[k] is the traversal of the k-th switch
/// matrix; segments[0] enters the source tile's matrix from local
/// interconnect, so from_node == to_node for it.
struct RoutedPath {
    int id = 0;
    Coord source;
    Coord dest;
    std::vector<RoutingSegment> segments;
    int sb_count = 0;
    double launch_delay = 0.0;
    double launch_jitter = 0.0;

    std::vector<NodeId> nodes() const;  // to_node of every segment
    bool operator==(const RoutedPath&) const = default;
};

RoutedPath route_functional_path(const FabricGrid& fabric, Coord source, Coord dest, int path_id = 0);

/// Observation branch hanging off a switch-matrix node of a functional
/// path. The path object itself is never touched.
struct DelayTap {
    int id = 0;
    std::string label;     // e.g. "L3"
    int region = 0;
    int path_id = 0;
    NodeId tap_node = 0;
    int tap_index = 0;     // index of the path segment ending at tap_node
    Coord position;        // tile of tap_node
    Coord observer;        // tile of the observation buffer (branch end)
    std::vector<RoutingSegment> branch;
    int branch_hops = 0;

    bool operator==(const DelayTap&) const = default;
};

DelayTap attach_delay_tap(const FabricGrid& fabric, const RoutedPath& path, Coord tap_at,
                          Coord dme_position, int tap_id = 0, std::string label = {});

struct DmePlacement {
    int id = 0;
    Coord position;
    std::vector<int> assigned_taps;  // DT chain, multiplexed one at a time

    bool assigned(int tap_id) const;
    bool operator==(const DmePlacement&) const = default;
};

// Uniform grid placement of `count` monitors over the fabric.
std::vector<DmePlacement> place_dmes_grid(const FabricGrid& fabric, int count);

struct TransitionStats {
    double mu = 0.0;     // ps after the launching clock edge
    double sigma = 0.0;  // ps

    bool operator==(const TransitionStats&) const = default;
};

TransitionStats nominal_transition_stats(const RoutedPath& path, const DelayTap& tap);

// Stats at the functional endpoint (dest tile), no tap involved.
TransitionStats endpoint_transition_stats(const RoutedPath& path);

}  // namespace fpgadiag
