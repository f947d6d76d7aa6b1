#pragma once

#include <array>
#include <optional>
#include <string>
#include <unordered_map>
#include <variant>
#include <vector>

#include "qpon/physics.hpp"

namespace qpon {

using NodeId = std::string;

enum class FiberType { G652D, G657A1 };

struct OltHead {
    bool operator==(const OltHead&) const = default;
};
struct QkdTx {
    bool operator==(const QkdTx&) const = default;
};
struct QkdRx {
    std::optional<BpfModel> bpf;  // falls back to physics.bpf
    bool operator==(const QkdRx& o) const;
};
struct FiberSpan {
    double length_km = 0.0;
    FiberType fiber_type = FiberType::G652D;
    bool operator==(const FiberSpan&) const = default;
};
struct Splitter {
    int ports = 2;
    std::optional<double> excess_loss_db;  // fallback physics.splitter_excess_db
    std::optional<double> return_loss_db;  // fallback physics.splitter_return_loss_db
    bool operator==(const Splitter&) const = default;
};
struct Coupler {
    std::array<double, 2> ratio{0.5, 0.5};
    std::optional<double> return_loss_db;  // fallback physics.coupler_return_loss_db
    bool operator==(const Coupler&) const = default;
};
struct Connector {
    std::optional<double> insertion_loss_db;  // fallback physics.connector_insertion_db
    std::optional<double> return_loss_db;     // fallback physics.connector_return_loss_db
    bool operator==(const Connector&) const = default;
};
enum class PowerClass { BPlus, CPlus };
struct Ont {
    double wavelength_nm = 1314.0;
    double nominal_power_dbm = 0.0;
    PowerClass power_class = PowerClass::BPlus;
    bool operator==(const Ont&) const = default;
};

using ElementKind = std::variant<OltHead, QkdTx, QkdRx, FiberSpan, Splitter, Coupler, Connector, Ont>;

const char* element_kind_name(const ElementKind& kind);

/// Rooted tree of optical elements. Immutable after parsing; iteration order
/// of nodes and children follows document order.
struct Topology {
    std::vector<NodeId> node_order;
    std::unordered_map<NodeId, ElementKind> nodes;
    std::unordered_map<NodeId, NodeId> parent_of;
    std::unordered_map<NodeId, std::vector<NodeId>> children_of;
    NodeId alice;
    NodeId bob;
    std::vector<NodeId> onts;

    bool has_node(const NodeId& id) const { return nodes.count(id) != 0; }
    const ElementKind& kind(const NodeId& id) const;
    const std::vector<NodeId>& children(const NodeId& id) const;
    /// Index of `child` among its parent's children (couplers care).
    int branch_index(const NodeId& child) const;
    std::optional<NodeId> parent(const NodeId& id) const;
    /// Chain of ancestors from `id` (exclusive) up to the root (inclusive).
    std::vector<NodeId> ancestors(const NodeId& id) const;

    bool operator==(const Topology& other) const;
};

enum class ChannelRole { Quantum, Downstream, Upstream, ServiceCh };
enum class Direction { DownstreamDir, UpstreamDir };

struct Channel {
    ChannelRole role = ChannelRole::Downstream;
    double wavelength_nm = 1490.0;
    std::optional<double> launch_power_dbm;  // absent for the quantum channel
    Direction direction = Direction::DownstreamDir;
    std::optional<NodeId> source_ont;  // set for upstream channels
};

struct ChannelPlan {
    std::vector<Channel> channels;

    const Channel& quantum() const;
    std::vector<const Channel*> by_role(ChannelRole role) const;
};

struct Violation {
    NodeId node;
    std::string rule;
    std::string detail;
};

/// Structural and per-element invariant checks; empty result means valid.
std::vector<Violation> validate(const Topology& t);

/// One element traversal on a terminal-to-terminal path. `Turn` marks the
/// common-ancestor junction of a leaf-to-leaf path: the light enters via
/// child `branch_in` and leaves via child `branch_out`.
struct TraversalStep {
    NodeId node;
    enum Dir { Down, Up, Turn } dir = Down;
    int branch_in = 0;
    int branch_out = 0;
    bool operator==(const TraversalStep&) const = default;
};

/// Unique tree path strictly between two terminals (endpoints excluded).
/// The reverse path visits the same nodes in reverse order with directions
/// flipped.
std::vector<TraversalStep> path_between(const Topology& t, const NodeId& a, const NodeId& b);

/// Lowest common ancestor of two nodes.
NodeId common_ancestor(const Topology& t, const NodeId& a, const NodeId& b);

}  // namespace qpon
