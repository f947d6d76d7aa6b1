#include "qpon/topology.hpp"

#include <algorithm>
#include <cmath>
#include <set>
#include <sstream>
#include <stdexcept>

namespace qpon {

bool QkdRx::operator==(const QkdRx& o) const {
    if (bpf.has_value() != o.bpf.has_value()) return false;
    if (!bpf) return true;
    return bpf->center_nm == o.bpf->center_nm &&
           bpf->passband_halfwidth_nm == o.bpf->passband_halfwidth_nm &&
           bpf->passband_loss_db == o.bpf->passband_loss_db &&
           bpf->edge_slope_db_per_nm == o.bpf->edge_slope_db_per_nm &&
           bpf->floor_isolation_db == o.bpf->floor_isolation_db;
}

const char* element_kind_name(const ElementKind& kind) {
    struct Visitor {
        const char* operator()(const OltHead&) const { return "olt_head"; }
        const char* operator()(const QkdTx&) const { return "qkd_tx"; }
        const char* operator()(const QkdRx&) const { return "qkd_rx"; }
        const char* operator()(const FiberSpan&) const { return "fiber"; }
        const char* operator()(const Splitter&) const { return "splitter"; }
        const char* operator()(const Coupler&) const { return "coupler"; }
        const char* operator()(const Connector&) const { return "connector"; }
        const char* operator()(const Ont&) const { return "ont"; }
    };
    return std::visit(Visitor{}, kind);
}

const ElementKind& Topology::kind(const NodeId& id) const {
    auto it = nodes.find(id);
    if (it == nodes.end()) throw std::out_of_range("unknown node id: " + id);
    return it->second;
}

const std::vector<NodeId>& Topology::children(const NodeId& id) const {
    static const std::vector<NodeId> kEmpty;
    auto it = children_of.find(id);
    return it == children_of.end() ? kEmpty : it->second;
}

int Topology::branch_index(const NodeId& child) const {
    auto p = parent(child);
    if (!p) return 0;
    const auto& kids = children(*p);
    auto it = std::find(kids.begin(), kids.end(), child);
    return it == kids.end() ? 0 : static_cast<int>(it - kids.begin());
}

std::optional<NodeId> Topology::parent(const NodeId& id) const {
    auto it = parent_of.find(id);
    if (it == parent_of.end()) return std::nullopt;
    return it->second;
}

std::vector<NodeId> Topology::ancestors(const NodeId& id) const {
    std::vector<NodeId> chain;
    auto cur = parent(id);
    std::size_t guard = 0;
    while (cur && guard++ <= nodes.size()) {
        chain.push_back(*cur);
        cur = parent(*cur);
    }
    return chain;
}

bool Topology::operator==(const Topology& other) const {
    if (node_order != other.node_order || alice != other.alice || bob != other.bob ||
        onts != other.onts || parent_of != other.parent_of)
        return false;
    if (nodes.size() != other.nodes.size()) return false;
    for (const auto& [id, kind] : nodes) {
        auto it = other.nodes.find(id);
        if (it == other.nodes.end()) return false;
        if (kind.index() != it->second.index()) return false;
        bool same = std::visit(
            [&](const auto& a) {
                using T = std::decay_t<decltype(a)>;
                return a == std::get<T>(it->second);
            },
            kind);
        if (!same) return false;
    }
    for (const auto& [id, kids] : children_of) {
        auto it = other.children_of.find(id);
        if (it == other.children_of.end()) {
            if (!kids.empty()) return false;
            continue;
        }
        if (kids != it->second) return false;
    }
    return true;
}

const Channel& ChannelPlan::quantum() const {
    for (const auto& c : channels)
        if (c.role == ChannelRole::Quantum) return c;
    throw std::logic_error("channel plan has no quantum channel");
}

std::vector<const Channel*> ChannelPlan::by_role(ChannelRole role) const {
    std::vector<const Channel*> out;
    for (const auto& c : channels)
        if (c.role == role) out.push_back(&c);
    return out;
}

namespace {

void check_element(const NodeId& id, const ElementKind& kind, std::vector<Violation>& out) {
    static const std::set<int> kLegalPorts{2, 4, 8, 16, 32, 64};
    if (const auto* s = std::get_if<Splitter>(&kind)) {
        if (!kLegalPorts.count(s->ports))
            out.push_back({id, "splitter-ports", "port count must be one of 2/4/8/16/32/64"});
        if (s->excess_loss_db && *s->excess_loss_db < 0)
            out.push_back({id, "splitter-excess", "excess loss must be >= 0 dB"});
        if (s->return_loss_db && *s->return_loss_db <= 0)
            out.push_back({id, "splitter-return-loss", "return loss must be > 0 dB"});
    } else if (const auto* c = std::get_if<Coupler>(&kind)) {
        if (std::fabs(c->ratio[0] + c->ratio[1] - 1.0) > 1e-9)
            out.push_back({id, "coupler-ratio", "branch ratios must sum to 1"});
        if (c->ratio[0] <= 0 || c->ratio[1] <= 0)
            out.push_back({id, "coupler-ratio", "branch ratios must be positive"});
        if (c->return_loss_db && *c->return_loss_db <= 0)
            out.push_back({id, "coupler-return-loss", "return loss must be > 0 dB"});
    } else if (const auto* f = std::get_if<FiberSpan>(&kind)) {
        if (f->length_km <= 0)
            out.push_back({id, "fiber-length", "span length must be > 0 km"});
    } else if (const auto* o = std::get_if<Ont>(&kind)) {
        if (o->wavelength_nm < 1260.0 || o->wavelength_nm > 1360.0)
            out.push_back({id, "ont-wavelength",
                           "upstream wavelength must lie in the O-band [1260, 1360] nm"});
    } else if (const auto* k = std::get_if<Connector>(&kind)) {
        if (k->insertion_loss_db && *k->insertion_loss_db < 0)
            out.push_back({id, "connector-insertion", "insertion loss must be >= 0 dB"});
        if (k->return_loss_db && *k->return_loss_db <= 0)
            out.push_back({id, "connector-return-loss", "return loss must be > 0 dB"});
    }
}

}  // namespace

std::vector<Violation> validate(const Topology& t) {
    std::vector<Violation> out;

    for (const auto& id : t.node_order) check_element(id, t.kind(id), out);

    // Root: exactly one parentless node, and it must be the Alice terminal.
    std::vector<NodeId> roots;
    for (const auto& id : t.node_order)
        if (!t.parent_of.count(id)) roots.push_back(id);
    if (roots.size() != 1) {
        std::ostringstream ss;
        ss << roots.size() << " parentless nodes";
        out.push_back({roots.empty() ? NodeId("<none>") : roots.front(), "not-a-tree", ss.str()});
    } else if (roots.front() != t.alice) {
        out.push_back({roots.front(), "root-terminal", "root must be the Alice/OLT head-end"});
    }

    if (!t.has_node(t.alice))
        out.push_back({t.alice, "missing-terminal", "alice terminal not declared in nodes"});
    if (!t.has_node(t.bob))
        out.push_back({t.bob, "missing-terminal", "bob terminal not declared in nodes"});
    for (const auto& ont : t.onts)
        if (!t.has_node(ont))
            out.push_back({ont, "missing-terminal", "ont terminal not declared in nodes"});

    // Reachability / cycle sweep from the root.
    if (roots.size() == 1) {
        std::set<NodeId> seen;
        std::vector<NodeId> stack{roots.front()};
        bool cycle = false;
        while (!stack.empty() && !cycle) {
            NodeId cur = stack.back();
            stack.pop_back();
            if (!seen.insert(cur).second) {
                out.push_back({cur, "not-a-tree", "cycle detected"});
                cycle = true;
                break;
            }
            for (const auto& kid : t.children(cur)) stack.push_back(kid);
        }
        if (!cycle)
            for (const auto& id : t.node_order)
                if (!seen.count(id))
                    out.push_back({id, "unreachable", "node is not connected to the root"});
    }

    for (const auto& id : t.node_order) {
        const auto& kind = t.kind(id);
        const auto& kids = t.children(id);
        if (const auto* s = std::get_if<Splitter>(&kind)) {
            if (static_cast<int>(kids.size()) > s->ports) {
                std::ostringstream ss;
                ss << kids.size() << " children on a 1:" << s->ports << " splitter";
                out.push_back({id, "over-subscribed-splitter", ss.str()});
            }
        } else if (std::holds_alternative<Coupler>(kind)) {
            if (kids.size() > 2)
                out.push_back({id, "over-subscribed-coupler", "couplers have two output branches"});
        } else if (std::holds_alternative<FiberSpan>(kind) ||
                   std::holds_alternative<Connector>(kind)) {
            if (kids.size() > 1)
                out.push_back({id, "fan-out", "in-line elements carry a single downstream branch"});
        }
    }

    // Terminal roles and leaf-ness.
    if (t.has_node(t.bob)) {
        if (!std::holds_alternative<QkdRx>(t.kind(t.bob)))
            out.push_back({t.bob, "terminal-kind", "bob must be a qkd_rx element"});
        if (!t.children(t.bob).empty())
            out.push_back({t.bob, "terminal-leaf", "bob must be a leaf"});
    }
    if (t.has_node(t.alice)) {
        const auto& k = t.kind(t.alice);
        if (!std::holds_alternative<OltHead>(k) && !std::holds_alternative<QkdTx>(k))
            out.push_back({t.alice, "terminal-kind", "alice must be an olt_head or qkd_tx element"});
    }
    for (const auto& ont : t.onts) {
        if (!t.has_node(ont)) continue;
        if (!std::holds_alternative<Ont>(t.kind(ont)))
            out.push_back({ont, "terminal-kind", "ont terminal must be an ont element"});
        if (!t.children(ont).empty())
            out.push_back({ont, "terminal-leaf", "ont must be a leaf"});
    }
    for (const auto& id : t.node_order) {
        if (std::holds_alternative<Ont>(t.kind(id)) &&
            std::find(t.onts.begin(), t.onts.end(), id) == t.onts.end())
            out.push_back({id, "undeclared-ont", "ont element missing from terminals.onts"});
    }

    return out;
}

std::vector<TraversalStep> path_between(const Topology& t, const NodeId& a, const NodeId& b) {
    if (!t.has_node(a)) throw std::out_of_range("unknown node id: " + a);
    if (!t.has_node(b)) throw std::out_of_range("unknown node id: " + b);
    if (a == b) return {};

    // Chains up to the root, starting at the endpoints themselves.
    auto chain = [&](const NodeId& x) {
        std::vector<NodeId> c{x};
        for (const auto& anc : t.ancestors(x)) c.push_back(anc);
        return c;
    };
    const auto ca = chain(a);
    const auto cb = chain(b);
    const std::set<NodeId> in_cb(cb.begin(), cb.end());

    std::size_t ia = 0;
    while (ia < ca.size() && !in_cb.count(ca[ia])) ++ia;
    if (ia == ca.size()) throw std::logic_error("terminals are not connected");
    const NodeId& lca = ca[ia];
    const std::size_t ib = static_cast<std::size_t>(
        std::find(cb.begin(), cb.end(), lca) - cb.begin());

    std::vector<TraversalStep> steps;
    if (lca == b) {
        // b is an ancestor of a: ascend only, excluding both endpoints.
        for (std::size_t k = 1; k < ia; ++k)
            steps.push_back({ca[k], TraversalStep::Up, t.branch_index(ca[k - 1]), 0});
        return steps;
    }
    if (lca == a) {
        // a is an ancestor of b: descend only.
        for (std::size_t k = ib - 1; k >= 1; --k)
            steps.push_back({cb[k], TraversalStep::Down, 0, t.branch_index(cb[k - 1])});
        return steps;
    }

    // Leaf-to-leaf: ascend below the junction, turn at it, descend to b.
    for (std::size_t k = 1; k < ia; ++k)
        steps.push_back({ca[k], TraversalStep::Up, t.branch_index(ca[k - 1]), 0});
    steps.push_back({lca, TraversalStep::Turn, t.branch_index(ca[ia - 1]),
                     t.branch_index(cb[ib - 1])});
    for (std::size_t k = ib - 1; k >= 1; --k)
        steps.push_back({cb[k], TraversalStep::Down, 0, t.branch_index(cb[k - 1])});
    return steps;
}

NodeId common_ancestor(const Topology& t, const NodeId& a, const NodeId& b) {
    std::set<NodeId> chain_a{a};
    for (const auto& anc : t.ancestors(a)) chain_a.insert(anc);
    NodeId cur = b;
    while (!chain_a.count(cur)) {
        auto par = t.parent(cur);
        if (!par) return cur;
        cur = *par;
    }
    return cur;
}

}  // namespace qpon
