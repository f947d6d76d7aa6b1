#include "qpon/optics.hpp"

#include <algorithm>
#include <cmath>
#include <set>
#include <stdexcept>

#include "qpon/units.hpp"

namespace qpon {

namespace {

constexpr double kMinWavelength = 1250.0;
constexpr double kMaxWavelength = 1600.0;

void check_wavelength(double wl) {
    if (wl < kMinWavelength || wl > kMaxWavelength)
        throw std::domain_error("wavelength outside supported range [1250, 1600] nm");
}

double splitter_crossing_db(const Splitter& s, const Physics& phys) {
    const double excess = s.excess_loss_db.value_or(phys.splitter_excess_db);
    return linear_to_db(s.ports) + excess;
}

double coupler_branch_db(const Coupler& c, int branch) {
    const int idx = std::clamp(branch, 0, 1);
    return -linear_to_db(c.ratio[static_cast<std::size_t>(idx)]);
}

/// Number of implicit port connectors crossed on this step (one per traversed
/// splitter/coupler port).
int implicit_ports(const ElementKind& e, const TraversalStep& step) {
    if (!std::holds_alternative<Splitter>(e) && !std::holds_alternative<Coupler>(e)) return 0;
    (void)step;
    return 2;
}

}  // namespace

double element_loss_db(const ElementKind& e, double wavelength_nm, const TraversalStep& step,
                       const Physics& phys) {
    check_wavelength(wavelength_nm);
    struct Visitor {
        double wl;
        const TraversalStep& step;
        const Physics& phys;

        double operator()(const OltHead&) const { return 0.0; }
        double operator()(const QkdTx&) const { return 0.0; }
        double operator()(const QkdRx&) const { return 0.0; }
        double operator()(const Ont&) const { return 0.0; }
        double operator()(const FiberSpan& f) const {
            const auto& alpha = phys.attenuation_for(f.fiber_type == FiberType::G652D ? 0 : 1);
            return alpha.db_per_km(wl) * f.length_km;
        }
        double operator()(const Splitter& s) const {
            const double once = splitter_crossing_db(s, phys);
            return step.dir == TraversalStep::Turn ? 2.0 * once : once;
        }
        double operator()(const Coupler& c) const {
            switch (step.dir) {
                case TraversalStep::Down: return coupler_branch_db(c, step.branch_out);
                case TraversalStep::Up: return coupler_branch_db(c, step.branch_in);
                case TraversalStep::Turn:
                    return coupler_branch_db(c, step.branch_in) +
                           coupler_branch_db(c, step.branch_out);
            }
            return 0.0;
        }
        double operator()(const Connector& k) const {
            return k.insertion_loss_db.value_or(phys.connector_insertion_db);
        }
    };
    return std::visit(Visitor{wavelength_nm, step, phys}, e);
}

std::vector<LossItem> path_loss_items(const Topology& t, const Physics& phys, const NodeId& a,
                                      const NodeId& b, double wavelength_nm) {
    check_wavelength(wavelength_nm);
    std::vector<LossItem> items;
    for (const auto& step : path_between(t, a, b)) {
        const auto& kind = t.kind(step.node);
        items.push_back({step.node, element_kind_name(kind),
                         element_loss_db(kind, wavelength_nm, step, phys)});
        const int ports = implicit_ports(kind, step);
        if (ports > 0)
            items.push_back({step.node, "port connectors",
                             ports * phys.connector_insertion_db});
    }
    return items;
}

double path_loss_db(const Topology& t, const Physics& phys, const NodeId& a, const NodeId& b,
                    double wavelength_nm) {
    double total = 0.0;
    for (const auto& item : path_loss_items(t, phys, a, b, wavelength_nm)) total += item.loss_db;
    return total;
}

double bpf_transmission_db(const BpfModel& f, double wavelength_nm) {
    return f.transmission_db(wavelength_nm);
}

const BpfModel& bob_filter(const Topology& t, const Physics& phys) {
    if (t.has_node(t.bob)) {
        if (const auto* rx = std::get_if<QkdRx>(&t.kind(t.bob)); rx && rx->bpf) return *rx->bpf;
    }
    return phys.bpf;
}

namespace {

double resolved_return_loss(const ElementKind& e, const Physics& phys) {
    if (const auto* s = std::get_if<Splitter>(&e))
        return s->return_loss_db.value_or(phys.splitter_return_loss_db);
    if (const auto* c = std::get_if<Coupler>(&e))
        return c->return_loss_db.value_or(phys.coupler_return_loss_db);
    if (const auto* k = std::get_if<Connector>(&e))
        return k->return_loss_db.value_or(phys.connector_return_loss_db);
    return 0.0;
}

double partial_path_loss(const Topology& t, const Physics& phys, const NodeId& from,
                         const NodeId& to, double wl) {
    return path_loss_db(t, phys, from, to, wl);
}

/// The child of `from` whose subtree contains `target`.
NodeId child_toward(const Topology& t, const NodeId& from, const NodeId& target) {
    NodeId cur = target;
    while (true) {
        auto par = t.parent(cur);
        if (!par) throw std::logic_error("node " + target + " is not below " + from);
        if (*par == from) return cur;
        cur = *par;
    }
}

}  // namespace

std::vector<ReflectionPath> reflection_paths(const Topology& t, const Physics& phys,
                                             const NodeId& ont, const NodeId& bob) {
    if (!t.has_node(ont)) throw std::out_of_range("unknown node id: " + ont);
    if (!t.has_node(bob)) throw std::out_of_range("unknown node id: " + bob);

    const auto* ont_kind = std::get_if<Ont>(&t.kind(ont));
    if (!ont_kind) throw std::invalid_argument("reflection source must be an ONT: " + ont);
    const double wl = ont_kind->wavelength_nm;

    const NodeId junction = common_ancestor(t, ont, bob);

    std::vector<ReflectionPath> paths;
    // Walk the ONT's ancestor chain; interfaces strictly below the junction
    // bounce light away from Bob's subtree and are skipped.
    bool at_or_above_junction = false;
    for (const auto& anc : t.ancestors(ont)) {
        if (anc == junction) at_or_above_junction = true;
        if (at_or_above_junction) {
            const auto& kind = t.kind(anc);
            const bool is_junction_device =
                std::holds_alternative<Splitter>(kind) || std::holds_alternative<Coupler>(kind);
            const bool is_connector = std::holds_alternative<Connector>(kind);
            if (is_junction_device || is_connector) {
                ReflectionPath rp;
                rp.reflection_point = anc;
                rp.wavelength_nm = wl;
                rp.return_loss_db = resolved_return_loss(kind, phys);
                rp.forward_loss_db = partial_path_loss(t, phys, ont, anc, wl);
                // Junction devices re-radiate through their normal downstream
                // branch toward Bob (their own crossing loss applies); plain
                // connectors reflect back without re-crossing themselves.
                if (is_junction_device) {
                    TraversalStep down{anc, TraversalStep::Down, 0,
                                       t.branch_index(child_toward(t, anc, bob))};
                    rp.backward_loss_db = element_loss_db(kind, wl, down, phys) +
                                          implicit_ports(kind, down) * phys.connector_insertion_db +
                                          partial_path_loss(t, phys, anc, bob, wl);
                } else {
                    rp.backward_loss_db = partial_path_loss(t, phys, anc, bob, wl);
                }
                paths.push_back(rp);
            }
        }
    }
    return paths;
}

double total_reflected_power_dbm(const Topology& t, const Physics& phys,
                                 const std::vector<std::pair<NodeId, double>>& ont_launch_dbm,
                                 const NodeId& bob) {
    double watts = 0.0;
    for (const auto& [ont, launch] : ont_launch_dbm) {
        for (const auto& rp : reflection_paths(t, phys, ont, bob))
            watts += dbm_to_watts(launch - rp.total_suppression_db());
    }
    return watts_to_dbm(watts);
}

double received_power_dbm(const Topology& t, const Physics& phys, const ChannelPlan& plan,
                          const Channel& channel, const NodeId& sink) {
    (void)plan;
    if (!channel.launch_power_dbm)
        throw std::invalid_argument("channel has no launch power");
    const NodeId source = channel.source_ont.value_or(t.alice);
    double power = *channel.launch_power_dbm -
                   path_loss_db(t, phys, source, sink, channel.wavelength_nm);
    if (sink == t.bob)
        power -= bpf_transmission_db(bob_filter(t, phys), channel.wavelength_nm);
    return power;
}

}  // namespace qpon
