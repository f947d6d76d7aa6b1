#pragma once

#include <string>
#include <vector>

#include "qpon/physics.hpp"
#include "qpon/topology.hpp"

namespace qpon {

/// Loss of a single element crossing at the given wavelength. Splitters are
/// symmetric (split loss + excess both directions); couplers charge the
/// branch share actually traversed; a `Turn` crossing of a junction charges
/// both the entry and exit branches. Implicit per-port connectors are NOT
/// part of the element loss; path assembly adds them (see path_loss_items).
/// Throws outside the supported wavelength range [1250, 1600] nm.
double element_loss_db(const ElementKind& e, double wavelength_nm, const TraversalStep& step,
                       const Physics& phys);

struct LossItem {
    NodeId node;
    std::string label;
    double loss_db = 0.0;
};

/// Per-element loss breakdown of the a->b path, including one implicit
/// connector per traversed splitter/coupler port.
std::vector<LossItem> path_loss_items(const Topology& t, const Physics& phys, const NodeId& a,
                                      const NodeId& b, double wavelength_nm);

double path_loss_db(const Topology& t, const Physics& phys, const NodeId& a, const NodeId& b,
                    double wavelength_nm);

/// BPF attenuation in dB at the given wavelength.
double bpf_transmission_db(const BpfModel& f, double wavelength_nm);

/// Resolved Bob-side filter: the receiver's own model or the physics default.
const BpfModel& bob_filter(const Topology& t, const Physics& phys);

/// One single-bounce reflection of an ONT's upstream light that reaches Bob:
/// forward loss up to the reflecting interface, the interface return loss,
/// and the descending loss from the interface to Bob (pre-filter).
struct ReflectionPath {
    NodeId reflection_point;
    double forward_loss_db = 0.0;
    double return_loss_db = 0.0;
    double backward_loss_db = 0.0;
    double wavelength_nm = 0.0;

    double total_suppression_db() const {
        return forward_loss_db + return_loss_db + backward_loss_db;
    }
};

/// All single-bounce paths from `ont` to `bob`: one entry per reflective
/// interface (explicit connector, splitter, coupler) on the ONT's ancestor
/// chain at or above the ONT/Bob junction. Junction devices re-radiate down
/// their Bob-side branch; connectors reflect straight back down the trunk.
std::vector<ReflectionPath> reflection_paths(const Topology& t, const Physics& phys,
                                             const NodeId& ont, const NodeId& bob);

/// Total reflected power at Bob's input (pre-filter) for the given per-ONT
/// launch powers [dBm].
double total_reflected_power_dbm(const Topology& t, const Physics& phys,
                                 const std::vector<std::pair<NodeId, double>>& ont_launch_dbm,
                                 const NodeId& bob);

/// Received power of a channel at `sink`: launch - path loss, minus the Bob
/// bandpass filter when the sink is the QKD receiver.
double received_power_dbm(const Topology& t, const Physics& phys, const ChannelPlan& plan,
                          const Channel& channel, const NodeId& sink);

}  // namespace qpon
