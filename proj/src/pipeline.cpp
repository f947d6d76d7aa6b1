#include "qpon/pipeline.hpp"

#include <cmath>
#include <stdexcept>

#include "qpon/optics.hpp"
#include "qpon/units.hpp"

namespace qpon {

std::vector<NodeId> active_subset(const Document& doc, int count) {
    if (count < 0 || count > static_cast<int>(doc.topology.onts.size()))
        throw std::invalid_argument("requested ONT count exceeds the attachment points");
    return {doc.topology.onts.begin(), doc.topology.onts.begin() + count};
}

LoadEvaluation evaluate_load(const Document& doc, std::span<const NodeId> active_onts,
                             const LoadToggles& toggles) {
    const auto& t = doc.topology;
    const auto& phys = doc.physics;
    LoadEvaluation eval;
    eval.n_active = static_cast<int>(active_onts.size());

    // Burst-level upstream powers after OLT power leveling. DBA duty
    // weighting is opt-in (gpon.duty_weighted_noise); key blocks integrate
    // over many frames, but the reflected light rides on transmit bursts.
    const auto load = doc.gpon.load_for({active_onts.data(), active_onts.size()});
    std::vector<UpstreamSource> sources;
    std::vector<std::pair<NodeId, double>> launches;
    for (const auto& id : active_onts) {
        const auto* ont = std::get_if<Ont>(&t.kind(id));
        if (!ont) throw std::invalid_argument("active terminal is not an ONT: " + id);
        const double launch =
            toggles.plsu ? ont_launch_power_dbm(doc.gpon.plsu, eval.n_active, ont->nominal_power_dbm)
                         : ont->nominal_power_dbm;
        double coupled = launch;
        if (doc.gpon.duty_weighted_noise) {
            const double duty = load.duty_of(id);
            coupled = duty > 0.0 ? launch + linear_to_db(duty) : kNegInfDbm;
        }
        launches.emplace_back(id, launch);
        sources.push_back({id, coupled, ont->wavelength_nm});
    }

    eval.back_reflection_dbm =
        launches.empty() ? kNegInfDbm : total_reflected_power_dbm(t, phys, launches, t.bob);

    NoiseToggles noise_toggles{toggles.raman, toggles.reflections};
    eval.budget = noise_budget(t, phys, doc.plan, sources, noise_toggles);

    const double lambda_q = doc.plan.quantum().wavelength_nm;
    const double plant_db = path_loss_db(t, phys, t.alice, t.bob, lambda_q);
    const double rx_db = bpf_transmission_db(bob_filter(t, phys), lambda_q) +
                         phys.detector.receiver_insertion_loss_db;
    eval.channel.eta = db_to_linear(-(plant_db + rx_db)) * phys.detector.efficiency;
    eval.channel.y0 = eval.budget.y0_background();
    eval.channel.e_det = phys.detector.intrinsic_error_e_det;

    eval.effective_decoy = doc.qkd;
    eval.effective_decoy.clock_rate_hz *= phys.rate_scale;
    eval.report = secure_key_rate(eval.effective_decoy, eval.channel);
    return eval;
}

}  // namespace qpon
