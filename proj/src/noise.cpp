#include "qpon/noise.hpp"

#include <cmath>
#include <unordered_map>
#include <variant>

#include "qpon/units.hpp"

namespace qpon {

double raman_noise_power_dbm(double launch_dbm, const FiberSpan& fiber, double pump_nm,
                             double quantum_nm, double filter_bw_nm, RamanDirection direction,
                             const Physics& phys) {
    const double rho = phys.raman.rho(quantum_nm - pump_nm);
    const double pump_w = dbm_to_watts(launch_dbm);
    if (rho <= 0.0 || pump_w <= 0.0 || fiber.length_km <= 0.0) return kNegInfDbm;

    const auto& alpha_model =
        phys.attenuation_for(fiber.fiber_type == FiberType::G652D ? 0 : 1);
    const double alpha = alpha_model.nepers_per_km(quantum_nm);  // nepers/km
    const double len = fiber.length_km;

    double scatter_w = 0.0;
    if (direction == RamanDirection::Forward) {
        scatter_w = pump_w * rho * filter_bw_nm * len * std::exp(-alpha * len);
    } else {
        scatter_w = pump_w * rho * filter_bw_nm * (-std::expm1(-2.0 * alpha * len)) / (2.0 * alpha);
    }
    return watts_to_dbm(scatter_w);
}

double photons_per_gate(double power_dbm, double wavelength_nm, const DetectorParams& det) {
    const double watts = dbm_to_watts(power_dbm);
    if (watts <= 0.0) return 0.0;
    const double flux = watts / photon_energy_joules(wavelength_nm);
    return flux * det.gate_width_s * det.efficiency *
           db_to_linear(-det.receiver_insertion_loss_db);
}

namespace {

struct TrunkSpan {
    std::size_t step_index;
    const FiberSpan* span;
    double suffix_loss_q_db;  // bob-side span end -> Bob, at the quantum wavelength
    double prefix_loss_q_db;  // Alice -> root-side span end, at the quantum wavelength
};

double mean_to_prob(double mean_photons) { return -std::expm1(-mean_photons); }

}  // namespace

NoiseBudget noise_budget(const Topology& t, const Physics& phys, const ChannelPlan& plan,
                         const std::vector<UpstreamSource>& upstream,
                         const NoiseToggles& toggles) {
    NoiseBudget budget;
    budget.dark = phys.detector.dark_count_prob_per_gate;
    if (!toggles.raman && !toggles.reflections) return budget;

    const double lambda_q = plan.quantum().wavelength_nm;
    const BpfModel& bpf = bob_filter(t, phys);
    const double bpf_q_db = bpf.transmission_db(lambda_q);
    const double noise_bw_nm = 2.0 * bpf.passband_halfwidth_nm;

    // Trunk geometry with per-step losses at the quantum wavelength.
    const auto trunk = path_between(t, t.alice, t.bob);
    std::vector<double> step_loss_q(trunk.size(), 0.0);
    for (std::size_t i = 0; i < trunk.size(); ++i) {
        const auto& kind = t.kind(trunk[i].node);
        step_loss_q[i] = element_loss_db(kind, lambda_q, trunk[i], phys);
        if (std::holds_alternative<Splitter>(kind) || std::holds_alternative<Coupler>(kind))
            step_loss_q[i] += 2.0 * phys.connector_insertion_db;
    }
    std::vector<TrunkSpan> spans;
    {
        double prefix = 0.0;
        double total = 0.0;
        for (double l : step_loss_q) total += l;
        for (std::size_t i = 0; i < trunk.size(); ++i) {
            if (const auto* f = std::get_if<FiberSpan>(&t.kind(trunk[i].node)))
                spans.push_back({i, f, total - prefix - step_loss_q[i], prefix});
            prefix += step_loss_q[i];
        }
    }

    double mean_fwd = 0.0;
    double mean_bwd = 0.0;
    if (toggles.raman && !spans.empty()) {
        // Co-propagating classical channels pump forward scatter toward Bob.
        for (const auto& ch : plan.channels) {
            if (!ch.launch_power_dbm || ch.direction != Direction::DownstreamDir) continue;
            double prefix_pump = 0.0;
            std::size_t span_idx = 0;
            for (std::size_t i = 0; i < trunk.size(); ++i) {
                if (span_idx < spans.size() && spans[span_idx].step_index == i) {
                    const double p_in = *ch.launch_power_dbm - prefix_pump;
                    const double scatter =
                        raman_noise_power_dbm(p_in, *spans[span_idx].span, ch.wavelength_nm,
                                              lambda_q, noise_bw_nm, RamanDirection::Forward, phys);
                    const double at_detector = scatter - spans[span_idx].suffix_loss_q_db - bpf_q_db;
                    mean_fwd += photons_per_gate(at_detector, lambda_q, phys.detector);
                    ++span_idx;
                }
                const auto& kind = t.kind(trunk[i].node);
                double l = element_loss_db(kind, ch.wavelength_nm, trunk[i], phys);
                if (std::holds_alternative<Splitter>(kind) || std::holds_alternative<Coupler>(kind))
                    l += 2.0 * phys.connector_insertion_db;
                prefix_pump += l;
            }
        }

        // Counter-propagating upstream channels pump backscatter toward Bob on
        // the trunk spans they share with the quantum path.
        std::unordered_map<NodeId, const TrunkSpan*> trunk_span_by_node;
        for (const auto& s : spans) trunk_span_by_node[trunk[s.step_index].node] = &s;
        for (const auto& src : upstream) {
            if (std::isinf(src.power_dbm) && src.power_dbm < 0) continue;
            const auto up_path = path_between(t, src.ont, t.alice);
            double acc = 0.0;  // ONT -> current element, at the ONT wavelength
            for (const auto& step : up_path) {
                const auto& kind = t.kind(step.node);
                auto it = trunk_span_by_node.find(step.node);
                if (it != trunk_span_by_node.end()) {
                    const double p_in = src.power_dbm - acc;
                    const double scatter = raman_noise_power_dbm(
                        p_in, *it->second->span, src.wavelength_nm, lambda_q, noise_bw_nm,
                        RamanDirection::Backward, phys);
                    const double at_detector =
                        scatter - it->second->suffix_loss_q_db - bpf_q_db;
                    mean_bwd += photons_per_gate(at_detector, lambda_q, phys.detector);
                }
                double l = element_loss_db(kind, src.wavelength_nm, step, phys);
                if (std::holds_alternative<Splitter>(kind) || std::holds_alternative<Coupler>(kind))
                    l += 2.0 * phys.connector_insertion_db;
                acc += l;
            }
        }
    }
    budget.raman_forward = mean_to_prob(mean_fwd);
    budget.raman_backward = mean_to_prob(mean_bwd);

    if (toggles.reflections) {
        double mean_refl = 0.0;
        for (const auto& src : upstream) {
            if (std::isinf(src.power_dbm) && src.power_dbm < 0) continue;
            for (const auto& rp : reflection_paths(t, phys, src.ont, t.bob)) {
                const double pre_filter = src.power_dbm - rp.total_suppression_db();
                const double post_filter = pre_filter - bpf.transmission_db(src.wavelength_nm);
                mean_refl += photons_per_gate(post_filter, src.wavelength_nm, phys.detector);
            }
        }
        budget.reflection_leakage = mean_to_prob(mean_refl);
    }
    return budget;
}

}  // namespace qpon
