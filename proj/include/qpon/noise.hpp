#pragma once

#include <string>
#include <vector>

#include "qpon/optics.hpp"
#include "qpon/physics.hpp"
#include "qpon/topology.hpp"

namespace qpon {

enum class RamanDirection { Forward, Backward };

/// Spontaneous Raman noise power collected at one span end within
/// `filter_bw_nm` around the quantum wavelength:
///   forward:  P rho bw L e^(-alpha L)
///   backward: P rho bw (1 - e^(-2 alpha L)) / (2 alpha)
/// with alpha the fiber attenuation at lambda_q in nepers/km. A detuning
/// outside the coefficient table yields -inf dBm.
double raman_noise_power_dbm(double launch_dbm, const FiberSpan& fiber, double pump_nm,
                             double quantum_nm, double filter_bw_nm, RamanDirection direction,
                             const Physics& phys);

/// Mean detected photons per gate for the given optical power at the
/// detector input (after any filtering accounted for by the caller).
double photons_per_gate(double power_dbm, double wavelength_nm, const DetectorParams& det);

/// Effective upstream source for noise coupling: the ONT's launch power after
/// power leveling (and optional duty weighting).
struct UpstreamSource {
    NodeId ont;
    double power_dbm = 0.0;
    double wavelength_nm = 1314.0;
};

struct NoiseToggles {
    bool raman = true;
    bool reflections = true;
};

/// Per-mechanism probabilities of at least one noise photon per detector
/// gate, using p = 1 - e^(-mean) so mechanisms compose independently.
struct NoiseBudget {
    double raman_forward = 0.0;
    double raman_backward = 0.0;
    double reflection_leakage = 0.0;
    double dark = 0.0;

    double y0_background() const {
        return 1.0 - (1.0 - raman_forward) * (1.0 - raman_backward) *
                         (1.0 - reflection_leakage) * (1.0 - dark);
    }
};

/// Aggregates every noise mechanism at Bob: Raman scatter of the classical
/// channels on the trunk spans (direction-aware), single-bounce upstream
/// reflections leaking through the receiver filter, and detector dark counts.
NoiseBudget noise_budget(const Topology& t, const Physics& phys, const ChannelPlan& plan,
                         const std::vector<UpstreamSource>& upstream,
                         const NoiseToggles& toggles = {});

}  // namespace qpon
