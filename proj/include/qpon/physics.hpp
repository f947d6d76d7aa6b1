#pragma once

#include <utility>
#include <vector>

namespace qpon {

/// Fiber attenuation as anchored (wavelength_nm, dB/km) points with linear
/// interpolation; queries outside the anchor range clamp to the nearest anchor.
struct AttenuationModel {
    std::vector<std::pair<double, double>> anchors;

    double db_per_km(double wavelength_nm) const;
    /// Attenuation in nepers/km (natural log units) at the given wavelength.
    double nepers_per_km(double wavelength_nm) const;

    static AttenuationModel standard_smf();
};

/// Receiver bandpass filter: flat passband, linear dB edge ramp, clamped at a
/// floor isolation level.
struct BpfModel {
    double center_nm = 1310.0;
    double passband_halfwidth_nm = 1.0;
    double passband_loss_db = 1.0;
    double edge_slope_db_per_nm = 12.0;
    double floor_isolation_db = 45.0;

    /// Attenuation in dB at the given wavelength (>= passband_loss_db).
    double transmission_db(double wavelength_nm) const;
};

/// Spontaneous Raman scattering coefficient versus pump-to-scatter detuning
/// (delta = lambda_scatter - lambda_pump, nm). Values are linear power
/// fraction per km per nm; zero outside |delta| <= 250 nm.
struct RamanModel {
    std::vector<std::pair<double, double>> rho_anchors;

    double rho(double delta_nm) const;
    static RamanModel flat(double rho);
    /// Rescale the whole table so that rho(reference_delta_nm) == value.
    void rescale_to(double reference_delta_nm, double value);
};

struct DetectorParams {
    double efficiency = 0.20;
    double dark_count_prob_per_gate = 1e-5;
    double gate_rate_hz = 1e9;
    double gate_width_s = 100e-12;
    double intrinsic_error_e_det = 0.015;
    double receiver_insertion_loss_db = 2.0;
};

/// Library defaults for everything the scenario document may override, plus
/// the knobs the calibration stage fits.
struct Physics {
    AttenuationModel alpha_g652d = AttenuationModel::standard_smf();
    AttenuationModel alpha_g657a1 = AttenuationModel::standard_smf();
    double splitter_excess_db = 0.5;
    double connector_insertion_db = 0.3;
    double connector_return_loss_db = 50.0;
    double splitter_return_loss_db = 55.0;
    double coupler_return_loss_db = 55.0;
    BpfModel bpf{};
    RamanModel raman = RamanModel::flat(8e-11);
    DetectorParams detector{};
    double rate_scale = 0.2;

    const AttenuationModel& attenuation_for(int fiber_type_index) const {
        return fiber_type_index == 0 ? alpha_g652d : alpha_g657a1;
    }
};

}  // namespace qpon
