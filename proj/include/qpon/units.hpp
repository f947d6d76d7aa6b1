#pragma once

#include <cmath>
#include <limits>
#include <span>

namespace qpon {

inline constexpr double kNegInfDbm = -std::numeric_limits<double>::infinity();

// Planck constant [J*s] and vacuum light speed [m/s], exact SI values.
inline constexpr double kPlanck = 6.62607015e-34;
inline constexpr double kLightSpeed = 299792458.0;

inline double db_to_linear(double db) { return std::pow(10.0, db / 10.0); }

inline double linear_to_db(double ratio) { return 10.0 * std::log10(ratio); }

inline double dbm_to_watts(double dbm) {
    if (std::isinf(dbm) && dbm < 0) return 0.0;
    return 1e-3 * std::pow(10.0, dbm / 10.0);
}

inline double watts_to_dbm(double watts) {
    if (watts <= 0.0) return kNegInfDbm;
    return 10.0 * std::log10(watts / 1e-3);
}

/// Energy of a single photon at the given vacuum wavelength [J].
inline double photon_energy_joules(double wavelength_nm) {
    return kPlanck * kLightSpeed / (wavelength_nm * 1e-9);
}

/// Power sum of dBm levels (-inf entries contribute nothing).
inline double dbm_sum(std::span<const double> levels_dbm) {
    double acc = 0.0;
    for (double p : levels_dbm) acc += dbm_to_watts(p);
    return watts_to_dbm(acc);
}

}  // namespace qpon
