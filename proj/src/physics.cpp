#include "qpon/physics.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

namespace qpon {

namespace {

double interpolate_clamped(const std::vector<std::pair<double, double>>& table, double x) {
    if (table.empty()) throw std::logic_error("interpolation table is empty");
    if (x <= table.front().first) return table.front().second;
    if (x >= table.back().first) return table.back().second;
    auto hi = std::lower_bound(table.begin(), table.end(), x,
                               [](const auto& a, double v) { return a.first < v; });
    auto lo = hi - 1;
    const double t = (x - lo->first) / (hi->first - lo->first);
    return lo->second + t * (hi->second - lo->second);
}

}  // namespace

double AttenuationModel::db_per_km(double wavelength_nm) const {
    return interpolate_clamped(anchors, wavelength_nm);
}

double AttenuationModel::nepers_per_km(double wavelength_nm) const {
    return db_per_km(wavelength_nm) * std::log(10.0) / 10.0;
}

AttenuationModel AttenuationModel::standard_smf() {
    return AttenuationModel{{{1310.0, 0.35}, {1490.0, 0.24}, {1550.0, 0.21}}};
}

double BpfModel::transmission_db(double wavelength_nm) const {
    const double offset = std::fabs(wavelength_nm - center_nm);
    if (offset <= passband_halfwidth_nm) return passband_loss_db;
    const double ramp = passband_loss_db + edge_slope_db_per_nm * (offset - passband_halfwidth_nm);
    return std::min(ramp, floor_isolation_db);
}

double RamanModel::rho(double delta_nm) const {
    if (std::fabs(delta_nm) > 250.0 || rho_anchors.empty()) return 0.0;
    return std::max(0.0, interpolate_clamped(rho_anchors, delta_nm));
}

RamanModel RamanModel::flat(double rho) {
    return RamanModel{{{-250.0, rho}, {250.0, rho}}};
}

void RamanModel::rescale_to(double reference_delta_nm, double value) {
    const double current = rho(reference_delta_nm);
    if (current <= 0.0) {
        rho_anchors = flat(value).rho_anchors;
        return;
    }
    const double k = value / current;
    for (auto& [d, r] : rho_anchors) r *= k;
}

}  // namespace qpon
