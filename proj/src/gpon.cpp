#include "qpon/gpon.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

#include "qpon/units.hpp"

namespace qpon {

DbaLoad DbaLoad::equal_shares(std::span<const std::string> active_onts) {
    DbaLoad load;
    if (active_onts.empty()) return load;
    const double share = 1.0 / static_cast<double>(active_onts.size());
    for (const auto& ont : active_onts) load.duty[ont] = share;
    return load;
}

double DbaLoad::duty_of(const std::string& ont) const {
    auto it = duty.find(ont);
    if (it == duty.end()) throw std::out_of_range("ont not present in DBA load: " + ont);
    return it->second;
}

double DbaLoad::total() const {
    double sum = 0.0;
    for (const auto& [_, d] : duty) sum += d;
    return sum;
}

double ont_launch_power_dbm(const PlsuPolicy& policy, int n_active, double nominal_dbm) {
    if (n_active < 1) throw std::invalid_argument("PLSu requires at least one active ONT");
    switch (policy.mode) {
        case PlsuPolicy::Mode::Off:
            return nominal_dbm;
        case PlsuPolicy::Mode::Continuous:
            return nominal_dbm -
                   policy.db_per_added_ont * std::max(0, n_active - policy.reference_count);
        case PlsuPolicy::Mode::Discrete: {
            if (policy.levels_dbm.empty())
                throw std::invalid_argument("discrete PLSu policy has no levels");
            const int last = static_cast<int>(policy.levels_dbm.size()) - 1;
            const int idx = std::clamp(n_active - policy.reference_count, 0, last);
            return policy.levels_dbm[static_cast<std::size_t>(idx)];
        }
    }
    throw std::logic_error("unreachable PLSu mode");
}

double effective_upstream_power_dbm(const PlsuPolicy& policy, const DbaLoad& load,
                                    const std::string& ont, int n_active, double nominal_dbm) {
    const double duty = load.duty_of(ont);
    if (duty < 0.0 || duty > 1.0) throw std::invalid_argument("duty fraction outside [0, 1]");
    const double launch = ont_launch_power_dbm(policy, n_active, nominal_dbm);
    if (duty == 0.0) return kNegInfDbm;
    return launch + linear_to_db(duty);
}

DbaLoad GponConfig::load_for(std::span<const std::string> active_onts) const {
    if (dba_equal_shares) return DbaLoad::equal_shares(active_onts);
    DbaLoad load;
    for (const auto& ont : active_onts) {
        auto it = dba_duty.find(ont);
        load.duty[ont] = it == dba_duty.end() ? 0.0 : it->second;
    }
    return load;
}

}  // namespace qpon
