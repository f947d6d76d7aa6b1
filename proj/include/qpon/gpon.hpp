#pragma once

#include <map>
#include <span>
#include <string>
#include <vector>

namespace qpon {

/// Upstream launch-power leveling applied by the OLT as the registered ONT
/// population grows. `Continuous` drops a fixed step per ONT beyond the
/// reference count; `Discrete` walks a strictly decreasing level table.
struct PlsuPolicy {
    enum class Mode { Off, Continuous, Discrete };
    Mode mode = Mode::Continuous;
    double db_per_added_ont = 0.6;
    int reference_count = 4;
    std::vector<double> levels_dbm;  // Discrete mode only

    static PlsuPolicy off() { return {Mode::Off, 0.0, 0, {}}; }
};

/// TDM upstream airtime shares; at most one transmitter at a time, so the
/// duties of the active set sum to at most 1.
struct DbaLoad {
    std::map<std::string, double> duty;

    static DbaLoad equal_shares(std::span<const std::string> active_onts);
    double duty_of(const std::string& ont) const;
    double total() const;
};

/// Per-ONT launch power under the leveling policy. Throws on n_active == 0.
double ont_launch_power_dbm(const PlsuPolicy& policy, int n_active, double nominal_dbm);

/// Time-averaged upstream power at the ONT output: launch + 10*log10(duty).
/// A zero duty yields -inf dBm (silent ONT).
double effective_upstream_power_dbm(const PlsuPolicy& policy, const DbaLoad& load,
                                    const std::string& ont, int n_active, double nominal_dbm);

struct GponConfig {
    PlsuPolicy plsu{};
    bool dba_equal_shares = true;
    std::map<std::string, double> dba_duty;  // explicit duties when not equal-share
    // When set, upstream noise coupling uses DBA-duty-weighted powers instead
    // of burst-level launch powers.
    bool duty_weighted_noise = false;

    DbaLoad load_for(std::span<const std::string> active_onts) const;
};

}  // namespace qpon
