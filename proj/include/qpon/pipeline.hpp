#pragma once

#include <span>
#include <vector>

#include "qpon/document.hpp"
#include "qpon/noise.hpp"
#include "qpon/qkd.hpp"

namespace qpon {

struct LoadToggles {
    bool plsu = true;
    bool raman = true;
    bool reflections = true;
};

/// Steady-state analytic evaluation of one load state.
struct LoadEvaluation {
    int n_active = 0;
    NoiseBudget budget;
    ChannelParams channel;
    KeyRateReport report;
    /// Total single-bounce upstream power at Bob's input, pre-filter, at the
    /// leveled burst powers; -inf with no active ONT.
    double back_reflection_dbm = 0.0;
    /// Protocol constants with the calibration rate scale folded into the
    /// clock; the emulation samples with the same values.
    DecoyParams effective_decoy;
};

/// First `count` ONTs of the document's terminal order.
std::vector<NodeId> active_subset(const Document& doc, int count);

LoadEvaluation evaluate_load(const Document& doc, std::span<const NodeId> active_onts,
                             const LoadToggles& toggles = {});

}  // namespace qpon
