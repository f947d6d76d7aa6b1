#pragma once

#include <cstdint>
#include <iosfwd>
#include <span>
#include <string>
#include <vector>

#include "qpon/pipeline.hpp"

namespace qpon {

struct Scenario {
    Document doc;
    std::vector<NodeId> active_onts;
    double duration_s = 216000.0;
    double block_s = 60.0;
    std::uint64_t seed = 1;
    LoadToggles toggles;

    static Scenario from_document(Document doc);
};

struct TimeSeriesRow {
    double t_s = 0.0;
    double skr_bps = 0.0;
    double qber_percent = 0.0;
    std::uint64_t sifted = 0;
    std::uint64_t errors = 0;
};

struct HistogramBin {
    double lower_bps = 0.0;
    std::uint64_t count = 0;
};

struct Summary {
    int n_onts = 0;
    double mean_skr_bps = 0.0;
    double mean_qber_percent = 0.0;
    double analytic_skr_bps = 0.0;
    double analytic_qber_percent = 0.0;
    double back_reflection_dbm = 0.0;
    std::uint64_t total_sifted = 0;
    std::uint64_t total_errors = 0;
    std::uint64_t blocks = 0;
    std::uint64_t seed = 0;
    std::string rng = "";
    std::vector<HistogramBin> skr_histogram;
};

struct RunResult {
    std::vector<TimeSeriesRow> rows;
    Summary summary;
};

enum class ExecMode { Serial, Parallel };

/// Draws per-block sifted/error counts around the analytic steady state and
/// re-derives per-block rates from the sampled counts. Blocks are sampled
/// from independent derived RNG streams, so the serial reference and the
/// OpenMP kernel produce bit-identical series.
RunResult run_scenario(const Scenario& s, ExecMode mode = ExecMode::Parallel);

/// One summary row per requested ONT count, each from a full emulation run
/// with a per-row derived seed (seed XOR row index).
std::vector<Summary> sweep(const Scenario& base, std::span<const int> ont_counts,
                           ExecMode mode = ExecMode::Parallel);

void write_timeseries_csv(std::ostream& out, const std::vector<TimeSeriesRow>& rows);
void write_summary_json(std::ostream& out, const Summary& summary);
void write_sweep_csv(std::ostream& out, const std::vector<Summary>& rows);
void write_sweep_json(std::ostream& out, const std::vector<Summary>& rows);

}  // namespace qpon
