#include "qpon/simrun.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <ostream>
#include <random>
#include <stdexcept>

#include "qpon/rng.hpp"
#include "qpon/units.hpp"

namespace qpon {

Scenario Scenario::from_document(Document doc) {
    Scenario s;
    s.active_onts = doc.topology.onts;
    s.duration_s = doc.sim.duration_s;
    s.block_s = doc.sim.block_s;
    s.seed = doc.sim.seed;
    s.doc = std::move(doc);
    return s;
}

namespace {

void validate_scenario(const Scenario& s) {
    if (s.block_s <= 0.0 || s.block_s > s.duration_s)
        throw std::invalid_argument("block_s must be positive and at most duration_s");
    if (!s.doc.topology.has_node(s.doc.topology.alice) ||
        !s.doc.topology.has_node(s.doc.topology.bob))
        throw std::invalid_argument("scenario lacks an Alice/Bob detector path");
    for (const auto& ont : s.active_onts)
        if (std::find(s.doc.topology.onts.begin(), s.doc.topology.onts.end(), ont) ==
            s.doc.topology.onts.end())
            throw std::invalid_argument("active ONT is not a declared terminal: " + ont);
}

TimeSeriesRow sample_block(const LoadEvaluation& steady, double block_s, std::uint64_t seed,
                           std::uint64_t block_index) {
    auto engine = make_engine(seed, block_index);

    const auto& d = steady.effective_decoy;
    const double pulses = d.clock_rate_hz * block_s * d.p_signal * d.sifting_q;
    const double mean_sifted = steady.report.q_mu * pulses;

    TimeSeriesRow row;
    row.t_s = static_cast<double>(block_index + 1) * block_s;
    if (mean_sifted > 0.0) {
        std::poisson_distribution<std::uint64_t> sifted_dist(mean_sifted);
        row.sifted = sifted_dist(engine);
    }
    if (row.sifted > 0 && steady.report.e_mu > 0.0) {
        std::binomial_distribution<std::uint64_t> error_dist(row.sifted,
                                                             std::min(steady.report.e_mu, 0.5));
        row.errors = error_dist(engine);
    }

    if (row.sifted == 0) {
        row.skr_bps = 0.0;
        row.qber_percent = 0.0;
        return row;
    }
    const double q_mu_hat = static_cast<double>(row.sifted) / pulses;
    const double e_mu_hat = static_cast<double>(row.errors) / static_cast<double>(row.sifted);
    const auto block_rate =
        key_rate_from_observed(d, steady.channel, q_mu_hat, e_mu_hat);
    row.skr_bps = block_rate.skr_bps;
    row.qber_percent = 100.0 * e_mu_hat;
    return row;
}

std::vector<HistogramBin> build_histogram(const std::vector<TimeSeriesRow>& rows) {
    std::vector<HistogramBin> bins;
    if (rows.empty()) return bins;
    double lo = rows.front().skr_bps;
    double hi = lo;
    for (const auto& r : rows) {
        lo = std::min(lo, r.skr_bps);
        hi = std::max(hi, r.skr_bps);
    }
    constexpr int kBins = 32;
    const double width = hi > lo ? (hi - lo) / kBins : 1.0;
    bins.resize(kBins);
    for (int i = 0; i < kBins; ++i) bins[static_cast<std::size_t>(i)].lower_bps = lo + i * width;
    for (const auto& r : rows) {
        int idx = static_cast<int>((r.skr_bps - lo) / width);
        idx = std::clamp(idx, 0, kBins - 1);
        ++bins[static_cast<std::size_t>(idx)].count;
    }
    return bins;
}

}  // namespace

RunResult run_scenario(const Scenario& s, ExecMode mode) {
    validate_scenario(s);
    const auto steady = evaluate_load(s.doc, s.active_onts, s.toggles);
    const auto n_blocks = static_cast<std::uint64_t>(std::floor(s.duration_s / s.block_s));

    std::vector<TimeSeriesRow> rows(n_blocks);
    if (mode == ExecMode::Parallel) {
#pragma omp parallel for schedule(static)
        for (long long b = 0; b < static_cast<long long>(n_blocks); ++b)
            rows[static_cast<std::size_t>(b)] =
                sample_block(steady, s.block_s, s.seed, static_cast<std::uint64_t>(b));
    } else {
        for (std::uint64_t b = 0; b < n_blocks; ++b)
            rows[b] = sample_block(steady, s.block_s, s.seed, b);
    }

    RunResult result;
    result.rows = std::move(rows);

    Summary& sum = result.summary;
    sum.n_onts = steady.n_active;
    sum.blocks = n_blocks;
    sum.seed = s.seed;
    sum.rng = std::string(kRngName);
    sum.analytic_skr_bps = steady.report.skr_bps;
    sum.analytic_qber_percent = steady.report.qber_percent;
    sum.back_reflection_dbm = steady.back_reflection_dbm;
    double skr_acc = 0.0;
    for (const auto& r : result.rows) {
        skr_acc += r.skr_bps;
        sum.total_sifted += r.sifted;
        sum.total_errors += r.errors;
    }
    sum.mean_skr_bps = n_blocks ? skr_acc / static_cast<double>(n_blocks) : 0.0;
    sum.mean_qber_percent =
        sum.total_sifted ? 100.0 * static_cast<double>(sum.total_errors) /
                               static_cast<double>(sum.total_sifted)
                         : 0.0;
    sum.skr_histogram = build_histogram(result.rows);
    return result;
}

std::vector<Summary> sweep(const Scenario& base, std::span<const int> ont_counts, ExecMode mode) {
    std::vector<Summary> out;
    out.reserve(ont_counts.size());
    for (std::size_t i = 0; i < ont_counts.size(); ++i) {
        Scenario row = base;
        row.active_onts = active_subset(base.doc, ont_counts[i]);
        row.seed = base.seed ^ static_cast<std::uint64_t>(i);
        out.push_back(run_scenario(row, mode).summary);
    }
    return out;
}

namespace {

std::string fixed(double v, int digits) {
    char buf[64];
    std::snprintf(buf, sizeof buf, "%.*f", digits, v);
    return buf;
}

std::string dbm_or_empty(double dbm) {
    if (std::isinf(dbm) && dbm < 0) return "";
    return fixed(dbm, 2);
}

}  // namespace

void write_timeseries_csv(std::ostream& out, const std::vector<TimeSeriesRow>& rows) {
    out << "t_s,skr_bps,qber_percent,sifted,errors\n";
    for (const auto& r : rows)
        out << fixed(r.t_s, 1) << ',' << fixed(r.skr_bps, 3) << ',' << fixed(r.qber_percent, 4)
            << ',' << r.sifted << ',' << r.errors << '\n';
}

void write_summary_json(std::ostream& out, const Summary& s) {
    out << "{\n";
    out << "  \"n_onts\": " << s.n_onts << ",\n";
    out << "  \"mean_skr_bps\": " << fixed(s.mean_skr_bps, 3) << ",\n";
    out << "  \"mean_qber_percent\": " << fixed(s.mean_qber_percent, 4) << ",\n";
    out << "  \"analytic_skr_bps\": " << fixed(s.analytic_skr_bps, 3) << ",\n";
    out << "  \"analytic_qber_percent\": " << fixed(s.analytic_qber_percent, 4) << ",\n";
    out << "  \"back_reflection_dbm\": "
        << (dbm_or_empty(s.back_reflection_dbm).empty() ? "null" : fixed(s.back_reflection_dbm, 2))
        << ",\n";
    out << "  \"total_sifted\": " << s.total_sifted << ",\n";
    out << "  \"total_errors\": " << s.total_errors << ",\n";
    out << "  \"blocks\": " << s.blocks << ",\n";
    out << "  \"seed\": " << s.seed << ",\n";
    out << "  \"rng\": \"" << s.rng << "\",\n";
    out << "  \"skr_histogram\": [";
    for (std::size_t i = 0; i < s.skr_histogram.size(); ++i) {
        if (i) out << ", ";
        out << "[" << fixed(s.skr_histogram[i].lower_bps, 3) << ", " << s.skr_histogram[i].count
            << "]";
    }
    out << "]\n}\n";
}

void write_sweep_csv(std::ostream& out, const std::vector<Summary>& rows) {
    out << "n_onts,qber,skr_bps,back_refl_dbm\n";
    for (const auto& r : rows)
        out << r.n_onts << ',' << fixed(r.mean_qber_percent, 4) << ',' << fixed(r.mean_skr_bps, 3)
            << ',' << dbm_or_empty(r.back_reflection_dbm) << '\n';
}

void write_sweep_json(std::ostream& out, const std::vector<Summary>& rows) {
    out << "[\n";
    for (std::size_t i = 0; i < rows.size(); ++i) {
        const auto& r = rows[i];
        out << "  {\"n_onts\": " << r.n_onts << ", \"qber\": " << fixed(r.mean_qber_percent, 4)
            << ", \"skr_bps\": " << fixed(r.mean_skr_bps, 3) << ", \"back_refl_dbm\": "
            << (dbm_or_empty(r.back_reflection_dbm).empty() ? "null"
                                                            : fixed(r.back_reflection_dbm, 2))
            << ", \"seed\": " << r.seed << ", \"rng\": \"" << r.rng << "\"}";
        out << (i + 1 < rows.size() ? ",\n" : "\n");
    }
    out << "]\n";
}

}  // namespace qpon
