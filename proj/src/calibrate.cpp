#include "qpon/calibrate.hpp"

#include <algorithm>
#include <cmath>
#include <istream>
#include <numeric>
#include <set>
#include <sstream>

#include "qpon/rng.hpp"

#ifdef _OPENMP
#include <omp.h>
#endif

namespace qpon {

std::array<double, CalibrationParams::kCount> CalibrationParams::to_array() const {
    return {raman_rho,
            bpf_floor_isolation_db,
            bpf_edge_slope_db_per_nm,
            splitter_return_loss_db,
            coupler_return_loss_db,
            connector_return_loss_db,
            plsu_db_per_ont,
            rate_scale};
}

CalibrationParams CalibrationParams::from_array(const std::array<double, kCount>& a) {
    CalibrationParams p;
    p.raman_rho = a[0];
    p.bpf_floor_isolation_db = a[1];
    p.bpf_edge_slope_db_per_nm = a[2];
    p.splitter_return_loss_db = a[3];
    p.coupler_return_loss_db = a[4];
    p.connector_return_loss_db = a[5];
    p.plsu_db_per_ont = a[6];
    p.rate_scale = a[7];
    return p;
}

const std::array<const char*, CalibrationParams::kCount>& CalibrationParams::names() {
    static const std::array<const char*, kCount> kNames = {
        "raman_rho",
        "bpf_floor_isolation_db",
        "bpf_edge_slope_db_per_nm",
        "splitter_return_loss_db",
        "coupler_return_loss_db",
        "connector_return_loss_db",
        "plsu_db_per_ont",
        "rate_scale"};
    return kNames;
}

bool CalibrationParams::is_linear_scale(int index) { return index == 0 || index == 7; }

ParamBounds ParamBounds::defaults() {
    ParamBounds b;
    b.lo = {1e-11, 25.0, 5.0, 30.0, 30.0, 30.0, 0.0, 0.01};
    b.hi = {1e-7, 80.0, 40.0, 70.0, 70.0, 70.0, 2.0, 10.0};
    return b;
}

CalibrationParams ParamBounds::clamp(const CalibrationParams& p) const {
    auto a = p.to_array();
    for (int i = 0; i < CalibrationParams::kCount; ++i)
        a[static_cast<std::size_t>(i)] =
            std::clamp(a[static_cast<std::size_t>(i)], lo[static_cast<std::size_t>(i)],
                       hi[static_cast<std::size_t>(i)]);
    return CalibrationParams::from_array(a);
}

Observations Observations::from_csv(std::istream& in) {
    Observations obs;
    std::string line;
    bool header = true;
    std::set<int> seen;
    while (std::getline(in, line)) {
        while (!line.empty() && (line.back() == '\r' || line.back() == '\n')) line.pop_back();
        if (line.empty()) continue;
        if (header) {
            header = false;
            if (line.find("n_onts") != std::string::npos) continue;  // header row
        }
        std::vector<std::string> fields;
        std::stringstream ss(line);
        std::string field;
        while (std::getline(ss, field, ',')) fields.push_back(field);
        if (line.back() == ',') fields.push_back("");
        if (fields.size() < 3 || fields.size() > 4)
            throw ParseError("observation rows need n_onts,qber,skr_bps[,back_refl_dbm]: " + line);
        ObservationRow row;
        try {
            row.n_onts = std::stoi(fields[0]);
            row.qber_percent = std::stod(fields[1]);
            row.skr_bps = std::stod(fields[2]);
            if (fields.size() == 4 && !fields[3].empty())
                row.back_reflection_dbm = std::stod(fields[3]);
        } catch (const std::exception&) {
            throw ParseError("malformed observation row: " + line);
        }
        if (!seen.insert(row.n_onts).second)
            throw ParseError("duplicate observation for the same ONT count: " + line);
        obs.rows.push_back(row);
    }
    return obs;
}

namespace {

double downstream_detuning_nm(const Document& doc) {
    const double lambda_q = doc.plan.quantum().wavelength_nm;
    for (const auto& ch : doc.plan.channels)
        if (ch.role == ChannelRole::Downstream) return lambda_q - ch.wavelength_nm;
    return -180.0;
}

constexpr double kNoKeyPenalty = 1e3;

}  // namespace

Document apply_params(const Document& base, const CalibrationParams& p) {
    Document doc = base;
    doc.physics.raman.rescale_to(downstream_detuning_nm(base), p.raman_rho);
    doc.physics.bpf.floor_isolation_db = p.bpf_floor_isolation_db;
    doc.physics.bpf.edge_slope_db_per_nm = p.bpf_edge_slope_db_per_nm;
    doc.physics.splitter_return_loss_db = p.splitter_return_loss_db;
    doc.physics.coupler_return_loss_db = p.coupler_return_loss_db;
    doc.physics.connector_return_loss_db = p.connector_return_loss_db;
    doc.physics.rate_scale = p.rate_scale;
    if (doc.gpon.plsu.mode == PlsuPolicy::Mode::Continuous)
        doc.gpon.plsu.db_per_added_ont = p.plsu_db_per_ont;
    return doc;
}

std::vector<double> residuals(const CalibrationParams& p, const Observations& obs,
                              const Document& base) {
    const Document doc = apply_params(base, p);
    std::vector<double> out;
    for (const auto& row : obs.rows) {
        LoadEvaluation eval;
        bool failed = false;
        try {
            const auto active = active_subset(doc, row.n_onts);
            eval = evaluate_load(doc, active);
        } catch (const std::exception&) {
            failed = true;
        }
        if (failed) {
            out.push_back(kNoKeyPenalty);
            out.push_back(kNoKeyPenalty);
            if (row.back_reflection_dbm) out.push_back(kNoKeyPenalty);
            continue;
        }
        out.push_back((eval.report.qber_percent - row.qber_percent) / obs.weights.qber_pp);
        if (eval.report.skr_bps > 0.0 && row.skr_bps > 0.0)
            out.push_back((std::log10(eval.report.skr_bps) - std::log10(row.skr_bps)) /
                          obs.weights.skr_log10);
        else if (eval.report.skr_bps <= 0.0 && row.skr_bps <= 0.0)
            out.push_back(0.0);
        else
            out.push_back(kNoKeyPenalty);
        if (row.back_reflection_dbm) {
            if (std::isinf(eval.back_reflection_dbm))
                out.push_back(kNoKeyPenalty);
            else
                out.push_back((eval.back_reflection_dbm - *row.back_reflection_dbm) /
                              obs.weights.reflection_db);
        }
    }
    return out;
}

double objective(const CalibrationParams& p, const Observations& obs, const Document& base) {
    double acc = 0.0;
    for (double r : residuals(p, obs, base)) acc += r * r;
    return acc;
}

namespace detail {

SimplexResult nelder_mead(const std::function<double(const std::vector<double>&)>& fn,
                          std::vector<double> start, double step, int max_evals,
                          double tolerance) {
    const std::size_t n = start.size();
    auto clamp01 = [](std::vector<double> v) {
        for (double& x : v) x = std::clamp(x, 0.0, 1.0);
        return v;
    };

    SimplexResult result;
    std::vector<std::vector<double>> pts;
    std::vector<double> vals;
    auto eval = [&](const std::vector<double>& v) {
        ++result.evaluations;
        return fn(v);
    };

    pts.push_back(clamp01(start));
    vals.push_back(eval(pts[0]));
    for (std::size_t i = 0; i < n; ++i) {
        auto v = pts[0];
        v[i] += (v[i] + step <= 1.0) ? step : -step;
        v = clamp01(v);
        pts.push_back(v);
        vals.push_back(eval(v));
    }

    auto order = [&] {
        std::vector<std::size_t> idx(pts.size());
        std::iota(idx.begin(), idx.end(), 0);
        std::sort(idx.begin(), idx.end(), [&](std::size_t a, std::size_t b) {
            return vals[a] < vals[b];
        });
        std::vector<std::vector<double>> p2;
        std::vector<double> v2;
        for (auto i : idx) {
            p2.push_back(pts[i]);
            v2.push_back(vals[i]);
        }
        pts.swap(p2);
        vals.swap(v2);
    };

    while (result.evaluations < static_cast<std::uint64_t>(max_evals)) {
        order();
        if (vals.back() - vals.front() < tolerance) {
            result.converged = true;
            break;
        }
        // Centroid of all but the worst vertex.
        std::vector<double> centroid(n, 0.0);
        for (std::size_t i = 0; i + 1 < pts.size(); ++i)
            for (std::size_t j = 0; j < n; ++j) centroid[j] += pts[i][j];
        for (double& c : centroid) c /= static_cast<double>(n);

        auto combine = [&](double coeff) {
            std::vector<double> v(n);
            for (std::size_t j = 0; j < n; ++j)
                v[j] = centroid[j] + coeff * (pts.back()[j] - centroid[j]);
            return clamp01(v);
        };

        const auto reflected = combine(-1.0);
        const double fr = eval(reflected);
        if (fr < vals.front()) {
            const auto expanded = combine(-2.0);
            const double fe = eval(expanded);
            if (fe < fr) {
                pts.back() = expanded;
                vals.back() = fe;
            } else {
                pts.back() = reflected;
                vals.back() = fr;
            }
            continue;
        }
        if (fr < vals[vals.size() - 2]) {
            pts.back() = reflected;
            vals.back() = fr;
            continue;
        }
        const auto contracted = combine(fr < vals.back() ? -0.5 : 0.5);
        const double fc = eval(contracted);
        if (fc < std::min(fr, vals.back())) {
            pts.back() = contracted;
            vals.back() = fc;
            continue;
        }
        // Shrink toward the best vertex.
        for (std::size_t i = 1; i < pts.size(); ++i) {
            for (std::size_t j = 0; j < n; ++j)
                pts[i][j] = pts[0][j] + 0.5 * (pts[i][j] - pts[0][j]);
            vals[i] = eval(pts[i]);
        }
    }
    order();
    result.point = pts.front();
    result.value = vals.front();
    return result;
}

}  // namespace detail

namespace {

struct BoxMap {
    ParamBounds bounds;

    double to_unit(int i, double x) const {
        const auto idx = static_cast<std::size_t>(i);
        if (CalibrationParams::is_linear_scale(i)) {
            const double llo = std::log10(bounds.lo[idx]);
            const double lhi = std::log10(bounds.hi[idx]);
            return (std::log10(x) - llo) / (lhi - llo);
        }
        return (x - bounds.lo[idx]) / (bounds.hi[idx] - bounds.lo[idx]);
    }
    double from_unit(int i, double u) const {
        const auto idx = static_cast<std::size_t>(i);
        u = std::clamp(u, 0.0, 1.0);
        if (CalibrationParams::is_linear_scale(i)) {
            const double llo = std::log10(bounds.lo[idx]);
            const double lhi = std::log10(bounds.hi[idx]);
            return std::pow(10.0, llo + u * (lhi - llo));
        }
        return bounds.lo[idx] + u * (bounds.hi[idx] - bounds.lo[idx]);
    }
    std::vector<double> to_unit(const CalibrationParams& p) const {
        const auto a = p.to_array();
        std::vector<double> u(CalibrationParams::kCount);
        for (int i = 0; i < CalibrationParams::kCount; ++i)
            u[static_cast<std::size_t>(i)] = to_unit(i, a[static_cast<std::size_t>(i)]);
        return u;
    }
    CalibrationParams from_unit(const std::vector<double>& u) const {
        std::array<double, CalibrationParams::kCount> a{};
        for (int i = 0; i < CalibrationParams::kCount; ++i)
            a[static_cast<std::size_t>(i)] = from_unit(i, u[static_cast<std::size_t>(i)]);
        return CalibrationParams::from_array(a);
    }
};

}  // namespace

FitReport fit(const CalibrationParams& p0, const Observations& obs, const Document& base,
              const FitOptions& options) {
    if (obs.rows.empty()) throw std::invalid_argument("no observations to fit against");
    const BoxMap box{options.bounds};
    const CalibrationParams start = options.bounds.clamp(p0);

    auto objective_unit = [&](const std::vector<double>& u) {
        return objective(box.from_unit(u), obs, base);
    };

    struct RestartOutcome {
        detail::SimplexResult simplex;
        int index = 0;
    };
    std::vector<RestartOutcome> outcomes(static_cast<std::size_t>(options.restarts));

    auto run_restart = [&](int r) {
        std::vector<double> u0;
        if (r == 0) {
            u0 = box.to_unit(start);
        } else if (r % 2 == 1) {
            // Jitter around the supplied starting point.
            auto engine = make_engine(options.seed, static_cast<std::uint64_t>(r));
            std::uniform_real_distribution<double> jitter(-0.15, 0.15);
            u0 = box.to_unit(start);
            for (double& x : u0) x = std::clamp(x + jitter(engine), 0.0, 1.0);
        } else {
            auto engine = make_engine(options.seed, static_cast<std::uint64_t>(r));
            std::uniform_real_distribution<double> uniform(0.05, 0.95);
            u0.resize(CalibrationParams::kCount);
            for (double& x : u0) x = uniform(engine);
        }
        outcomes[static_cast<std::size_t>(r)].index = r;
        outcomes[static_cast<std::size_t>(r)].simplex = detail::nelder_mead(
            objective_unit, u0, 0.10, options.max_evals_per_restart, options.tolerance);
    };

    if (options.parallel) {
#pragma omp parallel for schedule(dynamic)
        for (int r = 0; r < options.restarts; ++r) run_restart(r);
    } else {
        for (int r = 0; r < options.restarts; ++r) run_restart(r);
    }

    // Deterministic reduction: best objective, ties to the lowest index.
    const RestartOutcome* best = &outcomes.front();
    for (const auto& o : outcomes)
        if (o.simplex.value < best->simplex.value ||
            (o.simplex.value == best->simplex.value && o.index < best->index))
            best = &o;

    FitReport report;
    report.params = box.from_unit(best->simplex.point);
    report.objective_value = best->simplex.value;
    report.best_restart = best->index;
    report.converged = best->simplex.converged;
    for (const auto& o : outcomes) report.evaluations += o.simplex.evaluations;

    // Small-step polish around the winner; restarts land near the basin but
    // can stall with a collapsed simplex.
    const auto polish = detail::nelder_mead(objective_unit, best->simplex.point, 0.02,
                                            options.max_evals_per_restart, options.tolerance);
    report.evaluations += polish.evaluations;
    if (polish.value < report.objective_value) {
        report.params = box.from_unit(polish.point);
        report.objective_value = polish.value;
        report.converged = polish.converged;
    }
    report.residuals = residuals(report.params, obs, base);

    // Guard rail: never return something worse than the starting point.
    const double f0 = objective(start, obs, base);
    if (f0 < report.objective_value) {
        report.params = start;
        report.objective_value = f0;
        report.residuals = residuals(start, obs, base);
        report.converged = false;
    }

    const auto u_best = box.to_unit(report.params);
    constexpr double kSensStep = 1e-3;
    for (int i = 0; i < CalibrationParams::kCount; ++i) {
        auto up = u_best;
        auto dn = u_best;
        const auto idx = static_cast<std::size_t>(i);
        up[idx] = std::clamp(up[idx] + kSensStep, 0.0, 1.0);
        dn[idx] = std::clamp(dn[idx] - kSensStep, 0.0, 1.0);
        const double span = up[idx] - dn[idx];
        report.sensitivity[idx] =
            span > 0.0 ? std::fabs(objective_unit(up) - objective_unit(dn)) / span : 0.0;
    }
    return report;
}

std::string physics_fragment_json(const Document& base, const CalibrationParams& p) {
    const Document doc = apply_params(base, p);
    std::ostringstream out;
    out.setf(std::ios::fmtflags(0), std::ios::floatfield);
    out.precision(12);
    out << "{\n  \"raman_rho\": [";
    const auto& anchors = doc.physics.raman.rho_anchors;
    for (std::size_t i = 0; i < anchors.size(); ++i) {
        if (i) out << ", ";
        out << "[" << anchors[i].first << ", " << anchors[i].second << "]";
    }
    out << "],\n";
    out << "  \"bpf\": {\"center_nm\": " << doc.physics.bpf.center_nm
        << ", \"halfwidth_nm\": " << doc.physics.bpf.passband_halfwidth_nm
        << ", \"passband_loss_db\": " << doc.physics.bpf.passband_loss_db
        << ", \"edge_slope_db_per_nm\": " << p.bpf_edge_slope_db_per_nm
        << ", \"floor_isolation_db\": " << p.bpf_floor_isolation_db << "},\n";
    out << "  \"splitter_return_loss_db\": " << p.splitter_return_loss_db << ",\n";
    out << "  \"coupler_return_loss_db\": " << p.coupler_return_loss_db << ",\n";
    out << "  \"connector_return_loss_db\": " << p.connector_return_loss_db << ",\n";
    out << "  \"plsu_db_per_ont\": " << p.plsu_db_per_ont << ",\n";
    out << "  \"rate_scale\": " << p.rate_scale << "\n}\n";
    return out.str();
}

}  // namespace qpon
