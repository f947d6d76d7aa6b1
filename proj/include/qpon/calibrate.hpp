#pragma once

#include <array>
#include <cstdint>
#include <functional>
#include <iosfwd>
#include <optional>
#include <string>
#include <vector>

#include "qpon/document.hpp"
#include "qpon/pipeline.hpp"

namespace qpon {

/// The unpublished plant constants the fit adjusts. `raman_rho` is the
/// scattering coefficient at the downstream-channel detuning; the document's
/// spectral shape is rescaled to it.
struct CalibrationParams {
    double raman_rho = 8e-11;
    double bpf_floor_isolation_db = 45.0;
    double bpf_edge_slope_db_per_nm = 12.0;
    double splitter_return_loss_db = 55.0;
    double coupler_return_loss_db = 55.0;
    double connector_return_loss_db = 50.0;
    double plsu_db_per_ont = 0.6;
    double rate_scale = 0.2;

    static constexpr int kCount = 8;
    std::array<double, kCount> to_array() const;
    static CalibrationParams from_array(const std::array<double, kCount>& a);
    static const std::array<const char*, kCount>& names();
    /// True for parameters compared in relative (percent) terms; the rest are
    /// dB quantities compared absolutely.
    static bool is_linear_scale(int index);
};

struct ParamBounds {
    std::array<double, CalibrationParams::kCount> lo;
    std::array<double, CalibrationParams::kCount> hi;

    static ParamBounds defaults();
    CalibrationParams clamp(const CalibrationParams& p) const;
};

struct ObservationRow {
    int n_onts = 0;
    double qber_percent = 0.0;
    double skr_bps = 0.0;
    std::optional<double> back_reflection_dbm;
};

struct ResidualWeights {
    double qber_pp = 0.5;        // percentage points per unit residual
    double skr_log10 = 0.0606;   // log10(1.15): 15 % per unit residual
    double reflection_db = 0.5;  // dB per unit residual
};

struct Observations {
    std::vector<ObservationRow> rows;
    ResidualWeights weights;

    static Observations from_csv(std::istream& in);
};

/// Applies fitted parameters onto a scenario document.
Document apply_params(const Document& base, const CalibrationParams& p);

/// Tolerance-normalized residuals of the analytic pipeline against the
/// observations: QBER in percentage points, SKR in log10 space, reflections
/// in dB. A no-key simulation contributes a large finite penalty.
std::vector<double> residuals(const CalibrationParams& p, const Observations& obs,
                              const Document& base);

double objective(const CalibrationParams& p, const Observations& obs, const Document& base);

struct FitOptions {
    ParamBounds bounds = ParamBounds::defaults();
    int restarts = 8;
    int max_evals_per_restart = 2500;
    double tolerance = 1e-12;
    std::uint64_t seed = 71;
    bool parallel = true;
};

struct FitReport {
    CalibrationParams params;
    double objective_value = 0.0;
    std::vector<double> residuals;
    std::uint64_t evaluations = 0;
    bool converged = false;
    int best_restart = 0;
    std::array<double, CalibrationParams::kCount> sensitivity{};
};

/// Derivative-free least squares: Nelder-Mead restarts in box-normalized
/// coordinates with projection, deterministic given (p0, seed). Returns the
/// best point found and a finite-difference sensitivity per parameter.
FitReport fit(const CalibrationParams& p0, const Observations& obs, const Document& base,
              const FitOptions& options = {});

/// The fitted constants as a `physics` JSON fragment pastable into a scenario
/// document (the Raman table carries the rescaled shape).
std::string physics_fragment_json(const Document& base, const CalibrationParams& p);

namespace detail {

/// Plain Nelder-Mead on [0,1]^n with clamping; exposed for optimizer tests.
struct SimplexResult {
    std::vector<double> point;
    double value = 0.0;
    std::uint64_t evaluations = 0;
    bool converged = false;
};
SimplexResult nelder_mead(const std::function<double(const std::vector<double>&)>& fn,
                          std::vector<double> start, double step, int max_evals,
                          double tolerance);

}  // namespace detail

}  // namespace qpon
