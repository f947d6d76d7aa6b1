// Compares the serial reference sampler against the OpenMP kernel on a long
// emulation, and serial vs parallel calibration restarts. Wall-clock only.

#include <chrono>
#include <cstdio>
#include <string>

#ifdef _OPENMP
#include <omp.h>
#endif

#include "qpon/calibrate.hpp"
#include "qpon/document.hpp"
#include "qpon/simrun.hpp"

using Clock = std::chrono::steady_clock;

static double seconds_since(Clock::time_point t0) {
    return std::chrono::duration<double>(Clock::now() - t0).count();
}

int main(int argc, char** argv) {
    const std::string scenario_path =
        argc > 1 ? argv[1] : std::string("scenarios/ftth_testbed.json");

    qpon::Scenario s = qpon::Scenario::from_document(qpon::load_document(scenario_path));
    s.block_s = 1.0;  // 216k blocks over the default 60 h window

    int threads = 1;
#ifdef _OPENMP
    threads = omp_get_max_threads();
#endif
    std::printf("scenario: %s, %d ONTs, %.0f blocks, %d threads\n", scenario_path.c_str(),
                static_cast<int>(s.active_onts.size()), s.duration_s / s.block_s, threads);

    auto t0 = Clock::now();
    const auto serial = qpon::run_scenario(s, qpon::ExecMode::Serial);
    const double t_serial = seconds_since(t0);

    t0 = Clock::now();
    const auto parallel = qpon::run_scenario(s, qpon::ExecMode::Parallel);
    const double t_parallel = seconds_since(t0);

    const bool identical = serial.rows.size() == parallel.rows.size() &&
                           std::equal(serial.rows.begin(), serial.rows.end(),
                                      parallel.rows.begin(),
                                      [](const auto& a, const auto& b) {
                                          return a.sifted == b.sifted && a.errors == b.errors;
                                      });
    std::printf("block sampling   serial %7.3f s   parallel %7.3f s   speedup %4.2fx   %s\n",
                t_serial, t_parallel, t_serial / t_parallel,
                identical ? "bit-identical" : "MISMATCH");

    // Calibration restarts against a synthetic self-consistent target.
    const auto truth = qpon::CalibrationParams{};
    const auto fitted_doc = qpon::apply_params(s.doc, truth);
    qpon::Observations obs;
    for (int n : {0, 1, 5, 9}) {
        const auto eval = qpon::evaluate_load(fitted_doc, qpon::active_subset(fitted_doc, n));
        qpon::ObservationRow row;
        row.n_onts = n;
        row.qber_percent = eval.report.qber_percent;
        row.skr_bps = eval.report.skr_bps;
        if (n > 0) row.back_reflection_dbm = eval.back_reflection_dbm;
        obs.rows.push_back(row);
    }
    qpon::FitOptions options;
    options.max_evals_per_restart = 1200;

    options.parallel = false;
    t0 = Clock::now();
    const auto fit_serial = qpon::fit(truth, obs, s.doc, options);
    const double t_fit_serial = seconds_since(t0);

    options.parallel = true;
    t0 = Clock::now();
    const auto fit_parallel = qpon::fit(truth, obs, s.doc, options);
    const double t_fit_parallel = seconds_since(t0);

    std::printf("fit restarts     serial %7.3f s   parallel %7.3f s   speedup %4.2fx   %s\n",
                t_fit_serial, t_fit_parallel, t_fit_serial / t_fit_parallel,
                fit_serial.objective_value == fit_parallel.objective_value ? "same optimum"
                                                                           : "DIFFERENT optimum");
    return 0;
}
