#include "qpon/cli.hpp"

#include <cmath>
#include <cstdarg>
#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <sstream>

#include <CLI11.hpp>

#include "qpon/calibrate.hpp"
#include "qpon/document.hpp"
#include "qpon/optics.hpp"
#include "qpon/simrun.hpp"
#include "qpon/units.hpp"

namespace qpon {

namespace {

constexpr int kExitOk = 0;
constexpr int kExitDomain = 1;
constexpr int kExitUsage = 2;

std::string read_file(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw IoError("cannot read file: " + path);
    std::ostringstream ss;
    ss << in.rdbuf();
    return ss.str();
}

Document load_with_overrides(const std::string& path, const std::vector<std::string>& sets,
                             bool enforce_valid = true) {
    std::string text = read_file(path);
    if (!sets.empty()) text = apply_overrides(text, sets);
    return parse_document(text, enforce_valid);
}

std::filesystem::path output_dir(const std::string& flag_value) {
    std::string dir = flag_value;
    if (dir.empty()) {
        if (const char* env = std::getenv("QPON_OUT_DIR")) dir = env;
    }
    if (dir.empty()) dir = ".";
    std::filesystem::path p(dir);
    std::filesystem::create_directories(p);
    return p;
}

void write_file(const std::filesystem::path& path, const std::string& content) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw IoError("cannot write file: " + path.string());
    out << content;
}

std::string fixed(double v, int digits) {
    char buf[64];
    std::snprintf(buf, sizeof buf, "%.*f", digits, v);
    return buf;
}

std::string row(const char* fmt, ...) {
    char buf[256];
    va_list args;
    va_start(args, fmt);
    std::vsnprintf(buf, sizeof buf, fmt, args);
    va_end(args);
    return buf;
}

int cmd_validate(const std::string& path) {
    const Document doc = parse_document(read_file(path), /*enforce_valid=*/false);
    const auto violations = all_violations(doc);
    for (const auto& v : violations)
        std::cerr << v.node << " [" << v.rule << "] " << v.detail << "\n";
    if (violations.empty()) {
        std::cout << "ok: " << doc.topology.node_order.size() << " nodes, "
                  << doc.topology.onts.size() << " ONTs\n";
        return kExitOk;
    }
    return kExitDomain;
}

int cmd_budget(const std::string& path, const std::vector<std::string>& sets, std::string from,
               std::string to, double wavelength, const std::string& format) {
    const Document doc = load_with_overrides(path, sets);
    if (from.empty()) from = doc.topology.alice;
    if (to.empty()) to = doc.topology.bob;
    if (wavelength <= 0.0) wavelength = doc.plan.quantum().wavelength_nm;
    if (!doc.topology.has_node(from) || !doc.topology.has_node(to)) {
        std::cerr << "error: unknown terminal '" << (!doc.topology.has_node(from) ? from : to)
                  << "'\n";
        return kExitDomain;
    }
    const auto items = path_loss_items(doc.topology, doc.physics, from, to, wavelength);
    double total = 0.0;
    if (format == "csv") {
        std::cout << "node,element,loss_db\n";
        for (const auto& item : items) {
            std::cout << item.node << ',' << item.label << ',' << fixed(item.loss_db, 4) << '\n';
            total += item.loss_db;
        }
        std::cout << ",total," << fixed(total, 4) << '\n';
    } else {
        std::cout << "Loss budget " << from << " -> " << to << " @ " << fixed(wavelength, 1)
                  << " nm\n";
        for (const auto& item : items) {
            std::cout << row("  %-14s %-16s %8.4f dB\n", item.node.c_str(), item.label.c_str(),
                             item.loss_db);
            total += item.loss_db;
        }
        std::cout << row("  %-14s %-16s %8.4f dB\n", "total", "", total);
    }
    return kExitOk;
}

Scenario make_scenario(Document doc, double duration, double block, std::uint64_t seed,
                       bool seed_given, int onts, const std::vector<std::string>& active,
                       bool no_plsu, bool no_raman, bool no_reflections) {
    Scenario s = Scenario::from_document(std::move(doc));
    if (duration > 0) s.duration_s = duration;
    if (block > 0) s.block_s = block;
    if (seed_given) s.seed = seed;
    if (onts >= 0) s.active_onts = active_subset(s.doc, onts);
    if (!active.empty()) s.active_onts = {active.begin(), active.end()};
    s.toggles.plsu = !no_plsu;
    s.toggles.raman = !no_raman;
    s.toggles.reflections = !no_reflections;
    return s;
}

void echo_summary(const Summary& s) {
    std::cout << "n_onts=" << s.n_onts << "  blocks=" << s.blocks
              << "  mean SKR=" << fixed(s.mean_skr_bps / 1000.0, 3) << " kbps"
              << "  mean QBER=" << fixed(s.mean_qber_percent, 3) << " %";
    if (!std::isinf(s.back_reflection_dbm))
        std::cout << "  back refl=" << fixed(s.back_reflection_dbm, 2) << " dBm";
    std::cout << "  (analytic " << fixed(s.analytic_skr_bps / 1000.0, 3) << " kbps / "
              << fixed(s.analytic_qber_percent, 3) << " %)\n";
}

int cmd_simulate(const Scenario& s, const std::filesystem::path& out, bool serial) {
    const auto result = run_scenario(s, serial ? ExecMode::Serial : ExecMode::Parallel);
    {
        std::ostringstream csv;
        write_timeseries_csv(csv, result.rows);
        write_file(out / "timeseries.csv", csv.str());
    }
    {
        std::ostringstream json;
        write_summary_json(json, result.summary);
        write_file(out / "summary.json", json.str());
    }
    echo_summary(result.summary);
    std::cout << "wrote " << (out / "timeseries.csv").string() << ", "
              << (out / "summary.json").string() << "\n";
    return kExitOk;
}

int cmd_sweep(const Scenario& base, const std::vector<int>& counts,
              const std::filesystem::path& out, bool serial) {
    const auto rows = sweep(base, counts, serial ? ExecMode::Serial : ExecMode::Parallel);
    {
        std::ostringstream csv;
        write_sweep_csv(csv, rows);
        write_file(out / "sweep.csv", csv.str());
    }
    {
        std::ostringstream json;
        write_sweep_json(json, rows);
        write_file(out / "sweep.json", json.str());
    }
    std::cout << "n_onts  qber%   skr_bps      back_refl_dbm\n";
    for (const auto& r : rows) {
        std::cout << row("%6d  %6.3f  %10.1f  %s\n", r.n_onts, r.mean_qber_percent,
                         r.mean_skr_bps,
                         std::isinf(r.back_reflection_dbm)
                             ? "-"
                             : fixed(r.back_reflection_dbm, 2).c_str());
    }
    std::cout << "wrote " << (out / "sweep.csv").string() << ", " << (out / "sweep.json").string()
              << "\n";
    return kExitOk;
}

CalibrationParams params_from_document(const Document& doc) {
    CalibrationParams p;
    const double lambda_q = doc.plan.quantum().wavelength_nm;
    double detuning = -180.0;
    for (const auto& ch : doc.plan.channels)
        if (ch.role == ChannelRole::Downstream) detuning = lambda_q - ch.wavelength_nm;
    p.raman_rho = doc.physics.raman.rho(detuning);
    p.bpf_floor_isolation_db = doc.physics.bpf.floor_isolation_db;
    p.bpf_edge_slope_db_per_nm = doc.physics.bpf.edge_slope_db_per_nm;
    p.splitter_return_loss_db = doc.physics.splitter_return_loss_db;
    p.coupler_return_loss_db = doc.physics.coupler_return_loss_db;
    p.connector_return_loss_db = doc.physics.connector_return_loss_db;
    p.plsu_db_per_ont = doc.gpon.plsu.db_per_added_ont;
    p.rate_scale = doc.physics.rate_scale;
    return p;
}

int cmd_calibrate(const Document& doc, const std::string& obs_path,
                  const std::filesystem::path& out, int restarts, int max_evals,
                  std::uint64_t seed, const std::string& emit_scenario) {
    std::ifstream in(obs_path);
    if (!in) throw IoError("cannot read observations: " + obs_path);
    const Observations obs = Observations::from_csv(in);
    if (obs.rows.empty()) {
        std::cerr << "error: observations file has no data rows\n";
        return kExitDomain;
    }

    FitOptions options;
    if (restarts > 0) options.restarts = restarts;
    if (max_evals > 0) options.max_evals_per_restart = max_evals;
    options.seed = seed;

    const auto p0 = params_from_document(doc);
    const auto report = fit(p0, obs, doc, options);

    std::cout << "objective " << report.objective_value << " after " << report.evaluations
              << " evaluations (best restart " << report.best_restart << ", "
              << (report.converged ? "converged" : "budget exhausted; best-so-far") << ")\n";
    std::cout << "fitted parameters (finite-difference sensitivity):\n";
    const auto values = report.params.to_array();
    for (int i = 0; i < CalibrationParams::kCount; ++i) {
        const auto idx = static_cast<std::size_t>(i);
        std::cout << row("  %-28s %-14.6g sens %.3g\n", CalibrationParams::names()[idx],
                         values[idx], report.sensitivity[idx]);
    }

    const Document fitted = apply_params(doc, report.params);
    std::cout << "row fit (simulated vs observed):\n";
    for (const auto& obs_row : obs.rows) {
        const auto eval = evaluate_load(fitted, active_subset(fitted, obs_row.n_onts));
        std::cout << row("  n=%d  qber %.3f%% vs %.3f%%  skr %.0f vs %.0f bps", obs_row.n_onts,
                         eval.report.qber_percent, obs_row.qber_percent, eval.report.skr_bps,
                         obs_row.skr_bps);
        if (obs_row.back_reflection_dbm)
            std::cout << row("  refl %.2f vs %.2f dBm", eval.back_reflection_dbm,
                             *obs_row.back_reflection_dbm);
        std::cout << "\n";
    }

    write_file(out / "calibrated_physics.json", physics_fragment_json(doc, report.params));
    std::cout << "wrote " << (out / "calibrated_physics.json").string() << "\n";
    if (!emit_scenario.empty()) {
        write_file(emit_scenario, serialize_document(fitted));
        std::cout << "wrote " << emit_scenario << "\n";
    }
    return kExitOk;
}

}  // namespace

int run_cli(const std::vector<std::string>& args) {
    CLI::App app{"QKD-over-GPON physical-layer simulator"};
    app.require_subcommand(1);

    std::string doc_path;
    std::vector<std::string> sets;
    std::string out_flag;
    bool serial = false;

    auto* validate_cmd = app.add_subcommand("validate", "check a scenario document");
    validate_cmd->add_option("document", doc_path, "scenario document (JSON)")->required();

    auto* budget_cmd = app.add_subcommand("budget", "element-by-element loss budget");
    std::string from, to;
    double wavelength = 0.0;
    std::string format = "table";
    budget_cmd->add_option("document", doc_path)->required();
    budget_cmd->add_option("--from", from, "source terminal (default alice)");
    budget_cmd->add_option("--to", to, "sink terminal (default bob)");
    budget_cmd->add_option("--wavelength", wavelength, "wavelength in nm (default quantum)");
    budget_cmd->add_option("--format", format)->check(CLI::IsMember({"table", "csv"}));
    budget_cmd->add_option("--set", sets, "dotted-path overrides key=value");

    double duration = 0.0, block = 0.0;
    std::uint64_t seed = 0;
    bool seed_given = false;
    int onts = -1;
    std::vector<std::string> active;
    bool no_plsu = false, no_raman = false, no_reflections = false;

    auto add_scenario_flags = [&](CLI::App* cmd) {
        cmd->add_option("document", doc_path)->required();
        cmd->add_option("--duration", duration, "simulated seconds");
        cmd->add_option("--block", block, "block length in seconds");
        cmd->add_option("--seed", seed)->each([&](const std::string&) { seed_given = true; });
        cmd->add_option("--set", sets, "dotted-path overrides key=value");
        cmd->add_option("--out", out_flag, "output directory (default $QPON_OUT_DIR or .)");
        cmd->add_flag("--serial", serial, "use the serial reference sampler");
        cmd->add_flag("--no-plsu", no_plsu, "disable upstream power leveling");
        cmd->add_flag("--no-raman", no_raman, "disable Raman noise");
        cmd->add_flag("--no-reflections", no_reflections, "disable reflection noise");
    };

    auto* simulate_cmd = app.add_subcommand("simulate", "seeded per-block emulation");
    add_scenario_flags(simulate_cmd);
    simulate_cmd->add_option("--onts", onts, "activate the first N ONTs (default: all)");
    simulate_cmd->add_option("--active", active, "explicit active ONT ids");

    auto* sweep_cmd = app.add_subcommand("sweep", "summaries across ONT counts");
    std::vector<int> counts;
    add_scenario_flags(sweep_cmd);
    sweep_cmd->add_option("--onts", counts, "ONT counts, e.g. --onts 0 1 5 9")
        ->required()
        ->delimiter(',');

    auto* calibrate_cmd = app.add_subcommand("calibrate", "fit plant constants to measurements");
    std::string obs_path, emit_scenario;
    int restarts = 0, max_evals = 0;
    std::uint64_t fit_seed = 71;
    calibrate_cmd->add_option("document", doc_path)->required();
    calibrate_cmd->add_option("--observations", obs_path, "CSV n_onts,qber,skr_bps,back_refl_dbm")
        ->required();
    calibrate_cmd->add_option("--restarts", restarts);
    calibrate_cmd->add_option("--max-evals", max_evals, "objective budget per restart");
    calibrate_cmd->add_option("--seed", fit_seed);
    calibrate_cmd->add_option("--out", out_flag, "output directory");
    calibrate_cmd->add_option("--emit-scenario", emit_scenario,
                              "also write the fully calibrated scenario document");
    calibrate_cmd->add_option("--set", sets, "dotted-path overrides key=value");

    std::vector<const char*> argv;
    argv.push_back("qpon");
    for (const auto& a : args) argv.push_back(a.c_str());

    try {
        app.parse(static_cast<int>(argv.size()), argv.data());
    } catch (const CLI::CallForHelp& e) {
        return app.exit(e);
    } catch (const CLI::ParseError& e) {
        app.exit(e);
        return kExitUsage;
    }

    try {
        if (validate_cmd->parsed()) return cmd_validate(doc_path);
        if (budget_cmd->parsed()) return cmd_budget(doc_path, sets, from, to, wavelength, format);
        if (simulate_cmd->parsed()) {
            Document doc = load_with_overrides(doc_path, sets);
            const Scenario s = make_scenario(std::move(doc), duration, block, seed, seed_given,
                                             onts, active, no_plsu, no_raman, no_reflections);
            return cmd_simulate(s, output_dir(out_flag), serial);
        }
        if (sweep_cmd->parsed()) {
            Document doc = load_with_overrides(doc_path, sets);
            const Scenario s = make_scenario(std::move(doc), duration, block, seed, seed_given, -1,
                                             {}, no_plsu, no_raman, no_reflections);
            return cmd_sweep(s, counts, output_dir(out_flag), serial);
        }
        if (calibrate_cmd->parsed()) {
            const Document doc = load_with_overrides(doc_path, sets);
            return cmd_calibrate(doc, obs_path, output_dir(out_flag), restarts, max_evals,
                                 fit_seed, emit_scenario);
        }
    } catch (const IoError& e) {
        std::cerr << "error: " << e.what() << "\n";
        return kExitUsage;
    } catch (const ParseError& e) {
        std::cerr << "error: " << e.what() << "\n";
        return kExitDomain;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return kExitDomain;
    }
    return kExitUsage;
}

}  // namespace qpon
