#include <doctest.h>

#include <cmath>
#include <fstream>
#include <random>
#include <sstream>

#include <json.hpp>

#include "helpers.hpp"
#include "qpon/calibrate.hpp"
#include "qpon/rng.hpp"

using namespace qpon;
using qpon::testing::load_synthetic_plant;
using qpon::testing::load_testbed;
using qpon::testing::source_path;

namespace {

Observations observe(const Document& base, const CalibrationParams& truth, int max_onts) {
    const Document doc = apply_params(base, truth);
    Observations obs;
    for (int n = 0; n <= max_onts; ++n) {
        const auto eval = evaluate_load(doc, active_subset(doc, n));
        ObservationRow row;
        row.n_onts = n;
        row.qber_percent = eval.report.qber_percent;
        row.skr_bps = eval.report.skr_bps;
        if (n > 0) row.back_reflection_dbm = eval.back_reflection_dbm;
        obs.rows.push_back(row);
    }
    return obs;
}

CalibrationParams random_truth(std::mt19937_64& rng) {
    std::uniform_real_distribution<double> u(0.0, 1.0);
    CalibrationParams p;
    p.raman_rho = std::pow(10.0, std::log10(3e-10) + u(rng) * std::log10(1.2e-9 / 3e-10));
    p.bpf_floor_isolation_db = 30.0 + 8.0 * u(rng);
    p.bpf_edge_slope_db_per_nm = 6.0 + 1.5 * u(rng);
    p.splitter_return_loss_db = 52.0 + 6.0 * u(rng);
    p.coupler_return_loss_db = 51.0 + 7.0 * u(rng);
    p.connector_return_loss_db = 53.0 + 7.0 * u(rng);
    p.plsu_db_per_ont = 0.3 + 0.6 * u(rng);
    p.rate_scale = 0.1 * std::pow(10.0, u(rng));
    return p;
}

}  // namespace

TEST_CASE("residuals vanish at a self-consistent parameter vector") {
    const Document base = load_synthetic_plant();
    CalibrationParams truth;
    truth.raman_rho = 6e-10;
    truth.splitter_return_loss_db = 56.0;
    const auto obs = observe(base, truth, 4);
    for (double r : residuals(truth, obs, base)) CHECK(std::fabs(r) < 1e-9);
}

TEST_CASE("a one-dB parameter nudge shows up in the residuals") {
    const Document base = load_synthetic_plant();
    CalibrationParams truth;
    const auto obs = observe(base, truth, 4);

    CalibrationParams nudged = truth;
    nudged.coupler_return_loss_db += 1.0;
    double largest = 0.0;
    for (double r : residuals(nudged, obs, base)) largest = std::max(largest, std::fabs(r));
    CHECK(largest > 1e-3);
}

TEST_CASE("no-key rows contribute a finite penalty") {
    const Document base = load_synthetic_plant();
    CalibrationParams hopeless;
    hopeless.raman_rho = 1e-7;  // drown the channel in scatter
    Observations obs = observe(base, CalibrationParams{}, 2);
    const auto rs = residuals(hopeless, obs, base);
    bool saw_penalty = false;
    for (double r : rs) {
        CHECK(std::isfinite(r));
        if (r >= 1e3) saw_penalty = true;
    }
    CHECK(saw_penalty);
}

TEST_CASE("simplex search solves a convex quadratic") {
    const std::vector<double> target{0.31, 0.62, 0.47};
    auto quadratic = [&](const std::vector<double>& v) {
        double acc = 0.0;
        for (std::size_t i = 0; i < v.size(); ++i)
            acc += (v[i] - target[i]) * (v[i] - target[i]);
        return acc;
    };
    const auto result =
        detail::nelder_mead(quadratic, std::vector<double>{0.9, 0.1, 0.9}, 0.1, 4000, 1e-16);
    CHECK(result.value < 1e-6);
    for (std::size_t i = 0; i < target.size(); ++i)
        CHECK(result.point[i] == doctest::Approx(target[i]).epsilon(1e-3));
}

TEST_CASE("fit stays inside the box and never loses to its start") {
    const Document base = load_synthetic_plant();
    CalibrationParams truth;
    truth.coupler_return_loss_db = 54.0;
    const auto obs = observe(base, truth, 3);

    FitOptions quick;
    quick.restarts = 2;
    quick.max_evals_per_restart = 150;
    const CalibrationParams p0;
    const auto report = fit(p0, obs, base, quick);

    const auto bounds = ParamBounds::defaults();
    const auto values = report.params.to_array();
    for (int i = 0; i < CalibrationParams::kCount; ++i) {
        CHECK(values[static_cast<std::size_t>(i)] >= bounds.lo[static_cast<std::size_t>(i)]);
        CHECK(values[static_cast<std::size_t>(i)] <= bounds.hi[static_cast<std::size_t>(i)]);
    }
    CHECK(report.objective_value <= objective(p0, obs, base) + 1e-12);
    CHECK(report.evaluations > 0);
}

TEST_CASE("noiseless synthetic observations are recovered") {
    const Document base = load_synthetic_plant();
    for (std::uint64_t draw = 0; draw < 3; ++draw) {
        auto rng = make_engine(2024, draw);
        const CalibrationParams truth = random_truth(rng);
        const auto obs = observe(base, truth, 5);

        const auto report = fit(CalibrationParams{}, obs, base);
        const auto fitted = report.params.to_array();
        const auto expected = truth.to_array();
        for (int i = 0; i < CalibrationParams::kCount; ++i) {
            const auto idx = static_cast<std::size_t>(i);
            if (CalibrationParams::is_linear_scale(i))
                CHECK(std::fabs(fitted[idx] / expected[idx] - 1.0) <= 0.02);
            else
                CHECK(std::fabs(fitted[idx] - expected[idx]) <= 0.2);
        }
    }
}

TEST_CASE("observation CSV parsing") {
    std::ifstream in(source_path("data/observed_loads.csv"));
    REQUIRE(in.good());
    const auto obs = Observations::from_csv(in);
    REQUIRE(obs.rows.size() == 4);
    CHECK(obs.rows[0].n_onts == 0);
    CHECK(!obs.rows[0].back_reflection_dbm.has_value());
    CHECK(obs.rows[3].n_onts == 9);
    CHECK(obs.rows[3].skr_bps == doctest::Approx(10100.0));
    CHECK(*obs.rows[3].back_reflection_dbm == doctest::Approx(-67.1));

    std::istringstream dup("n_onts,qber,skr_bps,back_refl_dbm\n1,5.0,9000,-64\n1,5.1,9100,-64\n");
    CHECK_THROWS_AS(Observations::from_csv(dup), ParseError);

    std::istringstream empty("n_onts,qber,skr_bps,back_refl_dbm\n");
    CHECK(Observations::from_csv(empty).rows.empty());

    std::istringstream garbage("n_onts,qber,skr_bps\nx,y,z\n");
    CHECK_THROWS_AS(Observations::from_csv(garbage), ParseError);
}

TEST_CASE("physics fragment is pastable into a scenario document") {
    const Document base = load_testbed();
    CalibrationParams p;
    p.coupler_return_loss_db = 58.25;
    const std::string fragment = physics_fragment_json(base, p);

    // Splice the fragment in as the physics block and re-parse strictly.
    std::ifstream in(source_path("scenarios/ftth_testbed.json"));
    REQUIRE(in.good());
    auto root = nlohmann::ordered_json::parse(in);
    auto patch = nlohmann::ordered_json::parse(fragment);
    for (const auto& [key, value] : patch.items()) root["physics"][key] = value;
    const Document merged = parse_document(root.dump());
    CHECK(merged.physics.coupler_return_loss_db == doctest::Approx(58.25));
    CHECK(merged.gpon.plsu.db_per_added_ont == doctest::Approx(p.plsu_db_per_ont));
    CHECK(merged.physics.raman.rho(-180.0) == doctest::Approx(p.raman_rho).epsilon(1e-9));
}
