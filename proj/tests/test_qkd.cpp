#include <doctest.h>

#include <cmath>
#include <stdexcept>
#include <random>
#include <vector>

#include "qpon/qkd.hpp"
#include "qpon/rng.hpp"

using namespace qpon;

namespace {

/// Truncated Poisson-mixture oracle for the gain and error of a weak
/// coherent source: photon-number yields composed term by term.
struct PoissonOracle {
    double gain = 0.0;
    double error_weight = 0.0;  // E*Q
};

PoissonOracle poisson_sum(double mean, double eta, double y0, double e_det, int n_max = 60) {
    PoissonOracle out;
    double pmf = std::exp(-mean);  // n = 0 term
    for (int n = 0; n <= n_max; ++n) {
        if (n > 0) pmf *= mean / n;
        const double transmit = 1.0 - std::pow(1.0 - eta, n);
        const double yield = 1.0 - (1.0 - y0) * (1.0 - transmit);
        out.gain += pmf * yield;
        out.error_weight += pmf * (ChannelParams::e0 * y0 + e_det * transmit);
    }
    return out;
}

}  // namespace

TEST_CASE("binary entropy reference points") {
    CHECK(h2(0.0) == 0.0);
    CHECK(h2(1.0) == 0.0);
    CHECK(h2(0.5) == doctest::Approx(1.0).epsilon(1e-15));
    CHECK(h2(0.11) == doctest::Approx(0.4999159581645280).epsilon(1e-12));
    CHECK_THROWS_AS(h2(-0.1), std::domain_error);
    CHECK_THROWS_AS(h2(1.1), std::domain_error);
}

TEST_CASE("gain and error at the edges") {
    ChannelParams ch;
    ch.eta = 0.1;
    ch.y0 = 1e-5;
    ch.e_det = 0.015;

    const auto vacuum = gain_and_qber(0.0, ch);
    CHECK(vacuum.gain == doctest::Approx(ch.y0).epsilon(1e-12));
    CHECK(vacuum.qber == doctest::Approx(0.5).epsilon(1e-12));

    ChannelParams clean = ch;
    clean.y0 = 0.0;
    clean.eta = 1.0;
    const auto bright = gain_and_qber(60.0, clean);
    CHECK(bright.gain == doctest::Approx(1.0).epsilon(1e-12));
    CHECK(bright.qber == doctest::Approx(clean.e_det).epsilon(1e-9));

    CHECK_THROWS_AS(gain_and_qber(-1.0, ch), std::domain_error);
}

TEST_CASE("closed-form gain matches the Poisson-sum oracle to 1e-10") {
    const std::vector<double> etas = {1e-4, 3e-4, 1e-3, 3e-3, 0.01, 0.05, 0.1, 0.3, 0.6, 1.0};
    const std::vector<double> means = {0.01, 0.05, 0.1, 0.2, 0.35, 0.5, 0.65, 0.8, 0.9, 1.0};
    const std::vector<double> backgrounds = {0.0, 1e-6, 1e-5, 1e-4, 1e-3};
    double worst = 0.0;
    for (double eta : etas)
        for (double mean : means)
            for (double y0 : backgrounds) {
                ChannelParams ch;
                ch.eta = eta;
                ch.y0 = y0;
                ch.e_det = 0.015;
                const auto closed = gain_and_qber(mean, ch);
                const auto oracle = poisson_sum(mean, eta, y0, ch.e_det);
                worst = std::max(worst, std::fabs(closed.gain - oracle.gain));
                worst = std::max(worst,
                                 std::fabs(closed.gain * closed.qber - oracle.error_weight));
            }
    CHECK(worst <= 1e-10);
}

TEST_CASE("single-photon yield bound brackets the true yield") {
    // Lossless noiseless channel: the bound must sit in [0.9, 1].
    ChannelParams ideal;
    ideal.eta = 1.0;
    ideal.y0 = 0.0;
    ideal.e_det = 0.0;
    const double mu = 0.5, nu = 0.1;
    const auto q_mu = gain_and_qber(mu, ideal);
    const auto q_nu = gain_and_qber(nu, ideal);
    const double bound = y1_lower_bound(q_mu.gain, q_nu.gain, ideal.y0, mu, nu);
    CHECK(bound <= 1.0);
    CHECK(bound >= 0.9);

    // Vanishing channel: no single-photon yield left.
    ChannelParams dead;
    dead.eta = 1e-12;
    dead.y0 = 0.0;
    const auto dq_mu = gain_and_qber(mu, dead);
    const auto dq_nu = gain_and_qber(nu, dead);
    CHECK(y1_lower_bound(dq_mu.gain, dq_nu.gain, dead.y0, mu, nu) <= 1e-10);

    CHECK_THROWS_AS(y1_lower_bound(0.1, 0.1, 0.0, 0.5, 0.5), std::invalid_argument);
}

TEST_CASE("single-photon error bound clamps") {
    CHECK(e1_upper_bound(0.0, 0.5, 1e-3, 0.1, 0.5) == 0.0);  // numerator below zero
    CHECK(e1_upper_bound(0.5, 1.0, 0.0, 0.1, 1e-6) == 0.5);  // clamps at 1/2
    CHECK_THROWS_AS(e1_upper_bound(0.1, 0.1, 0.0, 0.1, 0.0), std::invalid_argument);

    // Noiseless limit: the bound approaches the intrinsic error.
    ChannelParams ch;
    ch.eta = 0.05;
    ch.y0 = 1e-12;
    ch.e_det = 0.02;
    const double mu = 0.5, nu = 0.1;
    const auto g_mu = gain_and_qber(mu, ch);
    const auto g_nu = gain_and_qber(nu, ch);
    const double y1 = y1_lower_bound(g_mu.gain, g_nu.gain, ch.y0, mu, nu);
    const double e1 = e1_upper_bound(g_nu.qber, g_nu.gain, ch.y0, nu, y1);
    CHECK(e1 == doctest::Approx(ch.e_det).epsilon(0.05));
    CHECK(e1 >= ch.e_det);
}

TEST_CASE("decoy bounds are safe over random channels") {
    int checked = 0;
    for (std::uint64_t draw = 0; draw < 1000; ++draw) {
        auto rng = make_engine(777, draw);
        std::uniform_real_distribution<double> u(0.0, 1.0);
        ChannelParams ch;
        ch.eta = 1e-4 * std::pow(10.0, 4.0 * u(rng));  // log-uniform to 1
        ch.y0 = 1e-3 * u(rng);
        ch.e_det = 0.05 * u(rng);
        const double nu = 0.299 * u(rng) + 1e-4;
        const double mu = nu + (1.0 - nu) * std::max(u(rng), 1e-3);

        const auto g_mu = gain_and_qber(mu, ch);
        const auto g_nu = gain_and_qber(nu, ch);
        const double y1_true = 1.0 - (1.0 - ch.y0) * (1.0 - ch.eta);
        const double e1_true =
            (ChannelParams::e0 * ch.y0 + ch.e_det * ch.eta) / (ch.y0 + ch.eta);

        const double y1 = y1_lower_bound(g_mu.gain, g_nu.gain, ch.y0, mu, nu);
        CHECK(y1 <= y1_true + 1e-12);
        const double e1 = y1 > 0.0 ? e1_upper_bound(g_nu.qber, g_nu.gain, ch.y0, nu, y1) : 0.5;
        CHECK(e1 >= e1_true - 1e-12);
        ++checked;
    }
    CHECK(checked == 1000);
}

TEST_CASE("secure key rate clamps and reports reasons") {
    DecoyParams d;
    ChannelParams ch;
    ch.eta = 0.0;
    ch.y0 = 1e-5;
    const auto dead = secure_key_rate(d, ch);
    CHECK(dead.skr_bps == 0.0);
    CHECK(dead.reason == NoKeyReason::ZeroEta);

    ch.eta = 1e-3;
    ch.e_det = 0.01;
    const auto live = secure_key_rate(d, ch);
    CHECK(live.skr_bps > 0.0);
    CHECK(live.reason == NoKeyReason::None);
    CHECK(live.q_mu >= 0.0);
    CHECK(live.q_mu <= 1.0);
    CHECK(live.e_mu <= 0.5);
    CHECK(live.qber_percent == doctest::Approx(100.0 * live.e_mu));
}

TEST_CASE("rate collapses near the canonical error threshold") {
    DecoyParams d;
    ChannelParams ch;
    ch.eta = 1e-3;
    ch.e_det = 0.01;

    double prev_rate = std::numeric_limits<double>::infinity();
    double prev_qber = 0.0;
    double crossing_e_mu = 0.0;
    for (double y0 = 1e-6; y0 < 3e-3; y0 *= 1.15) {
        ch.y0 = y0;
        const auto r = secure_key_rate(d, ch);
        CHECK(r.skr_bps <= prev_rate * (1.0 + 1e-9));       // non-increasing in background
        CHECK(r.qber_percent >= prev_qber - 1e-9);          // non-decreasing in background
        if (prev_rate > 0.0 && r.skr_bps == 0.0 && crossing_e_mu == 0.0) crossing_e_mu = r.e_mu;
        prev_rate = r.skr_bps;
        prev_qber = r.qber_percent;
    }
    CHECK(crossing_e_mu > 0.05);
    CHECK(crossing_e_mu < 0.12);
}

TEST_CASE("rate degrades monotonically with path loss") {
    DecoyParams d;
    double prev = std::numeric_limits<double>::infinity();
    for (double loss_db = 10.0; loss_db <= 40.0; loss_db += 2.0) {
        ChannelParams ch;
        ch.eta = std::pow(10.0, -loss_db / 10.0) * 0.2;
        ch.y0 = 2e-5;
        ch.e_det = 0.01;
        const auto r = secure_key_rate(d, ch);
        CHECK(r.skr_bps <= prev * (1.0 + 1e-9));
        prev = r.skr_bps;
    }
}
