#include <doctest.h>

#include <cmath>
#include <stdexcept>
#include <string>
#include <vector>

#include "qpon/gpon.hpp"
#include "qpon/units.hpp"

using namespace qpon;

TEST_CASE("power leveling per policy") {
    const PlsuPolicy off = PlsuPolicy::off();
    CHECK(ont_launch_power_dbm(off, 1, -3.0) == -3.0);
    CHECK(ont_launch_power_dbm(off, 9, -3.0) == -3.0);

    PlsuPolicy cont;  // 0.6 dB per ONT beyond 4
    CHECK(ont_launch_power_dbm(cont, 4, -3.0) == doctest::Approx(-3.0));
    CHECK(ont_launch_power_dbm(cont, 1, -3.0) == doctest::Approx(-3.0));
    CHECK(ont_launch_power_dbm(cont, 5, -3.0) == doctest::Approx(-3.6));
    CHECK(ont_launch_power_dbm(cont, 9, -3.0) == doctest::Approx(-6.0));

    CHECK_THROWS_AS(ont_launch_power_dbm(cont, 0, -3.0), std::invalid_argument);

    PlsuPolicy disc;
    disc.mode = PlsuPolicy::Mode::Discrete;
    disc.reference_count = 4;
    disc.levels_dbm = {-3.0, -4.0, -5.5};
    CHECK(ont_launch_power_dbm(disc, 1, 0.0) == -3.0);
    CHECK(ont_launch_power_dbm(disc, 4, 0.0) == -3.0);
    CHECK(ont_launch_power_dbm(disc, 5, 0.0) == -4.0);
    CHECK(ont_launch_power_dbm(disc, 6, 0.0) == -5.5);
    CHECK(ont_launch_power_dbm(disc, 9, 0.0) == -5.5);
}

TEST_CASE("launch power never increases with load") {
    PlsuPolicy cont;
    PlsuPolicy disc;
    disc.mode = PlsuPolicy::Mode::Discrete;
    disc.levels_dbm = {-1.0, -2.0, -2.5, -4.0};
    for (const auto& policy : {PlsuPolicy::off(), cont, disc}) {
        double prev = ont_launch_power_dbm(policy, 1, 0.0);
        for (int n = 2; n <= 12; ++n) {
            const double cur = ont_launch_power_dbm(policy, n, 0.0);
            CHECK(cur <= prev);
            prev = cur;
        }
    }
}

TEST_CASE("duty weighting of the time-averaged upstream power") {
    const std::vector<std::string> active{"a", "b"};
    PlsuPolicy off = PlsuPolicy::off();

    DbaLoad full;
    full.duty = {{"a", 1.0}};
    CHECK(effective_upstream_power_dbm(off, full, "a", 1, -3.0) == doctest::Approx(-3.0));

    DbaLoad half;
    half.duty = {{"a", 0.5}, {"b", 0.5}};
    CHECK(effective_upstream_power_dbm(off, half, "a", 2, -3.0) ==
          doctest::Approx(-3.0 - 3.0103).epsilon(1e-4));

    std::vector<std::string> nine;
    for (int i = 0; i < 9; ++i) nine.push_back("ont" + std::to_string(i));
    const auto equal = DbaLoad::equal_shares(nine);
    CHECK(equal.total() == doctest::Approx(1.0));
    CHECK(effective_upstream_power_dbm(off, equal, "ont3", 9, -3.0) ==
          doctest::Approx(-3.0 - 9.5424).epsilon(1e-4));

    DbaLoad silent;
    silent.duty = {{"a", 0.0}};
    CHECK(std::isinf(effective_upstream_power_dbm(off, silent, "a", 1, -3.0)));

    CHECK_THROWS_AS(effective_upstream_power_dbm(off, full, "missing", 1, -3.0),
                    std::out_of_range);
}

TEST_CASE("total time-averaged upstream power is non-increasing under leveling") {
    // The per-ONT step outpaces the airtime-share growth at the top of the
    // range (0.6 > 10 log10(9/8) = 0.51), which is what drives the recovery.
    CHECK(0.6 > 10.0 * std::log10(9.0 / 8.0));

    PlsuPolicy cont;
    auto total_mw = [&](int n) {
        std::vector<std::string> active;
        for (int i = 0; i < n; ++i) active.push_back("ont" + std::to_string(i));
        const auto load = DbaLoad::equal_shares(active);
        double acc = 0.0;
        for (const auto& ont : active)
            acc += db_to_linear(effective_upstream_power_dbm(cont, load, ont, n, -3.0));
        return acc;
    };
    for (int n = 4; n < 9; ++n) CHECK(total_mw(n + 1) <= total_mw(n) * (1.0 + 1e-12));
}
