#include <doctest.h>

#include <cmath>

#include "helpers.hpp"
#include "qpon/document.hpp"
#include "qpon/optics.hpp"
#include "qpon/units.hpp"

using namespace qpon;
using qpon::testing::bare_tree_doc;
using qpon::testing::chain_doc;
using qpon::testing::load_testbed;

namespace {
const TraversalStep kDown{"x", TraversalStep::Down, 0, 0};
const TraversalStep kUp{"x", TraversalStep::Up, 0, 0};
}  // namespace

TEST_CASE("element losses match the component models") {
    Physics phys;
    CHECK(element_loss_db(Splitter{4, {}, {}}, 1310, kDown, phys) ==
          doctest::Approx(6.5206).epsilon(1e-4));
    CHECK(element_loss_db(Splitter{4, {}, {}}, 1310, kUp, phys) ==
          doctest::Approx(6.5206).epsilon(1e-4));
    CHECK(element_loss_db(Coupler{{0.5, 0.5}, {}}, 1310, kDown, phys) ==
          doctest::Approx(3.0103).epsilon(1e-4));
    CHECK(element_loss_db(FiberSpan{0.0, FiberType::G652D}, 1310, kDown, phys) == 0.0);
    CHECK(element_loss_db(FiberSpan{10.0, FiberType::G652D}, 1310, kDown, phys) ==
          doctest::Approx(3.5));
    CHECK(element_loss_db(Connector{}, 1310, kDown, phys) == doctest::Approx(0.3));

    // Asymmetric coupler charges the branch actually traversed.
    const Coupler uneven{{0.7, 0.3}, {}};
    CHECK(element_loss_db(uneven, 1310, TraversalStep{"x", TraversalStep::Down, 0, 1}, phys) ==
          doctest::Approx(-linear_to_db(0.3)));
    CHECK(element_loss_db(uneven, 1310, TraversalStep{"x", TraversalStep::Up, 0, 0}, phys) ==
          doctest::Approx(-linear_to_db(0.7)));

    CHECK_THROWS_AS(element_loss_db(Connector{}, 1200, kDown, phys), std::domain_error);
    CHECK_THROWS_AS(element_loss_db(Connector{}, 1650, kDown, phys), std::domain_error);
}

TEST_CASE("attenuation interpolates between anchors and clamps outside") {
    const auto smf = AttenuationModel::standard_smf();
    CHECK(smf.db_per_km(1310) == doctest::Approx(0.35));
    CHECK(smf.db_per_km(1490) == doctest::Approx(0.24));
    CHECK(smf.db_per_km(1400) == doctest::Approx(0.35 + (1400.0 - 1310.0) / 180.0 * (0.24 - 0.35)));
    CHECK(smf.db_per_km(1260) == doctest::Approx(0.35));  // clamp below
    CHECK(smf.db_per_km(1600) == doctest::Approx(0.21));  // clamp above
}

TEST_CASE("testbed trunk attenuation lands on the expected budget") {
    const Document doc = load_testbed();
    const double loss = path_loss_db(doc.topology, doc.physics, "olt", "bob", 1310.0);
    CHECK(loss == doctest::Approx(20.7655).epsilon(1e-3));
    CHECK(loss > 20.0);
    CHECK(loss < 22.0);

    // Breakdown sums to the total.
    double sum = 0.0;
    for (const auto& item : path_loss_items(doc.topology, doc.physics, "olt", "bob", 1310.0))
        sum += item.loss_db;
    CHECK(sum == doctest::Approx(loss));
}

TEST_CASE("path loss is symmetric and zero on empty paths") {
    const Document doc = load_testbed();
    std::vector<NodeId> terminals = doc.topology.onts;
    terminals.push_back("olt");
    terminals.push_back("bob");
    for (const auto& a : terminals) {
        CHECK(path_loss_db(doc.topology, doc.physics, a, a, 1310.0) == 0.0);
        for (const auto& b : terminals) {
            const double fwd = path_loss_db(doc.topology, doc.physics, a, b, 1316.0);
            const double rev = path_loss_db(doc.topology, doc.physics, b, a, 1316.0);
            CHECK(std::fabs(fwd - rev) < 1e-12);
        }
    }
}

TEST_CASE("segment losses add up along the trunk") {
    const Document doc = parse_document(bare_tree_doc());
    const auto& t = doc.topology;
    const Physics& phys = doc.physics;
    const double whole = path_loss_db(t, phys, "olt", "bob", 1310.0);

    // Split at each in-line element m: whole == loss(olt,m) + m + loss(m,bob).
    for (const NodeId& m : {NodeId("f1"), NodeId("f2"), NodeId("f3")}) {
        const double left = path_loss_db(t, phys, "olt", m, 1310.0);
        const double mid = element_loss_db(t.kind(m), 1310.0, kDown, phys);
        const double right = path_loss_db(t, phys, m, "bob", 1310.0);
        CHECK(left + mid + right == doctest::Approx(whole).epsilon(1e-12));
    }
}

TEST_CASE("adding an element never decreases loss") {
    const Document base = parse_document(bare_tree_doc());
    std::string with_conn = bare_tree_doc();
    with_conn.replace(with_conn.find("\"bob\":  {\"kind\": \"qkd_rx\"}"),
                      std::string("\"bob\":  {\"kind\": \"qkd_rx\"}").size(),
                      "\"bob\":  {\"kind\": \"qkd_rx\"}, \"extra\": {\"kind\": \"connector\"}");
    with_conn.replace(with_conn.find("[\"cp\",\"bob\"]"), std::string("[\"cp\",\"bob\"]").size(),
                      "[\"cp\",\"extra\"],[\"extra\",\"bob\"]");
    const Document longer = parse_document(with_conn);
    CHECK(path_loss_db(longer.topology, longer.physics, "olt", "bob", 1310.0) >
          path_loss_db(base.topology, base.physics, "olt", "bob", 1310.0));
}

TEST_CASE("splitters and couplers are passive") {
    Physics phys;
    for (int ports : {2, 4, 8, 16, 32, 64}) {
        double share_sum = 0.0;
        for (int k = 0; k < ports; ++k)
            share_sum += db_to_linear(
                -element_loss_db(Splitter{ports, {}, {}}, 1310,
                                 TraversalStep{"x", TraversalStep::Down, 0, k}, phys));
        CHECK(share_sum <= 1.0);
    }
    for (double a : {0.5, 0.7, 0.9}) {
        const Coupler c{{a, 1.0 - a}, {}};
        double share_sum = 0.0;
        for (int k = 0; k < 2; ++k)
            share_sum += db_to_linear(-element_loss_db(
                c, 1310, TraversalStep{"x", TraversalStep::Down, 0, k}, phys));
        CHECK(share_sum <= 1.0 + 1e-12);
    }
}

TEST_CASE("bandpass filter is flat, ramped, then clamped") {
    const BpfModel f{1310.0, 1.0, 1.0, 15.0, 60.0};
    CHECK(bpf_transmission_db(f, 1310.0) == doctest::Approx(1.0));
    CHECK(bpf_transmission_db(f, 1310.9) == doctest::Approx(1.0));  // inside passband
    CHECK(bpf_transmission_db(f, 1314.0) == doctest::Approx(46.0));  // 1 + 15*(4-1)
    CHECK(bpf_transmission_db(f, 1306.0) == doctest::Approx(46.0));  // symmetric
    CHECK(bpf_transmission_db(f, 1400.0) == doctest::Approx(60.0));  // clamped at the floor
    // Continuity at the passband edge.
    CHECK(bpf_transmission_db(f, 1311.0 + 1e-9) == doctest::Approx(1.0).epsilon(1e-6));
}

TEST_CASE("reflection paths cover every interface that can reach the receiver") {
    const Document doc = load_testbed();
    const auto paths = reflection_paths(doc.topology, doc.physics, "ont1", "bob");
    REQUIRE(paths.size() >= 3);

    std::map<NodeId, double> total;
    for (const auto& rp : paths) {
        CHECK(rp.forward_loss_db >= 0.0);
        CHECK(rp.backward_loss_db >= 0.0);
        CHECK(rp.total_suppression_db() >= rp.return_loss_db);  // bounded by the interface
        CHECK(rp.wavelength_nm == 1316.0);
        total[rp.reflection_point] = rp.total_suppression_db();
    }
    // The coupler and the wall outlet next to it dominate.
    REQUIRE(total.count("tap"));
    REQUIRE(total.count("wall"));
    REQUIRE(total.count("bep_split"));
    CHECK(total["tap"] < total["bep_split"]);
    CHECK(total["wall"] < total["bep_split"]);

    // A deep-branch ONT only reflects through the first splitting stage.
    const auto deep = reflection_paths(doc.topology, doc.physics, "ont9", "bob");
    for (const auto& rp : deep) CHECK(rp.total_suppression_db() > total["tap"] + 15.0);
}

TEST_CASE("reflections are suppressed at least by the declared return loss") {
    Document doc = load_testbed();
    doc.physics.splitter_return_loss_db = 60.0;
    doc.physics.coupler_return_loss_db = 60.0;
    doc.physics.connector_return_loss_db = 60.0;
    for (const auto& ont : doc.topology.onts)
        for (const auto& rp : reflection_paths(doc.topology, doc.physics, ont, "bob"))
            CHECK(rp.total_suppression_db() >= 60.0);
}

TEST_CASE("received power subtracts path loss and the receiver filter") {
    // 21 dB synthetic plant: 60 km of G652D at 0.35 dB/km.
    const Document doc = parse_document(chain_doc(60.0));
    Channel downstream;
    downstream.role = ChannelRole::Downstream;
    downstream.wavelength_nm = 1310.0;  // flat attenuation anchor
    downstream.launch_power_dbm = 3.0;
    const double at_bob = received_power_dbm(doc.topology, doc.physics, doc.plan, downstream, "rx");
    CHECK(at_bob == doctest::Approx(3.0 - 21.0 - doc.physics.bpf.passband_loss_db));

    // Upstream from an ONT toward the head-end: launch minus the plant loss.
    const Document tree = load_testbed();
    const Channel* up = tree.plan.by_role(ChannelRole::Upstream).front();
    const double at_olt = received_power_dbm(tree.topology, tree.physics, tree.plan, *up, "olt");
    const double oracle = -3.0 - path_loss_db(tree.topology, tree.physics, "ont1", "olt", 1316.0);
    CHECK(at_olt == doctest::Approx(oracle).epsilon(1e-12));

    // Degenerate sink at the source: a zero-loss path returns the launch power.
    Channel local = downstream;
    const double at_source = received_power_dbm(doc.topology, doc.physics, doc.plan, local, "tx");
    CHECK(at_source == doctest::Approx(3.0));

    // An ONT sink sees launch minus plant loss with no receiver filter:
    // +3 dBm over a 21 dB path arrives at -18 dBm (87.5 km at 0.24 dB/km).
    const Document to_ont = parse_document(R"({
      "nodes": {
        "head": {"kind": "olt_head"},
        "long": {"kind": "fiber", "length_km": 87.5, "fiber_type": "G652D"},
        "rx":   {"kind": "qkd_rx"},
        "ont":  {"kind": "ont", "wavelength_nm": 1315.0}
      },
      "edges": [["head","long"],["long","ont"],["head","rx"]],
      "terminals": {"alice": "head", "bob": "rx", "onts": ["ont"]},
      "channels": [{"role": "downstream", "wavelength_nm": 1490.0,
                    "launch_power_dbm": 3.0, "direction": "downstream"}]
    })");
    Channel feed;
    feed.role = ChannelRole::Downstream;
    feed.wavelength_nm = 1490.0;
    feed.launch_power_dbm = 3.0;
    CHECK(received_power_dbm(to_ont.topology, to_ont.physics, to_ont.plan, feed, "ont") ==
          doctest::Approx(-18.0).epsilon(1e-9));

    Channel quantum = tree.plan.quantum();
    CHECK_THROWS_AS(received_power_dbm(tree.topology, tree.physics, tree.plan, quantum, "bob"),
                    std::invalid_argument);
}
