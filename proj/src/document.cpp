#include "qpon/document.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <set>
#include <sstream>

#include <json.hpp>

namespace qpon {

using Json = nlohmann::ordered_json;

namespace {

int line_of_offset(const std::string& text, std::size_t offset) {
    int line = 1;
    for (std::size_t i = 0; i < offset && i < text.size(); ++i)
        if (text[i] == '\n') ++line;
    return line;
}

[[noreturn]] void fail(const std::string& context, const std::string& message) {
    throw ParseError(context.empty() ? message : context + ": " + message);
}

void check_keys(const Json& obj, const std::set<std::string>& allowed,
                const std::string& context) {
    for (const auto& [key, _] : obj.items())
        if (!allowed.count(key)) fail(context, "unknown key '" + key + "'");
}

double get_number(const Json& obj, const std::string& key, const std::string& context) {
    if (!obj.contains(key)) fail(context, "missing required key '" + key + "'");
    if (!obj[key].is_number()) fail(context + "." + key, "expected a number");
    return obj[key].get<double>();
}

double get_number_or(const Json& obj, const std::string& key, double fallback,
                     const std::string& context) {
    if (!obj.contains(key)) return fallback;
    if (!obj[key].is_number()) fail(context + "." + key, "expected a number");
    return obj[key].get<double>();
}

std::string get_string(const Json& obj, const std::string& key, const std::string& context) {
    if (!obj.contains(key)) fail(context, "missing required key '" + key + "'");
    if (!obj[key].is_string()) fail(context + "." + key, "expected a string");
    return obj[key].get<std::string>();
}

std::vector<std::pair<double, double>> parse_anchor_table(const Json& arr,
                                                          const std::string& context) {
    if (!arr.is_array()) fail(context, "expected an array of [x, y] pairs");
    std::vector<std::pair<double, double>> table;
    for (const auto& entry : arr) {
        if (!entry.is_array() || entry.size() != 2 || !entry[0].is_number() ||
            !entry[1].is_number())
            fail(context, "each anchor must be a [x, y] number pair");
        table.emplace_back(entry[0].get<double>(), entry[1].get<double>());
    }
    for (std::size_t i = 1; i < table.size(); ++i)
        if (table[i].first <= table[i - 1].first)
            fail(context, "anchor abscissae must be strictly increasing");
    return table;
}

BpfModel parse_bpf(const Json& obj, const BpfModel& base, const std::string& context) {
    check_keys(obj,
               {"center_nm", "halfwidth_nm", "passband_loss_db", "edge_slope_db_per_nm",
                "floor_isolation_db"},
               context);
    BpfModel bpf = base;
    bpf.center_nm = get_number_or(obj, "center_nm", bpf.center_nm, context);
    bpf.passband_halfwidth_nm = get_number_or(obj, "halfwidth_nm", bpf.passband_halfwidth_nm, context);
    bpf.passband_loss_db = get_number_or(obj, "passband_loss_db", bpf.passband_loss_db, context);
    bpf.edge_slope_db_per_nm =
        get_number_or(obj, "edge_slope_db_per_nm", bpf.edge_slope_db_per_nm, context);
    bpf.floor_isolation_db =
        get_number_or(obj, "floor_isolation_db", bpf.floor_isolation_db, context);
    if (bpf.passband_loss_db < 0.0 || bpf.floor_isolation_db <= bpf.passband_loss_db)
        fail(context, "floor isolation must exceed the passband loss (both dB)");
    if (bpf.passband_halfwidth_nm <= 0.0 || bpf.edge_slope_db_per_nm <= 0.0)
        fail(context, "halfwidth and edge slope must be positive");
    return bpf;
}

ElementKind parse_node(const Json& obj, const std::string& context, const Physics& phys) {
    const std::string kind = get_string(obj, "kind", context);
    if (kind == "olt_head") {
        check_keys(obj, {"kind"}, context);
        return OltHead{};
    }
    if (kind == "qkd_tx") {
        check_keys(obj, {"kind"}, context);
        return QkdTx{};
    }
    if (kind == "qkd_rx") {
        check_keys(obj, {"kind", "bpf"}, context);
        QkdRx rx;
        if (obj.contains("bpf")) rx.bpf = parse_bpf(obj["bpf"], phys.bpf, context + ".bpf");
        return rx;
    }
    if (kind == "fiber") {
        check_keys(obj, {"kind", "length_km", "fiber_type"}, context);
        FiberSpan f;
        f.length_km = get_number(obj, "length_km", context);
        const std::string ft = get_string(obj, "fiber_type", context);
        if (ft == "G652D")
            f.fiber_type = FiberType::G652D;
        else if (ft == "G657A1")
            f.fiber_type = FiberType::G657A1;
        else
            fail(context + ".fiber_type", "expected 'G652D' or 'G657A1'");
        return f;
    }
    if (kind == "splitter") {
        check_keys(obj, {"kind", "ports", "excess_loss_db", "return_loss_db"}, context);
        Splitter s;
        const double ports = get_number(obj, "ports", context);
        if (ports != std::floor(ports)) fail(context + ".ports", "expected an integer");
        s.ports = static_cast<int>(ports);
        if (obj.contains("excess_loss_db")) s.excess_loss_db = get_number(obj, "excess_loss_db", context);
        if (obj.contains("return_loss_db")) s.return_loss_db = get_number(obj, "return_loss_db", context);
        return s;
    }
    if (kind == "coupler") {
        check_keys(obj, {"kind", "ratio", "return_loss_db"}, context);
        Coupler c;  // 50/50 unless stated
        if (obj.contains("ratio")) {
            if (!obj["ratio"].is_array() || obj["ratio"].size() != 2)
                fail(context + ".ratio", "expected a [a, b] pair");
            c.ratio = {obj["ratio"][0].get<double>(), obj["ratio"][1].get<double>()};
        }
        if (obj.contains("return_loss_db")) c.return_loss_db = get_number(obj, "return_loss_db", context);
        return c;
    }
    if (kind == "connector") {
        check_keys(obj, {"kind", "insertion_loss_db", "return_loss_db"}, context);
        Connector k;
        if (obj.contains("insertion_loss_db"))
            k.insertion_loss_db = get_number(obj, "insertion_loss_db", context);
        if (obj.contains("return_loss_db"))
            k.return_loss_db = get_number(obj, "return_loss_db", context);
        return k;
    }
    if (kind == "ont") {
        check_keys(obj, {"kind", "wavelength_nm", "nominal_power_dbm", "power_class"}, context);
        Ont o;
        o.wavelength_nm = get_number(obj, "wavelength_nm", context);
        if (obj.contains("power_class")) {
            const std::string pc = get_string(obj, "power_class", context);
            if (pc == "B+")
                o.power_class = PowerClass::BPlus;
            else if (pc == "C+")
                o.power_class = PowerClass::CPlus;
            else
                fail(context + ".power_class", "expected 'B+' or 'C+'");
        }
        const double class_default = o.power_class == PowerClass::BPlus ? 0.0 : 3.0;
        o.nominal_power_dbm = get_number_or(obj, "nominal_power_dbm", class_default, context);
        return o;
    }
    fail(context + ".kind", "unknown element kind '" + kind + "'");
}

void parse_physics(const Json& obj, Physics& phys, GponConfig& gpon) {
    const std::string ctx = "physics";
    check_keys(obj,
               {"alpha_db_per_km", "splitter_excess_db", "connector_insertion_db",
                "connector_return_loss_db", "splitter_return_loss_db", "coupler_return_loss_db",
                "bpf", "raman_rho", "detector", "rate_scale", "plsu_db_per_ont"},
               ctx);
    if (obj.contains("alpha_db_per_km")) {
        const auto& alpha = obj["alpha_db_per_km"];
        check_keys(alpha, {"G652D", "G657A1"}, ctx + ".alpha_db_per_km");
        auto positive = [&](std::vector<std::pair<double, double>> table,
                            const std::string& where) {
            for (const auto& [wl, db] : table)
                if (db <= 0.0) fail(where, "attenuation must be positive dB/km");
            return table;
        };
        if (alpha.contains("G652D"))
            phys.alpha_g652d.anchors = positive(
                parse_anchor_table(alpha["G652D"], ctx + ".alpha_db_per_km.G652D"),
                ctx + ".alpha_db_per_km.G652D");
        if (alpha.contains("G657A1"))
            phys.alpha_g657a1.anchors = positive(
                parse_anchor_table(alpha["G657A1"], ctx + ".alpha_db_per_km.G657A1"),
                ctx + ".alpha_db_per_km.G657A1");
    }
    phys.splitter_excess_db = get_number_or(obj, "splitter_excess_db", phys.splitter_excess_db, ctx);
    phys.connector_insertion_db =
        get_number_or(obj, "connector_insertion_db", phys.connector_insertion_db, ctx);
    phys.connector_return_loss_db =
        get_number_or(obj, "connector_return_loss_db", phys.connector_return_loss_db, ctx);
    phys.splitter_return_loss_db =
        get_number_or(obj, "splitter_return_loss_db", phys.splitter_return_loss_db, ctx);
    phys.coupler_return_loss_db =
        get_number_or(obj, "coupler_return_loss_db", phys.coupler_return_loss_db, ctx);
    if (obj.contains("bpf")) phys.bpf = parse_bpf(obj["bpf"], phys.bpf, ctx + ".bpf");
    if (obj.contains("raman_rho")) {
        const auto& rho = obj["raman_rho"];
        if (rho.is_number())
            phys.raman = RamanModel::flat(rho.get<double>());
        else
            phys.raman.rho_anchors = parse_anchor_table(rho, ctx + ".raman_rho");
        for (const auto& [d, r] : phys.raman.rho_anchors)
            if (r < 0.0) fail(ctx + ".raman_rho", "coefficients must be >= 0");
    }
    if (obj.contains("detector")) {
        const auto& det = obj["detector"];
        const std::string dctx = ctx + ".detector";
        check_keys(det,
                   {"efficiency", "dark_count_prob_per_gate", "gate_rate_hz", "gate_width_s",
                    "e_det", "receiver_insertion_loss_db"},
                   dctx);
        auto& d = phys.detector;
        d.efficiency = get_number_or(det, "efficiency", d.efficiency, dctx);
        d.dark_count_prob_per_gate =
            get_number_or(det, "dark_count_prob_per_gate", d.dark_count_prob_per_gate, dctx);
        d.gate_rate_hz = get_number_or(det, "gate_rate_hz", d.gate_rate_hz, dctx);
        d.gate_width_s = get_number_or(det, "gate_width_s", d.gate_width_s, dctx);
        d.intrinsic_error_e_det = get_number_or(det, "e_det", d.intrinsic_error_e_det, dctx);
        d.receiver_insertion_loss_db =
            get_number_or(det, "receiver_insertion_loss_db", d.receiver_insertion_loss_db, dctx);
        if (d.efficiency < 0 || d.efficiency > 1 || d.dark_count_prob_per_gate < 0 ||
            d.dark_count_prob_per_gate > 1 || d.intrinsic_error_e_det < 0 ||
            d.intrinsic_error_e_det > 1)
            fail(dctx, "detector fractions must lie in [0, 1]");
        if (d.gate_width_s > 1.0 / d.gate_rate_hz)
            fail(dctx, "gate width must not exceed the gate period");
    }
    phys.rate_scale = get_number_or(obj, "rate_scale", phys.rate_scale, ctx);
    if (obj.contains("plsu_db_per_ont")) {
        gpon.plsu.db_per_added_ont = get_number(obj, "plsu_db_per_ont", ctx);
        if (gpon.plsu.db_per_added_ont < 0) fail(ctx + ".plsu_db_per_ont", "must be >= 0");
    }
}

void parse_gpon(const Json& obj, GponConfig& gpon) {
    const std::string ctx = "gpon";
    check_keys(obj, {"plsu", "dba", "duty_weighted_noise"}, ctx);
    if (obj.contains("plsu")) {
        const auto& p = obj["plsu"];
        const std::string pctx = ctx + ".plsu";
        check_keys(p, {"mode", "db_per_added_ont", "reference_count", "levels_dbm"}, pctx);
        const std::string mode = get_string(p, "mode", pctx);
        if (mode == "off") {
            gpon.plsu = PlsuPolicy::off();
        } else if (mode == "continuous") {
            gpon.plsu.mode = PlsuPolicy::Mode::Continuous;
            gpon.plsu.db_per_added_ont =
                get_number_or(p, "db_per_added_ont", gpon.plsu.db_per_added_ont, pctx);
            const double rc = get_number_or(p, "reference_count", gpon.plsu.reference_count, pctx);
            gpon.plsu.reference_count = static_cast<int>(rc);
            if (gpon.plsu.db_per_added_ont < 0) fail(pctx, "db_per_added_ont must be >= 0");
        } else if (mode == "discrete") {
            gpon.plsu.mode = PlsuPolicy::Mode::Discrete;
            if (!p.contains("levels_dbm") || !p["levels_dbm"].is_array() || p["levels_dbm"].empty())
                fail(pctx, "discrete mode requires a non-empty levels_dbm array");
            gpon.plsu.levels_dbm.clear();
            for (const auto& v : p["levels_dbm"]) gpon.plsu.levels_dbm.push_back(v.get<double>());
            for (std::size_t i = 1; i < gpon.plsu.levels_dbm.size(); ++i)
                if (gpon.plsu.levels_dbm[i] >= gpon.plsu.levels_dbm[i - 1])
                    fail(pctx + ".levels_dbm", "levels must be strictly decreasing");
            const double rc = get_number_or(p, "reference_count", gpon.plsu.reference_count, pctx);
            gpon.plsu.reference_count = static_cast<int>(rc);
        } else {
            fail(pctx + ".mode", "expected 'off', 'continuous' or 'discrete'");
        }
    }
    if (obj.contains("dba")) {
        const auto& d = obj["dba"];
        const std::string dctx = ctx + ".dba";
        check_keys(d, {"mode", "duty"}, dctx);
        const std::string mode = get_string(d, "mode", dctx);
        if (mode == "equal") {
            gpon.dba_equal_shares = true;
        } else if (mode == "explicit") {
            gpon.dba_equal_shares = false;
            if (!d.contains("duty") || !d["duty"].is_object())
                fail(dctx, "explicit mode requires a duty map");
            double total = 0.0;
            for (const auto& [ont, duty] : d["duty"].items()) {
                const double v = duty.get<double>();
                if (v < 0.0 || v > 1.0) fail(dctx + ".duty." + ont, "duty must lie in [0, 1]");
                gpon.dba_duty[ont] = v;
                total += v;
            }
            if (total > 1.0 + 1e-9) fail(dctx + ".duty", "TDM duties must sum to at most 1");
        } else {
            fail(dctx + ".mode", "expected 'equal' or 'explicit'");
        }
    }
    if (obj.contains("duty_weighted_noise")) {
        if (!obj["duty_weighted_noise"].is_boolean())
            fail(ctx + ".duty_weighted_noise", "expected a boolean");
        gpon.duty_weighted_noise = obj["duty_weighted_noise"].get<bool>();
    }
}

void parse_qkd(const Json& obj, DecoyParams& d) {
    const std::string ctx = "qkd";
    check_keys(obj,
               {"mu", "nu", "p_signal", "p_decoy", "p_vacuum", "sifting_q", "f_ec",
                "clock_rate_hz"},
               ctx);
    d.mu = get_number_or(obj, "mu", d.mu, ctx);
    d.nu = get_number_or(obj, "nu", d.nu, ctx);
    d.p_signal = get_number_or(obj, "p_signal", d.p_signal, ctx);
    d.p_decoy = get_number_or(obj, "p_decoy", d.p_decoy, ctx);
    d.p_vacuum = get_number_or(obj, "p_vacuum", d.p_vacuum, ctx);
    d.sifting_q = get_number_or(obj, "sifting_q", d.sifting_q, ctx);
    d.f_ec = get_number_or(obj, "f_ec", d.f_ec, ctx);
    d.clock_rate_hz = get_number_or(obj, "clock_rate_hz", d.clock_rate_hz, ctx);
    if (!(d.nu > 0.0 && d.nu < d.mu && d.nu < 1.0))
        fail(ctx, "intensities must satisfy 0 < nu < mu and nu < 1");
    if (std::fabs(d.p_signal + d.p_decoy + d.p_vacuum - 1.0) > 1e-9)
        fail(ctx, "state probabilities must sum to 1");
    if (!(d.sifting_q > 0.0 && d.sifting_q <= 1.0)) fail(ctx, "sifting_q must lie in (0, 1]");
    if (d.f_ec < 1.0) fail(ctx, "f_ec must be >= 1");
}

void parse_sim(const Json& obj, SimDefaults& sim) {
    const std::string ctx = "sim";
    check_keys(obj, {"duration_s", "block_s", "seed"}, ctx);
    sim.duration_s = get_number_or(obj, "duration_s", sim.duration_s, ctx);
    sim.block_s = get_number_or(obj, "block_s", sim.block_s, ctx);
    if (obj.contains("seed")) {
        if (!obj["seed"].is_number_unsigned() && !obj["seed"].is_number_integer())
            fail(ctx + ".seed", "expected an integer");
        sim.seed = obj["seed"].get<std::uint64_t>();
    }
    if (sim.block_s <= 0 || sim.duration_s < sim.block_s)
        fail(ctx, "block_s must be positive and at most duration_s");
}

}  // namespace

Document parse_document(const std::string& text, bool enforce_valid) {
    Json root;
    try {
        root = Json::parse(text);
    } catch (const nlohmann::json::parse_error& e) {
        throw ParseError("syntax error at line " + std::to_string(line_of_offset(text, e.byte)) +
                             ": " + e.what(),
                         line_of_offset(text, e.byte));
    }
    if (!root.is_object()) throw ParseError("document root must be a JSON object");
    check_keys(root, {"nodes", "edges", "terminals", "channels", "physics", "gpon", "qkd", "sim"},
               "");

    Document doc;

    // Physics and behavior blocks first: node defaults reference them.
    if (root.contains("gpon")) parse_gpon(root["gpon"], doc.gpon);
    if (root.contains("physics")) parse_physics(root["physics"], doc.physics, doc.gpon);
    if (root.contains("qkd")) parse_qkd(root["qkd"], doc.qkd);
    if (root.contains("sim")) parse_sim(root["sim"], doc.sim);

    if (!root.contains("nodes") || !root["nodes"].is_object())
        throw ParseError("document requires a 'nodes' object");
    for (const auto& [id, body] : root["nodes"].items()) {
        if (!body.is_object()) fail("nodes." + id, "expected an object");
        doc.topology.node_order.push_back(id);
        doc.topology.nodes.emplace(id, parse_node(body, "nodes." + id, doc.physics));
    }

    if (!root.contains("edges") || !root["edges"].is_array())
        throw ParseError("document requires an 'edges' array");
    for (const auto& e : root["edges"]) {
        if (!e.is_array() || e.size() != 2 || !e[0].is_string() || !e[1].is_string())
            fail("edges", "each edge must be a [parent, child] pair of node ids");
        const NodeId parent = e[0].get<std::string>();
        const NodeId child = e[1].get<std::string>();
        if (!doc.topology.has_node(parent)) fail("edges", "unknown parent node '" + parent + "'");
        if (!doc.topology.has_node(child)) fail("edges", "unknown child node '" + child + "'");
        if (doc.topology.parent_of.count(child)) {
            doc.structural_violations.push_back(
                {child, "not-a-tree", "node has more than one parent"});
            continue;
        }
        doc.topology.parent_of.emplace(child, parent);
        doc.topology.children_of[parent].push_back(child);
    }

    if (!root.contains("terminals") || !root["terminals"].is_object())
        throw ParseError("document requires a 'terminals' object");
    {
        const auto& term = root["terminals"];
        check_keys(term, {"alice", "bob", "onts"}, "terminals");
        doc.topology.alice = get_string(term, "alice", "terminals");
        doc.topology.bob = get_string(term, "bob", "terminals");
        if (term.contains("onts")) {
            if (!term["onts"].is_array()) fail("terminals.onts", "expected an array of node ids");
            for (const auto& o : term["onts"]) doc.topology.onts.push_back(o.get<std::string>());
        }
        std::set<NodeId> distinct(doc.topology.onts.begin(), doc.topology.onts.end());
        if (distinct.size() != doc.topology.onts.size())
            fail("terminals.onts", "ont ids must be distinct");
    }

    // Channel plan; upstream channels derive from the ONT declarations.
    bool have_quantum = false;
    if (root.contains("channels")) {
        if (!root["channels"].is_array()) fail("channels", "expected an array");
        for (const auto& c : root["channels"]) {
            const std::string ctx = "channels";
            check_keys(c, {"role", "wavelength_nm", "launch_power_dbm", "direction"}, ctx);
            const std::string role = get_string(c, "role", ctx);
            Channel ch;
            if (role == "quantum") {
                ch.role = ChannelRole::Quantum;
                ch.wavelength_nm = get_number_or(c, "wavelength_nm", 1310.0, ctx);
                ch.direction = Direction::DownstreamDir;
                if (c.contains("launch_power_dbm"))
                    fail(ctx, "the quantum channel carries no classical launch power");
                if (have_quantum) fail(ctx, "exactly one quantum channel is allowed");
                have_quantum = true;
            } else if (role == "downstream" || role == "service") {
                ch.role = role == "downstream" ? ChannelRole::Downstream : ChannelRole::ServiceCh;
                ch.wavelength_nm = get_number(c, "wavelength_nm", ctx);
                // Service carriers default to 0 dBm when unstated.
                ch.launch_power_dbm = role == "service"
                                          ? get_number_or(c, "launch_power_dbm", 0.0, ctx)
                                          : get_number(c, "launch_power_dbm", ctx);
                ch.direction = Direction::DownstreamDir;
            } else if (role == "upstream") {
                fail(ctx, "upstream channels derive from the ONT declarations");
            } else {
                fail(ctx + ".role", "unknown channel role '" + role + "'");
            }
            if (c.contains("direction")) {
                const std::string dir = get_string(c, "direction", ctx);
                if (dir == "downstream")
                    ch.direction = Direction::DownstreamDir;
                else if (dir == "upstream")
                    ch.direction = Direction::UpstreamDir;
                else
                    fail(ctx + ".direction", "expected 'downstream' or 'upstream'");
            }
            doc.plan.channels.push_back(ch);
        }
    }
    if (!have_quantum) {
        Channel q;
        q.role = ChannelRole::Quantum;
        q.wavelength_nm = 1310.0;
        q.direction = Direction::DownstreamDir;
        doc.plan.channels.insert(doc.plan.channels.begin(), q);
    }
    for (const auto& ont_id : doc.topology.onts) {
        if (!doc.topology.has_node(ont_id)) continue;
        const auto* ont = std::get_if<Ont>(&doc.topology.kind(ont_id));
        if (!ont) continue;
        Channel up;
        up.role = ChannelRole::Upstream;
        up.wavelength_nm = ont->wavelength_nm;
        up.launch_power_dbm = ont->nominal_power_dbm;
        up.direction = Direction::UpstreamDir;
        up.source_ont = ont_id;
        doc.plan.channels.push_back(up);
    }

    if (enforce_valid) {
        const auto violations = all_violations(doc);
        if (!violations.empty()) {
            std::ostringstream ss;
            ss << "invalid topology: ";
            for (std::size_t i = 0; i < violations.size(); ++i) {
                if (i) ss << "; ";
                ss << violations[i].node << " [" << violations[i].rule << "] "
                   << violations[i].detail;
            }
            throw ParseError(ss.str());
        }
    }
    return doc;
}

Document load_document(const std::string& path, bool enforce_valid) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw IoError("cannot read scenario document: " + path);
    std::ostringstream ss;
    ss << in.rdbuf();
    return parse_document(ss.str(), enforce_valid);
}

std::vector<Violation> all_violations(const Document& doc) {
    std::vector<Violation> out = doc.structural_violations;
    const auto topo = validate(doc.topology);
    out.insert(out.end(), topo.begin(), topo.end());
    return out;
}

namespace {

Json serialize_node(const ElementKind& kind) {
    Json j;
    j["kind"] = element_kind_name(kind);
    if (const auto* f = std::get_if<FiberSpan>(&kind)) {
        j["length_km"] = f->length_km;
        j["fiber_type"] = f->fiber_type == FiberType::G652D ? "G652D" : "G657A1";
    } else if (const auto* s = std::get_if<Splitter>(&kind)) {
        j["ports"] = s->ports;
        if (s->excess_loss_db) j["excess_loss_db"] = *s->excess_loss_db;
        if (s->return_loss_db) j["return_loss_db"] = *s->return_loss_db;
    } else if (const auto* c = std::get_if<Coupler>(&kind)) {
        j["ratio"] = {c->ratio[0], c->ratio[1]};
        if (c->return_loss_db) j["return_loss_db"] = *c->return_loss_db;
    } else if (const auto* k = std::get_if<Connector>(&kind)) {
        if (k->insertion_loss_db) j["insertion_loss_db"] = *k->insertion_loss_db;
        if (k->return_loss_db) j["return_loss_db"] = *k->return_loss_db;
    } else if (const auto* o = std::get_if<Ont>(&kind)) {
        j["wavelength_nm"] = o->wavelength_nm;
        j["nominal_power_dbm"] = o->nominal_power_dbm;
        j["power_class"] = o->power_class == PowerClass::BPlus ? "B+" : "C+";
    } else if (const auto* rx = std::get_if<QkdRx>(&kind)) {
        if (rx->bpf) {
            j["bpf"] = {{"center_nm", rx->bpf->center_nm},
                        {"halfwidth_nm", rx->bpf->passband_halfwidth_nm},
                        {"passband_loss_db", rx->bpf->passband_loss_db},
                        {"edge_slope_db_per_nm", rx->bpf->edge_slope_db_per_nm},
                        {"floor_isolation_db", rx->bpf->floor_isolation_db}};
        }
    }
    return j;
}

Json anchor_json(const std::vector<std::pair<double, double>>& table) {
    Json arr = Json::array();
    for (const auto& [x, y] : table) arr.push_back({x, y});
    return arr;
}

}  // namespace

std::string serialize_document(const Document& doc) {
    Json root;
    Json nodes;
    for (const auto& id : doc.topology.node_order)
        nodes[id] = serialize_node(doc.topology.kind(id));
    root["nodes"] = nodes;

    Json edges = Json::array();
    for (const auto& id : doc.topology.node_order)
        for (const auto& child : doc.topology.children(id)) edges.push_back({id, child});
    root["edges"] = edges;

    root["terminals"] = {{"alice", doc.topology.alice},
                         {"bob", doc.topology.bob},
                         {"onts", doc.topology.onts}};

    Json channels = Json::array();
    for (const auto& ch : doc.plan.channels) {
        if (ch.role == ChannelRole::Upstream) continue;  // derived from ONTs
        Json c;
        switch (ch.role) {
            case ChannelRole::Quantum: c["role"] = "quantum"; break;
            case ChannelRole::Downstream: c["role"] = "downstream"; break;
            case ChannelRole::ServiceCh: c["role"] = "service"; break;
            case ChannelRole::Upstream: break;
        }
        c["wavelength_nm"] = ch.wavelength_nm;
        if (ch.launch_power_dbm) c["launch_power_dbm"] = *ch.launch_power_dbm;
        c["direction"] = ch.direction == Direction::DownstreamDir ? "downstream" : "upstream";
        channels.push_back(c);
    }
    root["channels"] = channels;

    root["physics"] = {
        {"alpha_db_per_km",
         {{"G652D", anchor_json(doc.physics.alpha_g652d.anchors)},
          {"G657A1", anchor_json(doc.physics.alpha_g657a1.anchors)}}},
        {"splitter_excess_db", doc.physics.splitter_excess_db},
        {"connector_insertion_db", doc.physics.connector_insertion_db},
        {"connector_return_loss_db", doc.physics.connector_return_loss_db},
        {"splitter_return_loss_db", doc.physics.splitter_return_loss_db},
        {"coupler_return_loss_db", doc.physics.coupler_return_loss_db},
        {"bpf",
         {{"center_nm", doc.physics.bpf.center_nm},
          {"halfwidth_nm", doc.physics.bpf.passband_halfwidth_nm},
          {"passband_loss_db", doc.physics.bpf.passband_loss_db},
          {"edge_slope_db_per_nm", doc.physics.bpf.edge_slope_db_per_nm},
          {"floor_isolation_db", doc.physics.bpf.floor_isolation_db}}},
        {"raman_rho", anchor_json(doc.physics.raman.rho_anchors)},
        {"detector",
         {{"efficiency", doc.physics.detector.efficiency},
          {"dark_count_prob_per_gate", doc.physics.detector.dark_count_prob_per_gate},
          {"gate_rate_hz", doc.physics.detector.gate_rate_hz},
          {"gate_width_s", doc.physics.detector.gate_width_s},
          {"e_det", doc.physics.detector.intrinsic_error_e_det},
          {"receiver_insertion_loss_db", doc.physics.detector.receiver_insertion_loss_db}}},
        {"rate_scale", doc.physics.rate_scale}};

    Json plsu;
    switch (doc.gpon.plsu.mode) {
        case PlsuPolicy::Mode::Off: plsu = {{"mode", "off"}}; break;
        case PlsuPolicy::Mode::Continuous:
            plsu = {{"mode", "continuous"},
                    {"db_per_added_ont", doc.gpon.plsu.db_per_added_ont},
                    {"reference_count", doc.gpon.plsu.reference_count}};
            break;
        case PlsuPolicy::Mode::Discrete:
            plsu = {{"mode", "discrete"},
                    {"levels_dbm", doc.gpon.plsu.levels_dbm},
                    {"reference_count", doc.gpon.plsu.reference_count}};
            break;
    }
    Json dba;
    if (doc.gpon.dba_equal_shares) {
        dba = {{"mode", "equal"}};
    } else {
        Json duty;
        for (const auto& [ont, d] : doc.gpon.dba_duty) duty[ont] = d;
        dba = {{"mode", "explicit"}, {"duty", duty}};
    }
    root["gpon"] = {{"plsu", plsu},
                    {"dba", dba},
                    {"duty_weighted_noise", doc.gpon.duty_weighted_noise}};

    root["qkd"] = {{"mu", doc.qkd.mu},
                   {"nu", doc.qkd.nu},
                   {"p_signal", doc.qkd.p_signal},
                   {"p_decoy", doc.qkd.p_decoy},
                   {"p_vacuum", doc.qkd.p_vacuum},
                   {"sifting_q", doc.qkd.sifting_q},
                   {"f_ec", doc.qkd.f_ec},
                   {"clock_rate_hz", doc.qkd.clock_rate_hz}};

    root["sim"] = {{"duration_s", doc.sim.duration_s},
                   {"block_s", doc.sim.block_s},
                   {"seed", doc.sim.seed}};

    return root.dump(2) + "\n";
}

std::string apply_overrides(const std::string& text, const std::vector<std::string>& overrides) {
    if (overrides.empty()) return text;
    Json root;
    try {
        root = Json::parse(text);
    } catch (const nlohmann::json::parse_error& e) {
        throw ParseError(std::string("syntax error: ") + e.what());
    }
    for (const auto& kv : overrides) {
        const auto eq = kv.find('=');
        if (eq == std::string::npos || eq == 0)
            throw ParseError("override must look like key.path=value: " + kv);
        const std::string path = kv.substr(0, eq);
        const std::string raw = kv.substr(eq + 1);
        Json value;
        try {
            value = Json::parse(raw);
        } catch (const nlohmann::json::parse_error&) {
            value = raw;  // bare strings are legal values
        }
        Json* cursor = &root;
        std::size_t start = 0;
        while (true) {
            const auto dot = path.find('.', start);
            const std::string key = path.substr(start, dot - start);
            if (key.empty()) throw ParseError("empty key segment in override: " + kv);
            if (dot == std::string::npos) {
                (*cursor)[key] = value;
                break;
            }
            if (!cursor->contains(key) || !(*cursor)[key].is_object()) (*cursor)[key] = Json::object();
            cursor = &(*cursor)[key];
            start = dot + 1;
        }
    }
    return root.dump(2);
}

}  // namespace qpon
