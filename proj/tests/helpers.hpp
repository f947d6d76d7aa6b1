#pragma once

#include <string>

#include "qpon/document.hpp"

namespace qpon::testing {

inline std::string source_path(const std::string& rel) {
    return std::string(QPON_SOURCE_DIR) + "/" + rel;
}

inline Document load_testbed() { return load_document(source_path("scenarios/ftth_testbed.json")); }

inline Document load_synthetic_plant() {
    return load_document(source_path("tests/data/synthetic_plant.json"));
}

/// Three-element chain: tx -> span -> rx. The simplest valid plant.
inline std::string chain_doc(double length_km = 10.0) {
    return R"({
      "nodes": {
        "tx":   {"kind": "qkd_tx"},
        "span": {"kind": "fiber", "length_km": )" +
           std::to_string(length_km) + R"(, "fiber_type": "G652D"},
        "rx":   {"kind": "qkd_rx"}
      },
      "edges": [["tx", "span"], ["span", "rx"]],
      "terminals": {"alice": "tx", "bob": "rx", "onts": []}
    })";
}

/// Plant shaped like the production testbed but without the explicit
/// connectors, so the trunk is exactly span/splitter/span/splitter/span/coupler.
inline std::string bare_tree_doc() {
    return R"({
      "nodes": {
        "olt":  {"kind": "olt_head"},
        "f1":   {"kind": "fiber", "length_km": 3.0, "fiber_type": "G652D"},
        "s1":   {"kind": "splitter", "ports": 4},
        "f2":   {"kind": "fiber", "length_km": 1.0, "fiber_type": "G657A1"},
        "s2":   {"kind": "splitter", "ports": 4},
        "f3":   {"kind": "fiber", "length_km": 0.04, "fiber_type": "G657A1"},
        "cp":   {"kind": "coupler", "ratio": [0.5, 0.5]},
        "bob":  {"kind": "qkd_rx"},
        "ont1": {"kind": "ont", "wavelength_nm": 1316.0, "nominal_power_dbm": -3.0, "power_class": "B+"}
      },
      "edges": [["olt","f1"],["f1","s1"],["s1","f2"],["f2","s2"],["s2","f3"],
                ["f3","cp"],["cp","bob"],["cp","ont1"]],
      "terminals": {"alice": "olt", "bob": "bob", "onts": ["ont1"]}
    })";
}

}  // namespace qpon::testing
