#pragma once

#include <cstdint>
#include <stdexcept>
#include <string>
#include <vector>

#include "qpon/gpon.hpp"
#include "qpon/physics.hpp"
#include "qpon/qkd.hpp"
#include "qpon/topology.hpp"

namespace qpon {

struct SimDefaults {
    double duration_s = 216000.0;  // 60 hours
    double block_s = 60.0;
    std::uint64_t seed = 1;
};

/// One scenario file: plant topology, channel plan, physics overrides, GPON
/// behavior and protocol constants. Immutable after parsing.
struct Document {
    Topology topology;
    ChannelPlan plan;
    Physics physics;
    GponConfig gpon;
    DecoyParams qkd;
    SimDefaults sim;
    /// Tree-shape defects recorded while building (e.g. duplicate parents);
    /// reported alongside validate() results.
    std::vector<Violation> structural_violations;
};

class ParseError : public std::runtime_error {
  public:
    ParseError(const std::string& message, int line = 0)
        : std::runtime_error(message), line_(line) {}
    int line() const { return line_; }

  private:
    int line_;
};

class IoError : public std::runtime_error {
    using std::runtime_error::runtime_error;
};

/// Parses a scenario document. Unknown keys anywhere are hard errors. With
/// `enforce_valid` set (the default), topology violations also throw; the
/// `validate` command defers them to report the full list.
Document parse_document(const std::string& text, bool enforce_valid = true);
Document load_document(const std::string& path, bool enforce_valid = true);

/// Build violations plus validate(topology), in that order.
std::vector<Violation> all_violations(const Document& doc);

/// Canonical JSON serialization; parsing it again reproduces the topology
/// field-by-field.
std::string serialize_document(const Document& doc);

/// Applies dotted-path `key=value` overrides to a raw JSON document text and
/// returns the modified text (values parse as JSON scalars when possible).
std::string apply_overrides(const std::string& text, const std::vector<std::string>& overrides);

}  // namespace qpon
