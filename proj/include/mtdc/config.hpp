#pragma once

#include "mtdc/types.hpp"

#include <optional>
#include <string>
#include <vector>

#include "json.hpp"

namespace mtdc {

// All stored values are SI base units (V, A, W, var, ohm, H, F, s, rad/s,
// W/V). Line lengths are kept in km because the cable data is per-km; the
// products R = r_per_km * length_km etc. are SI.

struct LineSpec {
    std::string from_node;
    std::string to_node;
    double length_km = 0.0;
    double r_per_km = 0.0; // ohm/km
    double l_per_km = 0.0; // H/km
    double c_per_km = 0.0; // F/km
};

struct DroopParams {
    double k = 0.0;        // W/V
    double v_dc_ref = 0.0; // V
    double p0 = 0.0;       // W
};

enum class ConverterMode { Droop, FixedPower };

struct ConverterSpec {
    std::string node;
    ConverterMode mode = ConverterMode::FixedPower;
    double c_sm = 0.0;  // F, per sub-module
    int n_sm = 1;       // sub-modules per arm
    double l_arm = 0.0; // H
    double r_arm = 0.0; // ohm
    double l0 = 0.0;    // H, PCC branch
    double r0 = 0.0;    // ohm
    double l_s = 0.0;   // H, smoothing reactor
    double c_g = 0.0;   // F, grounding capacitor
    double v_dc_nom = 0.0; // V, modulation base voltage
    double pcc_d = 0.0; // V, PCC source dq components
    double pcc_q = 0.0;
    double omega0 = 0.0; // rad/s
    double p_set = 0.0;  // W
    double q_set = 0.0;  // var
    std::optional<DroopParams> droop;
};

struct ControllerGains {
    double kp_i = 0.0;  // V/A
    double ki_i = 0.0;  // V/(A s)
    double kp_pq = 0.0; // A/W
    double ki_pq = 0.0; // A/(W s)
    bool ff_pcc_voltage = true;
    bool ff_cross_coupling = true;
    std::optional<double> l_ff; // H; defaults to l_arm/2 + l0 when absent
};

struct ScenarioEvent {
    double time = 0.0;   // s
    std::string target;  // "converters.<node>.p_set" | ".q_set" | ".droop.k" | ".droop.p0"
    double value = 0.0;  // SI
    bool compensate_p0 = true; // droop.k steps keep the operating point
};

struct SystemConfig {
    std::vector<std::string> nodes;
    std::vector<LineSpec> lines;
    std::vector<ConverterSpec> converters; // one per node, in node order
    std::vector<ControllerGains> gains;    // parallel to converters
    std::vector<ScenarioEvent> scenario;

    int node_index(const std::string& id) const;
};

/// Parse-checked config with derived topology facts.
struct ValidatedConfig {
    SystemConfig sys;
    int n_nodes = 0;
    int n_lines = 0;
    int state_dim = 0;              // 15 n + 3 m
    std::vector<int> droop_nodes;   // node indices of droop converters
};

SystemConfig parse_config(const nlohmann::json& doc);
SystemConfig parse_config_text(const std::string& text);
SystemConfig parse_config_file(const std::string& path);

ValidatedConfig validate(const SystemConfig& cfg);

/// Normalized document: same schema, quantities flattened to base-unit
/// numbers, converters/gains in node order, keys sorted.
nlohmann::json serialize_normalized(const SystemConfig& cfg);

/// FNV-1a over the normalized serialization.
std::string config_hash(const SystemConfig& cfg);

/// In-place `path=value` override on a raw config document
/// (e.g. "converters.bus2.droop.k=25e3", "lines.3.length_km=120").
void apply_override(nlohmann::json& doc, const std::string& assignment);

/// Case file { "slopes": { "<node>": <W/V quantity>, ... } }: swap droop
/// slopes; when v_dc_at_op is given per droop node, shift p0 so that the
/// droop output at that voltage is unchanged.
struct CaseSlopes {
    std::string name;
    std::vector<std::pair<std::string, double>> slopes; // node id -> k [W/V]
};
CaseSlopes parse_case_file(const std::string& path);
void apply_case(SystemConfig& cfg, const CaseSlopes& cs,
                const std::vector<double>* v_dc_at_op = nullptr);

} // namespace mtdc
