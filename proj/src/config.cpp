#include "mtdc/config.hpp"

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <fstream>
#include <map>
#include <numbers>
#include <set>
#include <sstream>

namespace mtdc {

using nlohmann::json;

namespace {

enum class Dim {
    Volt, Ampere, Watt, Var, Ohm, Henry, Farad, Second, Kilometer,
    RadPerSec, OhmPerKm, HenryPerKm, FaradPerKm, WattPerVolt, Scalar
};

const char* dim_name(Dim d) {
    switch (d) {
        case Dim::Volt: return "voltage";
        case Dim::Ampere: return "current";
        case Dim::Watt: return "power";
        case Dim::Var: return "reactive power";
        case Dim::Ohm: return "resistance";
        case Dim::Henry: return "inductance";
        case Dim::Farad: return "capacitance";
        case Dim::Second: return "time";
        case Dim::Kilometer: return "length";
        case Dim::RadPerSec: return "angular frequency";
        case Dim::OhmPerKm: return "resistance per km";
        case Dim::HenryPerKm: return "inductance per km";
        case Dim::FaradPerKm: return "capacitance per km";
        case Dim::WattPerVolt: return "droop slope";
        case Dim::Scalar: return "scalar";
    }
    return "?";
}

struct UnitInfo {
    double factor;
    Dim dim;
};

const std::map<std::string, UnitInfo>& unit_table() {
    static const std::map<std::string, UnitInfo> table = {
        {"V", {1.0, Dim::Volt}},      {"kV", {1e3, Dim::Volt}},   {"MV", {1e6, Dim::Volt}},
        {"A", {1.0, Dim::Ampere}},    {"kA", {1e3, Dim::Ampere}},
        {"W", {1.0, Dim::Watt}},      {"kW", {1e3, Dim::Watt}},
        {"MW", {1e6, Dim::Watt}},     {"GW", {1e9, Dim::Watt}},
        {"var", {1.0, Dim::Var}},     {"kvar", {1e3, Dim::Var}},  {"Mvar", {1e6, Dim::Var}},
        {"ohm", {1.0, Dim::Ohm}},     {"Ohm", {1.0, Dim::Ohm}},   {"Ω", {1.0, Dim::Ohm}},
        {"mohm", {1e-3, Dim::Ohm}},   {"mΩ", {1e-3, Dim::Ohm}},
        {"kohm", {1e3, Dim::Ohm}},    {"kΩ", {1e3, Dim::Ohm}},
        {"H", {1.0, Dim::Henry}},     {"mH", {1e-3, Dim::Henry}},
        {"uH", {1e-6, Dim::Henry}},   {"µH", {1e-6, Dim::Henry}}, {"μH", {1e-6, Dim::Henry}},
        {"F", {1.0, Dim::Farad}},     {"mF", {1e-3, Dim::Farad}},
        {"uF", {1e-6, Dim::Farad}},   {"µF", {1e-6, Dim::Farad}}, {"μF", {1e-6, Dim::Farad}},
        {"nF", {1e-9, Dim::Farad}},
        {"s", {1.0, Dim::Second}},    {"ms", {1e-3, Dim::Second}},
        {"us", {1e-6, Dim::Second}},  {"µs", {1e-6, Dim::Second}}, {"μs", {1e-6, Dim::Second}},
        {"km", {1.0, Dim::Kilometer}}, {"m", {1e-3, Dim::Kilometer}},
        {"rad/s", {1.0, Dim::RadPerSec}},
        {"Hz", {2.0 * std::numbers::pi, Dim::RadPerSec}},
    };
    return table;
}

UnitInfo parse_unit(const std::string& unit, const std::string& path) {
    const auto& table = unit_table();
    if (auto it = table.find(unit); it != table.end()) return it->second;

    // "<base>/km" per-length and "<power>/<voltage>" droop-slope composites.
    auto slash = unit.find('/');
    if (slash != std::string::npos) {
        std::string num = unit.substr(0, slash);
        std::string den = unit.substr(slash + 1);
        auto nit = table.find(num);
        if (nit != table.end() && den == "km") {
            switch (nit->second.dim) {
                case Dim::Ohm: return {nit->second.factor, Dim::OhmPerKm};
                case Dim::Henry: return {nit->second.factor, Dim::HenryPerKm};
                case Dim::Farad: return {nit->second.factor, Dim::FaradPerKm};
                default: break;
            }
        }
        auto dit = table.find(den);
        if (nit != table.end() && dit != table.end() &&
            nit->second.dim == Dim::Watt && dit->second.dim == Dim::Volt) {
            return {nit->second.factor / dit->second.factor, Dim::WattPerVolt};
        }
    }
    throw ConfigError(path + ": unknown unit suffix '" + unit + "'");
}

/// Quantity = {"value": x, "unit": "kV"} or a bare number already in the
/// field's base unit.
double quantity(const json& node, Dim dim, const std::string& path) {
    if (node.is_number()) return node.get<double>();
    if (node.is_object()) {
        if (!node.contains("value") || !node.contains("unit"))
            throw ConfigError(path + ": quantity object needs \"value\" and \"unit\"");
        if (!node["value"].is_number())
            throw ConfigError(path + ".value: expected a number");
        UnitInfo u = parse_unit(node["unit"].get<std::string>(), path);
        if (u.dim != dim)
            throw ConfigError(path + ": unit '" + node["unit"].get<std::string>() +
                              "' is not a " + dim_name(dim));
        return node["value"].get<double>() * u.factor;
    }
    throw ConfigError(path + ": expected a number or {value, unit} object");
}

const json& require(const json& obj, const std::string& key, const std::string& path) {
    if (!obj.is_object() || !obj.contains(key))
        throw ConfigError(path + ": missing required key '" + key + "'");
    return obj.at(key);
}

bool get_flag(const json& obj, const std::string& key, bool dflt) {
    if (obj.contains(key)) return obj.at(key).get<bool>();
    return dflt;
}

Dim scenario_dim(const std::string& target, const std::string& path) {
    auto ends_with = [&](const char* s) { return target.ends_with(s); };
    if (ends_with(".p_set") || ends_with(".droop.p0")) return Dim::Watt;
    if (ends_with(".q_set")) return Dim::Var;
    if (ends_with(".droop.k")) return Dim::WattPerVolt;
    if (ends_with(".droop.v_dc_ref")) return Dim::Volt;
    throw ConfigError(path + ": unsupported scenario target '" + target + "'");
}

} // namespace

int SystemConfig::node_index(const std::string& id) const {
    auto it = std::find(nodes.begin(), nodes.end(), id);
    if (it == nodes.end()) throw ConfigError("unknown node id '" + id + "'");
    return static_cast<int>(it - nodes.begin());
}

SystemConfig parse_config(const json& doc) {
    if (!doc.is_object()) throw ConfigError("$: document must be a JSON object");
    SystemConfig cfg;

    const json& nodes = require(doc, "nodes", "$");
    if (!nodes.is_array() || nodes.empty())
        throw ConfigError("$.nodes: expected a non-empty array of node ids");
    std::set<std::string> seen;
    for (size_t i = 0; i < nodes.size(); ++i) {
        std::string id = nodes[i].get<std::string>();
        if (!seen.insert(id).second)
            throw ConfigError("$.nodes[" + std::to_string(i) + "]: duplicate node id '" + id + "'");
        cfg.nodes.push_back(std::move(id));
    }

    const json& lines = require(doc, "lines", "$");
    if (!lines.is_array()) throw ConfigError("$.lines: expected an array");
    for (size_t i = 0; i < lines.size(); ++i) {
        std::string path = "$.lines[" + std::to_string(i) + "]";
        const json& jl = lines[i];
        LineSpec ls;
        ls.from_node = require(jl, "from", path).get<std::string>();
        ls.to_node = require(jl, "to", path).get<std::string>();
        ls.length_km = quantity(require(jl, "length", path), Dim::Kilometer, path + ".length");
        ls.r_per_km = quantity(require(jl, "r_per_km", path), Dim::OhmPerKm, path + ".r_per_km");
        ls.l_per_km = quantity(require(jl, "l_per_km", path), Dim::HenryPerKm, path + ".l_per_km");
        ls.c_per_km = quantity(require(jl, "c_per_km", path), Dim::FaradPerKm, path + ".c_per_km");
        if (!seen.count(ls.from_node))
            throw ConfigError(path + ".from: undeclared node '" + ls.from_node + "'");
        if (!seen.count(ls.to_node))
            throw ConfigError(path + ".to: undeclared node '" + ls.to_node + "'");
        if (ls.from_node == ls.to_node)
            throw ConfigError(path + ": line endpoints must differ");
        cfg.lines.push_back(std::move(ls));
    }

    const json& convs = require(doc, "converters", "$");
    if (!convs.is_array()) throw ConfigError("$.converters: expected an array");
    std::map<std::string, ConverterSpec> by_node;
    for (size_t i = 0; i < convs.size(); ++i) {
        std::string path = "$.converters[" + std::to_string(i) + "]";
        const json& jc = convs[i];
        ConverterSpec c;
        c.node = require(jc, "node", path).get<std::string>();
        if (!seen.count(c.node))
            throw ConfigError(path + ".node: undeclared node '" + c.node + "'");
        if (by_node.count(c.node))
            throw ConfigError(path + ": duplicate converter for node '" + c.node + "'");
        std::string mode = require(jc, "mode", path).get<std::string>();
        if (mode == "droop") c.mode = ConverterMode::Droop;
        else if (mode == "fixed-power") c.mode = ConverterMode::FixedPower;
        else throw ConfigError(path + ".mode: expected 'droop' or 'fixed-power', got '" + mode + "'");
        c.c_sm = quantity(require(jc, "c_sm", path), Dim::Farad, path + ".c_sm");
        c.n_sm = require(jc, "n_sm", path).get<int>();
        c.l_arm = quantity(require(jc, "l_arm", path), Dim::Henry, path + ".l_arm");
        c.r_arm = quantity(require(jc, "r_arm", path), Dim::Ohm, path + ".r_arm");
        c.l0 = quantity(require(jc, "l0", path), Dim::Henry, path + ".l0");
        c.r0 = quantity(require(jc, "r0", path), Dim::Ohm, path + ".r0");
        c.l_s = quantity(require(jc, "l_s", path), Dim::Henry, path + ".l_s");
        c.c_g = quantity(require(jc, "c_g", path), Dim::Farad, path + ".c_g");
        c.v_dc_nom = quantity(require(jc, "v_dc_nom", path), Dim::Volt, path + ".v_dc_nom");
        const json& pcc = require(jc, "pcc_voltage_dq", path);
        if (!pcc.is_array() || pcc.size() != 2)
            throw ConfigError(path + ".pcc_voltage_dq: expected [d, q]");
        c.pcc_d = quantity(pcc[0], Dim::Volt, path + ".pcc_voltage_dq[0]");
        c.pcc_q = quantity(pcc[1], Dim::Volt, path + ".pcc_voltage_dq[1]");
        c.omega0 = quantity(require(jc, "omega0", path), Dim::RadPerSec, path + ".omega0");
        c.p_set = quantity(require(jc, "p_set", path), Dim::Watt, path + ".p_set");
        c.q_set = quantity(require(jc, "q_set", path), Dim::Var, path + ".q_set");
        if (jc.contains("droop")) {
            const json& jd = jc["droop"];
            DroopParams d;
            d.k = quantity(require(jd, "k", path + ".droop"), Dim::WattPerVolt, path + ".droop.k");
            d.v_dc_ref = quantity(require(jd, "v_dc_ref", path + ".droop"), Dim::Volt,
                                  path + ".droop.v_dc_ref");
            d.p0 = quantity(require(jd, "p0", path + ".droop"), Dim::Watt, path + ".droop.p0");
            c.droop = d;
        }
        by_node.emplace(c.node, std::move(c));
    }
    for (const auto& id : cfg.nodes) {
        auto it = by_node.find(id);
        if (it == by_node.end())
            throw ConfigError("$.converters: no converter declared for node '" + id + "'");
        cfg.converters.push_back(std::move(it->second));
    }

    const json& gains = require(doc, "gains", "$");
    if (!gains.is_array()) throw ConfigError("$.gains: expected an array");
    std::map<std::string, ControllerGains> gains_by_node;
    for (size_t i = 0; i < gains.size(); ++i) {
        std::string path = "$.gains[" + std::to_string(i) + "]";
        const json& jg = gains[i];
        std::string node = require(jg, "node", path).get<std::string>();
        if (!seen.count(node))
            throw ConfigError(path + ".node: undeclared node '" + node + "'");
        if (gains_by_node.count(node))
            throw ConfigError(path + ": duplicate gains for node '" + node + "'");
        ControllerGains g;
        g.kp_i = require(jg, "kp_i", path).get<double>();
        g.ki_i = require(jg, "ki_i", path).get<double>();
        g.kp_pq = require(jg, "kp_pq", path).get<double>();
        g.ki_pq = require(jg, "ki_pq", path).get<double>();
        g.ff_pcc_voltage = get_flag(jg, "ff_pcc_voltage", true);
        g.ff_cross_coupling = get_flag(jg, "ff_cross_coupling", true);
        if (jg.contains("l_ff"))
            g.l_ff = quantity(jg["l_ff"], Dim::Henry, path + ".l_ff");
        gains_by_node.emplace(node, g);
    }
    for (const auto& id : cfg.nodes) {
        auto it = gains_by_node.find(id);
        if (it == gains_by_node.end())
            throw ConfigError("$.gains: no gains declared for node '" + id + "'");
        cfg.gains.push_back(it->second);
    }

    if (doc.contains("scenario")) {
        const json& sc = doc["scenario"];
        if (!sc.is_array()) throw ConfigError("$.scenario: expected an array");
        for (size_t i = 0; i < sc.size(); ++i) {
            std::string path = "$.scenario[" + std::to_string(i) + "]";
            const json& je = sc[i];
            ScenarioEvent ev;
            ev.time = quantity(require(je, "time", path), Dim::Second, path + ".time");
            ev.target = require(je, "target", path).get<std::string>();
            ev.value = quantity(require(je, "value", path), scenario_dim(ev.target, path),
                                path + ".value");
            ev.compensate_p0 = get_flag(je, "compensate_p0", true);
            cfg.scenario.push_back(std::move(ev));
        }
        std::stable_sort(cfg.scenario.begin(), cfg.scenario.end(),
                         [](const ScenarioEvent& a, const ScenarioEvent& b) { return a.time < b.time; });
    }
    return cfg;
}

SystemConfig parse_config_text(const std::string& text) {
    json doc;
    try {
        doc = json::parse(text, nullptr, true, /*ignore_comments=*/true);
    } catch (const json::exception& e) {
        throw ConfigError(std::string("JSON parse failure: ") + e.what());
    }
    return parse_config(doc);
}

SystemConfig parse_config_file(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw ConfigError("cannot open config file '" + path + "'");
    std::stringstream ss;
    ss << in.rdbuf();
    return parse_config_text(ss.str());
}

ValidatedConfig validate(const SystemConfig& cfg) {
    ValidatedConfig v;
    v.sys = cfg;
    v.n_nodes = static_cast<int>(cfg.nodes.size());
    v.n_lines = static_cast<int>(cfg.lines.size());
    v.state_dim = 15 * v.n_nodes + 3 * v.n_lines;

    for (size_t i = 0; i < cfg.lines.size(); ++i) {
        const LineSpec& l = cfg.lines[i];
        std::string path = "$.lines[" + std::to_string(i) + "]";
        if (!(l.length_km > 0)) throw ConfigError(path + ": length must be > 0");
        if (l.r_per_km < 0) throw ConfigError(path + ": r_per_km must be >= 0");
        if (!(l.l_per_km > 0)) throw ConfigError(path + ": l_per_km must be > 0");
        if (!(l.c_per_km > 0)) throw ConfigError(path + ": c_per_km must be > 0");
    }

    for (size_t i = 0; i < cfg.converters.size(); ++i) {
        const ConverterSpec& c = cfg.converters[i];
        std::string path = "$.converters." + c.node;
        if (!(c.c_sm > 0 && c.l_arm > 0 && c.c_g > 0 && c.l_s > 0 && c.v_dc_nom > 0))
            throw ConfigError(path + ": c_sm, l_arm, c_g, l_s, v_dc_nom must be > 0");
        if (c.r_arm < 0 || c.r0 < 0 || c.l0 < 0)
            throw ConfigError(path + ": r_arm, r0, l0 must be >= 0");
        if (c.n_sm < 1) throw ConfigError(path + ": n_sm must be >= 1");
        if (!(c.omega0 > 0)) throw ConfigError(path + ": omega0 must be > 0");
        bool has_droop = c.droop.has_value();
        if (has_droop != (c.mode == ConverterMode::Droop))
            throw ConfigError(path + ": droop block present iff mode is 'droop'");
        if (has_droop) {
            if (!(c.droop->v_dc_ref > 0))
                throw ConfigError(path + ".droop: v_dc_ref must be > 0");
            v.droop_nodes.push_back(static_cast<int>(i));
        }
        const ControllerGains& g = cfg.gains[i];
        if (g.kp_i < 0 || g.ki_i <= 0 || g.kp_pq < 0 || g.ki_pq <= 0)
            throw ConfigError("$.gains." + c.node +
                              ": need kp_i, kp_pq >= 0 and ki_i, ki_pq > 0");
    }
    if (v.droop_nodes.empty())
        throw ConfigError("$.converters: at least one converter must run droop control");

    // Connectivity over the line graph.
    std::vector<std::vector<int>> adj(v.n_nodes);
    for (const LineSpec& l : cfg.lines) {
        int a = v.sys.node_index(l.from_node);
        int b = v.sys.node_index(l.to_node);
        adj[a].push_back(b);
        adj[b].push_back(a);
    }
    std::vector<char> mark(v.n_nodes, 0);
    std::vector<int> stack{0};
    mark[0] = 1;
    int reached = 1;
    while (!stack.empty()) {
        int u = stack.back();
        stack.pop_back();
        for (int w : adj[u])
            if (!mark[w]) {
                mark[w] = 1;
                ++reached;
                stack.push_back(w);
            }
    }
    if (reached != v.n_nodes)
        throw ConfigError("$.lines: line graph is disconnected (" + std::to_string(reached) +
                          " of " + std::to_string(v.n_nodes) + " nodes reachable from '" +
                          cfg.nodes[0] + "')");
    return v;
}

nlohmann::json serialize_normalized(const SystemConfig& cfg) {
    json doc;
    doc["nodes"] = cfg.nodes;
    doc["lines"] = json::array();
    for (const LineSpec& l : cfg.lines) {
        doc["lines"].push_back({{"from", l.from_node},
                                {"to", l.to_node},
                                {"length", l.length_km},
                                {"r_per_km", l.r_per_km},
                                {"l_per_km", l.l_per_km},
                                {"c_per_km", l.c_per_km}});
    }
    doc["converters"] = json::array();
    for (const ConverterSpec& c : cfg.converters) {
        json jc = {{"node", c.node},
                   {"mode", c.mode == ConverterMode::Droop ? "droop" : "fixed-power"},
                   {"c_sm", c.c_sm},
                   {"n_sm", c.n_sm},
                   {"l_arm", c.l_arm},
                   {"r_arm", c.r_arm},
                   {"l0", c.l0},
                   {"r0", c.r0},
                   {"l_s", c.l_s},
                   {"c_g", c.c_g},
                   {"v_dc_nom", c.v_dc_nom},
                   {"pcc_voltage_dq", {c.pcc_d, c.pcc_q}},
                   {"omega0", c.omega0},
                   {"p_set", c.p_set},
                   {"q_set", c.q_set}};
        if (c.droop)
            jc["droop"] = {{"k", c.droop->k}, {"v_dc_ref", c.droop->v_dc_ref}, {"p0", c.droop->p0}};
        doc["converters"].push_back(std::move(jc));
    }
    doc["gains"] = json::array();
    for (size_t i = 0; i < cfg.gains.size(); ++i) {
        const ControllerGains& g = cfg.gains[i];
        json jg = {{"node", cfg.nodes[i]},
                   {"kp_i", g.kp_i},
                   {"ki_i", g.ki_i},
                   {"kp_pq", g.kp_pq},
                   {"ki_pq", g.ki_pq},
                   {"ff_pcc_voltage", g.ff_pcc_voltage},
                   {"ff_cross_coupling", g.ff_cross_coupling}};
        if (g.l_ff) jg["l_ff"] = *g.l_ff;
        doc["gains"].push_back(std::move(jg));
    }
    if (!cfg.scenario.empty()) {
        doc["scenario"] = json::array();
        for (const ScenarioEvent& e : cfg.scenario)
            doc["scenario"].push_back({{"time", e.time},
                                       {"target", e.target},
                                       {"value", e.value},
                                       {"compensate_p0", e.compensate_p0}});
    }
    return doc;
}

std::string config_hash(const SystemConfig& cfg) {
    std::string s = serialize_normalized(cfg).dump();
    std::uint64_t h = 14695981039346656037ull;
    for (unsigned char c : s) {
        h ^= c;
        h *= 1099511628211ull;
    }
    static const char* hex = "0123456789abcdef";
    std::string out(16, '0');
    for (int i = 15; i >= 0; --i) {
        out[i] = hex[h & 0xf];
        h >>= 4;
    }
    return out;
}

void apply_override(nlohmann::json& doc, const std::string& assignment) {
    auto eq = assignment.find('=');
    if (eq == std::string::npos)
        throw ConfigError("override '" + assignment + "' is not of the form path=value");
    std::string path = assignment.substr(0, eq);
    std::string value = assignment.substr(eq + 1);

    std::vector<std::string> tokens;
    std::stringstream ss(path);
    std::string tok;
    while (std::getline(ss, tok, '.')) tokens.push_back(tok);
    if (tokens.empty()) throw ConfigError("override '" + assignment + "' has an empty path");

    json* cur = &doc;
    for (const std::string& t : tokens) {
        if (cur->is_array()) {
            // Numeric index, or named lookup on "node"/"from" keys.
            bool numeric = !t.empty() && std::all_of(t.begin(), t.end(), ::isdigit);
            if (numeric) {
                size_t idx = std::stoul(t);
                if (idx >= cur->size())
                    throw ConfigError("override path '" + path + "': index " + t + " out of range");
                cur = &(*cur)[idx];
                continue;
            }
            json* found = nullptr;
            for (auto& el : *cur) {
                if (el.is_object() && el.contains("node") && el["node"] == t) { found = &el; break; }
            }
            if (!found)
                throw ConfigError("override path '" + path + "': no element named '" + t + "'");
            cur = found;
        } else if (cur->is_object()) {
            if (!cur->contains(t))
                throw ConfigError("override path '" + path + "': no key '" + t + "'");
            cur = &(*cur)[t];
        } else {
            throw ConfigError("override path '" + path + "': cannot descend into scalar");
        }
    }

    json parsed;
    try {
        parsed = json::parse(value);
    } catch (const json::exception&) {
        parsed = value; // bare string
    }
    if (cur->is_object() && cur->contains("value") && cur->contains("unit")) {
        if (!parsed.is_number())
            throw ConfigError("override '" + assignment + "': quantity expects a number");
        (*cur)["value"] = parsed;
    } else {
        *cur = parsed;
    }
}

CaseSlopes parse_case_file(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw ConfigError("cannot open case file '" + path + "'");
    json doc;
    try {
        doc = json::parse(in, nullptr, true, true);
    } catch (const json::exception& e) {
        throw ConfigError(std::string("case file parse failure: ") + e.what());
    }
    CaseSlopes cs;
    cs.name = doc.value("name", path);
    const json& slopes = require(doc, "slopes", "$");
    if (!slopes.is_object() || slopes.empty())
        throw ConfigError("$.slopes: expected a non-empty object of node -> slope");
    for (auto it = slopes.begin(); it != slopes.end(); ++it)
        cs.slopes.emplace_back(it.key(),
                               quantity(it.value(), Dim::WattPerVolt, "$.slopes." + it.key()));
    return cs;
}

void apply_case(SystemConfig& cfg, const CaseSlopes& cs, const std::vector<double>* v_dc_at_op) {
    for (const auto& [node, k_new] : cs.slopes) {
        int idx = cfg.node_index(node);
        ConverterSpec& c = cfg.converters[idx];
        if (!c.droop)
            throw ConfigError("case '" + cs.name + "': node '" + node + "' has no droop control");
        double k_old = c.droop->k;
        c.droop->k = k_new;
        if (v_dc_at_op) {
            // Keep P_ref(v*) fixed: p0' = p0 + (k' - k)(v_ref - v*).
            double v_star = (*v_dc_at_op)[idx];
            c.droop->p0 += (k_new - k_old) * (c.droop->v_dc_ref - v_star);
        }
    }
}

} // namespace mtdc
