#include "mtdc/system.hpp"

namespace mtdc {

namespace {
const char* kX1Names[10] = {"i_dc", "i_d", "i_q", "i2_d", "i2_q",
                            "v_dc_int", "v1_d", "v1_q", "v2_d", "v2_q"};
const char* kX2Names[4] = {"int_id", "int_iq", "int_p", "int_q"};
} // namespace

std::vector<std::string> StateMap::labels(const std::vector<std::string>& node_ids,
                                          const std::vector<LineSpec>& lines) const {
    std::vector<std::string> out(dim());
    for (int s = 0; s < 10; ++s)
        for (int i = 0; i < n; ++i) out[x1(s, i)] = std::string(kX1Names[s]) + "." + node_ids[i];
    for (int s = 0; s < 4; ++s)
        for (int i = 0; i < n; ++i) out[x2(s, i)] = std::string(kX2Names[s]) + "." + node_ids[i];
    for (int l = 0; l < m; ++l) {
        std::string tag = lines[l].from_node + "-" + lines[l].to_node;
        out[x3_ialpha(l)] = "i_alpha." + tag;
        out[x3_ibeta(l)] = "i_beta." + tag;
        out[x3_vt(l)] = "v_t." + tag;
    }
    for (int i = 0; i < n; ++i) out[x3_vdc(i)] = "v_dc." + node_ids[i];
    return out;
}

SystemModel build_system(const ValidatedConfig& cfg) {
    SystemModel sys;
    sys.cfg = cfg;
    sys.map.n = cfg.n_nodes;
    sys.map.m = cfg.n_lines;
    sys.incidence = build_incidence(cfg);
    sys.net = assemble_network(sys.incidence, cfg);
    for (int i = 0; i < cfg.n_nodes; ++i) {
        sys.units.push_back(MmcParams::from_spec(cfg.sys.converters[i]));
        sys.ctrls.push_back(controller_model(cfg.sys.gains[i], cfg.sys.converters[i]));
        sys.nominal.p_set.push_back(cfg.sys.converters[i].p_set);
        sys.nominal.q_set.push_back(cfg.sys.converters[i].q_set);
        sys.nominal.droop.push_back(cfg.sys.converters[i].droop.value_or(DroopParams{}));
        sys.nominal.has_droop.push_back(cfg.sys.converters[i].droop.has_value());
    }
    return sys;
}

Vec power_references(const SystemModel& sys, const Vec& x, const Setpoints& sp) {
    const StateMap& map = sys.map;
    Vec pref(map.n);
    for (int i = 0; i < map.n; ++i) {
        pref(i) = sp.has_droop[i] ? droop_reference(sp.droop[i], x(map.x3_vdc(i)))
                                  : sp.p_set[i];
    }
    return pref;
}

MmcInputVec SystemModel::unit_input(const Vec& x, const Setpoints& sp, int unit) const {
    const double v_dc = x(map.x3_vdc(unit));
    double p_ref = sp.has_droop[unit] ? droop_reference(sp.droop[unit], v_dc) : sp.p_set[unit];

    Eigen::Vector4d u2(p_ref, sp.q_set[unit], x(map.x1(MMC_ID, unit)), x(map.x1(MMC_IQ, unit)));
    Eigen::Vector4d x2;
    for (int s = 0; s < 4; ++s) x2(s) = x(map.x2(s, unit));
    Vec y2 = ctrls[unit].C2 * x2 + ctrls[unit].D2 * u2 + ctrls[unit].y0;

    return MmcInputVec(v_dc, y2(0), y2(1));
}

Vec SystemModel::derivative(const Vec& x, const Setpoints& sp) const {
    Vec dx(map.dim());

    Vec i_dc(map.n);
    for (int i = 0; i < map.n; ++i) i_dc(i) = x(map.x1(MMC_IDC, i));

    for (int i = 0; i < map.n; ++i) {
        MmcInputVec u1 = unit_input(x, sp, i);
        MmcVec x1;
        for (int s = 0; s < 10; ++s) x1(s) = x(map.x1(s, i));
        MmcVec f1 = mmc_derivative(x1, u1, units[i]);
        for (int s = 0; s < 10; ++s) dx(map.x1(s, i)) = f1(s);

        double p_ref = sp.has_droop[i] ? droop_reference(sp.droop[i], u1(0)) : sp.p_set[i];
        Eigen::Vector4d u2(p_ref, sp.q_set[i], x1(MMC_ID), x1(MMC_IQ));
        Eigen::Vector4d x2;
        for (int s = 0; s < 4; ++s) x2(s) = x(map.x2(s, i));
        Eigen::Vector4d f2 = ctrls[i].A2 * x2 + ctrls[i].B2 * u2;
        for (int s = 0; s < 4; ++s) dx(map.x2(s, i)) = f2(s);
    }

    Vec x3 = x.segment(map.x3_offset(), 3 * map.m + map.n);
    dx.segment(map.x3_offset(), 3 * map.m + map.n) = net.A3 * x3 + net.B3 * i_dc;
    return dx;
}

Vec SystemModel::state_scale() const {
    Vec scale(map.dim());
    for (int i = 0; i < map.n; ++i) {
        const MmcParams& p = units[i];
        const ConverterSpec& c = cfg.sys.converters[i];
        double v_nom = c.droop ? c.droop->v_dc_ref : 0.5 * p.v_mod_base;
        double p_nom = std::max(std::abs(c.p_set),
                                c.droop ? std::abs(c.droop->p0) : 0.0);
        if (p_nom <= 0.0) p_nom = 1e8;
        double i_ac = p_nom / (1.5 * std::max(1.0, std::hypot(p.pcc_d, p.pcc_q)));
        double i_dc = p_nom / (2.0 * v_nom);
        double i_scale = std::max({i_ac, i_dc, 1.0});
        for (int s : {MMC_IDC, MMC_ID, MMC_IQ, MMC_I2D, MMC_I2Q})
            scale(map.x1(s, i)) = i_scale;
        for (int s : {MMC_VDC_INT, MMC_V1D, MMC_V1Q, MMC_V2D, MMC_V2Q})
            scale(map.x1(s, i)) = p.v_mod_base;
        // Integrator outputs feed through ki; scale back to signal level.
        const ControllerGains& g = cfg.sys.gains[i];
        scale(map.x2(0, i)) = scale(map.x2(1, i)) =
            std::max(1.0, std::hypot(p.pcc_d, p.pcc_q)) / std::max(g.ki_i, 1e-12);
        scale(map.x2(2, i)) = scale(map.x2(3, i)) = i_scale / std::max(g.ki_pq, 1e-12);
        scale(map.x3_vdc(i)) = v_nom;
    }
    double v_scale = 0.0, i_scale = 0.0;
    for (int i = 0; i < map.n; ++i) {
        v_scale = std::max(v_scale, scale(map.x3_vdc(i)));
        i_scale = std::max(i_scale, scale(map.x1(MMC_IDC, i)));
    }
    for (int l = 0; l < map.m; ++l) {
        scale(map.x3_ialpha(l)) = i_scale;
        scale(map.x3_ibeta(l)) = i_scale;
        scale(map.x3_vt(l)) = v_scale;
    }
    return scale;
}

Vec SystemModel::droop_slopes() const {
    Vec k(n_droop());
    for (size_t j = 0; j < cfg.droop_nodes.size(); ++j)
        k(j) = cfg.sys.converters[cfg.droop_nodes[j]].droop->k;
    return k;
}

} // namespace mtdc
