#include "mtdc/control.hpp"

namespace mtdc {

std::pair<double, double> pcc_power(double v_d, double v_q, double i_d, double i_q) {
    return {1.5 * (v_d * i_d + v_q * i_q), 1.5 * (v_q * i_d - v_d * i_q)};
}

double droop_reference(const DroopParams& d, double v_dc) {
    return -d.k * (d.v_dc_ref - v_dc) + d.p0;
}

double droop_retune_p0(const DroopParams& d, double k_new, double v_dc_star) {
    return d.p0 + (k_new - d.k) * (d.v_dc_ref - v_dc_star);
}

ControllerModel controller_model(const ControllerGains& g, const ConverterSpec& conv) {
    const double w = conv.omega0;
    const double l_ff = g.l_ff.value_or(0.5 * conv.l_arm + conv.l0);
    const double wlff = g.ff_cross_coupling ? w * l_ff : 0.0;

    // Power measured through the fixed PCC voltage: P = pvd i_d + pvq i_q,
    // Q = qvd i_d + qvq i_q.
    const double pvd = 1.5 * conv.pcc_d, pvq = 1.5 * conv.pcc_q;
    const double qvd = 1.5 * conv.pcc_q, qvq = -1.5 * conv.pcc_d;

    ControllerModel m;
    m.A2 = Mat::Zero(kCtrlStates, kCtrlStates);
    m.A2(0, 2) = g.ki_pq; // dP integrator feeds the d current error
    m.A2(1, 3) = g.ki_pq;

    // The q outer loop acts on the negated error: with Q = 3/2 (vq id - vd iq)
    // a larger i_q lowers Q, so i_q_ref = kp_pq (Q - Q_ref) + ki_pq dQ and
    // dQ' = Q - Q_ref close the loop with negative feedback.
    m.B2 = Mat::Zero(kCtrlStates, kCtrlInputs);
    // di_d' = i_d_ref - i_d,  i_d_ref = kp_pq (P_ref - P) + ki_pq dP
    m.B2(0, 0) = g.kp_pq;
    m.B2(0, 2) = -g.kp_pq * pvd - 1.0;
    m.B2(0, 3) = -g.kp_pq * pvq;
    m.B2(1, 1) = -g.kp_pq;
    m.B2(1, 2) = g.kp_pq * qvd;
    m.B2(1, 3) = g.kp_pq * qvq - 1.0;
    // dP' = P_ref - P, dQ' = Q - Q_ref
    m.B2(2, 0) = 1.0;
    m.B2(2, 2) = -pvd;
    m.B2(2, 3) = -pvq;
    m.B2(3, 1) = -1.0;
    m.B2(3, 2) = qvd;
    m.B2(3, 3) = qvq;

    // vref_d = -(ffv vpcc_d - wlff i_q + kp_i (i_d_ref - i_d) + ki_i di_d)
    // vref_q = -(ffv vpcc_q + wlff i_d + kp_i (i_q_ref - i_q) + ki_i di_q)
    m.C2 = Mat::Zero(kCtrlOutputs, kCtrlStates);
    m.C2(0, 0) = -g.ki_i;
    m.C2(0, 2) = -g.kp_i * g.ki_pq;
    m.C2(1, 1) = -g.ki_i;
    m.C2(1, 3) = -g.kp_i * g.ki_pq;

    m.D2 = Mat::Zero(kCtrlOutputs, kCtrlInputs);
    m.D2(0, 0) = -g.kp_i * g.kp_pq;
    m.D2(0, 2) = g.kp_i * (g.kp_pq * pvd + 1.0);
    m.D2(0, 3) = g.kp_i * g.kp_pq * pvq + wlff;
    m.D2(1, 1) = g.kp_i * g.kp_pq;
    m.D2(1, 2) = -g.kp_i * g.kp_pq * qvd - wlff;
    m.D2(1, 3) = g.kp_i * (1.0 - g.kp_pq * qvq);

    m.y0 = Vec::Zero(kCtrlOutputs);
    if (g.ff_pcc_voltage) {
        m.y0(0) = -conv.pcc_d;
        m.y0(1) = -conv.pcc_q;
    }
    return m;
}

Mat droop_gain_matrix(const ValidatedConfig& cfg) {
    Mat k = Mat::Zero(cfg.n_nodes, cfg.n_nodes);
    for (int idx : cfg.droop_nodes) k(idx, idx) = cfg.sys.converters[idx].droop->k;
    return k;
}

} // namespace mtdc
