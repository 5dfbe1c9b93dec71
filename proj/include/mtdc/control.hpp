#pragma once

#include "mtdc/config.hpp"
#include "mtdc/types.hpp"

namespace mtdc {

// Cascaded dq power/current controller in state-space form. Outer PI loops
// on (P_ref - P) and (Q_ref - Q) produce current references; inner PI loops
// on the current errors produce the voltage references, optionally with
// cross-coupling (omega0 * L_ff) and PCC-voltage feedforward. P and Q are
// measured through the fixed PCC source voltage, so the realization is
// exactly linear.
//
// State order:  [di_d, di_q, dP, dQ]   (integrator states)
// Input order:  [P_ref, Q_ref, i_d, i_q]
// Output order: [vref_d, vref_q]

inline constexpr int kCtrlStates = 4;
inline constexpr int kCtrlInputs = 4;
inline constexpr int kCtrlOutputs = 2;

struct ControllerModel {
    Mat A2; // 4x4
    Mat B2; // 4x4
    Mat C2; // 2x4
    Mat D2; // 2x4
    Vec y0; // constant output offset (PCC-voltage feedforward)
};

/// PCC active/reactive power, P = 3/2 (v_d i_d + v_q i_q),
/// Q = 3/2 (v_q i_d - v_d i_q).
std::pair<double, double> pcc_power(double v_d, double v_q, double i_d, double i_q);

/// P_ref = -k (v_dc_ref - v_dc) + p0.
double droop_reference(const DroopParams& d, double v_dc);

/// Retuned p0 that keeps P_ref(v_dc_star) unchanged when the slope moves
/// from d.k to k_new.
double droop_retune_p0(const DroopParams& d, double k_new, double v_dc_star);

ControllerModel controller_model(const ControllerGains& g, const ConverterSpec& conv);

/// n x n diagonal of droop slopes, zero rows for fixed-power converters.
Mat droop_gain_matrix(const ValidatedConfig& cfg);

} // namespace mtdc
