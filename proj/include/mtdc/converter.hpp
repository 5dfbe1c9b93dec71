#pragma once

#include "mtdc/config.hpp"
#include "mtdc/types.hpp"

#include <array>

namespace mtdc {

// 10-state dq-frame MMC model obtained by harmonic balance of the
// arm-switching-function equations, keeping the dc, fundamental and
// second-harmonic components. The circulating (second-harmonic) frame is
// negative-sequence, rotating at -2*omega0.
//
// State order:  [i_dc, i_d, i_q, i2_d, i2_q, v_dc_int, v1_d, v1_q, v2_d, v2_q]
// Input order:  [v_dc_term, vref_d, vref_q]
//
// The model is bilinear, x' = A10 x + g(x) u + c, with g affine in x and c
// carrying the constant PCC-source forcing.

inline constexpr int kMmcStates = 10;
inline constexpr int kMmcInputs = 3;

enum MmcState : int {
    MMC_IDC = 0, MMC_ID, MMC_IQ, MMC_I2D, MMC_I2Q,
    MMC_VDC_INT, MMC_V1D, MMC_V1Q, MMC_V2D, MMC_V2Q
};

struct MmcParams {
    double c_sm = 0.0;
    int n_sm = 1;
    double l_arm = 0.0;
    double r_arm = 0.0;
    double l0 = 0.0;
    double r0 = 0.0;
    double v_mod_base = 0.0; // Vdc-tilde, the modulation normalization
    double omega0 = 0.0;
    double pcc_d = 0.0;
    double pcc_q = 0.0;

    double c_eq() const { return c_sm / n_sm; }       // arm stack C_SM/N
    double l1() const { return l_arm + 2.0 * l0; }    // series L of the ac loop
    double r1() const { return r_arm + 2.0 * r0; }

    static MmcParams from_spec(const ConverterSpec& c);
};

struct MmcLinearization {
    Mat A1; // 10x10, A10 + d[g(x)u]/dx at the expansion point
    Mat B1; // 10x3,  g(x*)
};

/// dc and fundamental dq coordinates of the upper-arm switching function
/// S_p; the lower arm follows from S_n = 1 - S_p.
struct SwitchingComponents {
    double dc;   // 1/2
    double d;    // vref_d / v_mod_base
    double q;    // vref_q / v_mod_base
};
SwitchingComponents switching_components(double vref_d, double vref_q, double v_mod_base);

using MmcVec = Eigen::Matrix<double, kMmcStates, 1>;
using MmcInputVec = Eigen::Matrix<double, kMmcInputs, 1>;

MmcVec mmc_derivative(const MmcVec& x, const MmcInputVec& u, const MmcParams& p);
MmcLinearization mmc_linearize(const MmcVec& x, const MmcInputVec& u, const MmcParams& p);

/// Pieces of the bilinear structure, exposed for tests and the
/// fixed-input steady-state solve.
Mat mmc_a10(const MmcParams& p);
Mat mmc_g(const MmcVec& x, const MmcParams& p);          // 10x3
Mat mmc_bilinear_xjac(const MmcInputVec& u, const MmcParams& p); // 10x10, d[g(x)u]/dx
MmcVec mmc_constant(const MmcParams& p);

/// With u held fixed the model is linear in x; returns the unique steady
/// state of x' = [A10 + d(g u)/dx] x + g0 u + c.
MmcVec mmc_fixed_input_steady_state(const MmcInputVec& u, const MmcParams& p);

// Phase-domain reconstruction of the truncated harmonic series, used by the
// arm-switching-function reference oracle. Phase offsets are 0, -2pi/3,
// +2pi/3 for j = 0, 1, 2.
struct ArmWaveforms {
    std::array<double, 3> i_p, i_n; // per-phase upper/lower arm currents
    std::array<double, 3> v_p, v_n; // per-phase arm capacitor sum voltages
    std::array<double, 3> i_ac;     // PCC phase currents
    std::array<double, 3> s_p, s_n; // switching functions
};
ArmWaveforms reconstruct_phases(const MmcVec& x, double vref_d, double vref_q,
                                const MmcParams& p, double t);

/// Balanced three-phase PCC source voltages at time t.
std::array<double, 3> pcc_phase_voltages(const MmcParams& p, double t);

} // namespace mtdc
