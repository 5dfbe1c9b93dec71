#include "mtdc/converter.hpp"

#include <Eigen/LU>
#include <cmath>
#include <numbers>

namespace mtdc {

MmcParams MmcParams::from_spec(const ConverterSpec& c) {
    MmcParams p;
    p.c_sm = c.c_sm;
    p.n_sm = c.n_sm;
    p.l_arm = c.l_arm;
    p.r_arm = c.r_arm;
    p.l0 = c.l0;
    p.r0 = c.r0;
    p.v_mod_base = c.v_dc_nom;
    p.omega0 = c.omega0;
    p.pcc_d = c.pcc_d;
    p.pcc_q = c.pcc_q;
    return p;
}

SwitchingComponents switching_components(double vref_d, double vref_q, double v_mod_base) {
    return {0.5, vref_d / v_mod_base, vref_q / v_mod_base};
}

MmcVec mmc_derivative(const MmcVec& x, const MmcInputVec& u, const MmcParams& p) {
    const double La = p.l_arm, Ra = p.r_arm;
    const double L1 = p.l1(), R1 = p.r1();
    const double Ce = p.c_eq();
    const double w = p.omega0;
    const double sd = u(1) / p.v_mod_base;
    const double sq = u(2) / p.v_mod_base;

    const double idc = x(MMC_IDC), id = x(MMC_ID), iq = x(MMC_IQ);
    const double i2d = x(MMC_I2D), i2q = x(MMC_I2Q);
    const double vdc = x(MMC_VDC_INT);
    const double v1d = x(MMC_V1D), v1q = x(MMC_V1Q);
    const double v2d = x(MMC_V2D), v2q = x(MMC_V2Q);

    MmcVec f;
    // Common-mode loop: dc and second-harmonic balance of the arm sum.
    f(MMC_IDC) = (1.5 / La) * (2.0 * u(0) - vdc - sd * v1d - sq * v1q) - (Ra / La) * idc;
    // AC loop: fundamental balance of the arm difference plus the PCC branch.
    f(MMC_ID) = w * iq + (-v1d - 2.0 * sd * vdc - (sd * v2d + sq * v2q) - R1 * id
                          - 2.0 * p.pcc_d) / L1;
    f(MMC_IQ) = -w * id + (-v1q - 2.0 * sq * vdc - (sd * v2q - sq * v2d) - R1 * iq
                           - 2.0 * p.pcc_q) / L1;
    f(MMC_I2D) = 2.0 * w * i2q + (-v2d - (sd * v1d - sq * v1q) - 2.0 * Ra * i2d) / (2.0 * La);
    f(MMC_I2Q) = -2.0 * w * i2d + (-v2q - (sd * v1q + sq * v1d) - 2.0 * Ra * i2q) / (2.0 * La);
    // Capacitor stack: harmonic balance of (C_SM/N) v' = S i.
    f(MMC_VDC_INT) = (idc / 3.0 + 0.5 * (sd * id + sq * iq)) / (2.0 * Ce);
    f(MMC_V1D) = w * v1q + (0.5 * id + (2.0 / 3.0) * idc * sd + sd * i2d + sq * i2q) / (2.0 * Ce);
    f(MMC_V1Q) = -w * v1d + (0.5 * iq + (2.0 / 3.0) * idc * sq + sd * i2q - sq * i2d) / (2.0 * Ce);
    f(MMC_V2D) = 2.0 * w * v2q + (i2d + 0.5 * (sd * id - sq * iq)) / (2.0 * Ce);
    f(MMC_V2Q) = -2.0 * w * v2d + (i2q + 0.5 * (sd * iq + sq * id)) / (2.0 * Ce);
    return f;
}

Mat mmc_a10(const MmcParams& p) {
    const double La = p.l_arm, Ra = p.r_arm;
    const double L1 = p.l1(), R1 = p.r1();
    const double Ce = p.c_eq();
    const double w = p.omega0;

    Mat A = Mat::Zero(kMmcStates, kMmcStates);
    A(MMC_IDC, MMC_IDC) = -Ra / La;
    A(MMC_IDC, MMC_VDC_INT) = -1.5 / La;
    A(MMC_ID, MMC_IQ) = w;
    A(MMC_ID, MMC_ID) = -R1 / L1;
    A(MMC_ID, MMC_V1D) = -1.0 / L1;
    A(MMC_IQ, MMC_ID) = -w;
    A(MMC_IQ, MMC_IQ) = -R1 / L1;
    A(MMC_IQ, MMC_V1Q) = -1.0 / L1;
    A(MMC_I2D, MMC_I2Q) = 2.0 * w;
    A(MMC_I2D, MMC_I2D) = -Ra / La;
    A(MMC_I2D, MMC_V2D) = -0.5 / La;
    A(MMC_I2Q, MMC_I2D) = -2.0 * w;
    A(MMC_I2Q, MMC_I2Q) = -Ra / La;
    A(MMC_I2Q, MMC_V2Q) = -0.5 / La;
    A(MMC_VDC_INT, MMC_IDC) = 1.0 / (6.0 * Ce);
    A(MMC_V1D, MMC_V1Q) = w;
    A(MMC_V1D, MMC_ID) = 0.25 / Ce;
    A(MMC_V1Q, MMC_V1D) = -w;
    A(MMC_V1Q, MMC_IQ) = 0.25 / Ce;
    A(MMC_V2D, MMC_V2Q) = 2.0 * w;
    A(MMC_V2D, MMC_I2D) = 0.5 / Ce;
    A(MMC_V2Q, MMC_V2D) = -2.0 * w;
    A(MMC_V2Q, MMC_I2Q) = 0.5 / Ce;
    return A;
}

Mat mmc_g(const MmcVec& x, const MmcParams& p) {
    const double La = p.l_arm;
    const double L1 = p.l1();
    const double Ce = p.c_eq();
    const double Vb = p.v_mod_base;

    Mat g = Mat::Zero(kMmcStates, kMmcInputs);
    g(MMC_IDC, 0) = 3.0 / La;
    g(MMC_IDC, 1) = -1.5 * x(MMC_V1D) / (La * Vb);
    g(MMC_IDC, 2) = -1.5 * x(MMC_V1Q) / (La * Vb);
    g(MMC_ID, 1) = -(2.0 * x(MMC_VDC_INT) + x(MMC_V2D)) / (L1 * Vb);
    g(MMC_ID, 2) = -x(MMC_V2Q) / (L1 * Vb);
    g(MMC_IQ, 1) = -x(MMC_V2Q) / (L1 * Vb);
    g(MMC_IQ, 2) = -(2.0 * x(MMC_VDC_INT) - x(MMC_V2D)) / (L1 * Vb);
    g(MMC_I2D, 1) = -x(MMC_V1D) / (2.0 * La * Vb);
    g(MMC_I2D, 2) = x(MMC_V1Q) / (2.0 * La * Vb);
    g(MMC_I2Q, 1) = -x(MMC_V1Q) / (2.0 * La * Vb);
    g(MMC_I2Q, 2) = -x(MMC_V1D) / (2.0 * La * Vb);
    g(MMC_VDC_INT, 1) = x(MMC_ID) / (4.0 * Ce * Vb);
    g(MMC_VDC_INT, 2) = x(MMC_IQ) / (4.0 * Ce * Vb);
    g(MMC_V1D, 1) = ((2.0 / 3.0) * x(MMC_IDC) + x(MMC_I2D)) / (2.0 * Ce * Vb);
    g(MMC_V1D, 2) = x(MMC_I2Q) / (2.0 * Ce * Vb);
    g(MMC_V1Q, 1) = x(MMC_I2Q) / (2.0 * Ce * Vb);
    g(MMC_V1Q, 2) = ((2.0 / 3.0) * x(MMC_IDC) - x(MMC_I2D)) / (2.0 * Ce * Vb);
    g(MMC_V2D, 1) = x(MMC_ID) / (4.0 * Ce * Vb);
    g(MMC_V2D, 2) = -x(MMC_IQ) / (4.0 * Ce * Vb);
    g(MMC_V2Q, 1) = x(MMC_IQ) / (4.0 * Ce * Vb);
    g(MMC_V2Q, 2) = x(MMC_ID) / (4.0 * Ce * Vb);
    return g;
}

Mat mmc_bilinear_xjac(const MmcInputVec& u, const MmcParams& p) {
    const double La = p.l_arm;
    const double L1 = p.l1();
    const double Ce = p.c_eq();
    const double sd = u(1) / p.v_mod_base;
    const double sq = u(2) / p.v_mod_base;

    Mat J = Mat::Zero(kMmcStates, kMmcStates);
    J(MMC_IDC, MMC_V1D) = -1.5 * sd / La;
    J(MMC_IDC, MMC_V1Q) = -1.5 * sq / La;
    J(MMC_ID, MMC_VDC_INT) = -2.0 * sd / L1;
    J(MMC_ID, MMC_V2D) = -sd / L1;
    J(MMC_ID, MMC_V2Q) = -sq / L1;
    J(MMC_IQ, MMC_VDC_INT) = -2.0 * sq / L1;
    J(MMC_IQ, MMC_V2D) = sq / L1;
    J(MMC_IQ, MMC_V2Q) = -sd / L1;
    J(MMC_I2D, MMC_V1D) = -sd / (2.0 * La);
    J(MMC_I2D, MMC_V1Q) = sq / (2.0 * La);
    J(MMC_I2Q, MMC_V1D) = -sq / (2.0 * La);
    J(MMC_I2Q, MMC_V1Q) = -sd / (2.0 * La);
    J(MMC_VDC_INT, MMC_ID) = sd / (4.0 * Ce);
    J(MMC_VDC_INT, MMC_IQ) = sq / (4.0 * Ce);
    J(MMC_V1D, MMC_IDC) = sd / (3.0 * Ce);
    J(MMC_V1D, MMC_I2D) = sd / (2.0 * Ce);
    J(MMC_V1D, MMC_I2Q) = sq / (2.0 * Ce);
    J(MMC_V1Q, MMC_IDC) = sq / (3.0 * Ce);
    J(MMC_V1Q, MMC_I2D) = -sq / (2.0 * Ce);
    J(MMC_V1Q, MMC_I2Q) = sd / (2.0 * Ce);
    J(MMC_V2D, MMC_ID) = sd / (4.0 * Ce);
    J(MMC_V2D, MMC_IQ) = -sq / (4.0 * Ce);
    J(MMC_V2Q, MMC_ID) = sq / (4.0 * Ce);
    J(MMC_V2Q, MMC_IQ) = sd / (4.0 * Ce);
    return J;
}

MmcVec mmc_constant(const MmcParams& p) {
    MmcVec c = MmcVec::Zero();
    c(MMC_ID) = -2.0 * p.pcc_d / p.l1();
    c(MMC_IQ) = -2.0 * p.pcc_q / p.l1();
    return c;
}

MmcLinearization mmc_linearize(const MmcVec& x, const MmcInputVec& u, const MmcParams& p) {
    MmcLinearization lin;
    lin.A1 = mmc_a10(p) + mmc_bilinear_xjac(u, p);
    lin.B1 = mmc_g(x, p);
    return lin;
}

MmcVec mmc_fixed_input_steady_state(const MmcInputVec& u, const MmcParams& p) {
    Mat A = mmc_a10(p) + mmc_bilinear_xjac(u, p);
    MmcVec b = mmc_g(MmcVec::Zero(), p) * u + mmc_constant(p);
    Eigen::PartialPivLU<Mat> lu(A);
    return -lu.solve(Mat(b));
}

std::array<double, 3> pcc_phase_voltages(const MmcParams& p, double t) {
    constexpr double third = 2.0 * std::numbers::pi / 3.0;
    std::array<double, 3> v;
    for (int j = 0; j < 3; ++j) {
        double th = p.omega0 * t - third * j;
        v[j] = p.pcc_d * std::cos(th) - p.pcc_q * std::sin(th);
    }
    return v;
}

ArmWaveforms reconstruct_phases(const MmcVec& x, double vref_d, double vref_q,
                                const MmcParams& p, double t) {
    constexpr double third = 2.0 * std::numbers::pi / 3.0;
    SwitchingComponents s = switching_components(vref_d, vref_q, p.v_mod_base);
    ArmWaveforms w;
    for (int j = 0; j < 3; ++j) {
        double th1 = p.omega0 * t - third * j;        // fundamental, positive sequence
        double th2 = 2.0 * p.omega0 * t + third * j;  // second harmonic, negative sequence
        double ij = x(MMC_ID) * std::cos(th1) - x(MMC_IQ) * std::sin(th1);
        double i2j = x(MMC_I2D) * std::cos(th2) - x(MMC_I2Q) * std::sin(th2);
        double v1j = x(MMC_V1D) * std::cos(th1) - x(MMC_V1Q) * std::sin(th1);
        double v2j = x(MMC_V2D) * std::cos(th2) - x(MMC_V2Q) * std::sin(th2);
        double sj = s.d * std::cos(th1) - s.q * std::sin(th1);
        w.i_p[j] = x(MMC_IDC) / 3.0 + 0.5 * ij + i2j;
        w.i_n[j] = x(MMC_IDC) / 3.0 - 0.5 * ij + i2j;
        w.v_p[j] = x(MMC_VDC_INT) + v1j + v2j;
        w.v_n[j] = x(MMC_VDC_INT) - v1j + v2j;
        w.i_ac[j] = ij;
        w.s_p[j] = s.dc + sj;
        w.s_n[j] = 1.0 - w.s_p[j];
    }
    return w;
}

} // namespace mtdc
