#pragma once

#include "mtdc/assembly.hpp"
#include "mtdc/system.hpp"

#include <string>
#include <vector>

namespace mtdc {

struct OperatingPoint {
    Vec x;                    // full state, SystemModel ordering
    double residual_norm = 0; // scaled inf-norm of the derivative at x
    Setpoints setpoints;
};

struct EquilibriumOptions {
    int max_newton_iters = 60;
    double tol = 1e-8;             // scaled inf-norm target
    double voltage_band = 0.2;     // sanity band around nominal v_dc
    bool allow_time_march_fallback = true;
    double march_horizon = 5.0;    // s
};

OperatingPoint solve_equilibrium(const SystemModel& sys,
                                 const EquilibriumOptions& opts = {});

/// Newton from a caller-supplied initial state (multi-start checks,
/// polish after time-marching).
OperatingPoint solve_equilibrium_from(const SystemModel& sys, const Vec& x0,
                                      const EquilibriumOptions& opts = {});

struct SimOptions {
    double t_end = 3.0;
    double dt = 50e-6;
    int store_stride = 10;
    bool linearized = false;
    double newton_tol = 1e-10;        // scaled step-size tolerance
    int max_newton_iters = 12;
    double overflow_guard = 1e5;      // |x|/scale beyond which we flag divergence
};

struct Trajectory {
    Vec time;
    Mat states;                     // dim x samples
    Mat channels;                   // 3n x samples: P, Q, v_dc per bus
    std::vector<std::string> state_labels;
    std::vector<std::string> channel_labels;
    bool diverged = false;
    double t_diverged = 0.0;
};

/// Implicit trapezoidal integration of the nonlinear model (or of its
/// linearization at the operating point) with scenario events applied at
/// their exact times. Droop-slope events retune p0 against the pre-step
/// terminal voltage unless the event disables compensation.
Trajectory simulate(const SystemModel& sys, const OperatingPoint& op,
                    const std::vector<ScenarioEvent>& scenario, const SimOptions& opts = {});

/// March until the scaled derivative stays below `quiet_tol` for
/// `quiet_hold` seconds; returns the end state.
struct MarchResult {
    Vec x;
    bool quiescent = false;
    double t_end = 0.0;
};
MarchResult time_march_to_quiescence(const SystemModel& sys, const Vec& x0,
                                     const Setpoints& sp, double horizon,
                                     double dt = 50e-6, double quiet_tol = 1e-6,
                                     double quiet_hold = 0.2);

// Per-phase arm-switching-function reference: the six-arm phase-domain
// model integrated directly, with the switching functions driven by a
// fixed dq voltage reference. Serves as the derivation oracle for the dq
// converter model.
struct AsfOptions {
    double t_end = 0.4;
    double dt = 10e-6;
};

struct AsfResult {
    MmcVec dq_estimate;           // harmonics extracted over the last cycle
    double switching_identity_err = 0.0; // max |S_p + S_n - 1| over samples
    double reconstruction_residual = 0.0; // relative RMS residual of the
                                          // dc/w0/2w0 decomposition
    Vec time;                     // stored last-cycle window
    Mat arm_states;               // 12 x samples: i_p, i_n, v_p, v_n per phase
};

AsfResult asf_phase_reference(const MmcParams& p, const MmcInputVec& u_const,
                              const MmcVec& x0_dq, const AsfOptions& opts = {});

} // namespace mtdc
