#pragma once

#include "mtdc/config.hpp"
#include "mtdc/control.hpp"
#include "mtdc/converter.hpp"
#include "mtdc/network.hpp"

#include <string>
#include <vector>

namespace mtdc {

/// Global state layout. MMC and controller states are grouped by signal
/// (all i_dc first, then all i_d, ...), so the selector matrices of the
/// assembly are literal [0 .. I .. 0] blocks. The network block keeps its
/// own [i_alpha, i_beta, v_T, v_dc] order. Dimension 15 n + 3 m.
struct StateMap {
    int n = 0; // converters
    int m = 0; // lines

    int dim() const { return 15 * n + 3 * m; }
    int x1_offset() const { return 0; }
    int x2_offset() const { return 10 * n; }
    int x3_offset() const { return 14 * n; }

    int x1(int signal, int unit) const { return signal * n + unit; }
    int x2(int signal, int unit) const { return x2_offset() + signal * n + unit; }
    int x3_ialpha(int line) const { return x3_offset() + line; }
    int x3_ibeta(int line) const { return x3_offset() + m + line; }
    int x3_vt(int line) const { return x3_offset() + 2 * m + line; }
    int x3_vdc(int node) const { return x3_offset() + 3 * m + node; }

    /// "<signal>.<unit id>" labels in global order, for CSV legends.
    std::vector<std::string> labels(const std::vector<std::string>& node_ids,
                                    const std::vector<LineSpec>& lines) const;
};

/// Live setpoints, mutated by scenario events during simulation.
struct Setpoints {
    std::vector<double> p_set;   // W, fixed-power command (unused for droop units)
    std::vector<double> q_set;   // var
    std::vector<DroopParams> droop; // valid where has_droop
    std::vector<char> has_droop;
};

/// Everything needed to evaluate the closed-loop nonlinear model and its
/// analytic Jacobian blocks: per-unit MMC parameters, controller
/// realizations, and the dc network.
struct SystemModel {
    ValidatedConfig cfg;
    StateMap map;
    Incidence incidence;
    NetworkModel net;
    std::vector<MmcParams> units;
    std::vector<ControllerModel> ctrls;
    Setpoints nominal;

    int n_droop() const { return static_cast<int>(cfg.droop_nodes.size()); }

    /// x' = F(x) for the whole grid under the given setpoints.
    Vec derivative(const Vec& x, const Setpoints& sp) const;

    /// Per-unit MMC inputs [v_dc, vref_d, vref_q] implied by the global
    /// state (droop law, controller output).
    MmcInputVec unit_input(const Vec& x, const Setpoints& sp, int unit) const;

    /// Per-state scale used for residual norms and Newton convergence.
    Vec state_scale() const;

    /// Slopes at the droop nodes, in droop-axis order.
    Vec droop_slopes() const;
};

SystemModel build_system(const ValidatedConfig& cfg);

/// P_ref of every converter (droop law or fixed command) at state x.
Vec power_references(const SystemModel& sys, const Vec& x, const Setpoints& sp);

} // namespace mtdc
