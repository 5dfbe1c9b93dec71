#include "mtdc/dynamics.hpp"

#include <Eigen/LU>
#include <algorithm>
#include <cmath>
#include <numbers>

namespace mtdc {

namespace {

double scaled_inf_norm(const Vec& v, const Vec& scale) {
    return (v.array() / scale.array()).abs().maxCoeff();
}

Vec flat_start(const SystemModel& sys) {
    Vec x = Vec::Zero(sys.map.dim());
    for (int i = 0; i < sys.map.n; ++i) {
        const ConverterSpec& c = sys.cfg.sys.converters[i];
        double v_dc = c.droop ? c.droop->v_dc_ref : 0.5 * c.v_dc_nom;
        x(sys.map.x3_vdc(i)) = v_dc;
        x(sys.map.x1(MMC_VDC_INT, i)) = 2.0 * v_dc;
    }
    double v_avg = 0.0;
    for (int i = 0; i < sys.map.n; ++i) v_avg += x(sys.map.x3_vdc(i));
    v_avg /= sys.map.n;
    for (int l = 0; l < sys.map.m; ++l) x(sys.map.x3_vt(l)) = v_avg;
    return x;
}

struct EventState {
    Setpoints sp;
    size_t next = 0;
};

/// Applies every event with time <= t; droop-slope steps retune p0 against
/// the live terminal voltage so the pre-step operating point is preserved.
bool apply_due_events(const SystemModel& sys, std::vector<ScenarioEvent> const& scenario,
                      EventState& ev, double t, const Vec& x) {
    bool any = false;
    while (ev.next < scenario.size() && scenario[ev.next].time <= t + 1e-15) {
        const ScenarioEvent& e = scenario[ev.next];
        auto dot1 = e.target.find('.');
        auto dot2 = e.target.find('.', dot1 + 1);
        if (dot1 == std::string::npos || e.target.substr(0, dot1) != "converters")
            throw ConfigError("scenario target '" + e.target + "' must start with 'converters.'");
        std::string node = e.target.substr(dot1 + 1, dot2 - dot1 - 1);
        std::string field = e.target.substr(dot2 + 1);
        int idx = sys.cfg.sys.node_index(node);
        if (field == "p_set") {
            ev.sp.p_set[idx] = e.value;
        } else if (field == "q_set") {
            ev.sp.q_set[idx] = e.value;
        } else if (field == "droop.k") {
            if (!ev.sp.has_droop[idx])
                throw ConfigError("scenario target '" + e.target + "': node has no droop control");
            if (e.compensate_p0)
                ev.sp.droop[idx].p0 =
                    droop_retune_p0(ev.sp.droop[idx], e.value, x(sys.map.x3_vdc(idx)));
            ev.sp.droop[idx].k = e.value;
        } else if (field == "droop.p0") {
            ev.sp.droop[idx].p0 = e.value;
        } else if (field == "droop.v_dc_ref") {
            ev.sp.droop[idx].v_dc_ref = e.value;
        } else {
            throw ConfigError("scenario target '" + e.target + "' is not supported");
        }
        ++ev.next;
        any = true;
    }
    return any;
}

} // namespace

OperatingPoint solve_equilibrium_from(const SystemModel& sys, const Vec& x0,
                                      const EquilibriumOptions& opts) {
    const Vec scale = sys.state_scale();
    Vec x = x0;
    Vec f = sys.derivative(x, sys.nominal);
    double res = scaled_inf_norm(f, scale);

    for (int it = 0; it < opts.max_newton_iters && res > opts.tol; ++it) {
        Mat jac = system_jacobian(sys, x, sys.nominal);
        Eigen::PartialPivLU<Mat> lu(jac);
        Vec step = -lu.solve(f);
        // Backtracking on the scaled residual.
        double alpha = 1.0;
        double best = res;
        Vec x_next = x;
        bool improved = false;
        for (int ls = 0; ls < 12; ++ls) {
            Vec cand = x + alpha * step;
            double cand_res = scaled_inf_norm(sys.derivative(cand, sys.nominal), scale);
            if (cand_res < best) {
                x_next = cand;
                best = cand_res;
                improved = true;
                break;
            }
            alpha *= 0.5;
        }
        if (!improved) break;
        x = x_next;
        f = sys.derivative(x, sys.nominal);
        res = scaled_inf_norm(f, scale);
    }

    if (res > opts.tol)
        throw ConvergenceError("equilibrium: Newton stalled at scaled residual " +
                               std::to_string(res));

    for (int i = 0; i < sys.map.n; ++i) {
        const ConverterSpec& c = sys.cfg.sys.converters[i];
        double v_nom = c.droop ? c.droop->v_dc_ref : 0.5 * c.v_dc_nom;
        double v = x(sys.map.x3_vdc(i));
        if (std::abs(v - v_nom) > opts.voltage_band * v_nom)
            throw ConvergenceError("equilibrium: v_dc at node '" + c.node + "' is " +
                                   std::to_string(v) + " V, outside the sanity band around " +
                                   std::to_string(v_nom) + " V");
    }

    OperatingPoint op;
    op.x = std::move(x);
    op.residual_norm = res;
    op.setpoints = sys.nominal;
    return op;
}

OperatingPoint solve_equilibrium(const SystemModel& sys, const EquilibriumOptions& opts) {
    Vec x0 = flat_start(sys);
    try {
        return solve_equilibrium_from(sys, x0, opts);
    } catch (const ConvergenceError&) {
        if (!opts.allow_time_march_fallback) throw;
    }
    // March only helps when the closed loop actually settles.
    MarchResult march = time_march_to_quiescence(sys, x0, sys.nominal, opts.march_horizon);
    if (!march.quiescent)
        throw ConvergenceError("equilibrium: Newton stalled and the time-march fallback did "
                               "not reach quiescence within " +
                               std::to_string(opts.march_horizon) + " s");
    return solve_equilibrium_from(sys, march.x, opts);
}

Trajectory simulate(const SystemModel& sys, const OperatingPoint& op,
                    const std::vector<ScenarioEvent>& scenario, const SimOptions& opts) {
    const int dim = sys.map.dim();
    const Vec scale = sys.state_scale();
    const double h = opts.dt;
    const int n_steps = static_cast<int>(std::llround(opts.t_end / h));

    EventState ev{op.setpoints, 0};
    Vec x = op.x;

    Trajectory traj;
    traj.state_labels = sys.map.labels(sys.cfg.sys.nodes, sys.cfg.sys.lines);
    for (const auto& id : sys.cfg.sys.nodes) traj.channel_labels.push_back("p." + id);
    for (const auto& id : sys.cfg.sys.nodes) traj.channel_labels.push_back("q." + id);
    for (const auto& id : sys.cfg.sys.nodes) traj.channel_labels.push_back("v_dc." + id);

    const int n_store = n_steps / opts.store_stride + 1;
    traj.time.resize(n_store);
    traj.states.resize(dim, n_store);
    traj.channels.resize(3 * sys.map.n, n_store);
    int stored = 0;
    auto record = [&](double t, const Vec& xs) {
        traj.time(stored) = t;
        traj.states.col(stored) = xs;
        for (int i = 0; i < sys.map.n; ++i) {
            auto [p, q] = pcc_power(sys.units[i].pcc_d, sys.units[i].pcc_q,
                                    xs(sys.map.x1(MMC_ID, i)), xs(sys.map.x1(MMC_IQ, i)));
            traj.channels(i, stored) = p;
            traj.channels(sys.map.n + i, stored) = q;
            traj.channels(2 * sys.map.n + i, stored) = xs(sys.map.x3_vdc(i));
        }
        ++stored;
    };

    apply_due_events(sys, scenario, ev, 0.0, x);
    record(0.0, x);

    // Frozen-Jacobian trapezoidal corrector state.
    Eigen::PartialPivLU<Mat> lu;
    bool lu_valid = false;
    auto refresh_lu = [&](const Vec& at) {
        Mat jac = system_jacobian(sys, at, ev.sp);
        lu.compute(Mat::Identity(dim, dim) - 0.5 * h * jac);
        lu_valid = true;
    };

    // Linearized path: x' = A (x - x*) + F(x*; sp), re-derived on events.
    Mat a_lin;
    Vec f_lin;
    Eigen::PartialPivLU<Mat> lu_lin;
    auto refresh_linear = [&]() {
        a_lin = system_jacobian(sys, op.x, ev.sp);
        f_lin = sys.derivative(op.x, ev.sp);
        lu_lin.compute(Mat::Identity(dim, dim) - 0.5 * h * a_lin);
    };
    if (opts.linearized) refresh_linear();

    for (int step = 0; step < n_steps; ++step) {
        const double t0 = step * h;
        const double t1 = t0 + h;
        // Events snap to the first grid point at or after their time.
        if (apply_due_events(sys, scenario, ev, t0, x)) {
            lu_valid = false;
            if (opts.linearized) refresh_linear();
        }

        if (opts.linearized) {
            Vec rhs = x + 0.5 * h * (a_lin * (x - op.x) + f_lin) + 0.5 * h * f_lin
                      - 0.5 * h * a_lin * op.x;
            x = lu_lin.solve(rhs);
        } else {
            Vec f0 = sys.derivative(x, ev.sp);
            if (!lu_valid) refresh_lu(x);
            Vec y = x + h * f0; // explicit predictor
            bool converged = false;
            for (int attempt = 0; attempt < 2 && !converged; ++attempt) {
                for (int it = 0; it < opts.max_newton_iters; ++it) {
                    Vec g = y - x - 0.5 * h * (f0 + sys.derivative(y, ev.sp));
                    Vec dy = lu.solve(-g);
                    y += dy;
                    if (scaled_inf_norm(dy, scale) < opts.newton_tol) {
                        converged = true;
                        break;
                    }
                }
                if (!converged) refresh_lu(y);
            }
            if (!converged)
                throw ConvergenceError("simulate: trapezoidal corrector failed at t = " +
                                       std::to_string(t1));
            x = y;
        }

        if (!x.allFinite() || scaled_inf_norm(x, scale) > opts.overflow_guard) {
            traj.diverged = true;
            traj.t_diverged = t1;
            break;
        }
        if ((step + 1) % opts.store_stride == 0 && stored < n_store) record(t1, x);
    }

    traj.time.conservativeResize(stored);
    traj.states.conservativeResize(dim, stored);
    traj.channels.conservativeResize(3 * sys.map.n, stored);
    return traj;
}

MarchResult time_march_to_quiescence(const SystemModel& sys, const Vec& x0,
                                     const Setpoints& sp, double horizon, double dt,
                                     double quiet_tol, double quiet_hold) {
    const int dim = sys.map.dim();
    const Vec scale = sys.state_scale();
    Vec x = x0;
    double quiet_since = -1.0;

    Eigen::PartialPivLU<Mat> lu;
    Mat jac = system_jacobian(sys, x, sp);
    lu.compute(Mat::Identity(dim, dim) - 0.5 * dt * jac);
    int since_refresh = 0;

    const int n_steps = static_cast<int>(horizon / dt);
    for (int step = 0; step < n_steps; ++step) {
        Vec f0 = sys.derivative(x, sp);
        Vec y = x + dt * f0;
        bool ok = false;
        for (int attempt = 0; attempt < 2 && !ok; ++attempt) {
            for (int it = 0; it < 15; ++it) {
                Vec g = y - x - 0.5 * dt * (f0 + sys.derivative(y, sp));
                Vec dy = lu.solve(-g);
                y += dy;
                if (scaled_inf_norm(dy, scale) < 1e-10) {
                    ok = true;
                    break;
                }
            }
            if (!ok) {
                jac = system_jacobian(sys, y, sp);
                lu.compute(Mat::Identity(dim, dim) - 0.5 * dt * jac);
                since_refresh = 0;
            }
        }
        if (!ok)
            throw ConvergenceError("time march: corrector failed at t = " +
                                   std::to_string((step + 1) * dt));
        x = y;
        if (++since_refresh == 2000) {
            jac = system_jacobian(sys, x, sp);
            lu.compute(Mat::Identity(dim, dim) - 0.5 * dt * jac);
            since_refresh = 0;
        }

        double t = (step + 1) * dt;
        if (scaled_inf_norm(sys.derivative(x, sp), scale) < quiet_tol) {
            if (quiet_since < 0) quiet_since = t;
            if (t - quiet_since >= quiet_hold) return {x, true, t};
        } else {
            quiet_since = -1.0;
        }
    }
    return {x, false, horizon};
}

AsfResult asf_phase_reference(const MmcParams& p, const MmcInputVec& u_const,
                              const MmcVec& x0_dq, const AsfOptions& opts) {
    constexpr double third = 2.0 * std::numbers::pi / 3.0;
    const double v_dc = u_const(0);
    const double vref_d = u_const(1), vref_q = u_const(2);
    const double ce_inv = p.n_sm / p.c_sm;

    // State layout: [i_p a b c, i_n a b c, v_p a b c, v_n a b c].
    auto ip = [](int j) { return j; };
    auto in_ = [](int j) { return 3 + j; };
    auto vp = [](int j) { return 6 + j; };
    auto vn = [](int j) { return 9 + j; };

    // Per-phase inductance coupling from eliminating the ac-side voltage.
    Eigen::Matrix2d mass;
    mass << p.l_arm + p.l0, -p.l0, -p.l0, p.l_arm + p.l0;
    Eigen::Matrix2d mass_inv = mass.inverse();

    auto s_p_of = [&](int j, double t) {
        double th = p.omega0 * t - third * j;
        return 0.5 + (vref_d * std::cos(th) - vref_q * std::sin(th)) / p.v_mod_base;
    };

    // f(x, t) = A(t) x + c(t), linear time-varying.
    auto build = [&](double t, Eigen::Matrix<double, 12, 12>& A, Eigen::Matrix<double, 12, 1>& c) {
        A.setZero();
        c.setZero();
        auto vsrc = pcc_phase_voltages(p, t);
        for (int j = 0; j < 3; ++j) {
            double sp = s_p_of(j, t);
            double sn = 1.0 - sp;
            // r1 = v_dc - S_p v_p - (R_arm + R0) i_p + R0 i_n - v_j
            // r2 = v_dc - S_n v_n - (R_arm + R0) i_n + R0 i_p + v_j
            Eigen::Matrix<double, 2, 12> rhs = Eigen::Matrix<double, 2, 12>::Zero();
            rhs(0, ip(j)) = -(p.r_arm + p.r0);
            rhs(0, in_(j)) = p.r0;
            rhs(0, vp(j)) = -sp;
            rhs(1, in_(j)) = -(p.r_arm + p.r0);
            rhs(1, ip(j)) = p.r0;
            rhs(1, vn(j)) = -sn;
            Eigen::Vector2d r0v(v_dc - vsrc[j], v_dc + vsrc[j]);
            Eigen::Matrix<double, 2, 12> di = mass_inv * rhs;
            Eigen::Vector2d dc = mass_inv * r0v;
            A.row(ip(j)) = di.row(0);
            A.row(in_(j)) = di.row(1);
            c(ip(j)) = dc(0);
            c(in_(j)) = dc(1);
            A(vp(j), ip(j)) = ce_inv * sp;
            A(vn(j), in_(j)) = ce_inv * sn;
        }
    };

    // Initial condition: the dq state mapped to phase coordinates at t = 0.
    Eigen::Matrix<double, 12, 1> x;
    {
        ArmWaveforms w0 = reconstruct_phases(x0_dq, vref_d, vref_q, p, 0.0);
        for (int j = 0; j < 3; ++j) {
            x(ip(j)) = w0.i_p[j];
            x(in_(j)) = w0.i_n[j];
            x(vp(j)) = w0.v_p[j];
            x(vn(j)) = w0.v_n[j];
        }
    }

    // Snap the step so the extraction window is exactly one fundamental
    // cycle (no spectral leakage in the quadrature).
    const double period = 2.0 * std::numbers::pi / p.omega0;
    const int per_cycle = std::max(16, static_cast<int>(std::llround(period / opts.dt)));
    const double h = period / per_cycle;
    const int n_steps = std::max(per_cycle, static_cast<int>(std::llround(opts.t_end / h)));
    const int window = per_cycle;

    Eigen::Matrix<double, 12, 12> A0m, A1m;
    Eigen::Matrix<double, 12, 1> c0v, c1v;

    AsfResult res;
    res.time.resize(window + 1);
    res.arm_states.resize(12, window + 1);
    int w_at = 0;

    double sw_err = 0.0;
    for (int step = 0; step < n_steps; ++step) {
        double t0 = step * h, t1 = t0 + h;
        build(t0, A0m, c0v);
        build(t1, A1m, c1v);
        // Trapezoid on a linear system: (I - h/2 A1) y = x + h/2 (A0 x + c0 + c1).
        Eigen::Matrix<double, 12, 12> lhs =
            Eigen::Matrix<double, 12, 12>::Identity() - 0.5 * h * A1m;
        Eigen::Matrix<double, 12, 1> rhs = x + 0.5 * h * (A0m * x + c0v + c1v);
        x = lhs.partialPivLu().solve(rhs);

        for (int j = 0; j < 3; ++j) {
            double sp = s_p_of(j, t1);
            sw_err = std::max(sw_err, std::abs(sp + (1.0 - sp) - 1.0));
        }
        if (step >= n_steps - window - 1) {
            res.time(w_at) = t1;
            res.arm_states.col(w_at) = x;
            ++w_at;
        }
    }
    res.switching_identity_err = sw_err;

    // Harmonic extraction over the stored cycle, trapezoidal quadrature.
    auto integrate = [&](auto f) {
        double acc = 0.0;
        for (int k = 0; k + 1 < w_at; ++k)
            acc += 0.5 * (f(k) + f(k + 1)) * (res.time(k + 1) - res.time(k));
        return acc;
    };
    double T = res.time(w_at - 1) - res.time(0);

    auto phase_theta1 = [&](int j, int k) { return p.omega0 * res.time(k) - third * j; };
    auto phase_theta2 = [&](int j, int k) { return 2.0 * p.omega0 * res.time(k) + third * j; };

    MmcVec est = MmcVec::Zero();
    for (int j = 0; j < 3; ++j) {
        est(MMC_IDC) += 0.5 * integrate([&](int k) {
            return res.arm_states(ip(j), k) + res.arm_states(in_(j), k);
        }) / T;
        est(MMC_VDC_INT) += 0.5 * integrate([&](int k) {
            return res.arm_states(vp(j), k) + res.arm_states(vn(j), k);
        }) / T / 3.0;

        auto fund = [&](auto signal, double& d, double& q) {
            d += (2.0 / T) * integrate([&](int k) { return signal(k) * std::cos(phase_theta1(j, k)); }) / 3.0;
            q += -(2.0 / T) * integrate([&](int k) { return signal(k) * std::sin(phase_theta1(j, k)); }) / 3.0;
        };
        auto second = [&](auto signal, double& d, double& q) {
            d += (2.0 / T) * integrate([&](int k) { return signal(k) * std::cos(phase_theta2(j, k)); }) / 3.0;
            q += -(2.0 / T) * integrate([&](int k) { return signal(k) * std::sin(phase_theta2(j, k)); }) / 3.0;
        };

        fund([&](int k) { return res.arm_states(ip(j), k) - res.arm_states(in_(j), k); },
             est(MMC_ID), est(MMC_IQ));
        second([&](int k) { return 0.5 * (res.arm_states(ip(j), k) + res.arm_states(in_(j), k)); },
               est(MMC_I2D), est(MMC_I2Q));
        fund([&](int k) { return 0.5 * (res.arm_states(vp(j), k) - res.arm_states(vn(j), k)); },
             est(MMC_V1D), est(MMC_V1Q));
        second([&](int k) { return 0.5 * (res.arm_states(vp(j), k) + res.arm_states(vn(j), k)); },
               est(MMC_V2D), est(MMC_V2Q));
    }
    res.dq_estimate = est;

    // Residual of the truncated decomposition against the simulated arms.
    double num = 0.0, den = 0.0;
    for (int k = 0; k < w_at; ++k) {
        ArmWaveforms w = reconstruct_phases(est, vref_d, vref_q, p, res.time(k));
        for (int j = 0; j < 3; ++j) {
            num += std::pow(w.i_p[j] - res.arm_states(ip(j), k), 2) +
                   std::pow(w.i_n[j] - res.arm_states(in_(j), k), 2);
            den += std::pow(res.arm_states(ip(j), k), 2) +
                   std::pow(res.arm_states(in_(j), k), 2);
        }
    }
    res.reconstruction_residual = std::sqrt(num / std::max(den, 1e-30));
    return res;
}

} // namespace mtdc
