#include "mtdc/assembly.hpp"

namespace mtdc {

namespace {

/// Scatter per-unit blocks into the signal-grouped stack: entry (p, q) of
/// unit i lands at (p n + i, q n + i).
Mat stack_signal_grouped(const std::vector<Mat>& blocks, int rows, int cols) {
    const int n = static_cast<int>(blocks.size());
    Mat out = Mat::Zero(rows * n, cols * n);
    for (int i = 0; i < n; ++i)
        for (int p = 0; p < rows; ++p)
            for (int q = 0; q < cols; ++q) out(p * n + i, q * n + i) = blocks[i](p, q);
    return out;
}

} // namespace

StackedBlocks stack_units(const std::vector<MmcLinearization>& units,
                          const std::vector<ControllerModel>& ctrls,
                          const NetworkModel& net) {
    if (units.size() != ctrls.size())
        throw NumericalError("assembly: unit count mismatch between converters (" +
                             std::to_string(units.size()) + ") and controllers (" +
                             std::to_string(ctrls.size()) + ")");
    StackedBlocks s;
    std::vector<Mat> a1, b1, a2, b2, c2, d2;
    for (size_t i = 0; i < units.size(); ++i) {
        a1.push_back(units[i].A1);
        b1.push_back(units[i].B1);
        a2.push_back(ctrls[i].A2);
        b2.push_back(ctrls[i].B2);
        c2.push_back(ctrls[i].C2);
        d2.push_back(ctrls[i].D2);
    }
    s.A1 = stack_signal_grouped(a1, 10, 10);
    s.B1 = stack_signal_grouped(b1, 10, 3);
    s.A2 = stack_signal_grouped(a2, 4, 4);
    s.B2 = stack_signal_grouped(b2, 4, 4);
    s.C2 = stack_signal_grouped(c2, 2, 4);
    s.D2 = stack_signal_grouped(d2, 2, 4);
    s.A3 = net.A3;
    s.B3 = net.B3;
    return s;
}

SelectorSet build_selectors(int n, int m) {
    SelectorSet g;
    Mat eye = Mat::Identity(n, n);

    g.G3 = Mat::Zero(n, 10 * n);
    g.G3.block(0, 0, n, n) = eye; // i_dc block

    g.Gs1 = Mat::Zero(2 * n, 10 * n);
    g.Gs1.block(0, n, n, n) = eye;     // i_d
    g.Gs1.block(n, 2 * n, n, n) = eye; // i_q

    g.Gs2 = Mat::Zero(n, 3 * m + n);
    g.Gs2.block(0, 3 * m, n, n) = eye; // v_dc

    g.G23 = Mat::Zero(4 * n, 2 * n);
    g.G23.block(2 * n, 0, n, n) = eye; // i_d into controller input 3
    g.G23.block(3 * n, n, n, n) = eye; // i_q into controller input 4

    g.G21 = Mat::Zero(4 * n, n);
    g.G21.block(0, 0, n, n) = eye; // P_ref into controller input 1

    g.G11 = Mat::Zero(3 * n, n);
    g.G11.block(0, 0, n, n) = eye; // v_dc into MMC input 1

    g.G12 = Mat::Zero(3 * n, 2 * n);
    g.G12.block(n, 0, n, n) = eye;     // vref_d into MMC input 2
    g.G12.block(2 * n, n, n, n) = eye; // vref_q into MMC input 3
    return g;
}

Mat assemble_from_blocks(const StackedBlocks& s, const SelectorSet& g, const Mat& k_diag) {
    const int d1 = static_cast<int>(s.A1.rows());
    const int d2 = static_cast<int>(s.A2.rows());
    const int d3 = static_cast<int>(s.A3.rows());
    if (s.B3.cols() * 10 != d1 || g.Gs2.cols() != d3)
        throw NumericalError("assembly: dimension mismatch between stacks and network (block "
                             "(3,1)/(1,3) of the global matrix)");

    Mat b1g12 = s.B1 * g.G12;
    Mat a(d1 + d2 + d3, d1 + d2 + d3);
    a.setZero();
    a.block(0, 0, d1, d1) = s.A1 + b1g12 * s.D2 * g.G23 * g.Gs1;
    a.block(0, d1, d1, d2) = b1g12 * s.C2;
    a.block(0, d1 + d2, d1, d3) =
        s.B1 * (g.G11 + g.G12 * s.D2 * g.G21 * k_diag) * g.Gs2;
    a.block(d1, 0, d2, d1) = s.B2 * g.G23 * g.Gs1;
    a.block(d1, d1, d2, d2) = s.A2;
    a.block(d1, d1 + d2, d2, d3) = s.B2 * g.G21 * k_diag * g.Gs2;
    a.block(d1 + d2, 0, d3, d1) = s.B3 * g.G3;
    a.block(d1 + d2, d1 + d2, d3, d3) = s.A3;
    return a;
}

namespace {

StackedBlocks stacks_at(const SystemModel& sys, const Vec& x_star, const Setpoints& sp) {
    std::vector<MmcLinearization> lins;
    for (int i = 0; i < sys.map.n; ++i) {
        MmcVec x1;
        for (int s = 0; s < 10; ++s) x1(s) = x_star(sys.map.x1(s, i));
        MmcInputVec u1 = sys.unit_input(x_star, sp, i);
        lins.push_back(mmc_linearize(x1, u1, sys.units[i]));
    }
    return stack_units(lins, sys.ctrls, sys.net);
}

StackedBlocks stacks_at(const SystemModel& sys, const Vec& x_star) {
    return stacks_at(sys, x_star, sys.nominal);
}

Mat slope_diag(const SystemModel& sys, const Vec& slopes) {
    Mat k = Mat::Zero(sys.map.n, sys.map.n);
    for (size_t j = 0; j < sys.cfg.droop_nodes.size(); ++j)
        k(sys.cfg.droop_nodes[j], sys.cfg.droop_nodes[j]) = slopes(j);
    return k;
}

} // namespace

Mat assemble_a_ss(const SystemModel& sys, const Vec& x_star, const Vec& slopes) {
    StackedBlocks s = stacks_at(sys, x_star);
    SelectorSet g = build_selectors(sys.map.n, sys.map.m);
    return assemble_from_blocks(s, g, slope_diag(sys, slopes));
}

Mat system_jacobian(const SystemModel& sys, const Vec& x, const Setpoints& sp) {
    StackedBlocks s = stacks_at(sys, x, sp);
    SelectorSet g = build_selectors(sys.map.n, sys.map.m);
    Vec slopes(sys.n_droop());
    for (size_t j = 0; j < sys.cfg.droop_nodes.size(); ++j) {
        int node = sys.cfg.droop_nodes[j];
        slopes(j) = sp.has_droop[node] ? sp.droop[node].k : 0.0;
    }
    return assemble_from_blocks(s, g, slope_diag(sys, slopes));
}

SmallSignalModel assemble_global(const SystemModel& sys, const Vec& x_star, const Vec* slopes) {
    SmallSignalModel model;
    model.map = sys.map;
    model.droop_nodes = sys.cfg.droop_nodes;
    model.slopes = slopes ? *slopes : sys.droop_slopes();

    StackedBlocks s = stacks_at(sys, x_star);
    SelectorSet g = build_selectors(sys.map.n, sys.map.m);

    model.a_ss = assemble_from_blocks(s, g, slope_diag(sys, model.slopes));
    model.a0 = assemble_from_blocks(s, g, Mat::Zero(sys.map.n, sys.map.n));
    const int nd = sys.n_droop();
    for (int j = 0; j < nd; ++j) {
        Vec unit = Vec::Zero(nd);
        unit(j) = 1.0;
        model.m_k.push_back(assemble_from_blocks(s, g, slope_diag(sys, unit)) - model.a0);
    }
    return model;
}

} // namespace mtdc
