#include "mtdc/network.hpp"

#include <Eigen/Cholesky>

namespace mtdc {

Incidence build_incidence(const ValidatedConfig& cfg) {
    const int m = cfg.n_lines;
    const int n = cfg.n_nodes;
    Incidence inc;
    inc.J = Mat::Zero(m, n);
    inc.J1 = Mat::Zero(m, n);
    inc.J2 = Mat::Zero(m, n);
    for (int i = 0; i < m; ++i) {
        int from = cfg.sys.node_index(cfg.sys.lines[i].from_node);
        int to = cfg.sys.node_index(cfg.sys.lines[i].to_node);
        inc.J1(i, from) = 1.0;
        inc.J2(i, to) = 1.0;
    }
    inc.J = inc.J1 - inc.J2;
    return inc;
}

NetworkModel assemble_network(const Incidence& inc, const ValidatedConfig& cfg) {
    const int m = cfg.n_lines;
    const int n = cfg.n_nodes;

    NetworkModel net;
    net.n_lines = m;
    net.n_nodes = n;
    net.r_t.resize(m);
    net.l_t.resize(m);
    net.c_t.resize(m);
    for (int i = 0; i < m; ++i) {
        const LineSpec& l = cfg.sys.lines[i];
        net.r_t(i) = 0.5 * l.r_per_km * l.length_km;
        net.l_t(i) = 0.5 * l.l_per_km * l.length_km;
        net.c_t(i) = l.c_per_km * l.length_km;
    }
    net.l_s.resize(n);
    net.c_g.resize(n);
    for (int i = 0; i < n; ++i) {
        net.l_s(i) = cfg.sys.converters[i].l_s;
        net.c_g(i) = cfg.sys.converters[i].c_g;
    }

    // K = [-J1^T, J2^T] maps [i_alpha; i_beta] to the reactor currents.
    Mat K(n, 2 * m);
    K.leftCols(m) = -inc.J1.transpose();
    K.rightCols(m) = inc.J2.transpose();

    Mat E = Mat::Zero(2 * m, 2 * m);
    E.topLeftCorner(m, m).diagonal() = net.l_t;
    E.bottomRightCorner(m, m).diagonal() = net.l_t;
    E += K.transpose() * net.l_s.asDiagonal() * K;
    net.E = E;

    Eigen::LLT<Mat> llt(E);
    if (llt.info() != Eigen::Success)
        throw NumericalError("network: current-equation mass matrix is not positive definite");
    // Cheap conditioning guard on the factor's diagonal spread.
    Vec d = llt.matrixL().toDenseMatrix().diagonal();
    if (d.minCoeff() <= 0.0 || (d.maxCoeff() / d.minCoeff()) > 1e12)
        throw NumericalError("network: current-equation mass matrix is numerically singular "
                             "(degenerate inductance data)");

    // Right-hand side F z + G u of the current equations, z = [ia; ib; vT; vdc].
    const int dim = 3 * m + n;
    Mat F = Mat::Zero(2 * m, dim);
    F.block(0, 0, m, m).diagonal() = -net.r_t;
    F.block(m, m, m, m).diagonal() = -net.r_t;
    F.block(0, 2 * m, m, m) = -Mat::Identity(m, m);
    F.block(m, 2 * m, m, m) = Mat::Identity(m, m);
    F.block(0, 3 * m, m, n) = inc.J1;
    F.block(m, 3 * m, m, n) = -inc.J2;

    Mat reduced = llt.solve(F);

    net.A3 = Mat::Zero(dim, dim);
    net.B3 = Mat::Zero(dim, n);
    net.A3.topRows(2 * m) = reduced;
    // C_T v_T' = i_alpha - i_beta
    for (int i = 0; i < m; ++i) {
        net.A3(2 * m + i, i) = 1.0 / net.c_t(i);
        net.A3(2 * m + i, m + i) = -1.0 / net.c_t(i);
    }
    // C_g v_dc' = -J1^T i_alpha + J2^T i_beta - i_dc
    net.A3.block(3 * m, 0, n, 2 * m) = net.c_g.cwiseInverse().asDiagonal() * K;
    net.B3.bottomRows(n).diagonal() = -net.c_g.cwiseInverse();
    return net;
}

} // namespace mtdc
