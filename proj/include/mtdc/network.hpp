#pragma once

#include "mtdc/config.hpp"
#include "mtdc/types.hpp"

namespace mtdc {

/// Signed edge-node incidence of the dc grid plus its positive/negative
/// splits: J = J1 - J2, row m has +1 at the from-node and -1 at the to-node.
struct Incidence {
    Mat J;  // n_lines x n_nodes, entries in {-1, 0, +1}
    Mat J1; // the +1 entries
    Mat J2; // the -1 entries, negated
};

/// State-space model of the dc network after eliminating the grid-bus
/// voltages. State order [i_alpha (m), i_beta (m), v_T (m), v_dc (n)],
/// input order [i_dc (n)].
struct NetworkModel {
    Mat A3; // (3m+n) x (3m+n)
    Mat B3; // (3m+n) x n
    Mat E;  // 2m x 2m SPD mass matrix of the current equations
    Vec r_t, l_t, c_t; // per T-half series R/L and midpoint shunt C, per line
    Vec l_s, c_g;      // per-node smoothing reactor and grounding capacitor
    int n_lines = 0;
    int n_nodes = 0;
};

Incidence build_incidence(const ValidatedConfig& cfg);

/// Substitutes v_dc_bus = v_dc + L_s d/dt(-J1^T i_a + J2^T i_b) into the
/// line-current equations, giving a descriptor form E z' = F z + G u with
/// E = blockdiag(L_T, L_T) + K^T L_s K, K = [-J1^T, J2^T]; A3/B3 are the
/// E-reduced dynamics. The T halves carry half the total series R/L of the
/// line; the full shunt C sits at the midpoint.
NetworkModel assemble_network(const Incidence& inc, const ValidatedConfig& cfg);

} // namespace mtdc
