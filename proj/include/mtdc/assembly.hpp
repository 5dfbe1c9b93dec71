#pragma once

#include "mtdc/system.hpp"
#include "mtdc/types.hpp"

#include <vector>

namespace mtdc {

/// 0/1 placement matrices tying the three sub-system blocks together.
/// Shapes are fixed by the node count n: G3 is n x 10n, Gs1 is 2n x 10n,
/// Gs2 is n x (3m+n), G23 is 4n x 2n, G21 is 4n x n, G11 is 3n x n,
/// G12 is 3n x 2n.
struct SelectorSet {
    Mat G3, Gs1, Gs2, G23, G21, G11, G12;
};

/// Signal-grouped stacks of the per-unit small-signal blocks: entry (p, q)
/// of unit i lands at global (p n + i, q n + i).
struct StackedBlocks {
    Mat A1, B1;         // 10n x 10n, 10n x 3n
    Mat A2, B2, C2, D2; // 4n x 4n, 4n x 4n, 2n x 4n, 2n x 4n
    Mat A3, B3;         // network, (3m+n) x (3m+n), (3m+n) x n
};

/// Global matrix with its affine-in-slope decomposition
/// A_ss(k) = A0 + sum_j k_j M_j.
struct SmallSignalModel {
    Mat a_ss;
    Mat a0;
    std::vector<Mat> m_k;        // one per droop axis
    std::vector<int> droop_nodes; // node index per axis
    StateMap map;
    Vec slopes;                  // slopes used for a_ss [W/V]
};

StackedBlocks stack_units(const std::vector<MmcLinearization>& units,
                          const std::vector<ControllerModel>& ctrls,
                          const NetworkModel& net);

SelectorSet build_selectors(int n_nodes, int n_lines);

/// The nine blocks of the global matrix; k_diag is the n x n droop-slope
/// diagonal.
Mat assemble_from_blocks(const StackedBlocks& s, const SelectorSet& g, const Mat& k_diag);

/// Linearizes every unit at (x_star, its implied inputs), stacks, and
/// assembles A_ss together with A0 and the per-axis difference matrices.
/// `slopes` overrides the config droop slopes when given (droop-axis order).
SmallSignalModel assemble_global(const SystemModel& sys, const Vec& x_star,
                                 const Vec* slopes = nullptr);

/// A_ss only, for repeated slope sweeps at a fixed operating point.
Mat assemble_a_ss(const SystemModel& sys, const Vec& x_star, const Vec& slopes);

/// Closed-loop Jacobian of SystemModel::derivative at an arbitrary state
/// under possibly scenario-modified setpoints.
Mat system_jacobian(const SystemModel& sys, const Vec& x, const Setpoints& sp);

} // namespace mtdc
