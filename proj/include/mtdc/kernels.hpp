#pragma once

#include "mtdc/exec.hpp"
#include "mtdc/types.hpp"

#include <vector>

namespace mtdc {

// Dense modal kernels. Each output column is computed by an identical
// per-column body in both execution modes, so Serial and Parallel results
// are bit-identical; Serial is the reference the tests compare against.

/// F = Z M W: entry (kappa, i) is z_kappa^T M w_i.
CMat modal_projection(const CMat& z_rows, const Mat& m, const CMat& w_cols, Exec exec);

/// Second-order eigenvalue sensitivity accumulation over the modal
/// expansion: for each retained mode i and axis pair (j, l),
///   t[i](j, l) = sum_{kappa != i} (F_j(kappa,i) F_l(i,kappa)
///                                 + F_l(kappa,i) F_j(i,kappa)) / (lambda_i - lambda_kappa).
/// Modes listed in `skip` get a zero matrix.
std::vector<CMat> second_order_accumulate(const std::vector<CMat>& f,
                                          const CVec& eigenvalues,
                                          const std::vector<char>& skip, Exec exec);

} // namespace mtdc
