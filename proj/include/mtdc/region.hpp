#pragma once

#include "mtdc/exec.hpp"
#include "mtdc/modal.hpp"
#include "mtdc/types.hpp"

#include <functional>
#include <string>
#include <vector>

namespace mtdc {

/// One quadratic slope constraint a^T dk + 1/2 dk^T H dk < delta, built
/// from the real parts of the sensitivities of one mode (one per conjugate
/// pair; the partner is deduplicated).
struct SlopeConstraint {
    int mode = 0;
    Vec a;      // n_droop
    Mat h;      // n_droop x n_droop, symmetric
    double delta = 0.0;
};

struct ConstraintSet {
    std::vector<SlopeConstraint> constraints;
    Vec k_star;                 // expansion slopes [W/V]
    std::vector<int> excluded;  // modes left out (degenerate/flagged)
};

ConstraintSet build_constraints(const SensitivityBundle& bundle, const EigenSolution& sol,
                                const Vec& k_star);

/// Left-hand side of one constraint at deviation dk.
double constraint_value(const SlopeConstraint& c, const Vec& dk);

struct SupremumResult {
    int axis = 0;
    double k_sup = 0.0;      // absolute slope [W/V]
    double max_deviation = 0.0; // feasible deviation beyond the initialization
    int binding_mode = -1;   // -1 when unbounded
    Vec init_deviation;
    bool bounded = false;
};

struct SupremumOptions {
    double cap = 1e7;          // reported k_sup when no constraint binds [W/V]
    double feas_tol_rel = 1e-9;
    double quad_eps = 1e-14;   // |H_ii| below this is treated as linear
};

/// Substitutes the fixed deviations (all axes; entry `axis` is the starting
/// offset of the scan) into each constraint, reducing it to a scalar
/// quadratic in the extra deviation x >= 0; returns the minimum over
/// constraints of the first infeasibility crossing. Throws
/// InfeasibleExpansionError when some constraint is already violated at
/// x = 0.
SupremumResult estimate_supremum(const ConstraintSet& cs, int axis, const Vec& init_deviation,
                                 const SupremumOptions& opts = {});

/// Self/cross-validation per the two-case protocol: constraints come from
/// the expansion at cs.k_star, the study case fixes the other slopes at
/// slopes_study. Self-validation is slopes_study == cs.k_star.
std::vector<SupremumResult> cross_validate(const ConstraintSet& cs, const Vec& slopes_study,
                                           const SupremumOptions& opts = {});

/// k -> A_ss with one droop axis swept, everything else fixed.
using AxisModelBuilder = std::function<Mat(double)>;

struct LociSample {
    double k = 0.0;
    double max_re = 0.0;
    CVec eigenvalues;
};

struct LociResult {
    double k_sup = 0.0;
    double f_at_sup = 0.0; // max Re at the bracket midpoint on exit
    bool multiple_crossings = false;
    std::vector<LociSample> table;
};

struct LociOptions {
    int samples = 41;      // locus table resolution over the bracket
    double f_tol = 1e-6;
    double k_tol = 1e-3;
    Exec exec = Exec::Serial;
};

/// Bisection on f(k) = max_i Re lambda_i(A_ss(k)); emits the sampled locus
/// table. Throws ConvergenceError when f has no sign change over the
/// bracket. With several crossings the smallest is returned and flagged.
LociResult loci_supremum(const AxisModelBuilder& build, double k_lo, double k_hi,
                         const LociOptions& opts = {});

struct RegionGrid {
    int axis_i = 0, axis_j = 0;
    Vec ks_i, ks_j;
    Eigen::Matrix<char, Eigen::Dynamic, Eigen::Dynamic> stable; // ks_i x ks_j
    std::string method; // "taylor" | "loci"
};

using PlaneModelBuilder = std::function<Mat(double, double)>;

/// Classifies a (k_i, k_j) grid by the constraint conjunction; slopes on
/// the remaining axes stay at the fixed deviations.
RegionGrid scan_region_taylor(const ConstraintSet& cs, int axis_i, int axis_j,
                              const Vec& fixed_deviation, double lo_i, double hi_i,
                              double lo_j, double hi_j, int res, Exec exec = Exec::Serial);

/// Same grid classified by max Re lambda < 0 with a full eigensolve per
/// cell (the brute-force oracle).
RegionGrid scan_region_loci(const PlaneModelBuilder& build, int axis_i, int axis_j,
                            double lo_i, double hi_i, double lo_j, double hi_j, int res,
                            Exec exec = Exec::Serial);

} // namespace mtdc
