#include "mtdc/region.hpp"

#include <algorithm>
#include <cmath>

namespace mtdc {

ConstraintSet build_constraints(const SensitivityBundle& bundle, const EigenSolution& sol,
                                const Vec& k_star) {
    const int n_modes = static_cast<int>(sol.eigenvalues.size());
    const int nd = static_cast<int>(bundle.first.cols());

    ConstraintSet cs;
    cs.k_star = k_star;
    cs.excluded = bundle.excluded;
    std::vector<char> skip(n_modes, false);
    for (int i : bundle.excluded) skip[i] = true;

    for (int i = 0; i < n_modes; ++i) {
        if (skip[i]) continue;
        // One constraint per conjugate pair: keep the Im >= 0 representative.
        if (sol.conj_partner[i] >= 0 && sol.eigenvalues(i).imag() < 0.0) continue;
        SlopeConstraint c;
        c.mode = i;
        c.a = bundle.first.row(i).real().transpose();
        c.h = bundle.second[i].real();
        c.h = 0.5 * (c.h + c.h.transpose()).eval();
        c.delta = bundle.margins(i);
        cs.constraints.push_back(std::move(c));
    }
    return cs;
}

double constraint_value(const SlopeConstraint& c, const Vec& dk) {
    return c.a.dot(dk) + 0.5 * dk.dot(c.h * dk);
}

SupremumResult estimate_supremum(const ConstraintSet& cs, int axis, const Vec& init_deviation,
                                 const SupremumOptions& opts) {
    const int nd = static_cast<int>(cs.k_star.size());
    if (axis < 0 || axis >= nd)
        throw NumericalError("estimate_supremum: axis out of range");
    if (init_deviation.size() != nd)
        throw NumericalError("estimate_supremum: init deviation must cover every droop axis");

    SupremumResult res;
    res.axis = axis;
    res.init_deviation = init_deviation;

    double best = std::numeric_limits<double>::infinity();
    int binding = -1;

    for (const SlopeConstraint& c : cs.constraints) {
        // Scalar quadratic in the extra deviation x along `axis`:
        //   q(x) = a2 x^2 + b1 x + c0 < 0, with c0 the slack at x = 0.
        const double a2 = 0.5 * c.h(axis, axis);
        const double b1 = c.a(axis) + c.h.row(axis).dot(init_deviation);
        const double c0 = constraint_value(c, init_deviation) - c.delta;

        if (c0 >= opts.feas_tol_rel * std::max(1.0, std::abs(c.delta))) {
            throw InfeasibleExpansionError(
                "estimate_supremum: constraint of mode " + std::to_string(c.mode) +
                " is already violated at the initialized deviation (slack " +
                std::to_string(-c0) + ")");
        }

        double bound = std::numeric_limits<double>::infinity();
        const double quad_scale = std::max({std::abs(b1), std::abs(c0), 1e-300});
        if (std::abs(a2) <= opts.quad_eps * quad_scale) {
            // Linear: feasible for all x >= 0 unless b1 > 0.
            if (b1 > 0.0) bound = -c0 / b1;
        } else {
            const double disc = b1 * b1 - 4.0 * a2 * c0;
            if (a2 > 0.0) {
                // Upward parabola, q(0) < 0: one positive root bounds x.
                bound = (-b1 + std::sqrt(disc)) / (2.0 * a2);
            } else if (disc >= 0.0) {
                // Downward parabola with real roots: infeasible only on the
                // interval between them; it binds when that interval lies to
                // the right of 0.
                const double r1 = (-b1 + std::sqrt(disc)) / (2.0 * a2);
                const double r2 = (-b1 - std::sqrt(disc)) / (2.0 * a2);
                const double lo = std::min(r1, r2);
                if (lo > 0.0) bound = lo;
            }
            // Downward parabola without real roots: feasible everywhere.
        }
        if (bound < best) {
            best = bound;
            binding = c.mode;
        }
    }

    res.bounded = std::isfinite(best);
    res.max_deviation = res.bounded ? best : opts.cap;
    res.binding_mode = res.bounded ? binding : -1;
    res.k_sup = cs.k_star(axis) + init_deviation(axis) + res.max_deviation;
    return res;
}

std::vector<SupremumResult> cross_validate(const ConstraintSet& cs, const Vec& slopes_study,
                                           const SupremumOptions& opts) {
    const int nd = static_cast<int>(cs.k_star.size());
    if (slopes_study.size() != nd)
        throw NumericalError("cross_validate: study case must cover every droop axis");
    Vec dev = slopes_study - cs.k_star;
    std::vector<SupremumResult> out;
    out.reserve(nd);
    for (int axis = 0; axis < nd; ++axis) out.push_back(estimate_supremum(cs, axis, dev, opts));
    return out;
}

namespace {

double max_re(const CVec& eig) {
    double m = -std::numeric_limits<double>::infinity();
    for (int i = 0; i < eig.size(); ++i) m = std::max(m, eig(i).real());
    return m;
}

} // namespace

LociResult loci_supremum(const AxisModelBuilder& build, double k_lo, double k_hi,
                         const LociOptions& opts) {
    if (!(k_hi > k_lo)) throw NumericalError("loci: empty bracket");
    LociResult res;

    const int n = std::max(2, opts.samples);
    res.table.resize(n);
    for_each_index(opts.exec, n, [&](int i) {
        double k = k_lo + (k_hi - k_lo) * i / (n - 1);
        CVec eig = eig_values(build(k));
        res.table[i] = {k, max_re(eig), eig};
    });

    int first_cross = -1;
    int crossings = 0;
    for (int i = 0; i + 1 < n; ++i) {
        if (res.table[i].max_re < 0.0 && res.table[i + 1].max_re >= 0.0) {
            if (first_cross < 0) first_cross = i;
            ++crossings;
        }
    }
    if (first_cross < 0)
        throw ConvergenceError("loci: max Re eigenvalue has no stable-to-unstable sign change "
                               "in the bracket [" + std::to_string(k_lo) + ", " +
                               std::to_string(k_hi) + "]");
    res.multiple_crossings = crossings > 1;

    double lo = res.table[first_cross].k;
    double hi = res.table[first_cross + 1].k;
    double f_mid = res.table[first_cross + 1].max_re;
    for (int it = 0; it < 200 && (hi - lo) > opts.k_tol; ++it) {
        double mid = 0.5 * (lo + hi);
        f_mid = max_re(eig_values(build(mid)));
        if (std::abs(f_mid) < opts.f_tol) {
            lo = hi = mid;
            break;
        }
        (f_mid < 0.0 ? lo : hi) = mid;
    }
    res.k_sup = 0.5 * (lo + hi);
    res.f_at_sup = f_mid;
    return res;
}

RegionGrid scan_region_taylor(const ConstraintSet& cs, int axis_i, int axis_j,
                              const Vec& fixed_deviation, double lo_i, double hi_i,
                              double lo_j, double hi_j, int res, Exec exec) {
    RegionGrid grid;
    grid.axis_i = axis_i;
    grid.axis_j = axis_j;
    grid.method = "taylor";
    grid.ks_i = Vec::LinSpaced(res, lo_i, hi_i);
    grid.ks_j = Vec::LinSpaced(res, lo_j, hi_j);
    grid.stable.resize(res, res);
    for_each_index(exec, res * res, [&](int cell) {
        const int ii = cell / res;
        const int jj = cell % res;
        Vec dk = fixed_deviation;
        dk(axis_i) = grid.ks_i(ii) - cs.k_star(axis_i);
        dk(axis_j) = grid.ks_j(jj) - cs.k_star(axis_j);
        bool ok = true;
        for (const SlopeConstraint& c : cs.constraints) {
            if (!(constraint_value(c, dk) < c.delta)) { // boundary counts unstable
                ok = false;
                break;
            }
        }
        grid.stable(ii, jj) = ok ? 1 : 0;
    });
    return grid;
}

RegionGrid scan_region_loci(const PlaneModelBuilder& build, int axis_i, int axis_j,
                            double lo_i, double hi_i, double lo_j, double hi_j, int res,
                            Exec exec) {
    RegionGrid grid;
    grid.axis_i = axis_i;
    grid.axis_j = axis_j;
    grid.method = "loci";
    grid.ks_i = Vec::LinSpaced(res, lo_i, hi_i);
    grid.ks_j = Vec::LinSpaced(res, lo_j, hi_j);
    grid.stable.resize(res, res);
    for_each_index(exec, res * res, [&](int cell) {
        const int ii = cell / res;
        const int jj = cell % res;
        grid.stable(ii, jj) = (max_re(eig_values(build(grid.ks_i(ii), grid.ks_j(jj)))) < 0.0) ? 1 : 0;
    });
    return grid;
}

} // namespace mtdc
