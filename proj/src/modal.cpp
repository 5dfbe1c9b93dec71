#include "mtdc/modal.hpp"

#include "mtdc/kernels.hpp"

#include <Eigen/SVD>
#include <algorithm>
#include <cmath>
#include <numeric>

#include <lapacke.h>

namespace mtdc {

EigenSolution eig_full(const Mat& a) {
    if (a.rows() != a.cols()) throw NumericalError("eig: matrix must be square");
    const int n = static_cast<int>(a.rows());

    Mat work = a; // dgeev overwrites
    Vec wr(n), wi(n);
    Mat vl(n, n), vr(n, n);
    int info = LAPACKE_dgeev(LAPACK_COL_MAJOR, 'V', 'V', n, work.data(), n, wr.data(),
                             wi.data(), vl.data(), n, vr.data(), n);
    if (info != 0)
        throw ConvergenceError("eig: dgeev did not converge (info = " + std::to_string(info) + ")");

    CVec lam(n);
    CMat w(n, n);
    CMat u(n, n); // dgeev's left vectors satisfy u^H A = lambda u^H
    std::vector<int> pre_partner(n, -1);
    for (int k = 0; k < n;) {
        if (wi(k) == 0.0) {
            lam(k) = Complex(wr(k), 0.0);
            w.col(k) = vr.col(k).cast<Complex>();
            u.col(k) = vl.col(k).cast<Complex>();
            ++k;
        } else {
            lam(k) = Complex(wr(k), wi(k));
            lam(k + 1) = Complex(wr(k), -wi(k));
            w.col(k) = vr.col(k).cast<Complex>() + Complex(0, 1) * vr.col(k + 1).cast<Complex>();
            w.col(k + 1) = w.col(k).conjugate();
            u.col(k) = vl.col(k).cast<Complex>() + Complex(0, 1) * vl.col(k + 1).cast<Complex>();
            u.col(k + 1) = u.col(k).conjugate();
            pre_partner[k] = k + 1;
            pre_partner[k + 1] = k;
            k += 2;
        }
    }

    // Sort by (Re, Im), tracking the conjugate pairing through the permutation.
    std::vector<int> order(n);
    std::iota(order.begin(), order.end(), 0);
    std::sort(order.begin(), order.end(), [&](int i, int j) {
        if (lam(i).real() != lam(j).real()) return lam(i).real() < lam(j).real();
        return lam(i).imag() < lam(j).imag();
    });
    std::vector<int> pos(n); // old index -> new index
    for (int i = 0; i < n; ++i) pos[order[i]] = i;

    EigenSolution sol;
    sol.eigenvalues.resize(n);
    sol.w.resize(n, n);
    sol.z.resize(n, n);
    sol.conj_partner.assign(n, -1);
    sol.flagged.assign(n, false);

    for (int i = 0; i < n; ++i) {
        int src = order[i];
        sol.eigenvalues(i) = lam(src);
        sol.w.col(i) = w.col(src);
        // z^T A = lambda z^T without conjugation requires z = conj(u).
        CVec z_i = u.col(src).conjugate();
        Complex d = (z_i.transpose() * w.col(src))(0);
        double mag = z_i.norm() * w.col(src).norm();
        if (std::abs(d) < 1e-12 * mag) {
            sol.flagged[i] = true; // near-defective, left unnormalized
            sol.z.row(i) = z_i.transpose();
        } else {
            sol.z.row(i) = (z_i / d).transpose();
        }
        if (pre_partner[src] >= 0) sol.conj_partner[i] = pos[pre_partner[src]];
    }

    sol.gaps.resize(n);
    for (int i = 0; i < n; ++i) {
        double g = std::numeric_limits<double>::infinity();
        for (int j = 0; j < n; ++j)
            if (j != i) g = std::min(g, std::abs(sol.eigenvalues(i) - sol.eigenvalues(j)));
        sol.gaps(i) = g; // infinite for a 1x1 system: nothing to degenerate with
    }

    sol.a_norm2 = Eigen::BDCSVD<Mat>(a).singularValues()(0);
    return sol;
}

CVec eig_values(const Mat& a) {
    if (a.rows() != a.cols()) throw NumericalError("eig: matrix must be square");
    const int n = static_cast<int>(a.rows());
    Mat work = a;
    Vec wr(n), wi(n);
    int info = LAPACKE_dgeev(LAPACK_COL_MAJOR, 'N', 'N', n, work.data(), n, wr.data(),
                             wi.data(), nullptr, n, nullptr, n);
    if (info != 0)
        throw ConvergenceError("eig: dgeev did not converge (info = " + std::to_string(info) + ")");
    CVec lam(n);
    for (int i = 0; i < n; ++i) lam(i) = Complex(wr(i), wi(i));
    std::sort(lam.data(), lam.data() + n, [](Complex a_, Complex b_) {
        if (a_.real() != b_.real()) return a_.real() < b_.real();
        return a_.imag() < b_.imag();
    });
    return lam;
}

Vec margins(const EigenSolution& sol) {
    return -sol.eigenvalues.real();
}

CMat first_order_sensitivity(const EigenSolution& sol, const std::vector<Mat>& m_k, Exec exec) {
    const int n_modes = static_cast<int>(sol.eigenvalues.size());
    const int nd = static_cast<int>(m_k.size());
    CMat first(n_modes, nd);
    for (int j = 0; j < nd; ++j) {
        CMat f = modal_projection(sol.z, m_k[j], sol.w, exec);
        first.col(j) = f.diagonal();
    }
    return first;
}

CVec eigvec_derivative(const EigenSolution& sol, const Mat& m_j, int mode,
                       double gap_threshold_abs) {
    const int n = static_cast<int>(sol.eigenvalues.size());
    if (sol.gaps(mode) < gap_threshold_abs) {
        std::string cluster;
        for (int j = 0; j < n; ++j)
            if (j != mode &&
                std::abs(sol.eigenvalues(j) - sol.eigenvalues(mode)) < gap_threshold_abs) {
                if (!cluster.empty()) cluster += ", ";
                cluster += std::to_string(j);
            }
        throw NumericalError("eigvec_derivative: mode " + std::to_string(mode) +
                             " is near-degenerate (clustered with modes " + cluster + ")");
    }
    CVec mw = m_j.cast<Complex>() * sol.w.col(mode);
    CVec dw = CVec::Zero(n);
    for (int kappa = 0; kappa < n; ++kappa) {
        if (kappa == mode) continue;
        Complex coef = (sol.z.row(kappa) * mw)(0) /
                       (sol.eigenvalues(mode) - sol.eigenvalues(kappa));
        dw += coef * sol.w.col(kappa);
    }
    return dw;
}

SensitivityBundle sensitivity_bundle(const EigenSolution& sol, const std::vector<Mat>& m_k,
                                     const std::vector<Mat>* h_jl,
                                     const SensitivityOptions& opts) {
    const int n_modes = static_cast<int>(sol.eigenvalues.size());
    const int nd = static_cast<int>(m_k.size());
    const double gap_abs = opts.gap_threshold_rel * sol.a_norm2;

    SensitivityBundle bundle;
    bundle.margins = margins(sol);

    std::vector<char> skip(n_modes, false);
    for (int i = 0; i < n_modes; ++i) {
        if (sol.flagged[i]) {
            skip[i] = true;
            bundle.excluded.push_back(i);
            bundle.excluded_reasons.push_back("normalization failed (near-defective)");
        } else if (sol.gaps(i) < gap_abs) {
            skip[i] = true;
            bundle.excluded.push_back(i);
            bundle.excluded_reasons.push_back("eigenvalue gap below degeneracy threshold");
        }
    }

    std::vector<CMat> f;
    f.reserve(nd);
    for (int j = 0; j < nd; ++j) f.push_back(modal_projection(sol.z, m_k[j], sol.w, opts.exec));

    bundle.first.resize(n_modes, nd);
    for (int j = 0; j < nd; ++j) bundle.first.col(j) = f[j].diagonal();

    bundle.second = second_order_accumulate(f, sol.eigenvalues, skip, opts.exec);
    if (h_jl) {
        if (static_cast<int>(h_jl->size()) != nd * nd)
            throw NumericalError("sensitivity: expected " + std::to_string(nd * nd) +
                                 " second-derivative matrices");
        for (int i = 0; i < n_modes; ++i) {
            if (skip[i]) continue;
            for (int j = 0; j < nd; ++j)
                for (int l = 0; l < nd; ++l) {
                    Complex extra =
                        (sol.z.row(i) * (*h_jl)[j * nd + l].cast<Complex>() * sol.w.col(i))(0);
                    bundle.second[i](j, l) += extra;
                }
        }
    }
    return bundle;
}

std::vector<int> match_modes(const EigenSolution& ref, const EigenSolution& other) {
    const int n = static_cast<int>(ref.eigenvalues.size());
    struct Cand {
        double dist;
        int i, j;
    };
    std::vector<Cand> cands;
    cands.reserve(static_cast<size_t>(n) * n);
    for (int i = 0; i < n; ++i)
        for (int j = 0; j < n; ++j)
            cands.push_back({std::abs(ref.eigenvalues(i) - other.eigenvalues(j)), i, j});
    std::sort(cands.begin(), cands.end(), [&](const Cand& a, const Cand& b) {
        if (a.dist != b.dist) return a.dist < b.dist;
        // Tie-break by eigenvector overlap.
        double oa = std::abs((ref.z.row(a.i) * other.w.col(a.j))(0));
        double ob = std::abs((ref.z.row(b.i) * other.w.col(b.j))(0));
        return oa > ob;
    });
    std::vector<int> match(n, -1);
    std::vector<char> used(n, false);
    int assigned = 0;
    for (const Cand& c : cands) {
        if (assigned == n) break;
        if (match[c.i] != -1 || used[c.j]) continue;
        match[c.i] = c.j;
        used[c.j] = true;
        ++assigned;
    }
    return match;
}

} // namespace mtdc
