#pragma once

#include "mtdc/exec.hpp"
#include "mtdc/types.hpp"

#include <string>
#include <vector>

namespace mtdc {

/// Full eigensolution of a real matrix with biorthogonally normalized
/// left/right eigenvectors: z_i^T w_i = 1, z_i^T w_j = 0 (i != j), and
/// z_i^T A = lambda_i z_i^T without conjugation. Modes are sorted by
/// (Re, Im); conjugate partners are tracked.
struct EigenSolution {
    CVec eigenvalues;
    CMat w;                        // right eigenvectors as columns
    CMat z;                        // left eigenvectors as rows
    Vec gaps;                      // distance to the nearest other eigenvalue
    std::vector<int> conj_partner; // partner index, -1 for real modes
    std::vector<char> flagged;     // true when z_i^T w_i ~ 0 (near-defective)
    double a_norm2 = 0.0;          // ||A||_2
};

EigenSolution eig_full(const Mat& a);

/// Eigenvalues only (no vectors, no norm); the cheap path for loci sweeps
/// and region scans.
CVec eig_values(const Mat& a);

/// delta_i = -Re lambda_i: positive for stable modes, negative for
/// unstable ones, zero on the boundary.
Vec margins(const EigenSolution& sol);

struct SensitivityOptions {
    // Exclusion gap relative to ||A||_2. The matrix mixes volt/ampere scales,
    // so its 2-norm runs ~1e7 on the reference grid; 1e-9 puts the cutoff at
    // ~0.01 rad/s, isolating genuine near-degeneracies only.
    double gap_threshold_rel = 1e-9;
    Exec exec = Exec::Serial;
};

struct SensitivityBundle {
    CMat first;                 // n_modes x n_droop, d lambda_i / d k_j
    std::vector<CMat> second;   // per mode: n_droop x n_droop, symmetric
    Vec margins;                // delta_i
    std::vector<int> excluded;  // mode indices left out of constraints
    std::vector<std::string> excluded_reasons;
};

/// First-order sensitivities d lambda_i / d k_j = z_i^T M_j w_i for every
/// mode (exclusions are handled at bundle level).
CMat first_order_sensitivity(const EigenSolution& sol, const std::vector<Mat>& m_k,
                             Exec exec = Exec::Serial);

/// Modal-expansion eigenvector derivative
///   d w_i / d k_j = sum_{kappa != i} (z_kappa^T M_j w_i) / (lambda_i - lambda_kappa) w_kappa.
/// Throws for modes whose gap is below the absolute threshold.
CVec eigvec_derivative(const EigenSolution& sol, const Mat& m_j, int mode,
                       double gap_threshold_abs);

/// First- and second-order sensitivities for all modes. `h_jl` supplies the
/// second-derivative matrices d^2 A / dk_j dk_l in row-major (j, l) order
/// when the family is not affine in k; pass nullptr for affine systems.
SensitivityBundle sensitivity_bundle(const EigenSolution& sol, const std::vector<Mat>& m_k,
                                     const std::vector<Mat>* h_jl = nullptr,
                                     const SensitivityOptions& opts = {});

/// Pairs each mode of `ref` with a mode of `other`: nearest eigenvalue
/// first, eigenvector overlap |z_ref^T w_other| as the tie-break. Used by
/// the finite-difference oracles to track modes across parameter
/// perturbations.
std::vector<int> match_modes(const EigenSolution& ref, const EigenSolution& other);

} // namespace mtdc
