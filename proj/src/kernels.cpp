#include "mtdc/kernels.hpp"

namespace mtdc {

CMat modal_projection(const CMat& z_rows, const Mat& m, const CMat& w_cols, Exec exec) {
    const int n = static_cast<int>(m.rows());
    const int n_modes = static_cast<int>(w_cols.cols());
    CMat f(z_rows.rows(), n_modes);
    for_each_index(exec, n_modes, [&](int i) {
        CVec y(n);
        for (int r = 0; r < n; ++r) {
            Complex acc(0.0, 0.0);
            for (int c = 0; c < n; ++c) acc += m(r, c) * w_cols(c, i);
            y(r) = acc;
        }
        for (int kappa = 0; kappa < z_rows.rows(); ++kappa) {
            Complex acc(0.0, 0.0);
            for (int c = 0; c < n; ++c) acc += z_rows(kappa, c) * y(c);
            f(kappa, i) = acc;
        }
    });
    return f;
}

std::vector<CMat> second_order_accumulate(const std::vector<CMat>& f, const CVec& eigenvalues,
                                          const std::vector<char>& skip, Exec exec) {
    const int n_modes = static_cast<int>(eigenvalues.size());
    const int nd = static_cast<int>(f.size());
    std::vector<CMat> tensor(n_modes, CMat::Zero(nd, nd));
    for_each_index(exec, n_modes, [&](int i) {
        if (skip[i]) return;
        CMat& t = tensor[i];
        for (int j = 0; j < nd; ++j) {
            for (int l = j; l < nd; ++l) {
                Complex acc(0.0, 0.0);
                for (int kappa = 0; kappa < n_modes; ++kappa) {
                    if (kappa == i) continue;
                    acc += (f[j](kappa, i) * f[l](i, kappa) + f[l](kappa, i) * f[j](i, kappa)) /
                           (eigenvalues(i) - eigenvalues(kappa));
                }
                t(j, l) = acc;
                t(l, j) = acc;
            }
        }
    });
    return tensor;
}

} // namespace mtdc
