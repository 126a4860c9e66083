#include "microrom/material.hpp"

#include <cmath>

namespace mrom {

double energy(const NeoHookean& mat, const Tensor2& F) {
    const double j = detail::checked_det(F);
    const double trc = (F.transpose() * F).trace() + 1.0;  // plane strain
    return mat.c1 * (trc - 3.0 - 2.0 * std::log(j)) + mat.d1 * (j - 1.0) * (j - 1.0);
}

Tensor2 pk1(const NeoHookean& mat, const Tensor2& F) {
    const double j = detail::checked_det(F);
    const Tensor2 Fit = F.inverse().transpose();
    return 2.0 * mat.c1 * (F - Fit) + 2.0 * mat.d1 * j * (j - 1.0) * Fit;
}

Tensor4 tangent(const NeoHookean& mat, const Tensor2& F) {
    const double j = detail::checked_det(F);
    const Tensor2 Fit = F.inverse().transpose();
    // d(F^-T)_ij/dF_kl = -F^-T_il F^-T_kj, dJ/dF = J F^-T
    const double a = 2.0 * mat.c1 - 2.0 * mat.d1 * j * (j - 1.0);
    const double b = 2.0 * mat.d1 * j * (2.0 * j - 1.0);
    Tensor4 A;
    for (int i = 0; i < 2; ++i)
        for (int jj = 0; jj < 2; ++jj)
            for (int k = 0; k < 2; ++k)
                for (int l = 0; l < 2; ++l)
                    A(i, jj, k, l) = 2.0 * mat.c1 * (i == k && jj == l ? 1.0 : 0.0) +
                                     a * Fit(i, l) * Fit(k, jj) + b * Fit(i, jj) * Fit(k, l);
    return A;
}

std::pair<double, double> elastic_constants(double c1, double d1) {
    if (c1 <= 0.0 || d1 <= 0.0) throw Error("elastic_constants: moduli must be positive");
    const double e = 2.0 * c1 * (3.0 * d1 + 2.0 * c1) / (c1 + d1);
    const double nu = d1 / (2.0 * (c1 + d1));
    return {e, nu};
}

std::pair<Tensor2, Tensor2> polar_decompose(const Tensor2& F) {
    detail::checked_det(F);
    const double phi = std::atan2(F(1, 0) - F(0, 1), F(0, 0) + F(1, 1));
    Tensor2 R;
    R << std::cos(phi), -std::sin(phi), std::sin(phi), std::cos(phi);
    Tensor2 U = R.transpose() * F;
    U = 0.5 * (U + U.transpose().eval());  // kill roundoff asymmetry
    return {R, U};
}

}  // namespace mrom
