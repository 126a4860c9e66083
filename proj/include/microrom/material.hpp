#ifndef MICROROM_MATERIAL_HPP
#define MICROROM_MATERIAL_HPP

#include <utility>

#include "microrom/errors.hpp"
#include "microrom/tensor.hpp"

namespace mrom {

/// Compressible Neo-Hookean solid under plane strain. The two moduli are
/// dimensionless; the out-of-plane stretch is fixed at 1, so tr(C) picks up a
/// constant +1 and J is the determinant of the in-plane deformation gradient.
struct NeoHookean {
    double c1 = 1.0;
    double d1 = 1.0;

    NeoHookean() = default;
    NeoHookean(double c1_, double d1_) : c1(c1_), d1(d1_) {
        if (c1 <= 0.0 || d1 <= 0.0) throw Error("NeoHookean moduli must be positive");
    }

    bool operator==(const NeoHookean&) const = default;
};

/// W(F) = C1 (tr C + 1 - 3 - 2 ln J) + D1 (J - 1)^2
double energy(const NeoHookean& mat, const Tensor2& F);

/// P = dW/dF = 2 C1 (F - F^-T) + 2 D1 J (J - 1) F^-T
Tensor2 pk1(const NeoHookean& mat, const Tensor2& F);

/// A = dP/dF (major-symmetric).
Tensor4 tangent(const NeoHookean& mat, const Tensor2& F);

/// (E, nu) corresponding to the moduli.
std::pair<double, double> elastic_constants(double c1, double d1);

/// F = R U with R a rotation and U symmetric positive definite (closed-form 2D).
std::pair<Tensor2, Tensor2> polar_decompose(const Tensor2& F);

namespace detail {
inline double checked_det(const Tensor2& F, int element = -1) {
    const double j = F.determinant();
    if (j <= 0.0) throw InvertedElementError(element, j);
    return j;
}
}  // namespace detail

}  // namespace mrom

#endif
