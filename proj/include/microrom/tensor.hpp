#ifndef MICROROM_TENSOR_HPP
#define MICROROM_TENSOR_HPP

#include <Eigen/Dense>
#include <array>
#include <cmath>

namespace mrom {

using Vec2 = Eigen::Vector2d;
using Tensor2 = Eigen::Matrix2d;

/// Fourth-order tensor on 2D space, A_ijkl, stored row-major over (i,j,k,l).
struct Tensor4 {
    std::array<double, 16> v{};

    double& operator()(int i, int j, int k, int l) {
        return v[((i * 2 + j) * 2 + k) * 2 + l];
    }
    double operator()(int i, int j, int k, int l) const {
        return v[((i * 2 + j) * 2 + k) * 2 + l];
    }

    Tensor4& operator+=(const Tensor4& o) {
        for (int i = 0; i < 16; ++i) v[i] += o.v[i];
        return *this;
    }
    Tensor4 operator-(const Tensor4& o) const {
        Tensor4 r;
        for (int i = 0; i < 16; ++i) r.v[i] = v[i] - o.v[i];
        return r;
    }
    Tensor4 operator*(double s) const {
        Tensor4 r;
        for (int i = 0; i < 16; ++i) r.v[i] = v[i] * s;
        return r;
    }

    /// A : B over the last two indices.
    Tensor2 contract(const Tensor2& b) const {
        Tensor2 r = Tensor2::Zero();
        for (int i = 0; i < 2; ++i)
            for (int j = 0; j < 2; ++j)
                for (int k = 0; k < 2; ++k)
                    for (int l = 0; l < 2; ++l)
                        r(i, j) += (*this)(i, j, k, l) * b(k, l);
        return r;
    }

    double norm() const {
        double s = 0;
        for (double x : v) s += x * x;
        return std::sqrt(s);
    }

    double max_major_asymmetry() const {
        double m = 0;
        for (int i = 0; i < 2; ++i)
            for (int j = 0; j < 2; ++j)
                for (int k = 0; k < 2; ++k)
                    for (int l = 0; l < 2; ++l)
                        m = std::max(m, std::abs((*this)(i, j, k, l) - (*this)(k, l, i, j)));
        return m;
    }

    static Tensor4 dyad(const Tensor2& a, const Tensor2& b) {
        Tensor4 r;
        for (int i = 0; i < 2; ++i)
            for (int j = 0; j < 2; ++j)
                for (int k = 0; k < 2; ++k)
                    for (int l = 0; l < 2; ++l)
                        r(i, j, k, l) = a(i, j) * b(k, l);
        return r;
    }
};

}  // namespace mrom

#endif
