#include "microrom/material.hpp"

#include <doctest.h>

#include <random>

#include "test_helpers.hpp"

using namespace mrom;
using namespace mrom::testing;

TEST_CASE("energy vanishes in the reference state") {
    CHECK(energy(NeoHookean(1, 1), Tensor2::Identity()) == doctest::Approx(0.0).epsilon(1e-15));
}

TEST_CASE("energy of an isochoric stretch") {
    // J = 1 kills the log and volumetric terms.
    Tensor2 f = Tensor2::Zero();
    f(0, 0) = 1.1;
    f(1, 1) = 1.0 / 1.1;
    const double expected = 1.1 * 1.1 + 1.0 / (1.1 * 1.1) - 2.0;
    CHECK(energy(NeoHookean(1, 1), f) == doctest::Approx(expected).epsilon(1e-14));
}

TEST_CASE("energy is frame indifferent") {
    std::mt19937 rng(7);
    std::uniform_real_distribution<double> ang(-3.0, 3.0);
    const NeoHookean mat(2.0, 0.5);
    for (int i = 0; i < 10; ++i) {
        const Tensor2 f = random_def_grad(rng);
        const Tensor2 r = rotation(ang(rng));
        CHECK(energy(mat, r * f) == doctest::Approx(energy(mat, f)).epsilon(1e-12));
    }
}

TEST_CASE("energy rejects inverted states") {
    Tensor2 f = Tensor2::Identity();
    f(0, 0) = -1.0;
    CHECK_THROWS_AS(energy(NeoHookean(1, 1), f), InvertedElementError);
}

TEST_CASE("pk1 vanishes in the reference state") {
    CHECK(pk1(NeoHookean(3, 2), Tensor2::Identity()).norm() <= 1e-14);
}

TEST_CASE("pk1 matches finite differences of the energy") {
    std::mt19937 rng(11);
    const NeoHookean mat(1.0, 1.0);
    for (int i = 0; i < 20; ++i) {
        const Tensor2 f = random_def_grad(rng);
        const Tensor2 p = pk1(mat, f);
        const Tensor2 p_fd = fd_pk1(mat, f);
        CHECK((p - p_fd).norm() <= 1e-7 * std::max(1.0, p.norm()));
    }
}

TEST_CASE("pk1 small-strain limit is linear elasticity with E=5, nu=0.25") {
    const NeoHookean mat(1, 1);
    const double eps = 1e-6;
    Tensor2 f = Tensor2::Identity();
    f(0, 0) += eps;
    const Tensor2 p = pk1(mat, f) / eps;
    const Tensor4 a = isotropic_tangent(5.0, 0.25);
    CHECK(p(0, 0) == doctest::Approx(a(0, 0, 0, 0)).epsilon(1e-5));
    CHECK(p(1, 1) == doctest::Approx(a(1, 1, 0, 0)).epsilon(1e-5));
    CHECK(std::abs(p(0, 1)) <= 1e-5);
}

TEST_CASE("tangent matches finite differences of pk1") {
    std::mt19937 rng(13);
    const NeoHookean mat(1.5, 0.7);
    for (int i = 0; i < 20; ++i) {
        const Tensor2 f = random_def_grad(rng);
        const Tensor4 a = tangent(mat, f);
        const Tensor4 a_fd = fd_tangent(mat, f);
        CHECK((a - a_fd).norm() <= 1e-6 * a.norm());
    }
}

TEST_CASE("tangent at identity is the isotropic elasticity tensor") {
    const NeoHookean mat(1, 1);
    const auto [e, nu] = elastic_constants(mat.c1, mat.d1);
    const Tensor4 a = tangent(mat, Tensor2::Identity());
    const Tensor4 iso = isotropic_tangent(e, nu);
    CHECK((a - iso).norm() <= 1e-12);
}

TEST_CASE("tangent has major symmetry") {
    std::mt19937 rng(17);
    for (int i = 0; i < 10; ++i) {
        const Tensor4 a = tangent(NeoHookean(1, 1), random_def_grad(rng));
        CHECK(a.max_major_asymmetry() <= 1e-12);
    }
}

TEST_CASE("elastic constants") {
    auto [e, nu] = elastic_constants(1, 1);
    CHECK(e == doctest::Approx(5.0).epsilon(1e-15));
    CHECK(nu == doctest::Approx(0.25).epsilon(1e-15));
    auto [e2, nu2] = elastic_constants(100, 100);
    CHECK(e2 == doctest::Approx(500.0).epsilon(1e-15));
    CHECK(nu2 == doctest::Approx(0.25).epsilon(1e-15));
}

TEST_CASE("polar decomposition") {
    SUBCASE("symmetric positive definite input") {
        Tensor2 f;
        f << 2.0, 0.3, 0.3, 1.5;
        const auto [r, u] = polar_decompose(f);
        CHECK((r - Tensor2::Identity()).norm() <= 1e-14);
        CHECK((u - f).norm() <= 1e-14);
    }
    SUBCASE("pure rotation") {
        const Tensor2 f = rotation(30.0 * std::numbers::pi / 180.0);
        const auto [r, u] = polar_decompose(f);
        CHECK((u - Tensor2::Identity()).norm() <= 1e-14);
        CHECK((r - f).norm() <= 1e-14);
    }
    SUBCASE("random reconstruction") {
        std::mt19937 rng(23);
        for (int i = 0; i < 50; ++i) {
            const Tensor2 f = random_def_grad(rng);
            const auto [r, u] = polar_decompose(f);
            CHECK((r * u - f).norm() <= 1e-13);
            CHECK((r.transpose() * r - Tensor2::Identity()).norm() <= 1e-13);
            CHECK((u - u.transpose()).norm() <= 1e-14);
            Eigen::SelfAdjointEigenSolver<Tensor2> eig(u);
            CHECK(eig.eigenvalues().minCoeff() > 0.0);
        }
    }
}

TEST_CASE("gradient chain over the det range [0.5, 2]") {
    std::mt19937 rng(29);
    const NeoHookean mat(1, 1);
    for (int i = 0; i < 100; ++i) {
        const Tensor2 f = random_def_grad(rng, 0.5, 2.0);
        CHECK((pk1(mat, f) - fd_pk1(mat, f)).norm() <=
              1e-6 * std::max(1.0, pk1(mat, f).norm()));
        CHECK((tangent(mat, f) - fd_tangent(mat, f)).norm() <= 1e-6 * tangent(mat, f).norm());
    }
}
