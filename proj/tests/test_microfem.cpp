#include "microrom/microfem.hpp"

#include <doctest.h>

#include "microrom/errors.hpp"
#include "test_helpers.hpp"

using namespace mrom;

namespace {

const Mesh& coarse_mesh() {
    static const Mesh mesh = build_parent_disk_mesh(0.225, 2);
    return mesh;
}

MicroProblem heterogeneous_problem(const Tensor2& ubar) {
    MicroProblem p;
    p.mesh = &coarse_mesh();
    p.matrix_material = NeoHookean(1, 1);
    p.fiber_material = NeoHookean(100, 100);
    p.ubar = ubar;
    return p;
}

Tensor2 stretch(double xx, double yy, double xy = 0.0) {
    Tensor2 u;
    u << xx, xy, xy, yy;
    return u;
}

}  // namespace

TEST_CASE("identity load leaves a homogeneous RVE stress free") {
    MicroProblem p = heterogeneous_problem(Tensor2::Identity());
    p.fiber_material = p.matrix_material;
    const MicroSolution sol = solve_rve(p);
    CHECK(sol.fluctuation.lpNorm<Eigen::Infinity>() <= 1e-12);
    for (const Tensor2& s : sol.stress) CHECK(s.norm() <= 1e-12);
}

TEST_CASE("homogeneous RVE admits the affine solution") {
    MicroProblem p = heterogeneous_problem(stretch(1.1, 0.95, 0.04));
    p.fiber_material = p.matrix_material;
    const MicroSolution sol = solve_rve(p);
    CHECK(sol.fluctuation.lpNorm<Eigen::Infinity>() <= 1e-10);
    CHECK((sol.effective_stress - pk1(p.matrix_material, p.ubar)).norm() <= 1e-10);
    CHECK((sol.mean_def_grad - p.ubar).norm() <= 1e-12);
}

TEST_CASE("heterogeneous solve satisfies the coupling and equilibrium invariants") {
    const MicroProblem p = heterogeneous_problem(stretch(1.08, 0.97, 0.03));
    const MicroSolution sol = solve_rve(p);

    CHECK((sol.mean_def_grad - p.ubar).norm() <= 1e-10);
    CHECK(sol.fluctuation.lpNorm<Eigen::Infinity>() > 1e-4);  // genuinely heterogeneous

    for (const auto& pair : coarse_mesh().periodic_pairs) {
        const Vec2 wm = sol.fluctuation.segment<2>(2 * pair.master);
        const Vec2 ws = sol.fluctuation.segment<2>(2 * pair.slave);
        CHECK((wm - ws).norm() <= 1e-14);
    }

    const EquilibriumReport rep = equilibrium_report(coarse_mesh(), sol.stress);
    CHECK(rep.interior_residual <= 1e-8);
    CHECK(rep.periodic_mismatch <= 1e-8);
}

TEST_CASE("effective stress is stable under mesh refinement") {
    const Tensor2 ubar = stretch(1.1, 1.0);
    MicroProblem p = heterogeneous_problem(ubar);
    const Tensor2 coarse = solve_rve(p).effective_stress;
    const Mesh fine_mesh = build_parent_disk_mesh(0.225, 4);
    p.mesh = &fine_mesh;
    const Tensor2 fine = solve_rve(p).effective_stress;
    CHECK((coarse - fine).norm() / fine.norm() <= 0.01);
}

TEST_CASE("stiff inclusion response lies between the homogeneous bounds") {
    const Tensor2 ubar = stretch(1.1, 1.0);
    MicroProblem p = heterogeneous_problem(ubar);
    const double mixed = solve_rve(p).effective_stress(0, 0);
    const double soft = pk1(p.matrix_material, ubar)(0, 0);
    const double stiff = pk1(p.fiber_material, ubar)(0, 0);
    CHECK(mixed > soft);
    CHECK(mixed < stiff);
}

TEST_CASE("effective stiffness reduces to the material tangent on a homogeneous RVE") {
    const Tensor2 ubar = stretch(1.05, 0.98, 0.02);
    MicroProblem p = heterogeneous_problem(ubar);
    p.fiber_material = p.matrix_material;

    const Tensor4 exact = tangent(p.matrix_material, ubar);
    Tensor4 sym = exact;
    for (int i = 0; i < 2; ++i)
        for (int j = 0; j < 2; ++j) {
            const double m = 0.5 * (exact(i, j, 0, 1) + exact(i, j, 1, 0));
            sym(i, j, 0, 1) = m;
            sym(i, j, 1, 0) = m;
        }

    const double h = 1e-3;
    const Tensor4 fd = effective_stiffness_fd(p, h);
    CHECK((fd - sym).norm() <= 50.0 * h * h + 1e-8);

    SUBCASE("halving the step reduces the error about fourfold") {
        const double h1 = 0.02, h2 = 0.01;
        const double e1 = (effective_stiffness_fd(p, h1) - sym).norm();
        const double e2 = (effective_stiffness_fd(p, h2) - sym).norm();
        CHECK(e1 / e2 > 3.0);
        CHECK(e1 / e2 < 5.2);
    }
}

TEST_CASE("effective stiffness of the composite") {
    const Tensor2 ubar = stretch(1.0, 1.0, 0.05);  // shear
    const MicroProblem p = heterogeneous_problem(ubar);
    const MicroSolution sol = solve_rve(p);
    const double h = 1e-4;
    const Tensor4 eff = effective_stiffness_fd(p, h, {}, &sol);

    SUBCASE("energetic Hessian is symmetric to the FD tolerance") {
        CHECK(mrom::testing::reduced_hessian_asymmetry(eff) <= 5.0 * h);
    }
    SUBCASE("volume-averaged tangent differs from the effective one") {
        const Tensor4 avg = average_tangent(p, sol);
        CHECK((avg - eff).norm() > 1e-3);
    }
}

TEST_CASE("effective stress depends continuously on the load") {
    const Tensor2 ubar = stretch(1.06, 0.98, 0.02);
    const MicroProblem p = heterogeneous_problem(ubar);
    const Tensor2 base = solve_rve(p).effective_stress;
    MicroProblem pert = p;
    pert.ubar = ubar + 1e-6 * stretch(1.0, 1.0, 1.0);
    CHECK((solve_rve(pert).effective_stress - base).norm() <= 1e-3);
}

TEST_CASE("invalid loads are rejected") {
    MicroProblem p = heterogeneous_problem(Tensor2::Identity());
    p.ubar << 1.0, 0.2, -0.2, 1.0;  // not symmetric
    CHECK_THROWS_AS(solve_rve(p), Error);
    p.ubar << 1.0, 2.0, 2.0, 1.0;  // negative determinant
    CHECK_THROWS_AS(solve_rve(p), Error);
}

TEST_CASE("hopeless loads exhaust the load stepping") {
    MicroProblem p = heterogeneous_problem(stretch(0.05, 0.05));
    SolverOptions opts;
    opts.max_iterations = 8;
    opts.max_load_levels = 3;
    CHECK_THROWS_AS(solve_rve(p, opts), NonConvergenceError);
}
