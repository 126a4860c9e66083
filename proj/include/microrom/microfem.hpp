#ifndef MICROROM_MICROFEM_HPP
#define MICROROM_MICROFEM_HPP

#include <Eigen/Sparse>
#include <vector>

#include "microrom/material.hpp"
#include "microrom/mesh.hpp"

namespace mrom {

struct SolverOptions {
    double tol_rel = 1e-10;
    double tol_abs = 1e-12;
    int max_iterations = 25;
    int max_load_levels = 10;  // bisection depth for load stepping
};

/// Periodic micro BVP: find the fluctuation w such that the stress field of
/// F = Ubar + grad(w) is divergence free, with w periodic across the RVE and
/// pinned at the bottom-left corner. Ubar is the symmetric macro stretch.
struct MicroProblem {
    const Mesh* mesh = nullptr;
    NeoHookean matrix_material;
    NeoHookean fiber_material;
    Tensor2 ubar = Tensor2::Identity();
};

struct ConvergenceRecord {
    int newton_iterations = 0;
    int load_steps = 0;
    double initial_residual = 0.0;
    double final_residual = 0.0;
};

struct MicroSolution {
    Eigen::VectorXd fluctuation;   // 2 * num_nodes, slaves expanded from masters
    std::vector<Tensor2> def_grad; // per quadrature point, element-major
    std::vector<Tensor2> stress;   // PK1 per quadrature point
    Tensor2 mean_def_grad = Tensor2::Zero();
    Tensor2 effective_stress = Tensor2::Zero();
    ConvergenceRecord record;
};

/// Periodic condensation map: slave nodes share the DOFs of their masters,
/// corner nodes collapse onto the bottom-left corner which is pinned.
struct PeriodicDofMap {
    std::vector<int> rep;  // node -> representative node
    std::vector<int> dof;  // node -> first of two reduced dof ids, -1 if pinned
    int num_dofs = 0;

    explicit PeriodicDofMap(const Mesh& mesh);
};

MicroSolution solve_rve(const MicroProblem& problem, const SolverOptions& opts = {},
                        const Eigen::VectorXd* initial_fluctuation = nullptr);

/// Quadrature average of a per-point stress field: |Omega|^-1 sum w_q P_q.
Tensor2 average_field(const Mesh& mesh, const std::vector<Tensor2>& field);

Tensor2 effective_stress(const MicroSolution& sol);

/// Central finite differences of the effective stress with respect to the
/// three independent components of Ubar (symmetric perturbation of the
/// off-diagonal), expanded to the full four-index tangent.
Tensor4 effective_stiffness_fd(const MicroProblem& problem, double h = 1e-6,
                               const SolverOptions& opts = {},
                               const MicroSolution* base = nullptr);

/// Assembled internal-force vector (2 * num_nodes, no condensation) of an
/// arbitrary per-quadrature-point stress field on the mesh.
Eigen::VectorXd internal_forces(const Mesh& mesh, const std::vector<Tensor2>& stress);

/// Interior-node residual and periodic-pair force mismatch of a stress field,
/// both relative to the integral of |P| over the domain. Used by the
/// equilibrium and periodicity checks.
struct EquilibriumReport {
    double interior_residual = 0.0;   // max interior nodal force / scale
    double periodic_mismatch = 0.0;   // max |f(master) + f(slave)| / scale
    double force_scale = 0.0;
};
EquilibriumReport equilibrium_report(const Mesh& mesh, const std::vector<Tensor2>& stress);

/// Volume-averaged material tangent <A>; differs from the effective tangent
/// on heterogeneous RVEs.
Tensor4 average_tangent(const MicroProblem& problem, const MicroSolution& sol);

}  // namespace mrom

#endif
