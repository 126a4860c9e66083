#ifndef MICROROM_ROM_HPP
#define MICROROM_ROM_HPP

#include <Eigen/Dense>
#include <vector>

#include "microrom/microfem.hpp"
#include "microrom/morph.hpp"

namespace mrom {

/// Quadrature weights of the parent mesh (w_q * detJ per point); the discrete
/// L2(parent) inner product weights every stress component by them.
struct QuadratureLayout {
    Eigen::VectorXd point_weights;  // per quadrature point
    double area = 0.0;

    static QuadratureLayout build(const Mesh& parent);
    int num_points() const { return static_cast<int>(point_weights.size()); }
};

/// Weighted stress P F_mu^-T |det F_mu| at parent quadrature points, stored
/// with component order (Pxx, Pxy, Pyx, Pyy) per point.
struct WeightedStressSnapshot {
    Eigen::VectorXd values;  // 4 * num_points
    Tensor2 ubar = Tensor2::Identity();
    std::vector<double> geometry;  // geometry parameter values
    int provenance = -1;           // solver record id (sample index)
};

WeightedStressSnapshot weighted_stress(const MicroSolution& sol, const TransformationMap& map,
                                       const Mesh& parent);

Eigen::VectorXd flatten_stress(const std::vector<Tensor2>& field);
std::vector<Tensor2> unflatten_stress(const Eigen::VectorXd& values);

struct PODBasis {
    Eigen::MatrixXd modes;            // (4 n_qp) x N, orthonormal in weighted L2
    Eigen::VectorXd eigenvalues;      // full spectrum, descending
    Eigen::MatrixXd snapshot_coeffs;  // a_nl: N x N_s, B_n = sum_l a_nl S_l
    Eigen::VectorXd dof_weights;      // inner-product weight per dof
    double area = 0.0;

    int num_modes() const { return static_cast<int>(modes.cols()); }
    double inner(const Eigen::VectorXd& s, const Eigen::VectorXd& t) const {
        return (s.array() * dof_weights.array() * t.array()).sum();
    }
    double norm(const Eigen::VectorXd& s) const { return std::sqrt(inner(s, s)); }
};

/// Method of snapshots on the weighted-stress set. Retains num_modes modes
/// (or the numerical rank, whichever is smaller; a warning is printed when
/// truncating). With num_modes <= 0 the energy tolerance decides.
PODBasis pod(const std::vector<WeightedStressSnapshot>& snapshots, const Mesh& parent,
             int num_modes, double energy_tol = 1e-8);

Eigen::VectorXd project(const PODBasis& basis, const Eigen::VectorXd& snapshot_values);

/// Volume averages of the modes (Eq.-level: the effective basis tensors).
std::vector<Tensor2> effective_basis(const PODBasis& basis);

/// Stress on the morphed domain: (sum_n alpha_n B_n) F_mu^T / |det F_mu|.
std::vector<Tensor2> reconstruct_stress(const Eigen::VectorXd& alpha, const PODBasis& basis,
                                        const TransformationMap& map);

/// Residuals of the invariance identity: per mode,
/// || int B_n F_mu^T - int B_n ||_F / max(|| int B_n ||_F, floor).
std::vector<double> verify_invariance(const PODBasis& basis, const TransformationMap& map,
                                      const Mesh& parent, double floor = 1e-12);

}  // namespace mrom

#endif
