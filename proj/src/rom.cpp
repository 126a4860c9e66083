#include "microrom/rom.hpp"

#include <cmath>
#include <iostream>

#include "microrom/errors.hpp"

namespace mrom {

QuadratureLayout QuadratureLayout::build(const Mesh& parent) {
    QuadratureLayout layout;
    std::vector<double> w;
    ElementFrame frame;
    for (int e = 0; e < parent.num_elements(); ++e) {
        const auto& tab = ShapeTable::for_kind(parent.elements[e].kind);
        for (size_t q = 0; q < tab.weights.size(); ++q) {
            element_frame(parent, parent.elements[e], tab.dn[q], frame, e);
            w.push_back(tab.weights[q] * frame.det);
        }
    }
    layout.point_weights = Eigen::Map<Eigen::VectorXd>(w.data(), w.size());
    layout.area = layout.point_weights.sum();
    return layout;
}

Eigen::VectorXd flatten_stress(const std::vector<Tensor2>& field) {
    Eigen::VectorXd v(4 * field.size());
    for (size_t q = 0; q < field.size(); ++q) {
        v[4 * q + 0] = field[q](0, 0);
        v[4 * q + 1] = field[q](0, 1);
        v[4 * q + 2] = field[q](1, 0);
        v[4 * q + 3] = field[q](1, 1);
    }
    return v;
}

std::vector<Tensor2> unflatten_stress(const Eigen::VectorXd& values) {
    std::vector<Tensor2> field(values.size() / 4);
    for (size_t q = 0; q < field.size(); ++q) {
        field[q](0, 0) = values[4 * q + 0];
        field[q](0, 1) = values[4 * q + 1];
        field[q](1, 0) = values[4 * q + 2];
        field[q](1, 1) = values[4 * q + 3];
    }
    return field;
}

WeightedStressSnapshot weighted_stress(const MicroSolution& sol, const TransformationMap& map,
                                       const Mesh& parent) {
    const size_t nq = map.def_grad.size();
    if (sol.stress.size() != nq)
        throw Error("weighted_stress: solution and map use different quadrature layouts");
    (void)parent;
    std::vector<Tensor2> w(nq);
    for (size_t q = 0; q < nq; ++q)
        w[q] = sol.stress[q] * map.def_grad[q].inverse().transpose() * std::abs(map.det[q]);
    WeightedStressSnapshot snap;
    snap.values = flatten_stress(w);
    return snap;
}

PODBasis pod(const std::vector<WeightedStressSnapshot>& snapshots, const Mesh& parent,
             int num_modes, double energy_tol) {
    if (snapshots.empty()) throw Error("pod: no snapshots");
    const int ns = static_cast<int>(snapshots.size());
    const long dim = snapshots[0].values.size();
    for (const auto& s : snapshots) {
        if (s.values.size() != dim) throw Error("pod: inconsistent snapshot layout");
        if (!s.values.allFinite()) throw Error("pod: snapshot contains non-finite entries");
    }

    const QuadratureLayout layout = QuadratureLayout::build(parent);
    if (4 * layout.num_points() != dim)
        throw Error("pod: snapshot layout does not match the parent mesh quadrature");

    PODBasis basis;
    basis.area = layout.area;
    basis.dof_weights.resize(dim);
    for (int q = 0; q < layout.num_points(); ++q)
        basis.dof_weights.segment<4>(4 * q).setConstant(layout.point_weights[q]);

    Eigen::MatrixXd s(dim, ns);
    for (int l = 0; l < ns; ++l) s.col(l) = snapshots[l].values;

    const Eigen::MatrixXd weighted = basis.dof_weights.asDiagonal() * s;
    const Eigen::MatrixXd corr = s.transpose() * weighted;
    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> eig(corr);
    basis.eigenvalues = eig.eigenvalues().reverse().cwiseMax(0.0);

    const double lead = basis.eigenvalues[0];
    int rank = 0;
    for (int i = 0; i < ns; ++i)
        if (basis.eigenvalues[i] > 1e-14 * lead) ++rank;

    int n = num_modes;
    if (n <= 0) {
        // smallest N with sum of dropped eigenvalues below tol * total
        const double total = basis.eigenvalues.sum();
        double kept = 0.0;
        n = 0;
        while (n < rank && total - kept > energy_tol * total) kept += basis.eigenvalues[n++];
    }
    if (n > rank) {
        std::cerr << "pod: requested " << n << " modes but numerical rank is " << rank
                  << "; truncating\n";
        n = rank;
    }

    basis.modes.resize(dim, n);
    basis.snapshot_coeffs.resize(n, ns);
    for (int m = 0; m < n; ++m) {
        const Eigen::VectorXd a = eig.eigenvectors().col(ns - 1 - m) /
                                  std::sqrt(basis.eigenvalues[m]);
        basis.snapshot_coeffs.row(m) = a.transpose();
        basis.modes.col(m) = s * a;
    }
    return basis;
}

Eigen::VectorXd project(const PODBasis& basis, const Eigen::VectorXd& snapshot_values) {
    if (snapshot_values.size() != basis.modes.rows())
        throw Error("project: snapshot layout mismatch");
    return basis.modes.transpose() *
           (basis.dof_weights.asDiagonal() * snapshot_values);
}

std::vector<Tensor2> effective_basis(const PODBasis& basis) {
    std::vector<Tensor2> out(basis.num_modes());
    for (int m = 0; m < basis.num_modes(); ++m) {
        Eigen::Vector4d acc = Eigen::Vector4d::Zero();
        for (long q = 0; 4 * q < basis.modes.rows(); ++q)
            acc += basis.dof_weights[4 * q] * basis.modes.col(m).segment<4>(4 * q);
        acc /= basis.area;
        out[m] << acc[0], acc[1], acc[2], acc[3];
    }
    return out;
}

std::vector<Tensor2> reconstruct_stress(const Eigen::VectorXd& alpha, const PODBasis& basis,
                                        const TransformationMap& map) {
    if (alpha.size() > basis.num_modes()) throw Error("reconstruct_stress: too many coefficients");
    const Eigen::VectorXd field = basis.modes.leftCols(alpha.size()) * alpha;
    std::vector<Tensor2> w = unflatten_stress(field);
    for (size_t q = 0; q < w.size(); ++q) {
        const double det = map.det[q];
        if (std::abs(det) < 1e-14) throw Error("reconstruct_stress: degenerate map determinant");
        w[q] = w[q] * map.def_grad[q].transpose() / std::abs(det);
    }
    return w;
}

std::vector<double> verify_invariance(const PODBasis& basis, const TransformationMap& map,
                                      const Mesh& parent, double floor) {
    const QuadratureLayout layout = QuadratureLayout::build(parent);
    if (4 * layout.num_points() != basis.modes.rows())
        throw Error("verify_invariance: basis/mesh layout mismatch");
    std::vector<double> residuals(basis.num_modes());
    for (int m = 0; m < basis.num_modes(); ++m) {
        const std::vector<Tensor2> mode = unflatten_stress(basis.modes.col(m));
        Tensor2 plain = Tensor2::Zero(), mapped = Tensor2::Zero();
        for (int q = 0; q < layout.num_points(); ++q) {
            plain += layout.point_weights[q] * mode[q];
            mapped += layout.point_weights[q] * mode[q] * map.def_grad[q].transpose();
        }
        residuals[m] = (mapped - plain).norm() / std::max(plain.norm(), floor);
    }
    return residuals;
}

}  // namespace mrom
