#ifndef MICROROM_MORPH_HPP
#define MICROROM_MORPH_HPP

#include <Eigen/Sparse>
#include <memory>
#include <mutex>
#include <variant>
#include <vector>

#include "microrom/mesh.hpp"
#include "microrom/spline.hpp"
#include "microrom/tensor.hpp"

namespace mrom {

struct EllipseParam {
    double a = 0.225;      // semi-major axis
    double b = 0.225;      // semi-minor axis
    double theta = 0.0;    // rotation angle, rad
};

struct SplineParam {
    // x of the left/right and y of the bottom/top control points.
    double a = 0.25;
    double b = 0.25;
    double c = 0.75;
    double d = 0.75;
};

using GeometryParam = std::variant<EllipseParam, SplineParam>;

std::vector<double> param_values(const GeometryParam& p);
GeometryParam param_from_values(bool ellipse, const std::vector<double>& v);

/// Nodal transformation displacement of the parent mesh together with its
/// gradient at every parent quadrature point.
struct TransformationMap {
    Eigen::VectorXd displacement;   // 2 * num_nodes
    std::vector<Tensor2> def_grad;  // F_mu per quadrature point, element-major
    std::vector<double> det;        // det F_mu
    GeometryParam param;
    double min_det = 0.0;
    bool quality_warning = false;   // min det below the warning band
};

struct MapQualityGate {
    double reject_below = 0.05;
    double warn_below = 0.2;
};

/// Target positions for interface nodes (parallel to node_set("interface")):
/// the circle of the parent domain mapped onto the rotated ellipse.
std::vector<Vec2> ellipse_interface_targets(const Mesh& mesh, const EllipseParam& mu,
                                            double parent_radius);

/// Spline interface built from the eight control points; evaluated at each
/// interface node's stored curve parameter. Throws InvalidGeometryError if
/// the curve self-intersects.
std::vector<Vec2> spline_interface_targets(const Mesh& mesh, const SplineParam& mu);

ClosedCubicSpline make_interface_spline(const SplineParam& mu);

/// Linear-elastic auxiliary problem on the parent mesh with unit Young's
/// modulus and Poisson ratio xi. Outer boundary fixed, interface prescribed.
/// Immutable after the (lazily computed, cached) factorization.
class AuxiliaryOperator {
  public:
    AuxiliaryOperator(const Mesh& mesh, double xi, double parent_radius = 0.225,
                      double young = 1.0);

    const Mesh& mesh() const { return *mesh_; }
    double poisson_ratio() const { return xi_; }
    double parent_radius() const { return parent_radius_; }

    /// Full assembled stiffness without boundary treatment (for inspection).
    const Eigen::SparseMatrix<double>& full_matrix() const { return k_full_; }

    std::vector<Vec2> interface_targets(const GeometryParam& mu) const;

    TransformationMap solve_transformation(const GeometryParam& mu,
                                           const MapQualityGate& gate = {}) const;

    /// Solves with explicit interface displacement values (parallel to the
    /// interface node set).
    TransformationMap solve_with_targets(const std::vector<Vec2>& targets,
                                         const GeometryParam& mu,
                                         const MapQualityGate& gate = {}) const;

    // Exposed for the reduced model.
    const std::vector<int>& free_dofs() const { return free_dof_of_node_; }
    Eigen::VectorXd rhs_for_targets(const std::vector<Vec2>& targets) const;
    Eigen::VectorXd solve_free(const Eigen::VectorXd& rhs) const;
    const Eigen::SparseMatrix<double>& k_ff() const { return k_ff_; }
    Eigen::VectorXd assemble_full_field(const std::vector<Vec2>& targets,
                                        const Eigen::VectorXd& d_free) const;

  private:
    void ensure_factorized() const;

    const Mesh* mesh_;
    double xi_;
    double parent_radius_;
    Eigen::SparseMatrix<double> k_full_;
    Eigen::SparseMatrix<double> k_ff_;  // free x free
    Eigen::SparseMatrix<double> k_fi_;  // free x interface
    std::vector<int> free_dof_of_node_;   // node -> free dof id or -1
    std::vector<int> iface_index_of_node_;  // node -> interface slot or -1
    mutable std::unique_ptr<Eigen::SimplicialLDLT<Eigen::SparseMatrix<double>>> llt_;
    mutable std::once_flag factor_once_;
};

/// POD-Galerkin reduction of the auxiliary problem. The POD basis is built
/// from full transformation-displacement solves; interface values are imposed
/// exactly by lifting (direct injection of the Dirichlet data), and the
/// retained homogeneous modes carry the interior response.
struct ReducedAuxiliary {
    Eigen::VectorXd eigenvalues;   // snapshot correlation spectrum, descending
    int retained = 0;
    Eigen::MatrixXd modes;         // full nodal fields, one column per mode
    Eigen::MatrixXd v_free;        // orthonormalized free-dof basis
    Eigen::MatrixXd a_hat;         // V^T A V
};

ReducedAuxiliary reduce_auxiliary(const AuxiliaryOperator& op,
                                  const std::vector<GeometryParam>& training, double tol = 1e-10);

TransformationMap solve_transformation_reduced(const AuxiliaryOperator& op,
                                               const ReducedAuxiliary& red,
                                               const GeometryParam& mu,
                                               const MapQualityGate& gate = {});

/// Parent nodes displaced by the map; connectivity, sets and periodic pairs
/// carried over.
Mesh morph_mesh(const Mesh& parent, const TransformationMap& map);

/// Integral of det F_mu over the parent domain (equals the morphed area).
double map_volume(const Mesh& mesh, const TransformationMap& map);

/// Gradient fields of a nodal displacement on the parent quadrature points.
void displacement_gradients(const Mesh& mesh, const Eigen::VectorXd& displacement,
                            std::vector<Tensor2>& def_grad, std::vector<double>& det);

}  // namespace mrom

#endif
