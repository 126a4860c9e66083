#include "microrom/morph.hpp"

#include <algorithm>
#include <cmath>
#include <mutex>
#include <numbers>

#include "microrom/errors.hpp"

namespace mrom {

namespace {
constexpr double kPi = std::numbers::pi;
const Vec2 kCenter(0.5, 0.5);
}  // namespace

std::vector<double> param_values(const GeometryParam& p) {
    if (const auto* e = std::get_if<EllipseParam>(&p)) return {e->a, e->b, e->theta};
    const auto& s = std::get<SplineParam>(p);
    return {s.a, s.b, s.c, s.d};
}

GeometryParam param_from_values(bool ellipse, const std::vector<double>& v) {
    if (ellipse) {
        if (v.size() != 3) throw Error("ellipse parameter needs 3 values");
        return EllipseParam{v[0], v[1], v[2]};
    }
    if (v.size() != 4) throw Error("spline parameter needs 4 values");
    return SplineParam{v[0], v[1], v[2], v[3]};
}

std::vector<Vec2> ellipse_interface_targets(const Mesh& mesh, const EllipseParam& mu,
                                            double parent_radius) {
    const auto& iface = mesh.node_set("interface");
    if (iface.empty()) throw Error("mesh has no interface nodes");
    std::vector<Vec2> targets(iface.size());
    const double ct = std::cos(mu.theta), st = std::sin(mu.theta);
    for (size_t k = 0; k < iface.size(); ++k) {
        const Vec2 rel = mesh.nodes[iface[k]] - kCenter;
        const double r = rel.norm();
        if (std::abs(r - parent_radius) > 1e-10)
            throw Error("interface node off the parent circle");
        const double phi = std::atan2(rel.y(), rel.x());
        // Rot(theta) diag(a/r, b/r) [r cos(phi-theta), r sin(phi-theta)]^T + center
        const double px = (mu.a / parent_radius) * r * std::cos(phi - mu.theta);
        const double py = (mu.b / parent_radius) * r * std::sin(phi - mu.theta);
        targets[k] = Vec2(ct * px - st * py, st * px + ct * py) + kCenter;
    }
    return targets;
}

ClosedCubicSpline make_interface_spline(const SplineParam& mu) {
    std::vector<Vec2> pts = parent_spline_control_points();
    pts[0].x() = mu.c;  // right
    pts[2].y() = mu.d;  // top
    pts[4].x() = mu.a;  // left
    pts[6].y() = mu.b;  // bottom
    return ClosedCubicSpline(std::move(pts));
}

namespace {

/// Reconstructs the curve parameter of a parent interface node by matching
/// its polar angle on the parent spline (used for meshes read from file,
/// which do not carry interface parameters).
std::vector<double> reconstruct_spline_params(const Mesh& mesh) {
    const ClosedCubicSpline parent(parent_spline_control_points());
    const auto& iface = mesh.node_set("interface");
    auto angle_of = [&](double t) {
        const Vec2 rel = parent.eval(t) - kCenter;
        return std::atan2(rel.y(), rel.x());
    };
    std::vector<double> params(iface.size());
    for (size_t k = 0; k < iface.size(); ++k) {
        const Vec2 rel = mesh.nodes[iface[k]] - kCenter;
        const double target = std::atan2(rel.y(), rel.x());
        // Polar angle increases monotonically with t for the star-shaped
        // parent; bisect within a bracket around target/2pi.
        double lo = target / (2 * kPi) - 0.2, hi = target / (2 * kPi) + 0.2;
        auto diff = [&](double t) {
            double d = angle_of(t) - target;
            while (d > kPi) d -= 2 * kPi;
            while (d < -kPi) d += 2 * kPi;
            return d;
        };
        for (int it = 0; it < 80; ++it) {
            const double mid = 0.5 * (lo + hi);
            (diff(mid) < 0 ? lo : hi) = mid;
        }
        double t = 0.5 * (lo + hi);
        params[k] = t - std::floor(t);
    }
    return params;
}

}  // namespace

std::vector<Vec2> spline_interface_targets(const Mesh& mesh, const SplineParam& mu) {
    const auto& iface = mesh.node_set("interface");
    const ClosedCubicSpline spline = make_interface_spline(mu);
    if (polyline_self_intersects(spline.sample(256)))
        throw InvalidGeometryError("spline interface self-intersects");
    std::vector<double> params = mesh.interface_params;
    if (params.size() != iface.size()) params = reconstruct_spline_params(mesh);
    std::vector<Vec2> targets(iface.size());
    for (size_t k = 0; k < iface.size(); ++k) targets[k] = spline.eval(params[k]);
    return targets;
}

// ---------------------------------------------------------------------------
// Auxiliary operator

AuxiliaryOperator::AuxiliaryOperator(const Mesh& mesh, double xi, double parent_radius,
                                     double young)
    : mesh_(&mesh), xi_(xi), parent_radius_(parent_radius) {
    if (xi <= -1.0 || xi >= 0.5) throw Error("auxiliary Poisson ratio must lie in (-1, 0.5)");
    if (young <= 0.0) throw Error("auxiliary Young's modulus must be positive");

    // Plane-strain isotropic elasticity. The modulus only scales the
    // (discarded) stresses and has no influence on the transformation.
    const double lame_l = young * xi / ((1.0 + xi) * (1.0 - 2.0 * xi));
    const double lame_m = young / (2.0 * (1.0 + xi));

    const int nn = mesh.num_nodes();
    std::vector<Eigen::Triplet<double>> trips;
    ElementFrame frame;
    for (int e = 0; e < mesh.num_elements(); ++e) {
        const Element& el = mesh.elements[e];
        const auto& tab = ShapeTable::for_kind(el.kind);
        const int en = element_node_count(el.kind);
        for (size_t q = 0; q < tab.weights.size(); ++q) {
            element_frame(mesh, el, tab.dn[q], frame, e);
            const double scale = tab.weights[q] * frame.det;
            for (int a = 0; a < en; ++a)
                for (int b = 0; b < en; ++b) {
                    const Vec2& ga = frame.grad[a];
                    const Vec2& gb = frame.grad[b];
                    const double dot = ga.dot(gb);
                    for (int i = 0; i < 2; ++i)
                        for (int k = 0; k < 2; ++k) {
                            const double v = lame_l * ga[i] * gb[k] + lame_m * ga[k] * gb[i] +
                                             (i == k ? lame_m * dot : 0.0);
                            trips.emplace_back(2 * el.node(a) + i, 2 * el.node(b) + k,
                                               scale * v);
                        }
                }
        }
    }
    k_full_.resize(2 * nn, 2 * nn);
    k_full_.setFromTriplets(trips.begin(), trips.end());

    // Node classes: outer boundary (zero), interface (prescribed), free.
    std::vector<int> cls(nn, 0);  // 0 free, 1 outer, 2 interface
    for (const char* name : {"left", "right", "bottom", "top", "corner"})
        if (mesh.has_node_set(name))
            for (int i : mesh.node_set(name)) cls[i] = 1;
    iface_index_of_node_.assign(nn, -1);
    const auto& iface = mesh.node_set("interface");
    for (size_t k = 0; k < iface.size(); ++k) {
        cls[iface[k]] = 2;
        iface_index_of_node_[iface[k]] = static_cast<int>(k);
    }
    free_dof_of_node_.assign(nn, -1);
    int nf = 0;
    for (int i = 0; i < nn; ++i)
        if (cls[i] == 0) {
            free_dof_of_node_[i] = nf;
            nf += 2;
        }

    // Restrict to free rows; split columns into free and interface blocks.
    std::vector<Eigen::Triplet<double>> tf, ti;
    for (int col = 0; col < k_full_.outerSize(); ++col) {
        const int cn = col / 2, cc = col % 2;
        for (Eigen::SparseMatrix<double>::InnerIterator it(k_full_, col); it; ++it) {
            const int rn = static_cast<int>(it.row()) / 2, rc = static_cast<int>(it.row()) % 2;
            if (cls[rn] != 0) continue;
            const int rdof = free_dof_of_node_[rn] + rc;
            if (cls[cn] == 0)
                tf.emplace_back(rdof, free_dof_of_node_[cn] + cc, it.value());
            else if (cls[cn] == 2)
                ti.emplace_back(rdof, 2 * iface_index_of_node_[cn] + cc, it.value());
        }
    }
    k_ff_.resize(nf, nf);
    k_ff_.setFromTriplets(tf.begin(), tf.end());
    k_fi_.resize(nf, 2 * static_cast<int>(iface.size()));
    k_fi_.setFromTriplets(ti.begin(), ti.end());
}

void AuxiliaryOperator::ensure_factorized() const {
    std::call_once(factor_once_, [this] {
        llt_ = std::make_unique<Eigen::SimplicialLDLT<Eigen::SparseMatrix<double>>>();
        llt_->compute(k_ff_);
        if (llt_->info() != Eigen::Success)
            throw Error("auxiliary stiffness factorization failed");
    });
}

std::vector<Vec2> AuxiliaryOperator::interface_targets(const GeometryParam& mu) const {
    if (const auto* e = std::get_if<EllipseParam>(&mu))
        return ellipse_interface_targets(*mesh_, *e, parent_radius_);
    return spline_interface_targets(*mesh_, std::get<SplineParam>(mu));
}

Eigen::VectorXd AuxiliaryOperator::rhs_for_targets(const std::vector<Vec2>& targets) const {
    const auto& iface = mesh_->node_set("interface");
    if (targets.size() != iface.size()) throw Error("target count does not match interface set");
    Eigen::VectorXd g(2 * iface.size());
    for (size_t k = 0; k < iface.size(); ++k)
        g.segment<2>(2 * k) = targets[k] - mesh_->nodes[iface[k]];
    return -(k_fi_ * g);
}

Eigen::VectorXd AuxiliaryOperator::solve_free(const Eigen::VectorXd& rhs) const {
    ensure_factorized();
    return llt_->solve(rhs);
}

Eigen::VectorXd AuxiliaryOperator::assemble_full_field(const std::vector<Vec2>& targets,
                                                       const Eigen::VectorXd& d_free) const {
    const auto& iface = mesh_->node_set("interface");
    Eigen::VectorXd d = Eigen::VectorXd::Zero(2 * mesh_->num_nodes());
    for (int i = 0; i < mesh_->num_nodes(); ++i)
        if (free_dof_of_node_[i] >= 0) d.segment<2>(2 * i) = d_free.segment<2>(free_dof_of_node_[i]);
    for (size_t k = 0; k < iface.size(); ++k)
        d.segment<2>(2 * iface[k]) = targets[k] - mesh_->nodes[iface[k]];
    return d;
}

namespace {

TransformationMap finalize_map(const Mesh& mesh, Eigen::VectorXd d, const GeometryParam& mu,
                               const MapQualityGate& gate) {
    TransformationMap map;
    map.displacement = std::move(d);
    map.param = mu;
    displacement_gradients(mesh, map.displacement, map.def_grad, map.det);
    int worst = 0;
    map.min_det = map.det[0];
    size_t q_global = 0;
    for (int e = 0; e < mesh.num_elements(); ++e) {
        const auto& tab = ShapeTable::for_kind(mesh.elements[e].kind);
        for (size_t q = 0; q < tab.weights.size(); ++q, ++q_global)
            if (map.det[q_global] < map.min_det) {
                map.min_det = map.det[q_global];
                worst = e;
            }
    }
    if (map.min_det <= gate.reject_below) throw DistortedMapError(worst, map.min_det);
    map.quality_warning = map.min_det < gate.warn_below;
    return map;
}

}  // namespace

TransformationMap AuxiliaryOperator::solve_with_targets(const std::vector<Vec2>& targets,
                                                        const GeometryParam& mu,
                                                        const MapQualityGate& gate) const {
    const Eigen::VectorXd rhs = rhs_for_targets(targets);
    const Eigen::VectorXd d_free = solve_free(rhs);
    return finalize_map(*mesh_, assemble_full_field(targets, d_free), mu, gate);
}

TransformationMap AuxiliaryOperator::solve_transformation(const GeometryParam& mu,
                                                          const MapQualityGate& gate) const {
    return solve_with_targets(interface_targets(mu), mu, gate);
}

// ---------------------------------------------------------------------------
// Reduction

ReducedAuxiliary reduce_auxiliary(const AuxiliaryOperator& op,
                                  const std::vector<GeometryParam>& training, double tol) {
    const int ns = static_cast<int>(training.size());
    if (training.empty()) throw Error("reduce_auxiliary: no training parameters");
    const int dim = static_cast<int>(param_values(training[0]).size());
    if (ns < dim + 1) throw Error("reduce_auxiliary: need at least dim(mu)+1 training parameters");

    const int nn = op.mesh().num_nodes();
    Eigen::MatrixXd snapshots(2 * nn, ns);
    for (int l = 0; l < ns; ++l)
        snapshots.col(l) = op.solve_transformation(training[l]).displacement;

    const Eigen::MatrixXd corr = snapshots.transpose() * snapshots;
    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> eig(corr);

    ReducedAuxiliary red;
    red.eigenvalues = eig.eigenvalues().reverse();
    const double floor = std::max(red.eigenvalues[0], 0.0) * tol;
    red.retained = 0;
    for (int i = 0; i < ns; ++i)
        if (red.eigenvalues[i] > floor) ++red.retained;
    if (red.retained == 0) throw Error("reduce_auxiliary: no modes above tolerance");

    red.modes.resize(2 * nn, red.retained);
    for (int m = 0; m < red.retained; ++m) {
        const Eigen::VectorXd coeff = eig.eigenvectors().col(ns - 1 - m);
        red.modes.col(m) = snapshots * coeff / std::sqrt(red.eigenvalues[m]);
    }

    // Free-dof basis for the Galerkin correction, orthonormalized for
    // conditioning.
    const auto& fmap = op.free_dofs();
    int nf = 0;
    for (int i = 0; i < nn; ++i)
        if (fmap[i] >= 0) nf += 2;
    Eigen::MatrixXd vf(nf, red.retained);
    for (int i = 0; i < nn; ++i)
        if (fmap[i] >= 0) vf.middleRows(fmap[i], 2) = red.modes.middleRows(2 * i, 2);
    const Eigen::HouseholderQR<Eigen::MatrixXd> qr(vf);
    red.v_free = qr.householderQ() * Eigen::MatrixXd::Identity(nf, red.retained);
    red.a_hat = red.v_free.transpose() * (op.k_ff() * red.v_free);
    return red;
}

TransformationMap solve_transformation_reduced(const AuxiliaryOperator& op,
                                               const ReducedAuxiliary& red,
                                               const GeometryParam& mu,
                                               const MapQualityGate& gate) {
    const std::vector<Vec2> targets = op.interface_targets(mu);
    const Eigen::VectorXd rhs = op.rhs_for_targets(targets);
    const Eigen::VectorXd d_hat = red.a_hat.ldlt().solve(red.v_free.transpose() * rhs);
    const Eigen::VectorXd d_free = red.v_free * d_hat;
    // assemble_full_field injects the exact interface values (the lifting).
    return finalize_map(op.mesh(), op.assemble_full_field(targets, d_free), mu, gate);
}

// ---------------------------------------------------------------------------

void displacement_gradients(const Mesh& mesh, const Eigen::VectorXd& displacement,
                            std::vector<Tensor2>& def_grad, std::vector<double>& det) {
    def_grad.clear();
    det.clear();
    ElementFrame frame;
    for (int e = 0; e < mesh.num_elements(); ++e) {
        const Element& el = mesh.elements[e];
        const auto& tab = ShapeTable::for_kind(el.kind);
        const int nn = element_node_count(el.kind);
        for (size_t q = 0; q < tab.weights.size(); ++q) {
            element_frame(mesh, el, tab.dn[q], frame, e);
            Tensor2 grad = Tensor2::Zero();
            for (int a = 0; a < nn; ++a)
                grad += Vec2(displacement.segment<2>(2 * el.node(a))) * frame.grad[a].transpose();
            const Tensor2 f = Tensor2::Identity() + grad;
            def_grad.push_back(f);
            det.push_back(f.determinant());
        }
    }
}

Mesh morph_mesh(const Mesh& parent, const TransformationMap& map) {
    Mesh morphed = parent;
    for (int i = 0; i < parent.num_nodes(); ++i)
        morphed.nodes[i] += Vec2(map.displacement.segment<2>(2 * i));
    morphed.validate();
    return morphed;
}

double map_volume(const Mesh& mesh, const TransformationMap& map) {
    ElementFrame frame;
    double vol = 0.0;
    size_t q_global = 0;
    for (int e = 0; e < mesh.num_elements(); ++e) {
        const auto& tab = ShapeTable::for_kind(mesh.elements[e].kind);
        for (size_t q = 0; q < tab.weights.size(); ++q, ++q_global) {
            element_frame(mesh, mesh.elements[e], tab.dn[q], frame, e);
            vol += tab.weights[q] * frame.det * map.det[q_global];
        }
    }
    return vol;
}

}  // namespace mrom
