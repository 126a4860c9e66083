#include "microrom/microfem.hpp"

#include <algorithm>
#include <cmath>

#include "microrom/errors.hpp"

namespace mrom {

PeriodicDofMap::PeriodicDofMap(const Mesh& mesh) {
    const int nn = mesh.num_nodes();
    rep.resize(nn);
    for (int i = 0; i < nn; ++i) rep[i] = i;
    for (const auto& p : mesh.periodic_pairs) rep[p.slave] = p.master;
    for (int i = 0; i < nn; ++i)
        while (rep[rep[i]] != rep[i]) rep[i] = rep[rep[i]];

    // All corners are periodic images of the bottom-left one, which is pinned
    // to remove the rigid translation.
    int pin = -1;
    if (mesh.has_node_set("corner") && !mesh.node_set("corner").empty()) {
        const auto& corners = mesh.node_set("corner");
        pin = *std::min_element(corners.begin(), corners.end(), [&](int a, int b) {
            return mesh.nodes[a].x() + mesh.nodes[a].y() < mesh.nodes[b].x() + mesh.nodes[b].y();
        });
        for (int c : corners) rep[c] = pin;
    } else if (!mesh.periodic_pairs.empty()) {
        throw MeshError("periodic mesh without corner set");
    } else {
        pin = 0;  // plain mesh: pin the first node
    }

    dof.assign(nn, -1);
    num_dofs = 0;
    for (int i = 0; i < nn; ++i) {
        if (rep[i] != i || i == pin) continue;
        dof[i] = num_dofs;
        num_dofs += 2;
    }
    for (int i = 0; i < nn; ++i) dof[i] = dof[rep[i]];
}

namespace {

struct Assembler {
    const Mesh& mesh;
    const MicroProblem& problem;
    const PeriodicDofMap& dofs;
    std::vector<const NeoHookean*> el_mat;  // per element

    Assembler(const Mesh& m, const MicroProblem& p, const PeriodicDofMap& d)
        : mesh(m), problem(p), dofs(d) {
        el_mat.assign(mesh.num_elements(), &problem.matrix_material);
        for (int e : mesh.element_set("fiber")) el_mat[e] = &problem.fiber_material;
        for (int e : mesh.element_set("matrix")) el_mat[e] = &problem.matrix_material;
    }

    void gather(const Eigen::VectorXd& w, const Element& el, int nn,
                std::array<Vec2, 6>& wn) const {
        for (int a = 0; a < nn; ++a) {
            const int d = dofs.dof[el.node(a)];
            wn[a] = d >= 0 ? Vec2(w[d], w[d + 1]) : Vec2::Zero();
        }
    }

    // Residual of the condensed weak form; throws InvertedElementError if the
    // trial state has det F <= 0 anywhere.
    Eigen::VectorXd residual(const Eigen::VectorXd& w, const Tensor2& ubar) const {
        Eigen::VectorXd r = Eigen::VectorXd::Zero(dofs.num_dofs);
        ElementFrame frame;
        std::array<Vec2, 6> wn;
        for (int e = 0; e < mesh.num_elements(); ++e) {
            const Element& el = mesh.elements[e];
            const auto& tab = ShapeTable::for_kind(el.kind);
            const int nn = element_node_count(el.kind);
            gather(w, el, nn, wn);
            for (size_t q = 0; q < tab.weights.size(); ++q) {
                element_frame(mesh, el, tab.dn[q], frame, e);
                Tensor2 gw = Tensor2::Zero();
                for (int a = 0; a < nn; ++a) gw += wn[a] * frame.grad[a].transpose();
                const Tensor2 f = ubar + gw;
                if (f.determinant() <= 0.0) throw InvertedElementError(e, f.determinant());
                const Tensor2 p = pk1(*el_mat[e], f);
                const double scale = tab.weights[q] * frame.det;
                for (int a = 0; a < nn; ++a) {
                    const int d = dofs.dof[el.node(a)];
                    if (d < 0) continue;
                    r.segment<2>(d) += scale * (p * frame.grad[a]);
                }
            }
        }
        return r;
    }

    Eigen::SparseMatrix<double> tangent_matrix(const Eigen::VectorXd& w,
                                               const Tensor2& ubar) const {
        std::vector<Eigen::Triplet<double>> trips;
        trips.reserve(mesh.num_elements() * 144);
        ElementFrame frame;
        std::array<Vec2, 6> wn;
        for (int e = 0; e < mesh.num_elements(); ++e) {
            const Element& el = mesh.elements[e];
            const auto& tab = ShapeTable::for_kind(el.kind);
            const int nn = element_node_count(el.kind);
            gather(w, el, nn, wn);
            for (size_t q = 0; q < tab.weights.size(); ++q) {
                element_frame(mesh, el, tab.dn[q], frame, e);
                Tensor2 gw = Tensor2::Zero();
                for (int a = 0; a < nn; ++a) gw += wn[a] * frame.grad[a].transpose();
                const Tensor2 f = ubar + gw;
                const Tensor4 A = tangent(*el_mat[e], f);
                const double scale = tab.weights[q] * frame.det;
                for (int a = 0; a < nn; ++a) {
                    const int da = dofs.dof[el.node(a)];
                    if (da < 0) continue;
                    for (int b = 0; b < nn; ++b) {
                        const int db = dofs.dof[el.node(b)];
                        if (db < 0) continue;
                        for (int i = 0; i < 2; ++i)
                            for (int k = 0; k < 2; ++k) {
                                double v = 0.0;
                                for (int jj = 0; jj < 2; ++jj)
                                    for (int l = 0; l < 2; ++l)
                                        v += frame.grad[a][jj] * A(i, jj, k, l) *
                                             frame.grad[b][l];
                                trips.emplace_back(da + i, db + k, scale * v);
                            }
                    }
                }
            }
        }
        Eigen::SparseMatrix<double> K(dofs.num_dofs, dofs.num_dofs);
        K.setFromTriplets(trips.begin(), trips.end());
        return K;
    }
};

struct NewtonOutcome {
    bool converged = false;
    int iterations = 0;
    double initial_residual = 0.0;
    double final_residual = 0.0;
};

NewtonOutcome newton_solve(const Assembler& asmb, const SolverOptions& opts,
                           const Tensor2& ubar, Eigen::VectorXd& w) {
    NewtonOutcome out;
    Eigen::VectorXd r;
    try {
        r = asmb.residual(w, ubar);
    } catch (const InvertedElementError&) {
        return out;
    }
    double rnorm = r.norm();
    out.initial_residual = rnorm;
    const double target = std::max(opts.tol_rel * rnorm, opts.tol_abs);

    Eigen::SimplicialLDLT<Eigen::SparseMatrix<double>> ldlt;
    bool analyzed = false;
    for (int it = 0; it < opts.max_iterations; ++it) {
        if (rnorm <= target) {
            out.converged = true;
            out.final_residual = rnorm;
            return out;
        }
        ++out.iterations;
        const Eigen::SparseMatrix<double> K = asmb.tangent_matrix(w, ubar);
        if (!analyzed) {
            ldlt.analyzePattern(K);
            analyzed = true;
        }
        ldlt.factorize(K);
        Eigen::VectorXd dw;
        if (ldlt.info() == Eigen::Success) {
            dw = ldlt.solve(-r);
        } else {
            Eigen::SparseLU<Eigen::SparseMatrix<double>> lu(K);
            if (lu.info() != Eigen::Success) return out;
            dw = lu.solve(-r);
        }

        // Backtracking on the residual norm; inverted trial states shrink the
        // step as well.
        double lambda = 1.0;
        bool accepted = false;
        for (int ls = 0; ls < 10 && !accepted; ++ls) {
            try {
                Eigen::VectorXd r_try = asmb.residual(w + lambda * dw, ubar);
                const double rn = r_try.norm();
                if (rn <= target || rn < (1.0 - 1e-4 * lambda) * rnorm) {
                    w += lambda * dw;
                    r = std::move(r_try);
                    rnorm = rn;
                    accepted = true;
                }
            } catch (const InvertedElementError&) {
            }
            if (!accepted) lambda *= 0.5;
        }
        if (!accepted) {
            out.final_residual = rnorm;
            return out;
        }
    }
    out.converged = rnorm <= target;
    out.final_residual = rnorm;
    return out;
}

}  // namespace

MicroSolution solve_rve(const MicroProblem& problem, const SolverOptions& opts,
                        const Eigen::VectorXd* initial_fluctuation) {
    const Mesh& mesh = *problem.mesh;
    if ((problem.ubar - problem.ubar.transpose()).norm() > 1e-12)
        throw Error("solve_rve: Ubar must be symmetric");
    if (problem.ubar.determinant() <= 0.0) throw Error("solve_rve: det(Ubar) must be positive");

    const PeriodicDofMap dofs(mesh);
    const Assembler asmb(mesh, problem, dofs);

    Eigen::VectorXd w = Eigen::VectorXd::Zero(dofs.num_dofs);
    if (initial_fluctuation) {
        for (int i = 0; i < mesh.num_nodes(); ++i) {
            const int d = dofs.dof[i];
            if (d >= 0 && dofs.rep[i] == i) w.segment<2>(d) = initial_fluctuation->segment<2>(2 * i);
        }
    }

    const Tensor2 increment = problem.ubar - Tensor2::Identity();
    const double min_step = std::pow(0.5, opts.max_load_levels);
    MicroSolution sol;
    double t_done = 0.0, step = 1.0;
    double last_residual = 0.0;
    while (t_done < 1.0) {
        const double t = std::min(1.0, t_done + step);
        const Tensor2 ubar_t = Tensor2::Identity() + t * increment;
        Eigen::VectorXd w_try = w;
        const NewtonOutcome res = newton_solve(asmb, opts, ubar_t, w_try);
        sol.record.newton_iterations += res.iterations;
        if (res.converged) {
            w = std::move(w_try);
            t_done = t;
            ++sol.record.load_steps;
            step = 2.0 * step;
            if (t_done >= 1.0) {
                sol.record.initial_residual = res.initial_residual;
                sol.record.final_residual = res.final_residual;
            }
        } else {
            last_residual = res.final_residual;
            step *= 0.5;
            if (step < min_step)
                throw NonConvergenceError("micro Newton diverged with load stepping exhausted",
                                          last_residual);
        }
    }

    // Expand the fluctuation and evaluate the per-point fields.
    sol.fluctuation = Eigen::VectorXd::Zero(2 * mesh.num_nodes());
    for (int i = 0; i < mesh.num_nodes(); ++i) {
        const int d = dofs.dof[i];
        if (d >= 0) sol.fluctuation.segment<2>(2 * i) = w.segment<2>(d);
    }

    ElementFrame frame;
    double area = 0.0;
    Tensor2 mean_f = Tensor2::Zero(), mean_p = Tensor2::Zero();
    for (int e = 0; e < mesh.num_elements(); ++e) {
        const Element& el = mesh.elements[e];
        const auto& tab = ShapeTable::for_kind(el.kind);
        const int nn = element_node_count(el.kind);
        for (size_t q = 0; q < tab.weights.size(); ++q) {
            element_frame(mesh, el, tab.dn[q], frame, e);
            Tensor2 gw = Tensor2::Zero();
            for (int a = 0; a < nn; ++a)
                gw += Vec2(sol.fluctuation.segment<2>(2 * el.node(a))) * frame.grad[a].transpose();
            const Tensor2 f = problem.ubar + gw;
            const Tensor2 p = pk1(*asmb.el_mat[e], f);
            sol.def_grad.push_back(f);
            sol.stress.push_back(p);
            const double scale = tab.weights[q] * frame.det;
            area += scale;
            mean_f += scale * f;
            mean_p += scale * p;
        }
    }
    sol.mean_def_grad = mean_f / area;
    sol.effective_stress = mean_p / area;
    return sol;
}

Tensor2 average_field(const Mesh& mesh, const std::vector<Tensor2>& field) {
    ElementFrame frame;
    double area = 0.0;
    Tensor2 mean = Tensor2::Zero();
    size_t q_global = 0;
    for (int e = 0; e < mesh.num_elements(); ++e) {
        const auto& tab = ShapeTable::for_kind(mesh.elements[e].kind);
        for (size_t q = 0; q < tab.weights.size(); ++q, ++q_global) {
            element_frame(mesh, mesh.elements[e], tab.dn[q], frame, e);
            const double scale = tab.weights[q] * frame.det;
            area += scale;
            mean += scale * field.at(q_global);
        }
    }
    return mean / area;
}

Tensor2 effective_stress(const MicroSolution& sol) { return sol.effective_stress; }

Tensor4 effective_stiffness_fd(const MicroProblem& problem, double h, const SolverOptions& opts,
                               const MicroSolution* base) {
    MicroSolution local_base;
    if (!base) {
        local_base = solve_rve(problem, opts);
        base = &local_base;
    }
    // Perturbation directions: xx, yy, symmetric xy.
    const std::array<Tensor2, 3> dirs = {
        (Tensor2() << 1, 0, 0, 0).finished(),
        (Tensor2() << 0, 0, 0, 1).finished(),
        (Tensor2() << 0, 1, 1, 0).finished(),
    };
    std::array<Tensor2, 3> dp;
    for (int k = 0; k < 3; ++k) {
        std::array<Tensor2, 2> p;
        for (int sign = 0; sign < 2; ++sign) {
            MicroProblem pert = problem;
            pert.ubar = problem.ubar + (sign == 0 ? h : -h) * dirs[k];
            static const char* names[3] = {"xx", "yy", "xy"};
            try {
                p[sign] = solve_rve(pert, opts, &base->fluctuation).effective_stress;
            } catch (const Error& e) {
                throw Error(std::string("effective_stiffness_fd: perturbed solve failed for "
                                        "direction ") +
                            names[k] + ": " + e.what());
            }
        }
        dp[k] = (p[0] - p[1]) / (2.0 * h);
    }
    Tensor4 A;
    for (int i = 0; i < 2; ++i)
        for (int j = 0; j < 2; ++j) {
            A(i, j, 0, 0) = dp[0](i, j);
            A(i, j, 1, 1) = dp[1](i, j);
            A(i, j, 0, 1) = 0.5 * dp[2](i, j);
            A(i, j, 1, 0) = 0.5 * dp[2](i, j);
        }
    return A;
}

Eigen::VectorXd internal_forces(const Mesh& mesh, const std::vector<Tensor2>& stress) {
    Eigen::VectorXd f = Eigen::VectorXd::Zero(2 * mesh.num_nodes());
    ElementFrame frame;
    size_t q_global = 0;
    for (int e = 0; e < mesh.num_elements(); ++e) {
        const Element& el = mesh.elements[e];
        const auto& tab = ShapeTable::for_kind(el.kind);
        const int nn = element_node_count(el.kind);
        for (size_t q = 0; q < tab.weights.size(); ++q, ++q_global) {
            element_frame(mesh, el, tab.dn[q], frame, e);
            const double scale = tab.weights[q] * frame.det;
            for (int a = 0; a < nn; ++a)
                f.segment<2>(2 * el.node(a)) += scale * (stress.at(q_global) * frame.grad[a]);
        }
    }
    return f;
}

EquilibriumReport equilibrium_report(const Mesh& mesh, const std::vector<Tensor2>& stress) {
    const Eigen::VectorXd f = internal_forces(mesh, stress);

    double scale = 0.0;
    ElementFrame frame;
    size_t q_global = 0;
    for (int e = 0; e < mesh.num_elements(); ++e) {
        const auto& tab = ShapeTable::for_kind(mesh.elements[e].kind);
        for (size_t q = 0; q < tab.weights.size(); ++q, ++q_global) {
            element_frame(mesh, mesh.elements[e], tab.dn[q], frame, e);
            scale += tab.weights[q] * frame.det * stress.at(q_global).norm();
        }
    }
    if (scale == 0.0) scale = 1.0;

    std::vector<bool> boundary(mesh.num_nodes(), false);
    for (const char* name : {"left", "right", "bottom", "top", "corner"})
        if (mesh.has_node_set(name))
            for (int i : mesh.node_set(name)) boundary[i] = true;

    EquilibriumReport rep;
    rep.force_scale = scale;
    for (int i = 0; i < mesh.num_nodes(); ++i)
        if (!boundary[i]) rep.interior_residual = std::max(rep.interior_residual,
                                                           f.segment<2>(2 * i).norm() / scale);
    for (const auto& p : mesh.periodic_pairs) {
        const double mism = (f.segment<2>(2 * p.master) + f.segment<2>(2 * p.slave)).norm();
        rep.periodic_mismatch = std::max(rep.periodic_mismatch, mism / scale);
    }
    return rep;
}

Tensor4 average_tangent(const MicroProblem& problem, const MicroSolution& sol) {
    const Mesh& mesh = *problem.mesh;
    std::vector<const NeoHookean*> el_mat(mesh.num_elements(), &problem.matrix_material);
    for (int e : mesh.element_set("fiber")) el_mat[e] = &problem.fiber_material;
    ElementFrame frame;
    double area = 0.0;
    Tensor4 mean;
    size_t q_global = 0;
    for (int e = 0; e < mesh.num_elements(); ++e) {
        const auto& tab = ShapeTable::for_kind(mesh.elements[e].kind);
        for (size_t q = 0; q < tab.weights.size(); ++q, ++q_global) {
            element_frame(mesh, mesh.elements[e], tab.dn[q], frame, e);
            const double scale = tab.weights[q] * frame.det;
            area += scale;
            mean += tangent(*el_mat[e], sol.def_grad.at(q_global)) * scale;
        }
    }
    return mean * (1.0 / area);
}

}  // namespace mrom
