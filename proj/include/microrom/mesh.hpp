#ifndef MICROROM_MESH_HPP
#define MICROROM_MESH_HPP

#include <array>
#include <iosfwd>
#include <map>
#include <string>
#include <vector>

#include "microrom/spline.hpp"
#include "microrom/tensor.hpp"

namespace mrom {

enum class ElementKind : int { Tri3 = 1, Tri6 = 2, Quad4 = 3 };

int element_node_count(ElementKind kind);

struct Element {
    ElementKind kind;
    std::array<int, 6> conn{};  // first element_node_count(kind) entries used

    int node(int a) const { return conn[a]; }
};

struct PeriodicPair {
    int master;  // node on left/bottom
    int slave;   // node on right/top
    int axis;    // 0: slave = master + (1,0); 1: slave = master + (0,1)
};

/// Immutable after construction; safe to share read-only across workers.
struct Mesh {
    std::vector<Vec2> nodes;
    std::vector<Element> elements;
    std::map<std::string, std::vector<int>> node_sets;
    std::map<std::string, std::vector<int>> element_sets;
    std::vector<PeriodicPair> periodic_pairs;

    // Curve parameter per interface node, parallel to node_sets["interface"].
    // Filled by the parent-mesh generators; not part of the file format.
    std::vector<double> interface_params;

    const std::vector<int>& node_set(const std::string& name) const;
    const std::vector<int>& element_set(const std::string& name) const;
    bool has_node_set(const std::string& name) const { return node_sets.count(name) > 0; }

    int num_nodes() const { return static_cast<int>(nodes.size()); }
    int num_elements() const { return static_cast<int>(elements.size()); }

    /// Integral of 1 over the mesh with the module quadrature.
    double total_area() const;

    /// Checks the construction invariants (periodic offsets, positive
    /// Jacobians, matrix/fiber partition). Throws MeshError on violation.
    void validate() const;
};

// ---------------------------------------------------------------------------
// Reference elements

struct QuadratureRule {
    std::vector<Vec2> points;
    std::vector<double> weights;

    static const QuadratureRule& for_kind(ElementKind kind);
    static double reference_measure(ElementKind kind);
};

/// Basis values and local gradients at one local point.
void shape_eval(ElementKind kind, const Vec2& xi, std::vector<double>& n,
                std::vector<Vec2>& dn);

/// Shape functions tabulated at the quadrature points of the rule.
struct ShapeTable {
    ElementKind kind;
    std::vector<double> weights;               // per qp
    std::vector<std::vector<double>> n;        // [qp][a]
    std::vector<std::vector<Vec2>> dn;         // [qp][a], local gradients

    static const ShapeTable& for_kind(ElementKind kind);
};

/// Element geometry at one quadrature point: Jacobian, its determinant and the
/// physical shape-function gradients.
struct ElementFrame {
    Tensor2 jac;
    double det;
    std::vector<Vec2> grad;  // dN_a/dX
};

void element_frame(const Mesh& mesh, const Element& el, const std::vector<Vec2>& dn_local,
                   ElementFrame& out, int element_id = -1);

// ---------------------------------------------------------------------------
// Parent-domain generators

/// Unit-square RVE with a circular inclusion of the given radius, centered at
/// (0.5, 0.5), meshed with 6-node triangles. Boundary discretizations of
/// opposite edges are mirror matched, the interface ring lies exactly on the
/// circle, and matrix/fiber element sets partition the domain.
Mesh build_parent_disk_mesh(double radius, int refinement);

/// Control points of the parent spline interface (a=b=0.25, c=d=0.75): the
/// four axis points plus four diagonal points at distance 0.25 from center,
/// ordered counterclockwise from angle 0.
std::vector<Vec2> parent_spline_control_points();

/// As build_parent_disk_mesh but with the closed cubic-spline interface of
/// the parent configuration; interface nodes carry their curve parameter.
Mesh build_parent_spline_mesh(int refinement);

// ---------------------------------------------------------------------------
// IO (text format, see README)

void write_mesh(const Mesh& mesh, const std::string& path);
Mesh read_mesh(const std::string& path);

void write_mesh(const Mesh& mesh, std::ostream& os);
Mesh read_mesh(std::istream& is);

}  // namespace mrom

#endif
