#include "microrom/mesh.hpp"

#include <doctest.h>

#include <cmath>
#include <numbers>
#include <random>
#include <set>
#include <sstream>

#include "microrom/errors.hpp"

using namespace mrom;

namespace {

double factorial(int n) { return n <= 1 ? 1.0 : n * factorial(n - 1); }

// exact integral of x^p y^q over the unit reference triangle
double tri_monomial(int p, int q) { return factorial(p) * factorial(q) / factorial(p + q + 2); }

}  // namespace

TEST_CASE("shape functions are a partition of unity") {
    std::mt19937 rng(3);
    std::uniform_real_distribution<double> uni(0.0, 1.0);
    for (ElementKind kind : {ElementKind::Tri3, ElementKind::Tri6, ElementKind::Quad4}) {
        for (int i = 0; i < 100; ++i) {
            Vec2 xi;
            if (kind == ElementKind::Quad4) {
                xi = Vec2(2 * uni(rng) - 1, 2 * uni(rng) - 1);
            } else {
                double a = uni(rng), b = uni(rng);
                if (a + b > 1) {
                    a = 1 - a;
                    b = 1 - b;
                }
                xi = Vec2(a, b);
            }
            std::vector<double> n;
            std::vector<Vec2> dn;
            shape_eval(kind, xi, n, dn);
            double sum = 0;
            Vec2 dsum = Vec2::Zero();
            for (size_t a = 0; a < n.size(); ++a) {
                sum += n[a];
                dsum += dn[a];
            }
            CHECK(std::abs(sum - 1.0) <= 1e-14);
            CHECK(dsum.lpNorm<Eigen::Infinity>() <= 1e-14);
        }
    }
}

TEST_CASE("Tri6 basis is interpolatory at its nodes") {
    const Vec2 nodes[6] = {{0, 0}, {1, 0}, {0, 1}, {0.5, 0}, {0.5, 0.5}, {0, 0.5}};
    for (int a = 0; a < 6; ++a) {
        std::vector<double> n;
        std::vector<Vec2> dn;
        shape_eval(ElementKind::Tri6, nodes[a], n, dn);
        for (int b = 0; b < 6; ++b) CHECK(n[b] == doctest::Approx(a == b ? 1.0 : 0.0).epsilon(1e-14));
    }
}

TEST_CASE("shape_eval rejects unknown points and kinds") {
    std::vector<double> n;
    std::vector<Vec2> dn;
    CHECK_THROWS_AS(shape_eval(ElementKind::Tri6, Vec2(0.9, 0.9), n, dn), MeshError);
}

TEST_CASE("triangle quadrature is exact to degree 4") {
    const auto& rule = QuadratureRule::for_kind(ElementKind::Tri6);
    double wsum = 0;
    for (double w : rule.weights) {
        CHECK(w > 0.0);
        wsum += w;
    }
    CHECK(wsum == doctest::Approx(0.5).epsilon(1e-14));
    for (int p = 0; p <= 4; ++p)
        for (int q = 0; p + q <= 4; ++q) {
            double integral = 0;
            for (size_t k = 0; k < rule.points.size(); ++k)
                integral += rule.weights[k] * std::pow(rule.points[k].x(), p) *
                            std::pow(rule.points[k].y(), q);
            CHECK(integral == doctest::Approx(tri_monomial(p, q)).epsilon(1e-12));
        }
}

TEST_CASE("quad quadrature integrates bilinear-degree terms") {
    const auto& rule = QuadratureRule::for_kind(ElementKind::Quad4);
    double wsum = 0;
    for (double w : rule.weights) wsum += w;
    CHECK(wsum == doctest::Approx(4.0).epsilon(1e-14));
    // x^2 y^2 over [-1,1]^2 = 4/9
    double integral = 0;
    for (size_t k = 0; k < rule.points.size(); ++k)
        integral += rule.weights[k] * rule.points[k].x() * rule.points[k].x() *
                    rule.points[k].y() * rule.points[k].y();
    CHECK(integral == doctest::Approx(4.0 / 9.0).epsilon(1e-13));
}

TEST_CASE("disk parent mesh") {
    const double r = 0.225;
    const Mesh mesh = build_parent_disk_mesh(r, 3);

    SUBCASE("total area is the unit square") {
        CHECK(mesh.total_area() == doctest::Approx(1.0).epsilon(1e-10));
    }
    SUBCASE("fiber area approximates the disk") {
        double fiber_area = 0;
        ElementFrame frame;
        for (int e : mesh.element_set("fiber")) {
            const auto& tab = ShapeTable::for_kind(mesh.elements[e].kind);
            for (size_t q = 0; q < tab.weights.size(); ++q) {
                element_frame(mesh, mesh.elements[e], tab.dn[q], frame, e);
                fiber_area += tab.weights[q] * frame.det;
            }
        }
        const double exact = std::numbers::pi * r * r;
        CHECK(std::abs(fiber_area - exact) / exact <= 0.01);
    }
    SUBCASE("interface nodes lie on the circle and carry angular parameters") {
        const auto& iface = mesh.node_set("interface");
        REQUIRE(iface.size() == mesh.interface_params.size());
        for (size_t k = 0; k < iface.size(); ++k) {
            const Vec2 rel = mesh.nodes[iface[k]] - Vec2(0.5, 0.5);
            CHECK(std::abs(rel.norm() - r) <= 1e-10);
            const double ang = std::atan2(rel.y(), rel.x());
            double t = ang / (2 * std::numbers::pi);
            t -= std::floor(t);
            CHECK(std::abs(t - mesh.interface_params[k]) <= 1e-12);
        }
    }
    SUBCASE("periodic pairs cover all non-corner boundary nodes exactly once") {
        std::set<int> covered;
        for (const auto& p : mesh.periodic_pairs) {
            CHECK(covered.insert(p.master).second);
            CHECK(covered.insert(p.slave).second);
        }
        int boundary_non_corner = 0;
        for (int i = 0; i < mesh.num_nodes(); ++i) {
            const Vec2& x = mesh.nodes[i];
            const bool on_v = x.x() == 0.0 || x.x() == 1.0;
            const bool on_h = x.y() == 0.0 || x.y() == 1.0;
            if ((on_v || on_h) && !(on_v && on_h)) ++boundary_non_corner;
        }
        CHECK(static_cast<int>(covered.size()) == boundary_non_corner);
        CHECK(mesh.node_set("corner").size() == 4);
    }
    SUBCASE("construction invariants hold") { CHECK_NOTHROW(mesh.validate()); }
}

TEST_CASE("disk mesh at reference refinement matches the target discretization size") {
    const Mesh mesh = build_parent_disk_mesh(0.225, 14);
    CHECK(std::abs(mesh.num_nodes() - 20769.0) / 20769.0 <= 0.25);
    CHECK(std::abs(mesh.num_elements() - 10665.0) / 10665.0 <= 0.25);
}

TEST_CASE("too coarse disk refinement is rejected") {
    CHECK_THROWS_AS(build_parent_disk_mesh(0.225, 1), MeshError);
    CHECK_THROWS_AS(build_parent_disk_mesh(0.6, 3), MeshError);
}

TEST_CASE("spline parent mesh") {
    const Mesh mesh = build_parent_spline_mesh(3);
    CHECK(mesh.total_area() == doctest::Approx(1.0).epsilon(1e-10));
    CHECK(!mesh.periodic_pairs.empty());
    CHECK_NOTHROW(mesh.validate());
    // interface nodes sit on the parent spline at their stored parameters
    const ClosedCubicSpline parent(parent_spline_control_points());
    const auto& iface = mesh.node_set("interface");
    REQUIRE(iface.size() == mesh.interface_params.size());
    for (size_t k = 0; k < iface.size(); ++k)
        CHECK((mesh.nodes[iface[k]] - parent.eval(mesh.interface_params[k])).norm() <= 1e-12);
}

TEST_CASE("spline mesh at reference refinement matches the target size") {
    const Mesh mesh = build_parent_spline_mesh(11);
    CHECK(std::abs(mesh.num_nodes() - 11296.0) / 11296.0 <= 0.30);
    CHECK(std::abs(mesh.num_elements() - 5833.0) / 5833.0 <= 0.30);
}

TEST_CASE("mesh IO") {
    SUBCASE("two-triangle square round trip") {
        Mesh m;
        m.nodes = {Vec2(0, 0), Vec2(1, 0), Vec2(1, 1), Vec2(0, 1)};
        m.elements.push_back({ElementKind::Tri3, {0, 1, 2, -1, -1, -1}});
        m.elements.push_back({ElementKind::Tri3, {0, 2, 3, -1, -1, -1}});
        m.node_sets["corner"] = {0, 1, 2, 3};
        std::stringstream ss;
        write_mesh(m, ss);
        const Mesh back = read_mesh(ss);
        REQUIRE(back.num_elements() == 2);
        for (int e = 0; e < 2; ++e)
            for (int a = 0; a < 3; ++a) CHECK(back.elements[e].node(a) == m.elements[e].node(a));
        CHECK(back.node_set("corner") == m.node_set("corner"));
    }
    SUBCASE("generated mesh coordinates are bitwise stable through text") {
        const Mesh mesh = build_parent_disk_mesh(0.225, 2);
        std::stringstream ss;
        write_mesh(mesh, ss);
        const Mesh back = read_mesh(ss);
        REQUIRE(back.num_nodes() == mesh.num_nodes());
        for (int i = 0; i < mesh.num_nodes(); ++i) {
            CHECK(back.nodes[i].x() == mesh.nodes[i].x());
            CHECK(back.nodes[i].y() == mesh.nodes[i].y());
        }
        CHECK(back.periodic_pairs.size() == mesh.periodic_pairs.size());
    }
    SUBCASE("missing nodes section is reported by name") {
        std::stringstream ss("$Elephants\n0\n");
        try {
            read_mesh(ss);
            FAIL("expected MeshError");
        } catch (const MeshError& e) {
            CHECK(std::string(e.what()).find("$Nodes") != std::string::npos);
        }
    }
    SUBCASE("dangling node reference carries its line number") {
        std::stringstream ss("$Nodes\n1\n1 0 0\n$Elements\n1\n1 1 1 2 3\n");
        try {
            read_mesh(ss);
            FAIL("expected MeshError");
        } catch (const MeshError& e) {
            CHECK(e.line == 6);
        }
    }
    SUBCASE("inconsistent count is rejected") {
        std::stringstream ss("$Nodes\nxyz\n");
        CHECK_THROWS_AS(read_mesh(ss), MeshError);
    }
}
