#include "microrom/mesh.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <functional>
#include <map>
#include <numbers>
#include <sstream>

#include "microrom/errors.hpp"

namespace mrom {

int element_node_count(ElementKind kind) {
    switch (kind) {
        case ElementKind::Tri3: return 3;
        case ElementKind::Tri6: return 6;
        case ElementKind::Quad4: return 4;
    }
    throw MeshError("unknown element kind");
}

const std::vector<int>& Mesh::node_set(const std::string& name) const {
    auto it = node_sets.find(name);
    if (it == node_sets.end()) throw MeshError("missing node set '" + name + "'");
    return it->second;
}

const std::vector<int>& Mesh::element_set(const std::string& name) const {
    auto it = element_sets.find(name);
    if (it == element_sets.end()) throw MeshError("missing element set '" + name + "'");
    return it->second;
}

// ---------------------------------------------------------------------------
// Reference elements

void shape_eval(ElementKind kind, const Vec2& xi, std::vector<double>& n,
                std::vector<Vec2>& dn) {
    const double x = xi.x(), y = xi.y();
    switch (kind) {
        case ElementKind::Tri3: {
            if (x < -1e-12 || y < -1e-12 || x + y > 1.0 + 1e-12)
                throw MeshError("local point outside reference triangle");
            n = {1.0 - x - y, x, y};
            dn = {Vec2(-1, -1), Vec2(1, 0), Vec2(0, 1)};
            return;
        }
        case ElementKind::Tri6: {
            if (x < -1e-12 || y < -1e-12 || x + y > 1.0 + 1e-12)
                throw MeshError("local point outside reference triangle");
            const double l0 = 1.0 - x - y, l1 = x, l2 = y;
            n = {l0 * (2 * l0 - 1), l1 * (2 * l1 - 1), l2 * (2 * l2 - 1),
                 4 * l0 * l1,       4 * l1 * l2,       4 * l2 * l0};
            const Vec2 d0(-1, -1), d1(1, 0), d2(0, 1);
            dn = {(4 * l0 - 1) * d0,
                  (4 * l1 - 1) * d1,
                  (4 * l2 - 1) * d2,
                  4 * (l1 * d0 + l0 * d1),
                  4 * (l2 * d1 + l1 * d2),
                  4 * (l0 * d2 + l2 * d0)};
            return;
        }
        case ElementKind::Quad4: {
            if (std::abs(x) > 1.0 + 1e-12 || std::abs(y) > 1.0 + 1e-12)
                throw MeshError("local point outside reference quad");
            n.resize(4);
            dn.resize(4);
            const double xs[4] = {-1, 1, 1, -1}, ys[4] = {-1, -1, 1, 1};
            for (int a = 0; a < 4; ++a) {
                n[a] = 0.25 * (1 + xs[a] * x) * (1 + ys[a] * y);
                dn[a] = Vec2(0.25 * xs[a] * (1 + ys[a] * y), 0.25 * ys[a] * (1 + xs[a] * x));
            }
            return;
        }
    }
    throw MeshError("unknown element kind");
}

const QuadratureRule& QuadratureRule::for_kind(ElementKind kind) {
    // Degree-4 (6-point) rule on triangles, 2x2 Gauss on quads.
    static const QuadratureRule tri = [] {
        QuadratureRule r;
        const double a = 0.445948490915965, wa = 0.111690794839005;
        const double b = 0.091576213509771, wb = 0.054975871827661;
        for (auto [c, w] : {std::pair{a, wa}, std::pair{b, wb}}) {
            r.points.emplace_back(c, c);
            r.points.emplace_back(1 - 2 * c, c);
            r.points.emplace_back(c, 1 - 2 * c);
            r.weights.insert(r.weights.end(), 3, w);
        }
        return r;
    }();
    static const QuadratureRule quad = [] {
        QuadratureRule r;
        const double g = 1.0 / std::sqrt(3.0);
        for (double y : {-g, g})
            for (double x : {-g, g}) {
                r.points.emplace_back(x, y);
                r.weights.push_back(1.0);
            }
        return r;
    }();
    switch (kind) {
        case ElementKind::Tri3:
        case ElementKind::Tri6: return tri;
        case ElementKind::Quad4: return quad;
    }
    throw MeshError("unknown element kind");
}

double QuadratureRule::reference_measure(ElementKind kind) {
    return kind == ElementKind::Quad4 ? 4.0 : 0.5;
}

const ShapeTable& ShapeTable::for_kind(ElementKind kind) {
    static const auto make = [](ElementKind k) {
        ShapeTable t;
        t.kind = k;
        const auto& rule = QuadratureRule::for_kind(k);
        t.weights = rule.weights;
        for (const Vec2& xi : rule.points) {
            std::vector<double> n;
            std::vector<Vec2> dn;
            shape_eval(k, xi, n, dn);
            t.n.push_back(std::move(n));
            t.dn.push_back(std::move(dn));
        }
        return t;
    };
    static const ShapeTable tri3 = make(ElementKind::Tri3);
    static const ShapeTable tri6 = make(ElementKind::Tri6);
    static const ShapeTable quad4 = make(ElementKind::Quad4);
    switch (kind) {
        case ElementKind::Tri3: return tri3;
        case ElementKind::Tri6: return tri6;
        case ElementKind::Quad4: return quad4;
    }
    throw MeshError("unknown element kind");
}

void element_frame(const Mesh& mesh, const Element& el, const std::vector<Vec2>& dn_local,
                   ElementFrame& out, int element_id) {
    const int nn = element_node_count(el.kind);
    Tensor2 j = Tensor2::Zero();
    for (int a = 0; a < nn; ++a) j += mesh.nodes[el.node(a)] * dn_local[a].transpose();
    const double det = j.determinant();
    if (det <= 0.0) throw InvertedElementError(element_id, det);
    const Tensor2 jinv_t = j.inverse().transpose();
    out.jac = j;
    out.det = det;
    out.grad.resize(nn);
    for (int a = 0; a < nn; ++a) out.grad[a] = jinv_t * dn_local[a];
}

double Mesh::total_area() const {
    double area = 0.0;
    ElementFrame frame;
    for (int e = 0; e < num_elements(); ++e) {
        const auto& tab = ShapeTable::for_kind(elements[e].kind);
        for (size_t q = 0; q < tab.weights.size(); ++q) {
            element_frame(*this, elements[e], tab.dn[q], frame, e);
            area += tab.weights[q] * frame.det;
        }
    }
    return area;
}

void Mesh::validate() const {
    for (const auto& p : periodic_pairs) {
        const Vec2 off = nodes[p.slave] - nodes[p.master];
        const Vec2 expect = p.axis == 0 ? Vec2(1, 0) : Vec2(0, 1);
        if ((off - expect).lpNorm<Eigen::Infinity>() > 1e-12)
            throw MeshError("periodic pair offset violated for nodes " +
                            std::to_string(p.master) + "/" + std::to_string(p.slave));
    }
    ElementFrame frame;
    for (int e = 0; e < num_elements(); ++e) {
        const auto& tab = ShapeTable::for_kind(elements[e].kind);
        for (size_t q = 0; q < tab.weights.size(); ++q)
            element_frame(*this, elements[e], tab.dn[q], frame, e);  // throws if inverted
    }
    if (element_sets.count("matrix") && element_sets.count("fiber")) {
        std::vector<int> flag(elements.size(), 0);
        for (int e : element_set("matrix")) flag.at(e) += 1;
        for (int e : element_set("fiber")) flag.at(e) += 1;
        for (size_t e = 0; e < flag.size(); ++e)
            if (flag[e] != 1)
                throw MeshError("matrix/fiber sets do not partition element " + std::to_string(e));
    }
}

// ---------------------------------------------------------------------------
// Radial parent mesher, shared by the disk and spline families.
//
// Vertices are placed on scaled copies of the interface curve (inside) and on
// a linear blend between the curve and the ray-boundary intersection
// (outside), triangulated band by band and promoted to Tri6 with
// edge-midpoint nodes; interface midside nodes are snapped onto the curve.

namespace {

constexpr double kPi = std::numbers::pi;

struct InterfaceCurve {
    std::vector<double> params;              // t per interface vertex, increasing
    std::vector<Vec2> points;                // positions
    std::function<Vec2(double)> at;          // curve point for any t
};

double wrap_unit(double t) { return t - std::floor(t); }

double mid_param(double ta, double tb) {
    double dt = tb - ta;
    if (dt > 0.5) dt -= 1.0;
    if (dt < -0.5) dt += 1.0;
    return wrap_unit(ta + 0.5 * dt);
}

Mesh radial_parent_mesh(const InterfaceCurve& curve, int n_in, int n_out) {
    const Vec2 center(0.5, 0.5);
    const int nt = static_cast<int>(curve.points.size());

    // Ray-boundary intersections, mirror-snapped so that opposite edges match
    // exactly. Vertex j mirrors to (nt/2 - j) about x and (nt - j) about y.
    std::vector<Vec2> boundary(nt);
    std::vector<int> edge_of(nt);  // 0 right, 1 top, 2 left, 3 bottom, 4 corner
    for (int j = 0; j < nt; ++j) {
        const Vec2 u = (curve.points[j] - center).normalized();
        const double ax = std::abs(u.x()), ay = std::abs(u.y());
        if (std::abs(ax - ay) < 1e-13) {
            edge_of[j] = 4;
            boundary[j] = Vec2(u.x() > 0 ? 1.0 : 0.0, u.y() > 0 ? 1.0 : 0.0);
        } else if (ax > ay) {
            edge_of[j] = u.x() > 0 ? 0 : 2;
            boundary[j] = Vec2(u.x() > 0 ? 1.0 : 0.0, 0.5 + 0.5 * u.y() / ax);
        } else {
            edge_of[j] = u.y() > 0 ? 1 : 3;
            boundary[j] = Vec2(0.5 + 0.5 * u.x() / ay, u.y() > 0 ? 1.0 : 0.0);
        }
    }
    for (int j = 0; j < nt; ++j) {
        if (edge_of[j] == 0) {  // snap left partner to same y
            const int jl = ((nt / 2 - j) % nt + nt) % nt;
            boundary[jl] = Vec2(0.0, boundary[j].y());
        } else if (edge_of[j] == 1) {  // snap bottom partner to same x
            const int jb = (nt - j) % nt;
            boundary[jb] = Vec2(boundary[j].x(), 0.0);
        }
    }

    Mesh mesh;
    mesh.nodes.push_back(center);
    const int layers = n_in + n_out;  // ring index 1..layers; ring n_in = interface
    auto vid = [&](int ring, int j) { return 1 + (ring - 1) * nt + (j % nt + nt) % nt; };
    for (int ring = 1; ring <= layers; ++ring) {
        for (int j = 0; j < nt; ++j) {
            Vec2 x;
            if (ring <= n_in) {
                x = center + (static_cast<double>(ring) / n_in) * (curve.points[j] - center);
            } else {
                const double s = static_cast<double>(ring - n_in) / n_out;
                x = (1.0 - s) * curve.points[j] + s * boundary[j];
            }
            mesh.nodes.push_back(x);
        }
    }

    // Band triangulation (Tri3 first). Alternating diagonals.
    std::vector<int> fiber, matrix;
    auto add_tri = [&](int a, int b, int c, bool in_fiber) {
        Element el;
        el.kind = ElementKind::Tri3;
        el.conn = {a, b, c, -1, -1, -1};
        (in_fiber ? fiber : matrix).push_back(mesh.num_elements());
        mesh.elements.push_back(el);
    };
    for (int j = 0; j < nt; ++j) add_tri(0, vid(1, j), vid(1, j + 1), true);
    for (int ring = 1; ring < layers; ++ring) {
        const bool in_fiber = ring < n_in;
        for (int j = 0; j < nt; ++j) {
            // Counterclockwise cell: inner j, outer j, outer j+1, inner j+1.
            const int a = vid(ring, j), b = vid(ring + 1, j);
            const int c = vid(ring + 1, j + 1), d = vid(ring, j + 1);
            if ((j + ring) % 2 == 0) {
                add_tri(a, b, c, in_fiber);
                add_tri(a, c, d, in_fiber);
            } else {
                add_tri(a, b, d, in_fiber);
                add_tri(b, c, d, in_fiber);
            }
        }
    }
    mesh.element_sets["fiber"] = fiber;
    mesh.element_sets["matrix"] = matrix;

    // Curve parameter per node for interface vertices (ring n_in).
    std::map<int, double> node_param;
    for (int j = 0; j < nt; ++j) node_param[vid(n_in, j)] = curve.params[j];

    // Promote to Tri6. Midside nodes on the interface ring are snapped onto
    // the exact curve at the mid parameter.
    std::map<std::pair<int, int>, int> edge_mid;
    auto midside = [&](int a, int b) {
        const auto key = std::minmax(a, b);
        auto it = edge_mid.find(key);
        if (it != edge_mid.end()) return it->second;
        Vec2 x = 0.5 * (mesh.nodes[a] + mesh.nodes[b]);
        const int id = mesh.num_nodes();
        const auto pa = node_param.find(a), pb = node_param.find(b);
        if (pa != node_param.end() && pb != node_param.end()) {
            const double tm = mid_param(pa->second, pb->second);
            x = curve.at(tm);
            node_param[id] = tm;
        }
        mesh.nodes.push_back(x);
        edge_mid[key] = id;
        return id;
    };
    for (auto& el : mesh.elements) {
        el.conn[3] = midside(el.conn[0], el.conn[1]);
        el.conn[4] = midside(el.conn[1], el.conn[2]);
        el.conn[5] = midside(el.conn[2], el.conn[0]);
        el.kind = ElementKind::Tri6;
    }

    // Node sets from coordinates (midside boundary nodes are exact midpoints
    // of snapped endpoints, so classification by coordinate is exact).
    std::vector<int> left, right, bottom, top, corner;
    for (int i = 0; i < mesh.num_nodes(); ++i) {
        const Vec2& x = mesh.nodes[i];
        const bool on_l = x.x() == 0.0, on_r = x.x() == 1.0;
        const bool on_b = x.y() == 0.0, on_t = x.y() == 1.0;
        if ((on_l || on_r) && (on_b || on_t)) {
            corner.push_back(i);
        } else if (on_l) {
            left.push_back(i);
        } else if (on_r) {
            right.push_back(i);
        } else if (on_b) {
            bottom.push_back(i);
        } else if (on_t) {
            top.push_back(i);
        }
    }
    auto by_y = [&](int a, int b) { return mesh.nodes[a].y() < mesh.nodes[b].y(); };
    auto by_x = [&](int a, int b) { return mesh.nodes[a].x() < mesh.nodes[b].x(); };
    std::sort(left.begin(), left.end(), by_y);
    std::sort(right.begin(), right.end(), by_y);
    std::sort(bottom.begin(), bottom.end(), by_x);
    std::sort(top.begin(), top.end(), by_x);
    if (left.size() != right.size() || bottom.size() != top.size())
        throw MeshError("opposite boundary discretizations do not match");
    for (size_t k = 0; k < left.size(); ++k) {
        if (mesh.nodes[left[k]].y() != mesh.nodes[right[k]].y())
            throw MeshError("left/right boundary nodes not mirror matched");
        mesh.periodic_pairs.push_back({left[k], right[k], 0});
    }
    for (size_t k = 0; k < bottom.size(); ++k) {
        if (mesh.nodes[bottom[k]].x() != mesh.nodes[top[k]].x())
            throw MeshError("bottom/top boundary nodes not mirror matched");
        mesh.periodic_pairs.push_back({bottom[k], top[k], 1});
    }
    mesh.node_sets["left"] = left;
    mesh.node_sets["right"] = right;
    mesh.node_sets["bottom"] = bottom;
    mesh.node_sets["top"] = top;
    mesh.node_sets["corner"] = corner;

    // Interface set ordered by curve parameter.
    std::vector<std::pair<double, int>> iface;
    for (const auto& [node, t] : node_param) iface.emplace_back(t, node);
    std::sort(iface.begin(), iface.end());
    std::vector<int> iface_nodes;
    std::vector<double> iface_params;
    for (const auto& [t, node] : iface) {
        iface_nodes.push_back(node);
        iface_params.push_back(t);
    }
    mesh.node_sets["interface"] = iface_nodes;
    mesh.interface_params = iface_params;

    mesh.validate();
    return mesh;
}

}  // namespace

Mesh build_parent_disk_mesh(double radius, int refinement) {
    if (radius <= 0.0 || radius >= 0.5)
        throw MeshError("disk radius must lie in (0, 0.5)");
    const int nt = 8 * refinement;
    if (nt < 16) throw MeshError("refinement too coarse: fewer than 16 interface nodes");
    const Vec2 center(0.5, 0.5);
    const double h = 2.0 * kPi * radius / nt;
    const int n_in = std::max(2, static_cast<int>(std::lround(radius / h)));
    const int n_out = std::max(3, static_cast<int>(std::lround((0.55 - radius) / h)));

    InterfaceCurve curve;
    for (int j = 0; j < nt; ++j) {
        const double t = static_cast<double>(j) / nt;
        curve.params.push_back(t);
        curve.points.push_back(center + radius * Vec2(std::cos(2 * kPi * t), std::sin(2 * kPi * t)));
    }
    curve.at = [center, radius](double t) -> Vec2 {
        return center + radius * Vec2(std::cos(2 * kPi * t), std::sin(2 * kPi * t));
    };

    Mesh mesh = radial_parent_mesh(curve, n_in, n_out);
    for (size_t k = 0; k < mesh.node_set("interface").size(); ++k) {
        const Vec2 d = mesh.nodes[mesh.node_set("interface")[k]] - center;
        if (std::abs(d.norm() - radius) > 1e-10)
            throw MeshError("interface node off the circle");
    }
    return mesh;
}

std::vector<Vec2> parent_spline_control_points() {
    const Vec2 c(0.5, 0.5);
    const double r = 0.25, q = 0.25 / std::sqrt(2.0);
    return {c + Vec2(r, 0),  c + Vec2(q, q),  c + Vec2(0, r),  c + Vec2(-q, q),
            c + Vec2(-r, 0), c + Vec2(-q, -q), c + Vec2(0, -r), c + Vec2(q, -q)};
}

Mesh build_parent_spline_mesh(int refinement) {
    const int nt = 8 * refinement;
    if (nt < 16) throw MeshError("refinement too coarse: fewer than 16 interface nodes");
    const ClosedCubicSpline spline(parent_spline_control_points());
    const Vec2 center(0.5, 0.5);
    const double r_avg = 0.25;
    const double h = 2.0 * kPi * r_avg / nt;
    const int n_in = std::max(2, static_cast<int>(std::lround(r_avg / h)));
    const int n_out = std::max(3, static_cast<int>(std::lround((0.55 - r_avg) / h)));

    InterfaceCurve curve;
    for (int j = 0; j < nt; ++j) {
        const double t = static_cast<double>(j) / nt;
        curve.params.push_back(t);
        curve.points.push_back(spline.eval(t));
    }
    curve.at = [spline](double t) { return spline.eval(t); };

    return radial_parent_mesh(curve, n_in, n_out);
}

// ---------------------------------------------------------------------------
// IO

namespace {

std::string fmt17(double v) {
    char buf[40];
    std::snprintf(buf, sizeof(buf), "%.17g", v);
    return buf;
}

struct LineReader {
    std::istream& is;
    long line = 0;

    bool next(std::string& out) {
        while (std::getline(is, out)) {
            ++line;
            if (!out.empty() && out.back() == '\r') out.pop_back();
            if (!out.empty()) return true;
        }
        return false;
    }

    std::string expect() {
        std::string s;
        if (!next(s)) throw MeshError("unexpected end of file", line);
        return s;
    }

    void expect_section(const std::string& name) {
        const std::string s = expect();
        if (s != name) throw MeshError("expected section '" + name + "', got '" + s + "'", line);
    }

    long count() {
        const std::string s = expect();
        try {
            size_t pos = 0;
            const long n = std::stol(s, &pos);
            if (pos != s.size() || n < 0) throw std::invalid_argument("");
            return n;
        } catch (...) {
            throw MeshError("invalid count '" + s + "'", line);
        }
    }
};

}  // namespace

void write_mesh(const Mesh& mesh, std::ostream& os) {
    os << "$Nodes\n" << mesh.num_nodes() << "\n";
    for (int i = 0; i < mesh.num_nodes(); ++i)
        os << i + 1 << " " << fmt17(mesh.nodes[i].x()) << " " << fmt17(mesh.nodes[i].y()) << "\n";
    os << "$Elements\n" << mesh.num_elements() << "\n";
    for (int e = 0; e < mesh.num_elements(); ++e) {
        const auto& el = mesh.elements[e];
        os << e + 1 << " " << static_cast<int>(el.kind);
        for (int a = 0; a < element_node_count(el.kind); ++a) os << " " << el.node(a) + 1;
        os << "\n";
    }
    os << "$NodeSets\n" << mesh.node_sets.size() << "\n";
    for (const auto& [name, ids] : mesh.node_sets) {
        os << name << " " << ids.size();
        for (int i : ids) os << " " << i + 1;
        os << "\n";
    }
    os << "$ElementSets\n" << mesh.element_sets.size() << "\n";
    for (const auto& [name, ids] : mesh.element_sets) {
        os << name << " " << ids.size();
        for (int i : ids) os << " " << i + 1;
        os << "\n";
    }
    os << "$PeriodicPairs\n" << mesh.periodic_pairs.size() << "\n";
    for (const auto& p : mesh.periodic_pairs)
        os << p.master + 1 << " " << p.slave + 1 << " " << p.axis << "\n";
}

void write_mesh(const Mesh& mesh, const std::string& path) {
    std::ofstream os(path);
    if (!os) throw MeshError("cannot open '" + path + "' for writing");
    write_mesh(mesh, os);
}

Mesh read_mesh(std::istream& is) {
    LineReader rd{is};
    Mesh mesh;

    rd.expect_section("$Nodes");
    const long nn = rd.count();
    mesh.nodes.reserve(nn);
    for (long i = 0; i < nn; ++i) {
        std::istringstream ls(rd.expect());
        long id;
        double x, y;
        if (!(ls >> id >> x >> y) || id != i + 1)
            throw MeshError("malformed node line", rd.line);
        mesh.nodes.emplace_back(x, y);
    }

    rd.expect_section("$Elements");
    const long ne = rd.count();
    mesh.elements.reserve(ne);
    for (long e = 0; e < ne; ++e) {
        std::istringstream ls(rd.expect());
        long id;
        int kind_code;
        if (!(ls >> id >> kind_code) || id != e + 1)
            throw MeshError("malformed element line", rd.line);
        if (kind_code < 1 || kind_code > 3)
            throw MeshError("unknown element kind code " + std::to_string(kind_code), rd.line);
        Element el;
        el.kind = static_cast<ElementKind>(kind_code);
        for (int a = 0; a < element_node_count(el.kind); ++a) {
            long n;
            if (!(ls >> n)) throw MeshError("truncated element connectivity", rd.line);
            if (n < 1 || n > nn)
                throw MeshError("element references missing node " + std::to_string(n), rd.line);
            el.conn[a] = static_cast<int>(n - 1);
        }
        mesh.elements.push_back(el);
    }

    auto read_sets = [&](const char* section, auto& target, long max_id) {
        rd.expect_section(section);
        const long ns = rd.count();
        for (long s = 0; s < ns; ++s) {
            std::istringstream ls(rd.expect());
            std::string name;
            long cnt;
            if (!(ls >> name >> cnt) || cnt < 0) throw MeshError("malformed set line", rd.line);
            std::vector<int> ids;
            ids.reserve(cnt);
            for (long k = 0; k < cnt; ++k) {
                long id;
                if (!(ls >> id)) throw MeshError("truncated set '" + name + "'", rd.line);
                if (id < 1 || id > max_id)
                    throw MeshError("set '" + name + "' references missing id " + std::to_string(id),
                                    rd.line);
                ids.push_back(static_cast<int>(id - 1));
            }
            target[name] = std::move(ids);
        }
    };
    read_sets("$NodeSets", mesh.node_sets, nn);
    read_sets("$ElementSets", mesh.element_sets, ne);

    rd.expect_section("$PeriodicPairs");
    const long np = rd.count();
    for (long p = 0; p < np; ++p) {
        std::istringstream ls(rd.expect());
        long m, s;
        int axis;
        if (!(ls >> m >> s >> axis) || m < 1 || m > nn || s < 1 || s > nn ||
            (axis != 0 && axis != 1))
            throw MeshError("malformed periodic pair", rd.line);
        mesh.periodic_pairs.push_back({static_cast<int>(m - 1), static_cast<int>(s - 1), axis});
    }
    return mesh;
}

Mesh read_mesh(const std::string& path) {
    std::ifstream is(path);
    if (!is) throw MeshError("cannot open '" + path + "'");
    return read_mesh(is);
}

}  // namespace mrom
