#include "microrom/spline.hpp"

#include <cmath>

#include "microrom/errors.hpp"

namespace mrom {

ClosedCubicSpline::ClosedCubicSpline(std::vector<Vec2> points) : pts_(std::move(points)) {
    const int k = static_cast<int>(pts_.size());
    if (k < 3) throw InvalidGeometryError("closed spline needs at least 3 points");
    const double h = 1.0 / k;
    // Cyclic system for knot second derivatives: M_{i-1} + 4 M_i + M_{i+1}
    // = 6 (p_{i-1} - 2 p_i + p_{i+1}) / h^2.
    Eigen::MatrixXd A = Eigen::MatrixXd::Zero(k, k);
    Eigen::MatrixXd rhs(k, 2);
    for (int i = 0; i < k; ++i) {
        A(i, (i + k - 1) % k) += 1.0;
        A(i, i) += 4.0;
        A(i, (i + 1) % k) += 1.0;
        const Vec2 d = (pts_[(i + k - 1) % k] - 2.0 * pts_[i] + pts_[(i + 1) % k]) * 6.0 / (h * h);
        rhs(i, 0) = d.x();
        rhs(i, 1) = d.y();
    }
    const Eigen::MatrixXd m = A.partialPivLu().solve(rhs);
    m_.resize(k);
    for (int i = 0; i < k; ++i) m_[i] = Vec2(m(i, 0), m(i, 1));
}

Vec2 ClosedCubicSpline::eval(double t) const {
    const int k = num_points();
    const double h = 1.0 / k;
    double u = t - std::floor(t);
    const int i = std::min(static_cast<int>(u * k), k - 1);
    const double s = u * k - i;
    const Vec2& p0 = pts_[i];
    const Vec2& p1 = pts_[(i + 1) % k];
    const Vec2& m0 = m_[i];
    const Vec2& m1 = m_[(i + 1) % k];
    const double a = 1.0 - s;
    return a * p0 + s * p1 +
           (h * h / 6.0) * ((a * a * a - a) * m0 + (s * s * s - s) * m1);
}

Vec2 ClosedCubicSpline::deriv(double t) const {
    const int k = num_points();
    const double h = 1.0 / k;
    double u = t - std::floor(t);
    const int i = std::min(static_cast<int>(u * k), k - 1);
    const double s = u * k - i;
    const Vec2& p0 = pts_[i];
    const Vec2& p1 = pts_[(i + 1) % k];
    const Vec2& m0 = m_[i];
    const Vec2& m1 = m_[(i + 1) % k];
    const double a = 1.0 - s;
    // d/dt = k * d/ds
    return static_cast<double>(k) *
           ((p1 - p0) + (h * h / 6.0) * ((3.0 * s * s - 1.0) * m1 - (3.0 * a * a - 1.0) * m0));
}

std::vector<Vec2> ClosedCubicSpline::sample(int n) const {
    std::vector<Vec2> out(n);
    for (int i = 0; i < n; ++i) out[i] = eval(static_cast<double>(i) / n);
    return out;
}

namespace {
bool segments_intersect(const Vec2& a, const Vec2& b, const Vec2& c, const Vec2& d) {
    auto cross = [](const Vec2& u, const Vec2& v) { return u.x() * v.y() - u.y() * v.x(); };
    const double d1 = cross(b - a, c - a);
    const double d2 = cross(b - a, d - a);
    const double d3 = cross(d - c, a - c);
    const double d4 = cross(d - c, b - c);
    return ((d1 > 0) != (d2 > 0)) && ((d3 > 0) != (d4 > 0));
}
}  // namespace

bool polyline_self_intersects(const std::vector<Vec2>& poly) {
    const int n = static_cast<int>(poly.size());
    for (int i = 0; i < n; ++i) {
        for (int j = i + 2; j < n; ++j) {
            if (i == 0 && j == n - 1) continue;  // adjacent around the wrap
            if (segments_intersect(poly[i], poly[(i + 1) % n], poly[j], poly[(j + 1) % n]))
                return true;
        }
    }
    return false;
}

double polygon_area(const std::vector<Vec2>& poly) {
    double a = 0.0;
    const int n = static_cast<int>(poly.size());
    for (int i = 0; i < n; ++i) {
        const Vec2& p = poly[i];
        const Vec2& q = poly[(i + 1) % n];
        a += p.x() * q.y() - q.x() * p.y();
    }
    return 0.5 * a;
}

}  // namespace mrom
