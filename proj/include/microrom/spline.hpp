#ifndef MICROROM_SPLINE_HPP
#define MICROROM_SPLINE_HPP

#include <vector>

#include "microrom/tensor.hpp"

namespace mrom {

/// Closed C2 cubic spline interpolating K points at uniform parameters
/// t_i = i/K, t in [0,1). Uniform parameterization keeps the curve linear in
/// the interpolation points, which the transformation-displacement rank
/// argument relies on.
class ClosedCubicSpline {
  public:
    explicit ClosedCubicSpline(std::vector<Vec2> points);

    Vec2 eval(double t) const;
    Vec2 deriv(double t) const;

    int num_points() const { return static_cast<int>(pts_.size()); }
    const std::vector<Vec2>& points() const { return pts_; }

    /// Polyline sampling (n segments, closed).
    std::vector<Vec2> sample(int n) const;

  private:
    std::vector<Vec2> pts_;
    std::vector<Vec2> m_;  // second derivatives at knots
};

/// Segment-segment intersection test over a closed polyline; shared endpoints
/// of adjacent segments do not count.
bool polyline_self_intersects(const std::vector<Vec2>& poly);

/// Shoelace area of a closed polyline.
double polygon_area(const std::vector<Vec2>& poly);

}  // namespace mrom

#endif
