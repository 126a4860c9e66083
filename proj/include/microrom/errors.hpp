#ifndef MICROROM_ERRORS_HPP
#define MICROROM_ERRORS_HPP

#include <stdexcept>
#include <string>

namespace mrom {

struct Error : std::runtime_error {
    using std::runtime_error::runtime_error;
};

/// Mesh construction or IO failure; carries a line number for parse errors.
struct MeshError : Error {
    explicit MeshError(const std::string& msg, long line = -1)
        : Error(line >= 0 ? msg + " (line " + std::to_string(line) + ")" : msg), line(line) {}
    long line;
};

/// det F <= 0 at a quadrature point.
struct InvertedElementError : Error {
    InvertedElementError(int element, double det)
        : Error("inverted element " + std::to_string(element) +
                " (det F = " + std::to_string(det) + ")"),
          element(element),
          det(det) {}
    int element;
    double det;
};

/// Newton failed after exhausting load steps.
struct NonConvergenceError : Error {
    NonConvergenceError(const std::string& msg, double residual)
        : Error(msg + " (last residual " + std::to_string(residual) + ")"),
          residual(residual) {}
    double residual;
};

/// Transformation map failed the quality gate.
struct DistortedMapError : Error {
    DistortedMapError(int element, double min_det)
        : Error("transformation map rejected: min det F_mu = " + std::to_string(min_det) +
                " in element " + std::to_string(element)),
          element(element),
          min_det(min_det) {}
    int element;
    double min_det;
};

struct InvalidGeometryError : Error {
    using Error::Error;
};

}  // namespace mrom

#endif
