#pragma once

#include <Eigen/Dense>
#include <array>
#include <stdexcept>

namespace p3b {

using Vec6  = Eigen::Matrix<double, 6, 1>;
using Mat6  = Eigen::Matrix<double, 6, 6>;
using Vec13 = Eigen::Matrix<double, 13, 1>;
using Mat13 = Eigen::Matrix<double, 13, 13>;
using Mat12 = Eigen::Matrix<double, 12, 12>;

// Planar configurations and velocities are flat 6-vectors ordered
// (q1x, q1y, q2x, q2y, q3x, q3y). This is the one canonical layout; the
// reordered (x1,x2,x3,y1,y2,y3) layout used for collinear block structure is
// produced on demand by to_appendix_layout().
using Configuration = Vec6;
using Velocity      = Vec6;

// Three positive masses defining the problem instance. The total mass is
// cached on construction.
struct MassTriple {
    double m1;
    double m2;
    double m3;
    double m; // m1 + m2 + m3

    MassTriple(double m1_, double m2_, double m3_)
        : m1(m1_), m2(m2_), m3(m3_), m(m1_ + m2_ + m3_) {
        if (!(m1 > 0.0) || !(m2 > 0.0) || !(m3 > 0.0)) {
            throw std::invalid_argument("MassTriple: masses must be positive");
        }
    }

    double operator[](int i) const {
        switch (i) {
            case 0: return m1;
            case 1: return m2;
            case 2: return m3;
        }
        throw std::out_of_range("MassTriple: index must be 0, 1 or 2");
    }

    std::array<double, 3> as_array() const { return {m1, m2, m3}; }
};

// A centered configuration on the mass-metric unit sphere I(s) = 1, together
// with the residuals of the two constraints. Residuals are carried rather
// than silently re-projected so constraint drift stays observable.
struct NormalizedConfiguration {
    Vec6 s;
    double com_residual;    // max component of |sum_i m_i s_i|
    double sphere_residual; // |<s,s>_m - 1|
};

} // namespace p3b
