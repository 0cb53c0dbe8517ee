#include "p3b/centralconfig.hpp"

#include <cmath>
#include <stdexcept>

namespace p3b {

const char* cc_kind_name(CCKind kind) {
    switch (kind) {
        case CCKind::LagrangePositive: return "lagrange+";
        case CCKind::LagrangeNegative: return "lagrange-";
        case CCKind::Euler1: return "euler1";
        case CCKind::Euler2: return "euler2";
        case CCKind::Euler3: return "euler3";
    }
    return "?";
}

int CentralConfiguration::euler_middle() const {
    switch (kind) {
        case CCKind::Euler1: return 1;
        case CCKind::Euler2: return 2;
        case CCKind::Euler3: return 3;
        default:
            throw std::logic_error("euler_middle: not an Euler configuration");
    }
}

namespace {

CentralConfiguration finish(CCKind kind, const Vec6& raw, const MassTriple& m,
                            std::optional<double> root) {
    CentralConfiguration cc;
    cc.kind = kind;
    cc.s = center_and_normalize(raw, m);
    cc.U_value = potential(cc.s.s, m);
    cc.lambda = cc.U_value;
    cc.euler_root = root;
    cc.grad_residual = mass_norm(m, sphere_gradient(cc.s.s, m));
    return cc;
}

// Bodies occupying the collinear slots (left outer, middle, right outer),
// outer bodies ordered by index. 0-based.
std::array<int, 3> euler_slots(int middle) {
    switch (middle) {
        case 1: return {1, 0, 2};
        case 2: return {0, 1, 2};
        case 3: return {0, 2, 1};
        default:
            throw std::invalid_argument("euler: middle body index must be 1, 2 or 3");
    }
}

double quintic_value(const std::array<double, 6>& c, double r) {
    double v = c[5];
    for (int k = 4; k >= 0; --k) {
        v = v * r + c[k];
    }
    return v;
}

double quintic_derivative(const std::array<double, 6>& c, double r) {
    double v = 5.0 * c[5];
    for (int k = 4; k >= 1; --k) {
        v = v * r + k * c[k];
    }
    return v;
}

// Scale of the polynomial at r, used for the residual acceptance test.
double quintic_scale(const std::array<double, 6>& c, double r) {
    double s = 0.0;
    double p = 1.0;
    for (int k = 0; k <= 5; ++k) {
        s += std::abs(c[k]) * p;
        p *= r;
    }
    return s;
}

} // namespace

CentralConfiguration lagrange(const MassTriple& m, Orientation orientation) {
    const double h = std::sqrt(3.0) / 2.0;
    Vec6 raw;
    raw << 1.0, 0.0, -0.5, h, -0.5, -h;
    if (orientation == Orientation::Negative) {
        raw[1] = -raw[1];
        raw[3] = -raw[3];
        raw[5] = -raw[5];
    }
    const CCKind kind = orientation == Orientation::Positive ? CCKind::LagrangePositive
                                                             : CCKind::LagrangeNegative;
    return finish(kind, raw, m, std::nullopt);
}

std::array<double, 6> euler_quintic_coefficients(const MassTriple& m, int middle) {
    const auto slot = euler_slots(middle);
    const double a = m[slot[0]]; // left outer
    const double b = m[slot[1]]; // middle
    const double c = m[slot[2]]; // right outer
    // Coefficients of c0 + c1 r + ... + c5 r^5; one sign change for positive
    // masses, hence a unique positive root.
    return {-(a + b), -(3.0 * a + 2.0 * b), -(3.0 * a + b),
            b + 3.0 * c, 2.0 * b + 3.0 * c, b + c};
}

double euler_quintic_root(const MassTriple& m, int middle) {
    const auto c = euler_quintic_coefficients(m, middle);
    double lo = 1e-6;
    double hi = 1e3;
    double flo = quintic_value(c, lo);
    double fhi = quintic_value(c, hi);
    if (!(flo < 0.0) || !(fhi > 0.0)) {
        throw ConvergenceError("euler_quintic_root: bracket does not straddle a root");
    }
    while (hi - lo > 1e-12) {
        const double mid = 0.5 * (lo + hi);
        const double fmid = quintic_value(c, mid);
        if (fmid < 0.0) {
            lo = mid;
            flo = fmid;
        } else {
            hi = mid;
            fhi = fmid;
        }
    }
    double r = 0.5 * (lo + hi);
    for (int it = 0; it < 3; ++it) {
        const double d = quintic_derivative(c, r);
        if (d == 0.0) break;
        r -= quintic_value(c, r) / d;
    }
    if (!(r > 0.0) || std::abs(quintic_value(c, r)) > 1e-13 * quintic_scale(c, r)) {
        throw ConvergenceError("euler_quintic_root: residual too large after refinement");
    }
    return r;
}

CentralConfiguration euler(const MassTriple& m, int middle) {
    const auto slot = euler_slots(middle);
    const double r = euler_quintic_root(m, middle);
    // Slot positions on the x-axis with gaps (r, 1).
    const double x[3] = {0.0, r, 1.0 + r};
    Vec6 raw = Vec6::Zero();
    for (int k = 0; k < 3; ++k) {
        raw[2 * slot[k]] = x[k];
    }
    CCKind kind = middle == 1 ? CCKind::Euler1 : (middle == 2 ? CCKind::Euler2 : CCKind::Euler3);
    return finish(kind, raw, m, r);
}

std::vector<CentralConfiguration> all_central_configurations(const MassTriple& m) {
    std::vector<CentralConfiguration> out;
    out.reserve(5);
    out.push_back(lagrange(m, Orientation::Positive));
    out.push_back(lagrange(m, Orientation::Negative));
    out.push_back(euler(m, 1));
    out.push_back(euler(m, 2));
    out.push_back(euler(m, 3));
    return out;
}

HomotheticOrbit homothetic_orbit(const CentralConfiguration& cc) {
    return {cc, std::cbrt(4.5 * cc.U_value)};
}

Vec6 homothetic_position(const HomotheticOrbit& orbit, double t) {
    if (!(t > 0.0)) {
        throw NonPositiveTimeError("homothetic_position: t must be positive");
    }
    return orbit.scale_coefficient * std::pow(t, 2.0 / 3.0) * orbit.cc.s.s;
}

Vec6 homothetic_velocity(const HomotheticOrbit& orbit, double t) {
    if (!(t > 0.0)) {
        throw NonPositiveTimeError("homothetic_velocity: t must be positive");
    }
    return (2.0 / 3.0) * orbit.scale_coefficient * std::pow(t, -1.0 / 3.0) * orbit.cc.s.s;
}

} // namespace p3b
