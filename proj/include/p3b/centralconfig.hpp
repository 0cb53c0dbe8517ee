#pragma once

// The five central configurations of a mass triple (two equilateral Lagrange
// configurations, three collinear Euler configurations) and the associated
// parabolic homothetic solutions.

#include "p3b/core.hpp"

#include <array>
#include <optional>
#include <vector>

namespace p3b {

enum class Orientation { Positive, Negative };

enum class CCKind { LagrangePositive, LagrangeNegative, Euler1, Euler2, Euler3 };

const char* cc_kind_name(CCKind kind);

struct CentralConfiguration {
    CCKind kind;
    NormalizedConfiguration s;
    double U_value; // U(s)
    double lambda;  // multiplier in grad U(s) + lambda s = 0; equals U(s) here
    std::optional<double> euler_root; // collinear shape parameter (Euler only)
    double grad_residual; // |grad U(s) + U(s) s|_m at construction

    bool is_lagrange() const {
        return kind == CCKind::LagrangePositive || kind == CCKind::LagrangeNegative;
    }
    bool is_euler() const { return !is_lagrange(); }
    // 1-based index of the middle body (Euler kinds only).
    int euler_middle() const;
};

// Homothetic parabolic solution q(t) = scale_coefficient * t^{2/3} * c with
// scale_coefficient^3 = (9/2) U(c).
struct HomotheticOrbit {
    CentralConfiguration cc;
    double scale_coefficient;
};

// Normalized equilateral configuration with the requested orientation, the
// sign of the cross product (s2 - s1) x (s3 - s1).
CentralConfiguration lagrange(const MassTriple& m, Orientation orientation);

// Coefficients (c0..c5) of the collinear quintic for the given middle body,
// exposed so the sign structure can be inspected.
std::array<double, 6> euler_quintic_coefficients(const MassTriple& m, int middle);

// Unique positive root of the collinear quintic. Bracketed on [1e-6, 1e3],
// bisected to width 1e-12, then polished with three Newton steps.
double euler_quintic_root(const MassTriple& m, int middle);

// Normalized collinear configuration with the given middle body. Built on the
// x-axis with gaps (r, 1), outer bodies ordered by index, then centered and
// scaled to I = 1.
CentralConfiguration euler(const MassTriple& m, int middle);

// [Lagrange+, Lagrange-, Euler(1), Euler(2), Euler(3)].
std::vector<CentralConfiguration> all_central_configurations(const MassTriple& m);

HomotheticOrbit homothetic_orbit(const CentralConfiguration& cc);

// Position and velocity of the homothetic solution at time t > 0.
Vec6 homothetic_position(const HomotheticOrbit& orbit, double t);
Vec6 homothetic_velocity(const HomotheticOrbit& orbit, double t);

} // namespace p3b
