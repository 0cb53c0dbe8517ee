#pragma once

// Second-variation analysis of homothetic parabolic orbits: the quadratic
// form Q(phi; a, b) for variations v(t) = phi(t) z along a fixed shape
// direction z, the scalar Euler-Lagrange equation it induces, its indicial
// roots and conjugate points, explicit negative directions for spiraling
// collinear configurations, and the perturbed form along nearby orbits.

#include "p3b/centralconfig.hpp"
#include "p3b/core.hpp"
#include "p3b/errors.hpp"
#include "p3b/flow.hpp"

#include <array>
#include <complex>
#include <functional>
#include <optional>
#include <stdexcept>
#include <vector>

namespace p3b {

// Scalar variation profile phi on a uniform time grid over [a, b], vanishing
// at both ends, attached to a unit (mass metric) shape direction z. phi holds
// intervals()+1 samples; the interval count is even and at least 64.
struct VariationProfile {
    double a = 0.0;
    double b = 0.0;
    std::vector<double> phi;
    Vec6 z_direction = Vec6::Zero();

    int intervals() const { return static_cast<int>(phi.size()) - 1; }
    double node(int i) const {
        return a + (b - a) * static_cast<double>(i) / intervals();
    }
};

inline constexpr int kDefaultProfileIntervals = 4096;
inline constexpr int kMaxProfileIntervals = 1 << 22;

// Samples f on the uniform grid and forces the endpoint values to exact
// zeros. Throws std::invalid_argument for an invalid window or interval
// count (n must be even and >= 64).
VariationProfile make_profile(double a, double b, int n,
                              const std::function<double(double)>& f,
                              const Vec6& z_direction);

// Homothetic scale factor rho(t) = (9/2 U(c))^{1/3} t^{2/3}; throws
// NonPositiveTimeError for t <= 0.
double rho(const CentralConfiguration& cc, double t);

// Indicial data of the scalar equation t^2 y'' + (4/3) t y' + (2/9) nu y = 0:
// roots of r^2 + (1/3) r + (2/9) nu = 0, the discriminant
// Delta = (1 - 8 nu)/9, and the oscillation rate a_osc = sqrt(8 nu - 1)/6
// when Delta < 0 (both roots then have real part -1/6).
struct IndicialData {
    double nu = 0.0;
    double discriminant = 0.0;
    std::array<std::complex<double>, 2> roots;
    std::optional<double> oscillation_rate;
};
IndicialData indicial(double nu);

// The solution y of the scalar equation with y(a) = 0, y'(a) = 1, evaluated
// in closed form (power pair, log-degenerate, or damped sine depending on
// the discriminant sign).
double disconjugacy_solution(double nu, double a, double t);

// Zeros of disconjugacy_solution in (a, horizon], refined by bisection to
// 1e-12 relative. Empty when nu <= 1/8: the equation is then disconjugate
// on (0, infinity).
std::vector<double> conjugate_points(double nu, double a, double horizon);

// Quadrature value and its error estimate. The estimate compares the
// composite Simpson result on the full grid with the exact half-resolution
// subsample; q_form throws QuadratureError when it exceeds 1e-6 |value|.
struct QuadratureResult {
    double value = 0.0;
    double error = 0.0;
};

// Q(phi; a, b) = integral of rho^2 phi'^2 + alpha1 rho^{-1} phi^2 over the
// profile window, with phi' from five-point finite differences on the grid.
QuadratureResult q_form(const VariationProfile& profile,
                        const CentralConfiguration& cc, double alpha1);

// Unit (mass metric) eigenvector of the sphere-restricted shape operator
// attached to its most negative eigenvalue, with that eigenvalue. Meaningful
// for collinear configurations, whose shape spectrum contains a negative
// value; for equilateral ones the minimum is the near-zero rotation mode.
std::pair<Vec6, double> most_negative_shape_mode(const CentralConfiguration& cc,
                                                 const MassTriple& m);

// A variation supported between conjugate points that makes the second
// variation strictly negative. The window starts at the first conjugate
// point past `a` and spans 1.25 half-periods of the oscillatory solution, so
// the slowed sine lobe beats the alpha term; the exact one-lobe solution
// itself would only achieve Q = 0. Throws NotSpiralingError when the
// configuration's mass parameter does not oscillate.
struct NegativeDirection {
    VariationProfile profile;
    double q_value = 0.0;
    double quadrature_error = 0.0;
    double nu = 0.0;
    double conjugate_ratio = 0.0; // consecutive conjugate point ratio
};
NegativeDirection negative_direction(const CentralConfiguration& cc,
                                     const MassTriple& m, double a = 1.0);

// Relative defect of the rescaling identity Q(phi_lambda; la, lb) =
// lambda^{1/3} Q(phi; a, b), where phi_lambda(t) = phi(t/lambda) shares the
// profile's sample values on the dilated window.
double scaling_identity_check(const VariationProfile& profile, double lambda,
                              const CentralConfiguration& cc, double alpha1);

// Second variation along a trajectory asymptotic to the homothetic orbit of
// cc, decomposed as q(t) = rho(t)(c + beta(t)) in the Newtonian-time clock
// matched at the trajectory's most expanded sample. Adds to Q the correction
// integral of (D^2U(c + beta) - D^2U(c))(z, z) phi^2 / rho. The alpha for
// the Q part is the Rayleigh quotient of z_direction, and trajectory data
// are cubic-Hermite interpolated in t between samples.
struct OrbitSecondVariation {
    double value = 0.0;       // q_value + correction
    double q_value = 0.0;     // unperturbed form
    double correction = 0.0;  // Hessian-difference integral
    double quadrature_error = 0.0;
    double time_shift = 0.0;  // asymptotic clock minus trajectory clock
};
OrbitSecondVariation second_variation_along_orbit(const Trajectory& traj,
                                                  const VariationProfile& profile,
                                                  const CentralConfiguration& cc);

} // namespace p3b
