#pragma once
// Discrete broken-path functionals: the Lagrangian action of a timed path,
// the Jacobi-Maupertuis length of the underlying curve, zero-energy
// re-timing that turns the length into the action, and a finite-dimensional
// second-variation probe for local minimality with a free-time direction.

#include <optional>
#include <vector>

#include <Eigen/Dense>

#include "p3b/core.hpp"
#include "p3b/errors.hpp"

namespace p3b {

// Ordered, collision-free list of planar configurations. When `times` is
// present (one strictly increasing entry per node) the path is a timed curve
// t -> q(t); without times it is purely geometric and quadrature runs over
// the node-index parametrization.
struct DiscretePath {
    MassTriple masses;
    std::vector<Vec6> nodes;
    std::optional<std::vector<double>> times;

    bool timed() const { return times.has_value(); }
    // Copy with the time labels dropped.
    DiscretePath geometric() const { return {masses, nodes, std::nullopt}; }
};

// Subintervals of the composite Simpson rule on each node-to-node segment.
inline constexpr int kQuadIntervalsPerSegment = 512;

// Throws std::invalid_argument for shape problems (fewer than two nodes, a
// repeated consecutive node, non-finite data, bad time labels) and
// CollisionError when a node lies within the collision cutoff. Every
// functional below validates its input first.
void validate_path(const DiscretePath& path);

// Action integral of K + U over the piecewise-cubic interpolation of a timed
// path. Node slopes come from five-point Lagrange differentiation on the
// (possibly nonuniform) time grid, so the value is refinement-stable for
// node sequences sampled from a smooth curve.
double action(const DiscretePath& path);

// Length of the node curve in the zero-energy Jacobi-Maupertuis metric,
// integral of sqrt(2 U(q)) |dq|_m. Always evaluated on the node-index
// parametrization, so the value depends only on the node sequence; time
// labels never enter.
double jm_length(const DiscretePath& path);

// Assigns times to a geometric path so the interpolated curve moves at the
// zero-energy speed |dq/dt|_m = sqrt(2 U(q)). The first node gets time zero
// and the action of the result matches jm_length of the input up to
// interpolation error. Pre: path is geometric.
DiscretePath zero_energy_timing(const DiscretePath& path);

// Interpolated configuration and velocity of the path at parameter u: time
// for a timed path, fractional node index for a geometric one.
Vec6 path_position(const DiscretePath& path, double u);
Vec6 path_velocity(const DiscretePath& path, double u);

// Restriction of the free-time second variation of the action to a finite
// family of directions: for each of the six configuration coordinates,
// n_modes sine profiles in the node-index fraction (vanishing at both
// endpoints, so they displace interior nodes only), plus one uniform
// dilation of interior times whose displacement field is -(t - t_0) dq/dt.
// `hessian` is the raw restricted quadratic form, `gram` the L^2(dt) Gram
// matrix of the direction fields in the mass metric. min_eigenvalue is the
// smallest eigenvalue after normalizing each direction to unit L^2 norm, and
// worst_direction holds the matching coefficients (coordinate-major within
// each sine mode, dilation coefficient last).
struct MinimizerProbe {
    double min_eigenvalue = 0.0;
    Eigen::VectorXd worst_direction;
    int n_modes = 0;
    Eigen::MatrixXd hessian;
    Eigen::MatrixXd gram;
};

// Pre: timed path, n_modes >= 1. A negative min_eigenvalue certifies that
// the path fails the second-order necessary condition for a free-time local
// action minimizer; a nonnegative value only reports that this finite
// direction family found no descent, not minimality.
MinimizerProbe local_minimizer_probe(const DiscretePath& path, int n_modes);

// Displacement field of the probe's worst direction at time t inside the
// path's window: the sine-mode combination plus the dilation field.
Vec6 probe_direction_field(const MinimizerProbe& probe, const DiscretePath& path, double t);

}  // namespace p3b
