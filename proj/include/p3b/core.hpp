#pragma once

// Mass-metric geometry and the Newtonian potential for the planar three-body
// problem: U, I, K, mass-metric gradients, the Hessian of U, and constraint
// normalization. All functions are pure and thread-safe.

#include "p3b/errors.hpp"
#include "p3b/types.hpp"

#include <utility>

namespace p3b {

// Pairwise distances below this cutoff are treated as singular input.
inline constexpr double kCollisionCutoff = 1e-13;

// Diagonal mass matrix M = diag(m1, m1, m2, m2, m3, m3).
Mat6 mass_matrix(const MassTriple& m);

// Mass inner product <a, b>_m = a^T M b and the induced norm.
double mass_inner(const MassTriple& m, const Vec6& a, const Vec6& b);
double mass_norm(const MassTriple& m, const Vec6& a);

// Distance between bodies i and j (0-based body indices).
double pair_distance(const Vec6& q, int i, int j);
double min_pair_distance(const Vec6& q);

// U(q) = sum_{i<j} m_i m_j / r_ij. Throws CollisionError if any r_ij < cutoff.
double potential(const Vec6& q, const MassTriple& m);

// Moment of inertia I(q) = <q, q>_m, plus the translation-invariant pairwise
// form (sum_{i<j} m_i m_j r_ij^2) / m; the two agree on centered input.
double moment_of_inertia(const Vec6& q, const MassTriple& m);
double moment_of_inertia_pairwise(const Vec6& q, const MassTriple& m);

// Mass-metric gradient of U: dU(q)(h) = <grad_potential(q), h>_m for all h.
// Degree -2 homogeneous.
Vec6 grad_potential(const Vec6& q, const MassTriple& m);

// Derivative of the mass-metric gradient, i.e. M^{-1} D^2U(q), assembled from
// the 2x2 blocks (m_i m_j / r_ij^3)(Id - 3 u u^T) with zero block-row sums.
// M * hessian_potential is symmetric. Degree -3 homogeneous.
Mat6 hessian_potential(const Vec6& q, const MassTriple& m);

// Gradient of U restricted to the unit sphere: grad U(s) + U(s) s.
// Mass-metric orthogonal to s; vanishes exactly at central configurations.
Vec6 sphere_gradient(const Vec6& s, const MassTriple& m);
Vec6 sphere_gradient(const NormalizedConfiguration& s, const MassTriple& m);

// Mass-weighted center of mass (sum_i m_i q_i) / m and its removal.
Eigen::Vector2d center_of_mass(const Vec6& q, const MassTriple& m);
Vec6 remove_center_of_mass(const Vec6& q, const MassTriple& m);

// Split a centered nonzero configuration into (r, s) with r = sqrt(I(q)) and
// s = q / r. Throws NotCenteredError for off-center input and
// ZeroConfigurationError for q = 0.
std::pair<double, NormalizedConfiguration> normalize(const Vec6& q, const MassTriple& m);

// Convenience: subtract the center of mass, then normalize.
NormalizedConfiguration center_and_normalize(const Vec6& q, const MassTriple& m);

// Kinetic energy K = <v, v>_m / 2 and total energy H = K - U.
double kinetic(const Vec6& v, const MassTriple& m);
double energy(const Vec6& q, const Vec6& v, const MassTriple& m);

// Permutation between the canonical (q1x,q1y,...,q3y) layout and the
// (x1,x2,x3,y1,y2,y3) layout convenient for collinear block structure.
Vec6 to_appendix_layout(const Vec6& q);
Vec6 from_appendix_layout(const Vec6& q);

} // namespace p3b
