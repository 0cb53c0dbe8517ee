#pragma once

// The blown-up flow: chart-tagged states, the vector field and its exact
// Jacobian, an adaptive embedded Runge-Kutta integrator with per-step
// constraint projection and variational-tangent propagation, stable-manifold
// shooting at restpoints, the pullback symplectic forms, and the
// Lagrangian-graph diagnostics at infinity restpoints.

#include "p3b/centralconfig.hpp"
#include "p3b/spectra.hpp"

#include <complex>
#include <iosfwd>
#include <utility>
#include <vector>

namespace p3b {

// RChart carries the collision-regularized radial variable r; UChart carries
// u = 1/r and is restricted to the zero-energy problem.
enum class Chart { RChart, UChart };

// A chart-tagged state of the blown-up flow. radial is r or u per chart; s
// lies on the mass-metric unit sphere, z is the rescaled velocity, v caches
// <s,z>_m and h is the fixed energy parameter (0 in the u-chart).
struct BlownUpState {
    Chart chart;
    double radial;
    NormalizedConfiguration s;
    Vec6 z;
    double v;
    double h;
};

// Validates constraints (|I(s)-1|, center-of-mass residuals of s and z within
// 1e-8; radial >= 0; h = 0 in the u-chart) and caches v.
BlownUpState make_state(Chart chart, double radial, const Vec6& s, const Vec6& z,
                        double h, const MassTriple& m);

// |1/2 <z,z>_m - U(s) - radial*h| in the r-chart; |1/2 <z,z>_m - U(s)| in the
// u-chart.
double energy_residual(const BlownUpState& state, const MassTriple& m);

struct StateDiagnostics {
    double energy_residual;
    double v;
    double z_com_residual;   // max component of |sum_i m_i z_i|
    double sphere_residual;  // |I(s) - 1|
};

struct TrajectorySample {
    double tau;
    double t; // Newtonian time accumulated via dt = radial^{+-3/2} dtau
    BlownUpState state;
    StateDiagnostics diagnostics;
};

enum class TerminationReason { Completed, RadialBound, CollisionApproach };

// Samples are ordered by strictly increasing tau regardless of integration
// direction. When tangents are propagated, tangents[k] holds one 13-vector
// (radial, s, z components) per requested tangent at sample k.
struct Trajectory {
    MassTriple masses;
    std::vector<TrajectorySample> samples;
    std::vector<std::vector<Vec13>> tangents;
    TerminationReason termination = TerminationReason::Completed;

    explicit Trajectory(const MassTriple& m) : masses(m) {}
};

struct IntegratorOptions {
    double rtol = 1e-10;
    double atol = 1e-12;
    double initial_step = 1e-3;
    double max_step = 0.5;
    long max_steps = 2000000;
    double radial_max = 1e12;      // terminate when radial exceeds this
    // Terminate when the min pair distance on the shape sphere drops below
    // this. Escapes squeeze the bound pair's sphere separation toward zero
    // while its Newtonian period stays fixed, so resolving the shape past
    // this point costs unboundedly many steps per unit tau.
    double collision_threshold = 1e-3;
};

// Equilibrium of the blown-up flow: radial = 0, s = cc shape, z = v0 s with
// v0 = sign * sqrt(2 U(s)), h = 0.
struct RestpointState {
    CentralConfiguration cc;
    int sign;
    bool at_infinity;
    BlownUpState state;
};

RestpointState restpoint(const CentralConfiguration& cc, int sign, bool at_infinity,
                         const MassTriple& m);

// (radial', s', z'): r' = vr (or u' = -vu), s' = z - vs,
// z' = grad U(s) + (v/2) z, with v = <s,z>_m recomputed from the arguments.
Vec13 vector_field(const BlownUpState& state, const MassTriple& m);

// Exact Jacobian of vector_field at the given state; reduces to the matrix A
// of build_variational_matrices at restpoints.
Mat13 flow_jacobian(const BlownUpState& state, const MassTriple& m);

// Adaptive Dormand-Prince 5(4) with per-accepted-step projection of s onto
// the centered unit sphere and removal of the center-of-mass drift of z.
// Backward spans (tau1 < tau0) are integrated with negative steps and the
// samples reversed. Throws StepFailure (step underflow, typically near
// collision) or ConstraintBlowup (pre-projection drift above 1e-6).
Trajectory integrate(const BlownUpState& initial, std::pair<double, double> tau_span,
                     const MassTriple& m, const IntegratorOptions& opts = {});

// As integrate, but also propagates the given tangent 13-vectors with the
// exact Jacobian; tangent s-blocks are kept centered and sphere-tangential,
// z-blocks centered, at every accepted step.
Trajectory integrate_with_variation(const BlownUpState& initial,
                                    const std::vector<Vec13>& tangent_set,
                                    std::pair<double, double> tau_span,
                                    const MassTriple& m,
                                    const IntegratorOptions& opts = {});

// One real direction in the stable subspace of the variational matrix A.
// Complex pairs contribute two modes spanning their invariant plane (kind
// shape). kind: 0 radial, 1 rotation (-v0/2), 2 shape, 3 energy-off-shell.
struct StableMode {
    Vec13 vec;                   // unit in the block metric diag(1, M, M)
    std::complex<double> lambda;
    int kind;
};

struct StableSubspace {
    double v0;
    std::vector<StableMode> modes; // radial first, then rotation, then shapes
};

// Closed-form stable eigenvectors of A at the restpoint, orthonormalized in
// the block metric. When two stable directions share an invariant plane (a
// complex pair, or both real roots of one alpha), the second basis vector
// spans the plane rather than being an eigenvector itself. Throws
// DegenerateSpectrumError if a nominally hyperbolic eigenvalue has
// |Re lambda| < 1e-10.
StableSubspace stable_subspace(const RestpointState& rp, const MassTriple& m);

// Integrates backward in tau from rp.state + offset*direction for tau_back.
// offset must lie in [1e-8, 1e-4] and direction must have a positive radial
// component so the probe leaves the singular chart boundary. The returned
// trajectory is ordered with the restpoint end last.
Trajectory shoot_stable_manifold(const RestpointState& rp, double offset,
                                 const Vec13& direction, double tau_back,
                                 const MassTriple& m,
                                 const IntegratorOptions& opts = {});

// Pullback of the canonical form sum_i m_i dq_i ^ dv_i through the chart:
// Omega_r in the r-chart, Omega_u in the u-chart. Throws SingularChartError
// at radial <= 0.
double symplectic_form(const BlownUpState& state, const Vec13& a, const Vec13& b,
                       const MassTriple& m);

// One (mode pair, probe offset) decay record: least-squares slope of the log
// envelope of Omega_u against tau over the trailing fit window, with the
// admissible bound v/2 + lambda_w + 0.05 v and the raw form sizes.
struct PairDecay {
    int mode_a;
    int mode_b;
    double epsilon;
    double fitted_rate;
    double bound;
    double initial_raw; // |Omega_u| at the first (far) sample
    double max_raw;     // max |Omega_u| along the probe
};

struct GraphDiagnostics {
    double v0;
    double lambda_w;           // (-v0/4)(1 + sqrt(13 - 12 sqrt(k)))
    double decay_bound;        // v0/2 + lambda_w + 0.05 v0
    double condition_number;   // stable space -> (radial, shape) projection
    int positive_count;        // restpoint eigenvalue sign pattern
    int negative_count;
    int zero_count;
    std::vector<PairDecay> pairs;
    bool lagrangian_pass;      // all fitted rates <= decay_bound
};

// Graph and Lagrangian diagnostics at a Lagrange infinity restpoint with
// v0 > 0: projection condition number of the 4-dimensional stable subspace
// onto the (radial, shape) directions, and Omega_u decay fits along stable
// probes for `probes` offset magnitudes.
GraphDiagnostics lagrangian_graph_diagnostics(const RestpointState& rp, int probes,
                                              const MassTriple& m);

// CSV columns: tau,t,radial,chart,s1x,s1y,...,z3x,z3y,v,energy_residual.
void write_trajectory_csv(std::ostream& os, const Trajectory& traj);

} // namespace p3b
