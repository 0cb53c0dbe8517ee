#pragma once

// Closed-form restpoint eigenvalues of the blown-up flow, the variational
// matrices, the collinear nu parameter and spiraling classifier, and the
// mass-simplex region scan.

#include "p3b/centralconfig.hpp"

#include <array>
#include <complex>
#include <iosfwd>
#include <optional>
#include <utility>
#include <vector>

namespace p3b {

// Restpoint eigenvalue list plus the derived classifiers. The eight
// eigenvalues are ordered: radial direction (+v0 in the collision chart, -v0
// at infinity), the energy-off-shell direction (+v0), the two
// rotation-generated values {0, -v0/2}, then lambda+/lambda- for each of the
// two nontrivial sphere-Hessian eigenvalues alpha1, alpha2.
struct SpectralReport {
    CCKind cc_kind;
    double v0;
    bool at_infinity;
    std::pair<double, double> alphas;
    std::vector<std::complex<double>> eigenvalues; // 8 entries, order above
    std::optional<double> k;          // Lagrange mass parameter
    std::optional<double> nu;         // Euler parameter
    std::optional<bool> spiraling;    // Euler; empty on the nu = 1/8 boundary

    // The six eigenvalues of the variational matrix restricted to the
    // constraint subspace (everything except the two radial/off-shell values).
    std::vector<std::complex<double>> constrained_eigenvalues() const;
};

// One cell of the barycentric mass-simplex scan. spiral flags are 1 (nu >
// 1/8), 0 (nu < 1/8) or -1 (within the indeterminate boundary band); `all`
// aggregates the three flags.
struct MassMapCell {
    double m1, m2, m3;
    std::array<double, 3> nu;   // middle body 1, 2, 3
    std::array<int, 3> spiral;
    int all;
};

// Equilateral mass parameter k = sum of squared mass differences over
// 2 (m1+m2+m3)^2; lies in [0, 1).
double lagrange_k(const MassTriple& m);

// Collinear parameter nu for the given middle body, evaluated at the quintic
// root via the trace identity nu = (I(s)/U(s)) * trace(C) - 2, which is
// invariant under scaling and slot relabeling.
double nu_parameter(const MassTriple& m, int middle);

// Nontrivial eigenvalues (alpha1, alpha2) of the sphere Hessian at a central
// configuration. Lagrange: (3U/2)(1 +- sqrt(k)), both positive. Euler:
// (-U nu, U (3 + 2 nu)), alpha1 < 0 < alpha2.
std::pair<double, double> nontrivial_alphas(const CentralConfiguration& cc,
                                            const MassTriple& m);

// Full closed-form report for the restpoint with v0 = sign * sqrt(2 U(s)).
SpectralReport restpoint_eigenvalues(const CentralConfiguration& cc, int sign,
                                     bool at_infinity, const MassTriple& m);

// The 13x13 variational matrix A of the blown-up flow at the restpoint and
// the 12x12 matrix B = [[-v I, I], [Dgrad U(s), v/2 I]].
std::pair<Mat13, Mat12> build_variational_matrices(const CentralConfiguration& cc,
                                                   int sign, bool at_infinity,
                                                   const MassTriple& m);

// Oracle matrices: Lagrange kinds fill P = M^{-1} D^2U(s) / U(s) (trace 2,
// spectrum {0, 0, 2, -1, beta1, beta2}); Euler kinds fill the 3x3 collinear
// matrix C (eigenvalues {0, U(s), trace(C) - U(s)}).
struct AppendixMatrices {
    std::optional<Mat6> P;
    std::optional<Eigen::Matrix3d> C;
};
AppendixMatrices appendix_matrices(const CentralConfiguration& cc, const MassTriple& m);

// nu > 1/8 classifier with an indeterminate band: |nu - 1/8| < 1e-10 raises
// BoundaryError.
bool is_spiraling(const MassTriple& m, int middle);

// Mass-metric orthonormal basis (columns) of the subspace of configuration
// variations with zero weighted mean and <s, w>_m = 0.
Eigen::Matrix<double, 6, 3> sphere_tangent_basis(const Vec6& s, const MassTriple& m);

// Numeric spectrum of B restricted to the constraint subspace (six
// eigenvalues); the oracle for the closed-form lists.
std::vector<std::complex<double>> constrained_b_spectrum(const CentralConfiguration& cc,
                                                         int sign, bool at_infinity,
                                                         const MassTriple& m);

// Numeric spectrum of A restricted to the full 8-dimensional tangent space of
// the blown-up phase space at the restpoint.
std::vector<std::complex<double>> tangent_a_spectrum(const CentralConfiguration& cc,
                                                     int sign, bool at_infinity,
                                                     const MassTriple& m);

// Triangular barycentric scan of the open mass simplex with N points per
// edge; masses below `margin` are excluded. Cells are emitted row-major and
// the parallel kernel produces bitwise-identical output to the serial
// reference.
std::vector<MassMapCell> spiraling_region_scan(int resolution, double margin = 1e-3);
std::vector<MassMapCell> spiraling_region_scan_serial(int resolution, double margin = 1e-3);

// CSV with header m1,m2,m3,nu1,nu2,nu3,spiral1,spiral2,spiral3,all.
void write_massmap_csv(std::ostream& os, const std::vector<MassMapCell>& cells);

} // namespace p3b
