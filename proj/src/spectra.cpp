#include "p3b/spectra.hpp"

#include <Eigen/Eigenvalues>

#include <cmath>
#include <cstdio>
#include <ostream>
#include <stdexcept>

namespace p3b {

std::vector<std::complex<double>> SpectralReport::constrained_eigenvalues() const {
    return {eigenvalues.begin() + 2, eigenvalues.end()};
}

double lagrange_k(const MassTriple& m) {
    const double d12 = m.m1 - m.m2;
    const double d13 = m.m1 - m.m3;
    const double d23 = m.m2 - m.m3;
    return (d12 * d12 + d13 * d13 + d23 * d23) / (2.0 * m.m * m.m);
}

double nu_parameter(const MassTriple& m, int middle) {
    const double r = euler_quintic_root(m, middle);
    // Slot masses (left outer, middle, right outer); nu is invariant under the
    // left/right labeling so only the middle matters.
    double a, b, c;
    switch (middle) {
        case 1: a = m.m2; b = m.m1; c = m.m3; break;
        case 2: a = m.m1; b = m.m2; c = m.m3; break;
        case 3: a = m.m1; b = m.m3; c = m.m2; break;
        default:
            throw std::invalid_argument("nu_parameter: middle body index must be 1, 2 or 3");
    }
    const double r13 = 1.0 + r;
    const double U = a * b / r + b * c + a * c / r13;
    const double I = (a * b * r * r + b * c + a * c * r13 * r13) / (a + b + c);
    const double tau = (a + b) / (r * r * r) + (b + c) + (a + c) / (r13 * r13 * r13);
    return (I / U) * tau - 2.0;
}

std::pair<double, double> nontrivial_alphas(const CentralConfiguration& cc,
                                            const MassTriple& m) {
    const double U = cc.U_value;
    if (cc.is_lagrange()) {
        const double sk = std::sqrt(lagrange_k(m));
        return {1.5 * U * (1.0 + sk), 1.5 * U * (1.0 - sk)};
    }
    const double nu = nu_parameter(m, cc.euler_middle());
    return {-U * nu, U * (3.0 + 2.0 * nu)};
}

namespace {

std::pair<std::complex<double>, std::complex<double>> lambda_pair(double v, double alpha) {
    // Roots of lambda^2 + (v/2) lambda - alpha = 0.
    const std::complex<double> disc(v * v + 16.0 * alpha, 0.0);
    const std::complex<double> root = std::sqrt(disc);
    return {(-v + root) / 4.0, (-v - root) / 4.0};
}

} // namespace

SpectralReport restpoint_eigenvalues(const CentralConfiguration& cc, int sign,
                                     bool at_infinity, const MassTriple& m) {
    if (sign != 1 && sign != -1) {
        throw std::invalid_argument("restpoint_eigenvalues: sign must be +1 or -1");
    }
    SpectralReport rep;
    rep.cc_kind = cc.kind;
    rep.at_infinity = at_infinity;
    rep.v0 = sign * std::sqrt(2.0 * cc.U_value);
    rep.alphas = nontrivial_alphas(cc, m);
    if (cc.is_lagrange()) {
        rep.k = lagrange_k(m);
    } else {
        const double nu = nu_parameter(m, cc.euler_middle());
        rep.nu = nu;
        if (std::abs(nu - 0.125) >= 1e-10) {
            rep.spiraling = nu > 0.125;
        }
    }
    const double v = rep.v0;
    rep.eigenvalues.reserve(8);
    rep.eigenvalues.emplace_back(at_infinity ? -v : v, 0.0); // radial direction
    rep.eigenvalues.emplace_back(v, 0.0);                    // energy-off-shell direction
    rep.eigenvalues.emplace_back(0.0, 0.0);                  // rotation
    rep.eigenvalues.emplace_back(-0.5 * v, 0.0);             // rotation partner
    const auto [l1p, l1m] = lambda_pair(v, rep.alphas.first);
    const auto [l2p, l2m] = lambda_pair(v, rep.alphas.second);
    rep.eigenvalues.push_back(l1p);
    rep.eigenvalues.push_back(l1m);
    rep.eigenvalues.push_back(l2p);
    rep.eigenvalues.push_back(l2m);
    return rep;
}

std::pair<Mat13, Mat12> build_variational_matrices(const CentralConfiguration& cc,
                                                   int sign, bool at_infinity,
                                                   const MassTriple& m) {
    const double v = sign * std::sqrt(2.0 * cc.U_value);
    const Vec6 s = cc.s.s;
    const Vec6 z = v * s;
    const Mat6 M = mass_matrix(m);
    const Mat6 H = hessian_potential(s, m);
    const Vec6 Ms = M * s;
    const Vec6 Mz = M * z;
    const Mat6 I6 = Mat6::Identity();

    Mat13 A = Mat13::Zero();
    A(0, 0) = at_infinity ? -v : v; // radial row; radial = 0 kills the rest
    A.block<6, 6>(1, 1) = -v * I6 - s * Mz.transpose();
    A.block<6, 6>(1, 7) = I6 - s * Ms.transpose();
    A.block<6, 6>(7, 1) = H + 0.5 * z * Mz.transpose();
    A.block<6, 6>(7, 7) = 0.5 * v * I6 + 0.5 * z * Ms.transpose();

    Mat12 B = Mat12::Zero();
    B.block<6, 6>(0, 0) = -v * I6;
    B.block<6, 6>(0, 6) = I6;
    B.block<6, 6>(6, 0) = H;
    B.block<6, 6>(6, 6) = 0.5 * v * I6;
    return {A, B};
}

AppendixMatrices appendix_matrices(const CentralConfiguration& cc, const MassTriple& m) {
    AppendixMatrices out;
    if (cc.is_lagrange()) {
        // I(s) = 1 for normalized s, so the inertia factor is unity.
        out.P = hessian_potential(cc.s.s, m) / cc.U_value;
        return out;
    }
    Eigen::Matrix3d C = Eigen::Matrix3d::Zero();
    const Vec6 s = cc.s.s;
    for (int i = 0; i < 3; ++i) {
        for (int j = 0; j < 3; ++j) {
            if (i == j) continue;
            const double r = pair_distance(s, i, j);
            const double w = m[j] / (r * r * r);
            C(i, j) = -w;
            C(i, i) += w;
        }
    }
    out.C = C;
    return out;
}

bool is_spiraling(const MassTriple& m, int middle) {
    const double nu = nu_parameter(m, middle);
    if (std::abs(nu - 0.125) < 1e-10) {
        throw BoundaryError("is_spiraling: nu sits on the classification boundary");
    }
    return nu > 0.125;
}

Eigen::Matrix<double, 6, 3> sphere_tangent_basis(const Vec6& s, const MassTriple& m) {
    Eigen::Matrix<double, 6, 3> W;
    int found = 0;
    for (int c = 0; c < 6 && found < 3; ++c) {
        Vec6 x = Vec6::Zero();
        x[c] = 1.0;
        x = remove_center_of_mass(x, m);      // drop translations
        x -= mass_inner(m, s, x) * s;          // drop the radial direction
        for (int k = 0; k < found; ++k) {
            x -= mass_inner(m, W.col(k), x) * W.col(k);
        }
        const double n = mass_norm(m, x);
        if (n > 1e-8) {
            W.col(found++) = x / n;
        }
    }
    if (found < 3) {
        throw std::logic_error("sphere_tangent_basis: failed to build a 3-dimensional basis");
    }
    return W;
}

std::vector<std::complex<double>> constrained_b_spectrum(const CentralConfiguration& cc,
                                                         int sign, bool at_infinity,
                                                         const MassTriple& m) {
    const double v = sign * std::sqrt(2.0 * cc.U_value);
    (void)at_infinity; // B does not involve the radial variable
    const auto W = sphere_tangent_basis(cc.s.s, m);
    const Mat6 H = hessian_potential(cc.s.s, m);
    Eigen::Matrix3d T;
    for (int a = 0; a < 3; ++a) {
        for (int b = 0; b < 3; ++b) {
            T(a, b) = mass_inner(m, W.col(a), H * W.col(b));
        }
    }
    Eigen::Matrix<double, 6, 6> Bc = Eigen::Matrix<double, 6, 6>::Zero();
    Bc.block<3, 3>(0, 0) = -v * Eigen::Matrix3d::Identity();
    Bc.block<3, 3>(0, 3) = Eigen::Matrix3d::Identity();
    Bc.block<3, 3>(3, 0) = T;
    Bc.block<3, 3>(3, 3) = 0.5 * v * Eigen::Matrix3d::Identity();
    Eigen::EigenSolver<Eigen::Matrix<double, 6, 6>> es(Bc);
    std::vector<std::complex<double>> out(6);
    for (int i = 0; i < 6; ++i) {
        out[i] = es.eigenvalues()[i];
    }
    return out;
}

std::vector<std::complex<double>> tangent_a_spectrum(const CentralConfiguration& cc,
                                                     int sign, bool at_infinity,
                                                     const MassTriple& m) {
    const auto [A, B] = build_variational_matrices(cc, sign, at_infinity, m);
    (void)B;
    const Vec6 s = cc.s.s;
    const auto W = sphere_tangent_basis(s, m);

    // Orthonormal basis of the restpoint tangent space in the block metric
    // diag(1, M, M): the radial direction, the off-shell velocity direction,
    // and the three sphere-tangent directions in each of s and z.
    Eigen::Matrix<double, 13, 8> basis = Eigen::Matrix<double, 13, 8>::Zero();
    basis(0, 0) = 1.0;
    basis.block<6, 1>(7, 1) = s;
    for (int k = 0; k < 3; ++k) {
        basis.block<6, 1>(1, 2 + k) = W.col(k);
        basis.block<6, 1>(7, 5 + k) = W.col(k);
    }

    const Mat6 M = mass_matrix(m);
    Mat13 G = Mat13::Identity();
    G.block<6, 6>(1, 1) = M;
    G.block<6, 6>(7, 7) = M;

    const Eigen::Matrix<double, 8, 8> Ap = basis.transpose() * G * A * basis;
    Eigen::EigenSolver<Eigen::Matrix<double, 8, 8>> es(Ap);
    std::vector<std::complex<double>> out(8);
    for (int i = 0; i < 8; ++i) {
        out[i] = es.eigenvalues()[i];
    }
    return out;
}

namespace {

MassMapCell scan_cell(double m1, double m2, double m3) {
    const MassTriple mt(m1, m2, m3);
    MassMapCell cell;
    cell.m1 = m1;
    cell.m2 = m2;
    cell.m3 = m3;
    for (int middle = 1; middle <= 3; ++middle) {
        const double nu = nu_parameter(mt, middle);
        cell.nu[middle - 1] = nu;
        if (std::abs(nu - 0.125) < 1e-10) {
            cell.spiral[middle - 1] = -1;
        } else {
            cell.spiral[middle - 1] = nu > 0.125 ? 1 : 0;
        }
    }
    cell.all = 1;
    for (int i = 0; i < 3; ++i) {
        if (cell.spiral[i] == 0) {
            cell.all = 0;
            break;
        }
        if (cell.spiral[i] == -1) {
            cell.all = -1;
        }
    }
    return cell;
}

// Included barycentric lattice points in row-major order.
std::vector<std::array<double, 3>> scan_points(int resolution, double margin) {
    if (resolution < 2) {
        throw std::invalid_argument("spiraling_region_scan: resolution must be >= 2");
    }
    const int N = resolution;
    std::vector<std::array<double, 3>> pts;
    pts.reserve(static_cast<size_t>(N) * (N + 1) / 2);
    const double denom = N + 2;
    for (int i = 0; i < N; ++i) {
        for (int j = 0; j + i < N; ++j) {
            const int k = N - 1 - i - j;
            const double m1 = (i + 1) / denom;
            const double m2 = (j + 1) / denom;
            const double m3 = (k + 1) / denom;
            if (m1 > margin && m2 > margin && m3 > margin) {
                pts.push_back({m1, m2, m3});
            }
        }
    }
    return pts;
}

} // namespace

std::vector<MassMapCell> spiraling_region_scan(int resolution, double margin) {
    const auto pts = scan_points(resolution, margin);
    std::vector<MassMapCell> cells(pts.size());
    const long n = static_cast<long>(pts.size());
#pragma omp parallel for schedule(static)
    for (long idx = 0; idx < n; ++idx) {
        cells[idx] = scan_cell(pts[idx][0], pts[idx][1], pts[idx][2]);
    }
    return cells;
}

std::vector<MassMapCell> spiraling_region_scan_serial(int resolution, double margin) {
    const auto pts = scan_points(resolution, margin);
    std::vector<MassMapCell> cells(pts.size());
    for (size_t idx = 0; idx < pts.size(); ++idx) {
        cells[idx] = scan_cell(pts[idx][0], pts[idx][1], pts[idx][2]);
    }
    return cells;
}

void write_massmap_csv(std::ostream& os, const std::vector<MassMapCell>& cells) {
    os << "m1,m2,m3,nu1,nu2,nu3,spiral1,spiral2,spiral3,all\n";
    char buf[512];
    for (const auto& c : cells) {
        std::snprintf(buf, sizeof(buf),
                      "%.17g,%.17g,%.17g,%.17g,%.17g,%.17g,%d,%d,%d,%d\n",
                      c.m1, c.m2, c.m3, c.nu[0], c.nu[1], c.nu[2],
                      c.spiral[0], c.spiral[1], c.spiral[2], c.all);
        os << buf;
    }
}

} // namespace p3b
