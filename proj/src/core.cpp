#include "p3b/core.hpp"

#include <cmath>

namespace p3b {

namespace {

inline Eigen::Vector2d body(const Vec6& q, int i) {
    return q.segment<2>(2 * i);
}

} // namespace

Mat6 mass_matrix(const MassTriple& m) {
    Mat6 M = Mat6::Zero();
    M.diagonal() << m.m1, m.m1, m.m2, m.m2, m.m3, m.m3;
    return M;
}

double mass_inner(const MassTriple& m, const Vec6& a, const Vec6& b) {
    double s = 0.0;
    for (int i = 0; i < 3; ++i) {
        s += m[i] * a.segment<2>(2 * i).dot(b.segment<2>(2 * i));
    }
    return s;
}

double mass_norm(const MassTriple& m, const Vec6& a) {
    return std::sqrt(mass_inner(m, a, a));
}

double pair_distance(const Vec6& q, int i, int j) {
    return (body(q, i) - body(q, j)).norm();
}

double min_pair_distance(const Vec6& q) {
    double r = pair_distance(q, 0, 1);
    r = std::min(r, pair_distance(q, 0, 2));
    r = std::min(r, pair_distance(q, 1, 2));
    return r;
}

double potential(const Vec6& q, const MassTriple& m) {
    double u = 0.0;
    for (int i = 0; i < 3; ++i) {
        for (int j = i + 1; j < 3; ++j) {
            const double r = pair_distance(q, i, j);
            if (r < kCollisionCutoff) {
                throw CollisionError("potential: configuration touches the collision set");
            }
            u += m[i] * m[j] / r;
        }
    }
    return u;
}

double moment_of_inertia(const Vec6& q, const MassTriple& m) {
    return mass_inner(m, q, q);
}

double moment_of_inertia_pairwise(const Vec6& q, const MassTriple& m) {
    double s = 0.0;
    for (int i = 0; i < 3; ++i) {
        for (int j = i + 1; j < 3; ++j) {
            const double r = pair_distance(q, i, j);
            s += m[i] * m[j] * r * r;
        }
    }
    return s / m.m;
}

Vec6 grad_potential(const Vec6& q, const MassTriple& m) {
    // Euclidean gradient block i is sum_{j != i} m_i m_j (q_j - q_i) / r^3;
    // the mass-metric gradient divides block i by m_i.
    Vec6 g = Vec6::Zero();
    for (int i = 0; i < 3; ++i) {
        for (int j = i + 1; j < 3; ++j) {
            const Eigen::Vector2d d = body(q, j) - body(q, i);
            const double r = d.norm();
            if (r < kCollisionCutoff) {
                throw CollisionError("grad_potential: configuration touches the collision set");
            }
            const Eigen::Vector2d f = d / (r * r * r);
            g.segment<2>(2 * i) += m[j] * f;
            g.segment<2>(2 * j) -= m[i] * f;
        }
    }
    return g;
}

Mat6 hessian_potential(const Vec6& q, const MassTriple& m) {
    // Euclidean Hessian blocks D_ij = (m_i m_j / r^3)(Id - 3 u u^T) for i != j,
    // D_ii = -sum_{j != i} D_ij. Returned matrix is M^{-1} D^2U.
    Mat6 h = Mat6::Zero();
    for (int i = 0; i < 3; ++i) {
        for (int j = i + 1; j < 3; ++j) {
            const Eigen::Vector2d d = body(q, j) - body(q, i);
            const double r = d.norm();
            if (r < kCollisionCutoff) {
                throw CollisionError("hessian_potential: configuration touches the collision set");
            }
            const Eigen::Vector2d u = d / r;
            const Eigen::Matrix2d block =
                (Eigen::Matrix2d::Identity() - 3.0 * u * u.transpose()) / (r * r * r);
            // Mass-metric rows: block row i carries m_j, block row j carries m_i.
            h.block<2, 2>(2 * i, 2 * j) += m[j] * block;
            h.block<2, 2>(2 * j, 2 * i) += m[i] * block;
            h.block<2, 2>(2 * i, 2 * i) -= m[j] * block;
            h.block<2, 2>(2 * j, 2 * j) -= m[i] * block;
        }
    }
    return h;
}

Vec6 sphere_gradient(const Vec6& s, const MassTriple& m) {
    return grad_potential(s, m) + potential(s, m) * s;
}

Vec6 sphere_gradient(const NormalizedConfiguration& s, const MassTriple& m) {
    return sphere_gradient(s.s, m);
}

Eigen::Vector2d center_of_mass(const Vec6& q, const MassTriple& m) {
    Eigen::Vector2d c = Eigen::Vector2d::Zero();
    for (int i = 0; i < 3; ++i) {
        c += m[i] * body(q, i);
    }
    return c / m.m;
}

Vec6 remove_center_of_mass(const Vec6& q, const MassTriple& m) {
    const Eigen::Vector2d c = center_of_mass(q, m);
    Vec6 out = q;
    for (int i = 0; i < 3; ++i) {
        out.segment<2>(2 * i) -= c;
    }
    return out;
}

namespace {

NormalizedConfiguration with_residuals(const Vec6& s, const MassTriple& m) {
    Eigen::Vector2d weighted = Eigen::Vector2d::Zero();
    for (int i = 0; i < 3; ++i) {
        weighted += m[i] * s.segment<2>(2 * i);
    }
    NormalizedConfiguration n;
    n.s = s;
    n.com_residual = weighted.cwiseAbs().maxCoeff();
    n.sphere_residual = std::abs(moment_of_inertia(s, m) - 1.0);
    return n;
}

} // namespace

std::pair<double, NormalizedConfiguration> normalize(const Vec6& q, const MassTriple& m) {
    Eigen::Vector2d weighted = Eigen::Vector2d::Zero();
    for (int i = 0; i < 3; ++i) {
        weighted += m[i] * q.segment<2>(2 * i);
    }
    const double scale = std::max(1.0, q.cwiseAbs().maxCoeff());
    if (weighted.cwiseAbs().maxCoeff() > 1e-10 * scale) {
        throw NotCenteredError("normalize: configuration is not centered");
    }
    const double I = moment_of_inertia(q, m);
    if (!(I > 0.0)) {
        throw ZeroConfigurationError("normalize: zero configuration");
    }
    const double r = std::sqrt(I);
    return {r, with_residuals(q / r, m)};
}

NormalizedConfiguration center_and_normalize(const Vec6& q, const MassTriple& m) {
    const Vec6 centered = remove_center_of_mass(q, m);
    const double I = moment_of_inertia(centered, m);
    if (!(I > 0.0)) {
        throw ZeroConfigurationError("center_and_normalize: zero configuration");
    }
    return with_residuals(centered / std::sqrt(I), m);
}

double kinetic(const Vec6& v, const MassTriple& m) {
    return 0.5 * mass_inner(m, v, v);
}

double energy(const Vec6& q, const Vec6& v, const MassTriple& m) {
    return kinetic(v, m) - potential(q, m);
}

Vec6 to_appendix_layout(const Vec6& q) {
    Vec6 out;
    out << q[0], q[2], q[4], q[1], q[3], q[5];
    return out;
}

Vec6 from_appendix_layout(const Vec6& q) {
    Vec6 out;
    out << q[0], q[3], q[1], q[4], q[2], q[5];
    return out;
}

} // namespace p3b
