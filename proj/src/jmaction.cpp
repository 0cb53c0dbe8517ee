#include "p3b/jmaction.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>
#include <string>
#include <vector>

namespace p3b {

namespace {

// Derivative at xs[i] of the Lagrange polynomial through (xs[k], ys[k]).
Vec6 lagrange_derivative(const std::vector<double>& xs, const std::vector<Vec6>& ys, int i) {
    const int n = static_cast<int>(xs.size());
    Vec6 out = Vec6::Zero();
    for (int k = 0; k < n; ++k) {
        double w;
        if (k == i) {
            w = 0.0;
            for (int j = 0; j < n; ++j)
                if (j != i) w += 1.0 / (xs[i] - xs[j]);
        } else {
            w = 1.0 / (xs[k] - xs[i]);
            for (int j = 0; j < n; ++j) {
                if (j == k || j == i) continue;
                w *= (xs[i] - xs[j]) / (xs[k] - xs[j]);
            }
        }
        out += w * ys[k];
    }
    return out;
}

// Piecewise cubic Hermite interpolant with five-point Lagrange node slopes
// (fewer points when the path is shorter than five nodes).
struct Interpolant {
    std::vector<double> param;
    std::vector<Vec6> node;
    std::vector<Vec6> slope;

    int segment(double u) const {
        const auto it = std::upper_bound(param.begin(), param.end(), u);
        const int i = static_cast<int>(it - param.begin()) - 1;
        return std::clamp(i, 0, static_cast<int>(param.size()) - 2);
    }

    void eval(double u, Vec6* q, Vec6* dq) const {
        const int i = segment(u);
        const double h = param[i + 1] - param[i];
        const double x = (u - param[i]) / h;
        const double x2 = x * x;
        if (q) {
            const double h00 = 1.0 + x2 * (2.0 * x - 3.0);
            const double h10 = x * (1.0 - x) * (1.0 - x);
            const double h01 = x2 * (3.0 - 2.0 * x);
            const double h11 = x2 * (x - 1.0);
            *q = h00 * node[i] + (h * h10) * slope[i] + h01 * node[i + 1] + (h * h11) * slope[i + 1];
        }
        if (dq) {
            const double d00 = 6.0 * x * (x - 1.0);
            const double d10 = 1.0 + x * (3.0 * x - 4.0);
            const double d01 = 6.0 * x * (1.0 - x);
            const double d11 = x * (3.0 * x - 2.0);
            *dq = (d00 / h) * node[i] + d10 * slope[i] + (d01 / h) * node[i + 1] + d11 * slope[i + 1];
        }
    }
};

Interpolant build_interpolant(std::vector<double> param, const std::vector<Vec6>& nodes) {
    const int n = static_cast<int>(nodes.size());
    const int window = std::min(n, 5);
    Interpolant out{std::move(param), nodes, std::vector<Vec6>(n)};
    std::vector<double> xs(window);
    std::vector<Vec6> ys(window);
    for (int i = 0; i < n; ++i) {
        const int w = std::clamp(i - window / 2, 0, n - window);
        for (int k = 0; k < window; ++k) {
            xs[k] = out.param[w + k];
            ys[k] = nodes[w + k];
        }
        out.slope[i] = lagrange_derivative(xs, ys, i - w);
    }
    return out;
}

std::vector<double> index_parameter(int n) {
    std::vector<double> u(n);
    for (int i = 0; i < n; ++i) u[i] = static_cast<double>(i);
    return u;
}

// Composite Simpson rule over one node segment of the interpolant.
template <class F>
double simpson_segment(const F& f, double a, double b) {
    const double h = (b - a) / kQuadIntervalsPerSegment;
    double sum = f(a) + f(b);
    for (int l = 1; l < kQuadIntervalsPerSegment; ++l)
        sum += (l % 2 ? 4.0 : 2.0) * f(a + l * h);
    return sum * h / 3.0;
}

}  // namespace

void validate_path(const DiscretePath& path) {
    const int n = static_cast<int>(path.nodes.size());
    if (n < 2) throw std::invalid_argument("validate_path: a path needs at least two nodes");
    for (const Vec6& q : path.nodes) {
        if (!q.allFinite()) throw std::invalid_argument("validate_path: non-finite node");
        if (min_pair_distance(q) < kCollisionCutoff)
            throw CollisionError("validate_path: a node touches the collision set");
    }
    for (int i = 0; i + 1 < n; ++i)
        if ((path.nodes[i + 1] - path.nodes[i]).squaredNorm() == 0.0)
            throw std::invalid_argument("validate_path: consecutive nodes must be distinct");
    if (path.times) {
        if (static_cast<int>(path.times->size()) != n)
            throw std::invalid_argument("validate_path: times must match nodes one-to-one");
        for (int i = 0; i < n; ++i) {
            const double t = (*path.times)[i];
            if (!std::isfinite(t)) throw std::invalid_argument("validate_path: non-finite time");
            if (i > 0 && t <= (*path.times)[i - 1])
                throw std::invalid_argument("validate_path: times must be strictly increasing");
        }
    }
}

double action(const DiscretePath& path) {
    validate_path(path);
    if (!path.timed()) throw std::invalid_argument("action: requires a timed path");
    const Interpolant curve = build_interpolant(*path.times, path.nodes);
    const auto lagrangian = [&](double t) {
        Vec6 q, dq;
        curve.eval(t, &q, &dq);
        return kinetic(dq, path.masses) + potential(q, path.masses);
    };
    double total = 0.0;
    for (size_t i = 0; i + 1 < path.nodes.size(); ++i)
        total += simpson_segment(lagrangian, curve.param[i], curve.param[i + 1]);
    return total;
}

double jm_length(const DiscretePath& path) {
    validate_path(path);
    const Interpolant curve =
        build_interpolant(index_parameter(static_cast<int>(path.nodes.size())), path.nodes);
    const auto speed = [&](double u) {
        Vec6 q, dq;
        curve.eval(u, &q, &dq);
        return std::sqrt(2.0 * potential(q, path.masses)) * mass_norm(path.masses, dq);
    };
    double total = 0.0;
    for (size_t i = 0; i + 1 < path.nodes.size(); ++i)
        total += simpson_segment(speed, static_cast<double>(i), static_cast<double>(i + 1));
    return total;
}

DiscretePath zero_energy_timing(const DiscretePath& path) {
    validate_path(path);
    if (path.timed())
        throw std::invalid_argument("zero_energy_timing: requires a geometric path");
    const int n = static_cast<int>(path.nodes.size());
    const Interpolant curve = build_interpolant(index_parameter(n), path.nodes);
    const auto pace = [&](double u) {
        Vec6 q, dq;
        curve.eval(u, &q, &dq);
        return mass_norm(path.masses, dq) / std::sqrt(2.0 * potential(q, path.masses));
    };
    std::vector<double> times(n, 0.0);
    for (int i = 0; i + 1 < n; ++i)
        times[i + 1] =
            times[i] + simpson_segment(pace, static_cast<double>(i), static_cast<double>(i + 1));
    return {path.masses, path.nodes, std::move(times)};
}

namespace {

Interpolant path_interpolant(const DiscretePath& path) {
    validate_path(path);
    if (path.timed()) return build_interpolant(*path.times, path.nodes);
    return build_interpolant(index_parameter(static_cast<int>(path.nodes.size())), path.nodes);
}

}  // namespace

Vec6 path_position(const DiscretePath& path, double u) {
    Vec6 q;
    path_interpolant(path).eval(u, &q, nullptr);
    return q;
}

Vec6 path_velocity(const DiscretePath& path, double u) {
    Vec6 dq;
    path_interpolant(path).eval(u, nullptr, &dq);
    return dq;
}

namespace {

// Index-fraction parameter of a timed path: piecewise-linear in t, hitting
// i/(n-1) at node i, so sine modes in it follow the node distribution.
struct IndexFraction {
    const Interpolant* curve;
    double scale;  // 1 / (n - 1)

    double value(int seg, double t) const {
        const double h = curve->param[seg + 1] - curve->param[seg];
        return (seg + (t - curve->param[seg]) / h) * scale;
    }
    double rate(int seg) const {
        return scale / (curve->param[seg + 1] - curve->param[seg]);
    }
};

}  // namespace

MinimizerProbe local_minimizer_probe(const DiscretePath& path, int n_modes) {
    validate_path(path);
    if (!path.timed())
        throw std::invalid_argument("local_minimizer_probe: requires a timed path");
    if (n_modes < 1)
        throw std::invalid_argument("local_minimizer_probe: n_modes must be positive");

    const MassTriple& m = path.masses;
    const int n = static_cast<int>(path.nodes.size());
    const Interpolant curve = build_interpolant(*path.times, path.nodes);
    const IndexFraction frac{&curve, 1.0 / (n - 1)};
    const double t0 = curve.param.front();
    const Vec6 mdiag = mass_matrix(m).diagonal();

    const int dim = 6 * n_modes + 1;  // sine modes per coordinate, then dilation
    Eigen::MatrixXd p_mode = Eigen::MatrixXd::Zero(n_modes, n_modes);
    Eigen::MatrixXd pd_mode = Eigen::MatrixXd::Zero(n_modes, n_modes);
    std::vector<Mat6> h_mode(n_modes * n_modes, Mat6::Zero());
    Eigen::MatrixXd b_dil = Eigen::MatrixXd::Zero(n_modes, 6);
    Eigen::MatrixXd g_dil = Eigen::MatrixXd::Zero(n_modes, 6);
    double b_dd = 0.0, g_dd = 0.0;

    std::vector<double> sj(n_modes), sdj(n_modes);
    for (int seg = 0; seg + 1 < n; ++seg) {
        const double ta = curve.param[seg], tb = curve.param[seg + 1];
        const double h = (tb - ta) / kQuadIntervalsPerSegment;
        const double sigdot = frac.rate(seg);
        for (int l = 0; l <= kQuadIntervalsPerSegment; ++l) {
            const double t = ta + l * h;
            const double w =
                (h / 3.0) * (l == 0 || l == kQuadIntervalsPerSegment ? 1.0 : (l % 2 ? 4.0 : 2.0));
            Vec6 q, dq;
            curve.eval(t, &q, &dq);
            const double sigma = frac.value(seg, t);
            Mat6 d2u = hessian_potential(q, m);
            for (int r = 0; r < 6; ++r) d2u.row(r) *= mdiag[r];
            const Vec6 grad_e = mdiag.cwiseProduct(grad_potential(q, m));
            const Vec6 dq_m = mdiag.cwiseProduct(dq);
            for (int j = 0; j < n_modes; ++j) {
                const double a = (j + 1) * M_PI;
                sj[j] = std::sin(a * sigma);
                sdj[j] = a * sigdot * std::cos(a * sigma);
            }
            for (int j = 0; j < n_modes; ++j) {
                for (int k = j; k < n_modes; ++k) {
                    p_mode(j, k) += w * sj[j] * sj[k];
                    pd_mode(j, k) += w * sdj[j] * sdj[k];
                    h_mode[j * n_modes + k] += (w * sj[j] * sj[k]) * d2u;
                }
                const double tau = t - t0;
                for (int k = 0; k < 6; ++k) {
                    b_dil(j, k) += w * (-sdj[j] * dq_m[k] + sj[j] * grad_e[k]);
                    g_dil(j, k) += -w * tau * sj[j] * dq_m[k];
                }
            }
            const double speed2 = dq.dot(dq_m);
            b_dd += w * speed2;
            g_dd += w * (t - t0) * (t - t0) * speed2;
        }
    }

    MinimizerProbe out;
    out.n_modes = n_modes;
    out.hessian = Eigen::MatrixXd::Zero(dim, dim);
    out.gram = Eigen::MatrixXd::Zero(dim, dim);
    for (int j = 0; j < n_modes; ++j) {
        for (int l = 0; l < n_modes; ++l) {
            const Mat6& hjl = h_mode[std::min(j, l) * n_modes + std::max(j, l)];
            const double p = j <= l ? p_mode(j, l) : p_mode(l, j);
            const double pd = j <= l ? pd_mode(j, l) : pd_mode(l, j);
            for (int k = 0; k < 6; ++k) {
                for (int c = 0; c < 6; ++c) {
                    out.hessian(6 * j + k, 6 * l + c) = (k == c ? mdiag[k] * pd : 0.0) + hjl(k, c);
                    if (k == c) out.gram(6 * j + k, 6 * l + c) = mdiag[k] * p;
                }
            }
        }
        for (int k = 0; k < 6; ++k) {
            out.hessian(6 * j + k, dim - 1) = out.hessian(dim - 1, 6 * j + k) = b_dil(j, k);
            out.gram(6 * j + k, dim - 1) = out.gram(dim - 1, 6 * j + k) = g_dil(j, k);
        }
    }
    out.hessian(dim - 1, dim - 1) = b_dd;
    out.gram(dim - 1, dim - 1) = g_dd;

    // Normalize every direction to unit L^2(dt) mass norm, then solve the
    // standard symmetric eigenproblem for the normalized Hessian.
    Eigen::VectorXd scale(dim);
    for (int i = 0; i < dim; ++i) {
        const double g = out.gram(i, i);
        if (!(g > 0.0))
            throw std::invalid_argument("local_minimizer_probe: degenerate direction family");
        scale[i] = 1.0 / std::sqrt(g);
    }
    const Eigen::MatrixXd sym = 0.5 * (out.hessian + out.hessian.transpose());
    const Eigen::MatrixXd normalized = scale.asDiagonal() * sym * scale.asDiagonal();
    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> solver(normalized);
    if (solver.info() != Eigen::Success)
        throw std::runtime_error("local_minimizer_probe: eigensolver failed");
    out.min_eigenvalue = solver.eigenvalues()(0);
    out.worst_direction = scale.cwiseProduct(solver.eigenvectors().col(0));
    return out;
}

Vec6 probe_direction_field(const MinimizerProbe& probe, const DiscretePath& path, double t) {
    validate_path(path);
    if (!path.timed())
        throw std::invalid_argument("probe_direction_field: requires a timed path");
    const int n = static_cast<int>(path.nodes.size());
    if (probe.worst_direction.size() != 6 * probe.n_modes + 1)
        throw std::invalid_argument("probe_direction_field: malformed probe");
    const Interpolant curve = build_interpolant(*path.times, path.nodes);
    const IndexFraction frac{&curve, 1.0 / (n - 1)};
    const int seg = curve.segment(t);
    const double sigma = frac.value(seg, t);
    Vec6 field = Vec6::Zero();
    for (int j = 0; j < probe.n_modes; ++j) {
        const double s = std::sin((j + 1) * M_PI * sigma);
        for (int k = 0; k < 6; ++k) field[k] += probe.worst_direction[6 * j + k] * s;
    }
    Vec6 dq;
    curve.eval(t, nullptr, &dq);
    field += probe.worst_direction[6 * probe.n_modes] * (-(t - curve.param.front()) * dq);
    return field;
}

}  // namespace p3b
