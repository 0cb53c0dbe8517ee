#include "p3b/flow.hpp"

#include <Eigen/SVD>

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <ostream>
#include <stdexcept>

namespace p3b {

namespace {

// Max component of the mass-weighted sum (not mean) of per-body vectors.
double weighted_sum_residual(const Vec6& x, const MassTriple& m) {
    return (center_of_mass(x, m) * m.m).cwiseAbs().maxCoeff();
}

double chart_sign(Chart chart) { return chart == Chart::RChart ? 1.0 : -1.0; }

StateDiagnostics diagnostics_of(const BlownUpState& st, const MassTriple& m) {
    StateDiagnostics d;
    d.energy_residual = energy_residual(st, m);
    d.v = st.v;
    d.z_com_residual = weighted_sum_residual(st.z, m);
    d.sphere_residual = std::abs(moment_of_inertia(st.s.s, m) - 1.0);
    return d;
}

} // namespace

BlownUpState make_state(Chart chart, double radial, const Vec6& s, const Vec6& z,
                        double h, const MassTriple& m) {
    if (!(radial >= 0.0)) {
        throw std::invalid_argument("make_state: radial must be nonnegative");
    }
    if (chart == Chart::UChart && h != 0.0) {
        throw std::invalid_argument("make_state: the u-chart requires h = 0");
    }
    const double sphere_res = std::abs(moment_of_inertia(s, m) - 1.0);
    const double s_com = weighted_sum_residual(s, m);
    const double z_com = weighted_sum_residual(z, m);
    if (sphere_res > 1e-8 || s_com > 1e-8 || z_com > 1e-8) {
        throw std::invalid_argument("make_state: constraint residuals exceed 1e-8");
    }
    BlownUpState st;
    st.chart = chart;
    st.radial = radial;
    st.s = NormalizedConfiguration{s, s_com, sphere_res};
    st.z = z;
    st.v = mass_inner(m, s, z);
    st.h = h;
    return st;
}

double energy_residual(const BlownUpState& state, const MassTriple& m) {
    const double half_zz = 0.5 * mass_inner(m, state.z, state.z);
    const double U = potential(state.s.s, m);
    if (state.chart == Chart::RChart) {
        return std::abs(half_zz - U - state.radial * state.h);
    }
    return std::abs(half_zz - U);
}

RestpointState restpoint(const CentralConfiguration& cc, int sign, bool at_infinity,
                         const MassTriple& m) {
    if (sign != 1 && sign != -1) {
        throw std::invalid_argument("restpoint: sign must be +1 or -1");
    }
    const double v0 = sign * std::sqrt(2.0 * cc.U_value);
    const Vec6 z = v0 * cc.s.s;
    BlownUpState st = make_state(at_infinity ? Chart::UChart : Chart::RChart, 0.0,
                                 cc.s.s, z, 0.0, m);
    return RestpointState{cc, sign, at_infinity, st};
}

Vec13 vector_field(const BlownUpState& state, const MassTriple& m) {
    const Vec6& s = state.s.s;
    const double v = mass_inner(m, s, state.z);
    Vec13 out;
    out[0] = chart_sign(state.chart) * v * state.radial;
    out.segment<6>(1) = state.z - v * s;
    out.segment<6>(7) = grad_potential(s, m) + 0.5 * v * state.z;
    return out;
}

Mat13 flow_jacobian(const BlownUpState& state, const MassTriple& m) {
    const Vec6& s = state.s.s;
    const Vec6& z = state.z;
    const double v = mass_inner(m, s, z);
    const Mat6 M = mass_matrix(m);
    const Vec6 Ms = M * s;
    const Vec6 Mz = M * z;
    const Mat6 I6 = Mat6::Identity();
    const double cs = chart_sign(state.chart);

    Mat13 J = Mat13::Zero();
    J(0, 0) = cs * v;
    J.block<1, 6>(0, 1) = cs * state.radial * Mz.transpose();
    J.block<1, 6>(0, 7) = cs * state.radial * Ms.transpose();
    J.block<6, 6>(1, 1) = -v * I6 - s * Mz.transpose();
    J.block<6, 6>(1, 7) = I6 - s * Ms.transpose();
    J.block<6, 6>(7, 1) = hessian_potential(s, m) + 0.5 * z * Mz.transpose();
    J.block<6, 6>(7, 7) = 0.5 * v * I6 + 0.5 * z * Ms.transpose();
    return J;
}

namespace {

// Dormand-Prince 5(4) tableau. The per-step constraint projection makes the
// first-same-as-last reuse invalid, so all seven stages are evaluated fresh.
constexpr double kC[7] = {0.0, 1.0 / 5.0, 3.0 / 10.0, 4.0 / 5.0, 8.0 / 9.0, 1.0, 1.0};
constexpr double kA21 = 1.0 / 5.0;
constexpr double kA31 = 3.0 / 40.0, kA32 = 9.0 / 40.0;
constexpr double kA41 = 44.0 / 45.0, kA42 = -56.0 / 15.0, kA43 = 32.0 / 9.0;
constexpr double kA51 = 19372.0 / 6561.0, kA52 = -25360.0 / 2187.0,
                 kA53 = 64448.0 / 6561.0, kA54 = -212.0 / 729.0;
constexpr double kA61 = 9017.0 / 3168.0, kA62 = -355.0 / 33.0,
                 kA63 = 46732.0 / 5247.0, kA64 = 49.0 / 176.0,
                 kA65 = -5103.0 / 18656.0;
constexpr double kB[6] = {35.0 / 384.0, 0.0, 500.0 / 1113.0, 125.0 / 192.0,
                          -2187.0 / 6784.0, 11.0 / 84.0};
constexpr double kE[7] = {71.0 / 57600.0, 0.0, -71.0 / 16695.0, 71.0 / 1920.0,
                          -17253.0 / 339200.0, 22.0 / 525.0, -1.0 / 40.0};

// Derivative of the augmented vector [radial, s, z, t, tangents...].
class FlowRhs {
public:
    FlowRhs(Chart chart, const MassTriple& m, int n_tangents)
        : chart_(chart), m_(m), nt_(n_tangents) {}

    void operator()(const Eigen::VectorXd& y, Eigen::VectorXd& dy) const {
        const double radial = y[0];
        const Vec6 s = y.segment<6>(1);
        const Vec6 z = y.segment<6>(7);
        const double v = mass_inner(m_, s, z);
        const Vec6 g = grad_potential(s, m_);
        const double cs = chart_sign(chart_);

        dy[0] = cs * v * radial;
        dy.segment<6>(1) = z - v * s;
        dy.segment<6>(7) = g + 0.5 * v * z;
        if (chart_ == Chart::RChart) {
            dy[13] = radial > 0.0 ? std::pow(radial, 1.5) : 0.0;
        } else {
            dy[13] = radial > 1e-15 ? std::pow(radial, -1.5) : 0.0;
        }

        if (nt_ > 0) {
            const Mat6 M = mass_matrix(m_);
            const Vec6 Ms = M * s;
            const Vec6 Mz = M * z;
            const Mat6 H = hessian_potential(s, m_);
            const Mat6 I6 = Mat6::Identity();
            const Mat6 Jss = -v * I6 - s * Mz.transpose();
            const Mat6 Jsz = I6 - s * Ms.transpose();
            const Mat6 Jzs = H + 0.5 * z * Mz.transpose();
            const Mat6 Jzz = 0.5 * v * I6 + 0.5 * z * Ms.transpose();
            for (int k = 0; k < nt_; ++k) {
                const int base = 14 + 13 * k;
                const double dradial = y[base];
                const Vec6 ds = y.segment<6>(base + 1);
                const Vec6 dz = y.segment<6>(base + 7);
                dy[base] = cs * (v * dradial + radial * (Mz.dot(ds) + Ms.dot(dz)));
                dy.segment<6>(base + 1) = Jss * ds + Jsz * dz;
                dy.segment<6>(base + 7) = Jzs * ds + Jzz * dz;
            }
        }
    }

private:
    Chart chart_;
    const MassTriple& m_;
    int nt_;
};

BlownUpState state_from_vector(Chart chart, double h, const Eigen::VectorXd& y,
                               const MassTriple& m) {
    BlownUpState st;
    st.chart = chart;
    st.radial = y[0];
    const Vec6 s = y.segment<6>(1);
    st.s = NormalizedConfiguration{s, weighted_sum_residual(s, m),
                                   std::abs(moment_of_inertia(s, m) - 1.0)};
    st.z = y.segment<6>(7);
    st.v = mass_inner(m, s, st.z);
    st.h = h;
    return st;
}

Trajectory integrate_core(const BlownUpState& initial,
                          const std::vector<Vec13>& tangent_set,
                          std::pair<double, double> tau_span, const MassTriple& m,
                          const IntegratorOptions& opts) {
    const double tau0 = tau_span.first;
    const double tau1 = tau_span.second;
    const int nt = static_cast<int>(tangent_set.size());
    const int dim = 14 + 13 * nt;

    // Validate the initial state and the linearized constraints.
    (void)make_state(initial.chart, initial.radial, initial.s.s, initial.z, initial.h, m);
    for (const auto& tan : tangent_set) {
        const Vec6 ds = tan.segment<6>(1);
        const Vec6 dz = tan.segment<6>(7);
        const double scale = std::max(1.0, tan.cwiseAbs().maxCoeff());
        if (weighted_sum_residual(ds, m) > 1e-10 * scale ||
            std::abs(mass_inner(m, initial.s.s, ds)) > 1e-10 * scale ||
            weighted_sum_residual(dz, m) > 1e-10 * scale) {
            throw std::invalid_argument(
                "integrate_with_variation: tangent violates the linearized constraints");
        }
    }

    Trajectory traj(m);
    const FlowRhs rhs(initial.chart, m, nt);

    Eigen::VectorXd y(dim);
    y[0] = initial.radial;
    y.segment<6>(1) = initial.s.s;
    y.segment<6>(7) = initial.z;
    y[13] = 0.0;
    for (int k = 0; k < nt; ++k) {
        y.segment<13>(14 + 13 * k) = tangent_set[k];
    }

    auto record = [&](double tau) {
        TrajectorySample sample;
        sample.tau = tau;
        sample.t = y[13];
        sample.state = state_from_vector(initial.chart, initial.h, y, m);
        sample.diagnostics = diagnostics_of(sample.state, m);
        traj.samples.push_back(std::move(sample));
        if (nt > 0) {
            std::vector<Vec13> tans(nt);
            for (int k = 0; k < nt; ++k) {
                tans[k] = y.segment<13>(14 + 13 * k);
            }
            traj.tangents.push_back(std::move(tans));
        }
    };

    record(tau0);
    if (tau1 == tau0) {
        return traj;
    }

    const double span = tau1 - tau0;
    const double dir = span > 0.0 ? 1.0 : -1.0;
    const double h_floor = 1e-14 * std::max(1.0, std::abs(span));
    double tau = tau0;
    double h = dir * std::min(opts.initial_step, std::min(opts.max_step, std::abs(span)));

    std::vector<Eigen::VectorXd> k(7, Eigen::VectorXd(dim));
    Eigen::VectorXd ytmp(dim), y5(dim), yerr(dim);

    for (long step = 0; step < opts.max_steps; ++step) {
        if (std::abs(h) < h_floor) {
            throw StepFailure("integrate: step size underflow near collision");
        }
        // Clip the final step to land exactly on tau1.
        bool final_step = false;
        if ((tau + h - tau1) * dir >= 0.0) {
            h = tau1 - tau;
            final_step = true;
        }

        bool stage_collision = false;
        try {
            rhs(y, k[0]);
            ytmp = y + h * kA21 * k[0];
            rhs(ytmp, k[1]);
            ytmp = y + h * (kA31 * k[0] + kA32 * k[1]);
            rhs(ytmp, k[2]);
            ytmp = y + h * (kA41 * k[0] + kA42 * k[1] + kA43 * k[2]);
            rhs(ytmp, k[3]);
            ytmp = y + h * (kA51 * k[0] + kA52 * k[1] + kA53 * k[2] + kA54 * k[3]);
            rhs(ytmp, k[4]);
            ytmp = y + h * (kA61 * k[0] + kA62 * k[1] + kA63 * k[2] + kA64 * k[3] +
                            kA65 * k[4]);
            rhs(ytmp, k[5]);
            y5 = y + h * (kB[0] * k[0] + kB[2] * k[2] + kB[3] * k[3] + kB[4] * k[4] +
                          kB[5] * k[5]);
            rhs(y5, k[6]);
        } catch (const CollisionError&) {
            stage_collision = true;
        }
        if (stage_collision) {
            h *= 0.5;
            continue;
        }

        yerr = h * (kE[0] * k[0] + kE[2] * k[2] + kE[3] * k[3] + kE[4] * k[4] +
                    kE[5] * k[5] + kE[6] * k[6]);

        // Error control covers the state and every propagated tangent; at
        // restpoints the state is frozen and only the tangent error limits h.
        double err_sq = 0.0;
        for (int i = 0; i < dim; ++i) {
            const double scale =
                opts.atol + opts.rtol * std::max(std::abs(y[i]), std::abs(y5[i]));
            const double e = yerr[i] / scale;
            err_sq += e * e;
        }
        const double err = std::sqrt(err_sq / dim);

        if (!(err <= 1.0)) { // NaN-safe reject
            double factor = std::isfinite(err) ? 0.9 * std::pow(err, -0.2) : 0.2;
            factor = std::clamp(factor, 0.2, 5.0);
            h *= factor;
            if (std::abs(h) > opts.max_step) h = dir * opts.max_step;
            continue;
        }

        // Accept: pre-projection drift check, then project the constraints.
        y.swap(y5);
        tau = final_step ? tau1 : tau + h;

        Vec6 s = y.segment<6>(1);
        Vec6 z = y.segment<6>(7);
        const double sphere_drift = std::abs(moment_of_inertia(s, m) - 1.0);
        const double s_drift = weighted_sum_residual(s, m);
        const double z_drift = weighted_sum_residual(z, m);
        if (sphere_drift > 1e-6 || s_drift > 1e-6 || z_drift > 1e-6) {
            throw ConstraintBlowup("integrate: constraint drift exceeded 1e-6");
        }
        s = remove_center_of_mass(s, m);
        s /= std::sqrt(moment_of_inertia(s, m));
        z = remove_center_of_mass(z, m);
        y.segment<6>(1) = s;
        y.segment<6>(7) = z;
        for (int kt = 0; kt < nt; ++kt) {
            const int base = 14 + 13 * kt;
            Vec6 ds = remove_center_of_mass(y.segment<6>(base + 1), m);
            ds -= mass_inner(m, s, ds) * s;
            y.segment<6>(base + 1) = ds;
            y.segment<6>(base + 7) = remove_center_of_mass(y.segment<6>(base + 7), m);
        }

        record(tau);

        if (y[0] > opts.radial_max) {
            traj.termination = TerminationReason::RadialBound;
            break;
        }
        if (min_pair_distance(s) < opts.collision_threshold) {
            traj.termination = TerminationReason::CollisionApproach;
            break;
        }
        if (tau == tau1) {
            traj.termination = TerminationReason::Completed;
            break;
        }

        double factor = 0.9 * std::pow(std::max(err, 1e-16), -0.2);
        factor = std::clamp(factor, 0.2, 5.0);
        h *= factor;
        if (std::abs(h) > opts.max_step) h = dir * opts.max_step;
    }

    if (traj.samples.back().tau != tau1 &&
        traj.termination == TerminationReason::Completed) {
        throw StepFailure("integrate: step budget exhausted before reaching the span end");
    }

    if (dir < 0.0) {
        std::reverse(traj.samples.begin(), traj.samples.end());
        std::reverse(traj.tangents.begin(), traj.tangents.end());
    }
    return traj;
}

} // namespace

Trajectory integrate(const BlownUpState& initial, std::pair<double, double> tau_span,
                     const MassTriple& m, const IntegratorOptions& opts) {
    return integrate_core(initial, {}, tau_span, m, opts);
}

Trajectory integrate_with_variation(const BlownUpState& initial,
                                    const std::vector<Vec13>& tangent_set,
                                    std::pair<double, double> tau_span,
                                    const MassTriple& m, const IntegratorOptions& opts) {
    return integrate_core(initial, tangent_set, tau_span, m, opts);
}

namespace {

Vec6 perp_rotation(const Vec6& s) {
    Vec6 p;
    p << -s[1], s[0], -s[3], s[2], -s[5], s[4];
    return p;
}

double block_metric_inner(const Vec13& a, const Vec13& b, const Mat6& M) {
    return a[0] * b[0] + a.segment<6>(1).dot(M * b.segment<6>(1)) +
           a.segment<6>(7).dot(M * b.segment<6>(7));
}

} // namespace

StableSubspace stable_subspace(const RestpointState& rp, const MassTriple& m) {
    const double v0 = rp.sign * std::sqrt(2.0 * rp.cc.U_value);
    const Vec6 s = rp.cc.s.s;
    const Mat6 M = mass_matrix(m);

    StableSubspace out;
    out.v0 = v0;

    auto check_hyperbolic = [](std::complex<double> lam) {
        if (std::abs(lam.real()) < 1e-10) {
            throw DegenerateSpectrumError(
                "stable_subspace: nominally hyperbolic eigenvalue has vanishing real part");
        }
    };
    auto add_mode = [&](Vec13 vec, std::complex<double> lam, int kind) {
        vec /= std::sqrt(block_metric_inner(vec, vec, M));
        out.modes.push_back(StableMode{vec, lam, kind});
    };

    // Radial direction (1, 0, 0): eigenvalue -v0 at infinity, +v0 at collision.
    const std::complex<double> lam_radial(rp.at_infinity ? -v0 : v0, 0.0);
    check_hyperbolic(lam_radial);
    if (lam_radial.real() < 0.0) {
        Vec13 vec = Vec13::Zero();
        vec[0] = 1.0;
        add_mode(vec, lam_radial, 0);
    }

    // Energy-off-shell direction (0, 0, s): eigenvalue +v0.
    const std::complex<double> lam_energy(v0, 0.0);
    check_hyperbolic(lam_energy);
    if (lam_energy.real() < 0.0) {
        Vec13 vec = Vec13::Zero();
        vec.segment<6>(7) = s;
        add_mode(vec, lam_energy, 3);
    }

    // Rotation partner (0, s_perp, (v0/2) s_perp): eigenvalue -v0/2. The zero
    // eigenvalue's rotation eigenvector is excluded by construction.
    const std::complex<double> lam_rot(-0.5 * v0, 0.0);
    check_hyperbolic(lam_rot);
    if (lam_rot.real() < 0.0) {
        const Vec6 sp = perp_rotation(s);
        Vec13 vec = Vec13::Zero();
        vec.segment<6>(1) = sp;
        vec.segment<6>(7) = 0.5 * v0 * sp;
        add_mode(vec, lam_rot, 1);
    }

    // Shape directions: eigenvectors w of the sphere Hessian on the
    // constraint subspace, one lambda pair per nontrivial alpha.
    const auto W = sphere_tangent_basis(s, m);
    const Mat6 H = hessian_potential(s, m);
    const double U = rp.cc.U_value;
    Eigen::Matrix3d T;
    for (int a = 0; a < 3; ++a) {
        for (int b = 0; b < 3; ++b) {
            T(a, b) = mass_inner(m, W.col(a), H * W.col(b)) +
                      U * mass_inner(m, W.col(a), W.col(b));
        }
    }
    Eigen::SelfAdjointEigenSolver<Eigen::Matrix3d> es(T);
    // Drop the rotation direction (eigenvalue 0); keep the two shape pairs.
    int rot_idx = 0;
    for (int i = 1; i < 3; ++i) {
        if (std::abs(es.eigenvalues()[i]) < std::abs(es.eigenvalues()[rot_idx])) {
            rot_idx = i;
        }
    }
    const auto alphas = nontrivial_alphas(rp.cc, m);
    struct ShapePair {
        double alpha;
        Vec6 w;
    };
    std::vector<ShapePair> shapes;
    for (int i = 0; i < 3; ++i) {
        if (i == rot_idx) continue;
        shapes.push_back({es.eigenvalues()[i], W * es.eigenvectors().col(i)});
    }
    // Present alpha1's modes before alpha2's.
    if (std::abs(shapes[0].alpha - alphas.first) > std::abs(shapes[1].alpha - alphas.first)) {
        std::swap(shapes[0], shapes[1]);
    }
    shapes[0].alpha = alphas.first;
    shapes[1].alpha = alphas.second;

    for (const auto& sh : shapes) {
        const double disc = v0 * v0 + 16.0 * sh.alpha;
        if (disc >= 0.0) {
            const double root = std::sqrt(disc);
            for (double lam : {(-v0 + root) / 4.0, (-v0 - root) / 4.0}) {
                check_hyperbolic({lam, 0.0});
                if (lam < 0.0) {
                    Vec13 vec = Vec13::Zero();
                    vec.segment<6>(1) = sh.w;
                    vec.segment<6>(7) = (v0 + lam) * sh.w;
                    add_mode(vec, {lam, 0.0}, 2);
                }
            }
        } else {
            const double re = -v0 / 4.0;
            const double im = std::sqrt(-disc) / 4.0;
            check_hyperbolic({re, im});
            if (re < 0.0) {
                // Real invariant plane of the complex pair.
                Vec13 p1 = Vec13::Zero();
                p1.segment<6>(1) = sh.w;
                p1.segment<6>(7) = (v0 + re) * sh.w;
                Vec13 p2 = Vec13::Zero();
                p2.segment<6>(7) = im * sh.w;
                add_mode(p1, {re, im}, 2);
                add_mode(p2, {re, -im}, 2);
            }
        }
    }

    // Orthonormalize in the block metric. Modes from distinct constructions
    // are orthogonal already; this fixes pairs sharing an invariant plane
    // (complex pairs, and both real roots of a single alpha).
    for (size_t i = 0; i < out.modes.size(); ++i) {
        Vec13& vi = out.modes[i].vec;
        for (size_t j = 0; j < i; ++j) {
            vi -= block_metric_inner(out.modes[j].vec, vi, M) * out.modes[j].vec;
        }
        const double norm = std::sqrt(block_metric_inner(vi, vi, M));
        if (norm < 1e-12) {
            throw DegenerateSpectrumError(
                "stable_subspace: stable directions are numerically dependent");
        }
        vi /= norm;
    }
    return out;
}

Trajectory shoot_stable_manifold(const RestpointState& rp, double offset,
                                 const Vec13& direction, double tau_back,
                                 const MassTriple& m, const IntegratorOptions& opts) {
    if (!(offset >= 1e-8 && offset <= 1e-4)) {
        throw std::invalid_argument("shoot_stable_manifold: offset must lie in [1e-8, 1e-4]");
    }
    if (!(direction[0] > 0.0)) {
        throw std::invalid_argument(
            "shoot_stable_manifold: direction needs a positive radial component");
    }
    if (!(tau_back > 0.0)) {
        throw std::invalid_argument("shoot_stable_manifold: tau_back must be positive");
    }
    const double radial = rp.state.radial + offset * direction[0];
    Vec6 s = rp.state.s.s + offset * direction.segment<6>(1);
    s = center_and_normalize(s, m).s;
    Vec6 z = remove_center_of_mass(rp.state.z + offset * direction.segment<6>(7), m);
    const BlownUpState start = make_state(rp.state.chart, radial, s, z, 0.0, m);
    return integrate(start, {0.0, -tau_back}, m, opts);
}

double symplectic_form(const BlownUpState& state, const Vec13& a, const Vec13& b,
                       const MassTriple& m) {
    if (!(state.radial > 0.0)) {
        throw SingularChartError("symplectic_form: the form is singular at radial <= 0");
    }
    const double da = a[0], db = b[0];
    const std::array<double, 3> masses = m.as_array();
    double total = 0.0;
    if (state.chart == Chart::RChart) {
        const double rh = std::sqrt(state.radial);
        const double rmh = 1.0 / rh;
        for (int i = 0; i < 3; ++i) {
            const Eigen::Vector2d si = state.s.s.segment<2>(2 * i);
            const Eigen::Vector2d zi = state.z.segment<2>(2 * i);
            const Eigen::Vector2d sa = a.segment<2>(1 + 2 * i);
            const Eigen::Vector2d sb = b.segment<2>(1 + 2 * i);
            const Eigen::Vector2d za = a.segment<2>(7 + 2 * i);
            const Eigen::Vector2d zb = b.segment<2>(7 + 2 * i);
            total += masses[i] *
                     (rh * (sa.dot(zb) - sb.dot(za)) +
                      rmh * (da * si.dot(zb) - db * si.dot(za)) +
                      0.5 * rmh * (da * zi.dot(sb) - db * zi.dot(sa)));
        }
    } else {
        const double umh = 1.0 / std::sqrt(state.radial);
        const double um3h = umh / state.radial;
        for (int i = 0; i < 3; ++i) {
            const Eigen::Vector2d si = state.s.s.segment<2>(2 * i);
            const Eigen::Vector2d zi = state.z.segment<2>(2 * i);
            const Eigen::Vector2d sa = a.segment<2>(1 + 2 * i);
            const Eigen::Vector2d sb = b.segment<2>(1 + 2 * i);
            const Eigen::Vector2d za = a.segment<2>(7 + 2 * i);
            const Eigen::Vector2d zb = b.segment<2>(7 + 2 * i);
            total += masses[i] *
                     (umh * (sa.dot(zb) - sb.dot(za)) +
                      um3h * (si.dot(za) * db - si.dot(zb) * da) +
                      0.5 * um3h * (zi.dot(sa) * db - zi.dot(sb) * da));
        }
    }
    return total;
}

namespace {

// Componentwise-absolute upper envelope of Omega_u: same terms, every factor
// replaced by its absolute value, so it decays at the dominant pair rate
// instead of collapsing to the (identically small) alternating sum.
double omega_u_envelope(const BlownUpState& state, const Vec13& a, const Vec13& b,
                        const MassTriple& m) {
    const double umh = 1.0 / std::sqrt(state.radial);
    const double um3h = umh / state.radial;
    const std::array<double, 3> masses = m.as_array();
    const double da = std::abs(a[0]), db = std::abs(b[0]);
    double total = 0.0;
    for (int i = 0; i < 3; ++i) {
        const Eigen::Vector2d si = state.s.s.segment<2>(2 * i);
        const Eigen::Vector2d zi = state.z.segment<2>(2 * i);
        const Eigen::Vector2d sa = a.segment<2>(1 + 2 * i).cwiseAbs();
        const Eigen::Vector2d sb = b.segment<2>(1 + 2 * i).cwiseAbs();
        const Eigen::Vector2d za = a.segment<2>(7 + 2 * i).cwiseAbs();
        const Eigen::Vector2d zb = b.segment<2>(7 + 2 * i).cwiseAbs();
        total += masses[i] *
                 (umh * (sa.dot(zb) + sb.dot(za)) +
                  um3h * (std::abs(si.dot(a.segment<2>(7 + 2 * i))) * db +
                          std::abs(si.dot(b.segment<2>(7 + 2 * i))) * da) +
                  0.5 * um3h * (std::abs(zi.dot(a.segment<2>(1 + 2 * i))) * db +
                                std::abs(zi.dot(b.segment<2>(1 + 2 * i))) * da));
    }
    return total;
}

// Least-squares slope of log(values) against tau over the trailing fraction.
double fitted_log_slope(const std::vector<double>& tau, const std::vector<double>& vals,
                        double trailing_fraction) {
    const double tau_lo =
        tau.front() + (1.0 - trailing_fraction) * (tau.back() - tau.front());
    double sx = 0, sy = 0, sxx = 0, sxy = 0;
    int n = 0;
    for (size_t i = 0; i < tau.size(); ++i) {
        if (tau[i] < tau_lo || vals[i] <= 0.0) continue;
        const double x = tau[i], y = std::log(vals[i]);
        sx += x;
        sy += y;
        sxx += x * x;
        sxy += x * y;
        ++n;
    }
    if (n < 2) return 0.0;
    return (n * sxy - sx * sy) / (n * sxx - sx * sx);
}

} // namespace

GraphDiagnostics lagrangian_graph_diagnostics(const RestpointState& rp, int probes,
                                              const MassTriple& m) {
    if (!rp.cc.is_lagrange() || !rp.at_infinity || rp.sign != 1) {
        throw std::invalid_argument(
            "lagrangian_graph_diagnostics: requires a Lagrange infinity restpoint with v0 > 0");
    }
    if (probes < 1) {
        throw std::invalid_argument("lagrangian_graph_diagnostics: probes must be >= 1");
    }

    GraphDiagnostics out;
    const double v0 = rp.sign * std::sqrt(2.0 * rp.cc.U_value);
    const double k = lagrange_k(m);
    out.v0 = v0;
    out.lambda_w = -(v0 / 4.0) * (1.0 + std::sqrt(13.0 - 12.0 * std::sqrt(k)));
    out.decay_bound = 0.5 * v0 + out.lambda_w + 0.05 * v0;

    // Closed-form eigenvalue sign counts.
    const auto rep = restpoint_eigenvalues(rp.cc, rp.sign, rp.at_infinity, m);
    out.positive_count = out.negative_count = out.zero_count = 0;
    for (const auto& ev : rep.eigenvalues) {
        if (std::abs(ev.real()) < 1e-12) {
            ++out.zero_count;
        } else if (ev.real() > 0.0) {
            ++out.positive_count;
        } else {
            ++out.negative_count;
        }
    }

    const StableSubspace ss = stable_subspace(rp, m);
    const int n = static_cast<int>(ss.modes.size());

    // Graph test: project the stable modes onto (radial, shape) coordinates.
    const auto W = sphere_tangent_basis(rp.cc.s.s, m);
    Eigen::MatrixXd proj(n, 4);
    for (int i = 0; i < n; ++i) {
        proj(i, 0) = ss.modes[i].vec[0];
        for (int c = 0; c < 3; ++c) {
            proj(i, 1 + c) = mass_inner(m, W.col(c), ss.modes[i].vec.segment<6>(1));
        }
    }
    Eigen::JacobiSVD<Eigen::MatrixXd> svd(proj);
    out.condition_number =
        svd.singularValues()[0] /
        svd.singularValues()[std::min<int>(n, 4) - 1];

    // Probe offsets (log-spaced inside the admissible shooting range).
    std::vector<double> eps_list;
    if (probes == 1) {
        eps_list.push_back(1e-6);
    } else {
        for (int j = 0; j < probes; ++j) {
            eps_list.push_back(1e-7 *
                               std::pow(1e3, static_cast<double>(j) / (probes - 1)));
        }
    }

    // Gated pairs: radial and shape modes only; the rotation mode's envelope
    // carries the non-decaying symmetry direction and is reported elsewhere.
    std::vector<std::pair<int, int>> pairs;
    for (int i = 0; i < n; ++i) {
        for (int j = i + 1; j < n; ++j) {
            const int ki = ss.modes[i].kind, kj = ss.modes[j].kind;
            if ((ki == 0 || ki == 2) && (kj == 0 || kj == 2)) {
                pairs.emplace_back(i, j);
            }
        }
    }

    const double T = 8.0 / v0;
    IntegratorOptions opts;
    std::vector<Vec13> tangents;
    tangents.reserve(n);
    for (const auto& mode : ss.modes) {
        tangents.push_back(mode.vec);
    }

    out.lagrangian_pass = true;
    for (const double eps : eps_list) {
        // Offset along the radial mode; the homothetic probe keeps (s, z)
        // frozen so every tangent stays resolvable down to the restpoint.
        const BlownUpState start =
            make_state(rp.state.chart, rp.state.radial + eps, rp.state.s.s,
                       rp.state.z, 0.0, m);
        const Trajectory traj =
            integrate_with_variation(start, tangents, {0.0, -T}, m, opts);

        for (const auto& [ia, ib] : pairs) {
            std::vector<double> taus, envs;
            double max_raw = 0.0, initial_raw = 0.0;
            taus.reserve(traj.samples.size());
            envs.reserve(traj.samples.size());
            for (size_t si = 0; si < traj.samples.size(); ++si) {
                const auto& sample = traj.samples[si];
                const Vec13& ta = traj.tangents[si][ia];
                const Vec13& tb = traj.tangents[si][ib];
                taus.push_back(sample.tau);
                envs.push_back(omega_u_envelope(sample.state, ta, tb, m));
                const double raw =
                    eps * eps * std::abs(symplectic_form(sample.state, ta, tb, m));
                if (si == 0) initial_raw = raw;
                max_raw = std::max(max_raw, raw);
            }
            PairDecay pd;
            pd.mode_a = ia;
            pd.mode_b = ib;
            pd.epsilon = eps;
            pd.fitted_rate = fitted_log_slope(taus, envs, 0.6);
            pd.bound = out.decay_bound;
            pd.initial_raw = initial_raw;
            pd.max_raw = max_raw;
            if (!(pd.fitted_rate <= pd.bound)) {
                out.lagrangian_pass = false;
            }
            out.pairs.push_back(pd);
        }
    }
    return out;
}

void write_trajectory_csv(std::ostream& os, const Trajectory& traj) {
    os << "tau,t,radial,chart,s1x,s1y,s2x,s2y,s3x,s3y,"
          "z1x,z1y,z2x,z2y,z3x,z3y,v,energy_residual\n";
    char buf[1024];
    for (const auto& sample : traj.samples) {
        const auto& st = sample.state;
        std::snprintf(buf, sizeof(buf),
                      "%.17g,%.17g,%.17g,%s,"
                      "%.17g,%.17g,%.17g,%.17g,%.17g,%.17g,"
                      "%.17g,%.17g,%.17g,%.17g,%.17g,%.17g,"
                      "%.17g,%.17g\n",
                      sample.tau, sample.t, st.radial,
                      st.chart == Chart::RChart ? "r" : "u", st.s.s[0], st.s.s[1],
                      st.s.s[2], st.s.s[3], st.s.s[4], st.s.s[5], st.z[0], st.z[1],
                      st.z[2], st.z[3], st.z[4], st.z[5], st.v,
                      sample.diagnostics.energy_residual);
        os << buf;
    }
}

} // namespace p3b
