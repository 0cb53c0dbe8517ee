#include "p3b/secondvar.hpp"

#include "p3b/spectra.hpp"

#include <Eigen/Dense>

#include <algorithm>
#include <cmath>
#include <sstream>

namespace p3b {
namespace {

constexpr double kGateRelative = 1e-6; // Richardson gate vs |Q|
constexpr double kLogWindowMax = 690.0; // ln of the largest representable window

void validate_profile(const VariationProfile& p) {
    const int n = p.intervals();
    if (!(p.a > 0.0) || !(p.b > p.a) || !std::isfinite(p.b)) {
        throw std::invalid_argument("VariationProfile: window must satisfy 0 < a < b");
    }
    if (n < 64 || n % 2 != 0) {
        throw std::invalid_argument(
            "VariationProfile: interval count must be even and at least 64");
    }
    if (p.phi.front() != 0.0 || p.phi.back() != 0.0) {
        throw std::invalid_argument("VariationProfile: phi must vanish at both ends");
    }
    for (double v : p.phi) {
        if (!std::isfinite(v)) {
            throw std::invalid_argument("VariationProfile: phi sample not finite");
        }
    }
}

double simpson(const std::vector<double>& g, double h) {
    const size_t n = g.size() - 1;
    double odd = 0.0, even = 0.0;
    for (size_t i = 1; i < n; i += 2) odd += g[i];
    for (size_t i = 2; i < n; i += 2) even += g[i];
    return h / 3.0 * (g.front() + g.back() + 4.0 * odd + 2.0 * even);
}

// Five-point derivative on a uniform grid: centered in the interior,
// one-sided (same order) at the two nodes nearest each end.
std::vector<double> five_point_derivative(const std::vector<double>& phi, double h) {
    const size_t n = phi.size() - 1;
    std::vector<double> d(n + 1);
    const double inv = 1.0 / (12.0 * h);
    for (size_t i = 2; i + 2 <= n; ++i) {
        d[i] = (phi[i - 2] - 8.0 * phi[i - 1] + 8.0 * phi[i + 1] - phi[i + 2]) * inv;
    }
    d[0] = (-25.0 * phi[0] + 48.0 * phi[1] - 36.0 * phi[2] + 16.0 * phi[3] -
            3.0 * phi[4]) * inv;
    d[1] = (-3.0 * phi[0] - 10.0 * phi[1] + 18.0 * phi[2] - 6.0 * phi[3] + phi[4]) * inv;
    d[n] = (25.0 * phi[n] - 48.0 * phi[n - 1] + 36.0 * phi[n - 2] -
            16.0 * phi[n - 3] + 3.0 * phi[n - 4]) * inv;
    d[n - 1] = (3.0 * phi[n] + 10.0 * phi[n - 1] - 18.0 * phi[n - 2] +
                6.0 * phi[n - 3] - phi[n - 4]) * inv;
    return d;
}

double q_on_grid(double a, double b, const std::vector<double>& phi, double A,
                 double alpha1) {
    const size_t n = phi.size() - 1;
    const double h = (b - a) / static_cast<double>(n);
    const std::vector<double> d = five_point_derivative(phi, h);
    std::vector<double> g(n + 1);
    for (size_t i = 0; i <= n; ++i) {
        const double t = a + (b - a) * static_cast<double>(i) / static_cast<double>(n);
        const double r = A * std::pow(t, 2.0 / 3.0);
        g[i] = r * r * d[i] * d[i] + alpha1 * phi[i] * phi[i] / r;
    }
    return simpson(g, h);
}

} // namespace

VariationProfile make_profile(double a, double b, int n,
                              const std::function<double(double)>& f,
                              const Vec6& z_direction) {
    VariationProfile p;
    p.a = a;
    p.b = b;
    p.z_direction = z_direction;
    if (n >= 2) {
        p.phi.resize(static_cast<size_t>(n) + 1);
        for (int i = 0; i <= n; ++i) {
            p.phi[static_cast<size_t>(i)] =
                f(a + (b - a) * static_cast<double>(i) / static_cast<double>(n));
        }
        p.phi.front() = 0.0;
        p.phi.back() = 0.0;
    }
    validate_profile(p);
    return p;
}

double rho(const CentralConfiguration& cc, double t) {
    if (!(t > 0.0)) {
        throw NonPositiveTimeError("rho: time must be positive");
    }
    return std::cbrt(4.5 * cc.U_value) * std::pow(t, 2.0 / 3.0);
}

IndicialData indicial(double nu) {
    IndicialData d;
    d.nu = nu;
    d.discriminant = (1.0 - 8.0 * nu) / 9.0;
    if (d.discriminant >= 0.0) {
        const double root = std::sqrt(d.discriminant);
        d.roots = {std::complex<double>(-1.0 / 6.0 + 0.5 * root, 0.0),
                   std::complex<double>(-1.0 / 6.0 - 0.5 * root, 0.0)};
    } else {
        const double rate = 0.5 * std::sqrt(-d.discriminant);
        d.roots = {std::complex<double>(-1.0 / 6.0, rate),
                   std::complex<double>(-1.0 / 6.0, -rate)};
        d.oscillation_rate = rate;
    }
    return d;
}

double disconjugacy_solution(double nu, double a, double t) {
    if (!(a > 0.0) || !(t > 0.0)) {
        throw NonPositiveTimeError("disconjugacy_solution: times must be positive");
    }
    const double delta = (1.0 - 8.0 * nu) / 9.0;
    const double u = std::log(t / a);
    const double damp = std::pow(t / a, -1.0 / 6.0);
    if (delta > 0.0) {
        const double k = 0.5 * std::sqrt(delta);
        return (a / k) * damp * std::sinh(k * u);
    }
    if (delta == 0.0) {
        return a * damp * u;
    }
    const double rate = 0.5 * std::sqrt(-delta);
    return (a / rate) * damp * std::sin(rate * u);
}

std::vector<double> conjugate_points(double nu, double a, double horizon) {
    if (!(a > 0.0) || !(horizon > a)) {
        throw std::invalid_argument("conjugate_points: need 0 < a < horizon");
    }
    std::vector<double> zeros;
    const IndicialData ind = indicial(nu);
    if (!ind.oscillation_rate) return zeros;
    const double step = M_PI / *ind.oscillation_rate; // zero spacing in log time
    const double log_a = std::log(a);
    const double log_h = std::log(horizon);
    for (int k = 1;; ++k) {
        const double log_t = log_a + static_cast<double>(k) * step;
        if (log_t > log_h + 1e-9) break;
        double lo = log_a + (static_cast<double>(k) - 0.3) * step;
        double hi = log_a + (static_cast<double>(k) + 0.3) * step;
        auto f = [&](double lt) { return disconjugacy_solution(nu, a, std::exp(lt)); };
        double flo = f(lo);
        while (hi - lo > 1e-13) {
            const double mid = 0.5 * (lo + hi);
            const double fm = f(mid);
            if ((flo < 0.0) == (fm < 0.0)) {
                lo = mid;
                flo = fm;
            } else {
                hi = mid;
            }
        }
        const double root = std::exp(0.5 * (lo + hi));
        if (root <= horizon * (1.0 + 1e-12)) zeros.push_back(root);
    }
    return zeros;
}

QuadratureResult q_form(const VariationProfile& profile,
                        const CentralConfiguration& cc, double alpha1) {
    validate_profile(profile);
    const double A = std::cbrt(4.5 * cc.U_value);
    const double value = q_on_grid(profile.a, profile.b, profile.phi, A, alpha1);

    // Error estimate against the exact half-resolution subsample.
    const size_t n = static_cast<size_t>(profile.intervals());
    std::vector<double> coarse(n / 2 + 1);
    for (size_t j = 0; j < coarse.size(); ++j) coarse[j] = profile.phi[2 * j];
    const double half = q_on_grid(profile.a, profile.b, coarse, A, alpha1);
    const double error = std::abs(value - half);
    if (error > kGateRelative * std::abs(value)) {
        std::ostringstream msg;
        msg << "q_form: quadrature error " << error << " exceeds " << kGateRelative
            << " |Q| with |Q| = " << std::abs(value) << " at N = " << n;
        throw QuadratureError(msg.str());
    }
    return {value, error};
}

std::pair<Vec6, double> most_negative_shape_mode(const CentralConfiguration& cc,
                                                 const MassTriple& m) {
    const Eigen::Matrix<double, 6, 3> W = sphere_tangent_basis(cc.s.s, m);
    const Mat6 H = hessian_potential(cc.s.s, m);
    Eigen::Matrix3d T;
    for (int i = 0; i < 3; ++i) {
        const Vec6 img = H * W.col(i) + cc.U_value * W.col(i);
        for (int j = 0; j < 3; ++j) T(j, i) = mass_inner(m, W.col(j), img);
    }
    T = 0.5 * (T + T.transpose()).eval();
    Eigen::SelfAdjointEigenSolver<Eigen::Matrix3d> solver(T);
    Vec6 dir = W * solver.eigenvectors().col(0);
    dir /= mass_norm(m, dir);
    return {dir, solver.eigenvalues()[0]};
}

NegativeDirection negative_direction(const CentralConfiguration& cc,
                                     const MassTriple& m, double a) {
    if (!cc.is_euler()) {
        throw std::invalid_argument(
            "negative_direction: requires a collinear configuration");
    }
    if (!(a > 0.0)) {
        throw std::invalid_argument("negative_direction: window start must be positive");
    }
    bool spiraling = false;
    try {
        spiraling = is_spiraling(m, cc.euler_middle());
    } catch (const BoundaryError&) {
        throw NotSpiralingError(
            "negative_direction: nu within the indeterminate boundary band");
    }
    if (!spiraling) {
        throw NotSpiralingError("negative_direction: nu <= 1/8, form is disconjugate");
    }
    const double nu = nu_parameter(m, cc.euler_middle());
    const IndicialData ind = indicial(nu);
    const double rate = *ind.oscillation_rate;
    const double half_period = M_PI / rate;

    // Window [t1, t1 e^X]: starts at the first conjugate point past `a` and
    // spans X = 1.25 half-periods, so phi below oscillates slower than the
    // solution and Q comes out strictly negative.
    const double log_w0 = std::log(a) + half_period;
    const double span = 1.25 * half_period;
    if (log_w0 + span > kLogWindowMax) {
        throw QuadratureError(
            "negative_direction: conjugate-point window overflows the time axis");
    }
    const double w0 = std::exp(log_w0);
    const double b = std::exp(log_w0 + span);
    const double wave = M_PI / span;
    const auto phi = [&](double t) {
        const double u = std::log(t / w0);
        return std::pow(t / w0, -1.0 / 6.0) * std::sin(wave * u);
    };

    const Vec6 z = most_negative_shape_mode(cc, m).first;
    const double alpha1 = nontrivial_alphas(cc, m).first;
    for (int n = kDefaultProfileIntervals; n <= kMaxProfileIntervals; n *= 2) {
        const VariationProfile profile = make_profile(w0, b, n, phi, z);
        try {
            const QuadratureResult q = q_form(profile, cc, alpha1);
            return {profile, q.value, q.error, nu, std::exp(half_period)};
        } catch (const QuadratureError&) {
            if (2 * n > kMaxProfileIntervals) throw;
        }
    }
    throw QuadratureError("negative_direction: grid ladder exhausted");
}

double scaling_identity_check(const VariationProfile& profile, double lambda,
                              const CentralConfiguration& cc, double alpha1) {
    if (!(lambda >= 1.0)) {
        throw std::invalid_argument("scaling_identity_check: lambda must be >= 1");
    }
    VariationProfile scaled = profile;
    scaled.a *= lambda;
    scaled.b *= lambda;
    const double q_scaled = q_form(scaled, cc, alpha1).value;
    const double q_base = q_form(profile, cc, alpha1).value;
    const double predicted = std::cbrt(lambda) * q_base;
    if (predicted == 0.0) return std::abs(q_scaled);
    return std::abs(q_scaled - predicted) / std::abs(predicted);
}

OrbitSecondVariation second_variation_along_orbit(const Trajectory& traj,
                                                  const VariationProfile& profile,
                                                  const CentralConfiguration& cc) {
    const MassTriple& m = traj.masses;
    if (traj.samples.size() < 2) {
        throw std::invalid_argument(
            "second_variation_along_orbit: need at least two samples");
    }
    const Vec6 zd = profile.z_direction;
    if (std::abs(mass_norm(m, zd) - 1.0) > 1e-6) {
        throw std::invalid_argument(
            "second_variation_along_orbit: z_direction must be a unit vector in "
            "the mass metric");
    }
    const Mat6 Hc = hessian_potential(cc.s.s, m);
    const double alpha = mass_inner(m, zd, Hc * zd) + cc.U_value;
    const QuadratureResult q = q_form(profile, cc, alpha);

    const double A = std::cbrt(4.5 * cc.U_value);
    const auto physical_radius = [](const BlownUpState& st) {
        return st.chart == Chart::RChart ? st.radial : 1.0 / st.radial;
    };
    // Asymptotic clock matched at the trajectory's most expanded (last)
    // sample: there r ~ A t^{2/3} holds best.
    const TrajectorySample& last = traj.samples.back();
    const double shift = std::pow(physical_radius(last.state) / A, 1.5) - last.t;

    const double t_lo = traj.samples.front().t;
    const double t_hi = last.t;
    const double slack = 1e-9 * std::max(1.0, std::abs(t_hi));
    if (profile.a - shift < t_lo - slack || profile.b - shift > t_hi + slack) {
        std::ostringstream msg;
        msg << "second_variation_along_orbit: window [" << profile.a << ", "
            << profile.b << "] maps to trajectory times [" << profile.a - shift
            << ", " << profile.b - shift << "] outside the sampled range ["
            << t_lo << ", " << t_hi << "]";
        throw WindowError(msg.str());
    }

    // Cubic Hermite data per sample in Newtonian time. The radius is
    // interpolated through w = r^{3/2}, which is linear in t on the exact
    // parabola (dw/dt = (3/2) v), so the homothetic baseline interpolates
    // exactly and perturbed orbits pick up only the decaying remainder.
    const size_t count = traj.samples.size();
    std::vector<double> ts(count), ws(count), dws(count);
    std::vector<Vec6> ss(count), dss(count);
    for (size_t i = 0; i < count; ++i) {
        const TrajectorySample& smp = traj.samples[i];
        const double r = physical_radius(smp.state);
        ts[i] = smp.t;
        ws[i] = std::pow(r, 1.5);
        dws[i] = 1.5 * smp.state.v;
        ss[i] = smp.state.s.s;
        dss[i] = (smp.state.z - smp.state.v * smp.state.s.s) / std::pow(r, 1.5);
    }
    const auto hermite = [&](size_t j, double t, double& r_out, Vec6& s_out) {
        const double dt = ts[j + 1] - ts[j];
        const double x = (t - ts[j]) / dt;
        const double h00 = (1.0 + 2.0 * x) * (1.0 - x) * (1.0 - x);
        const double h10 = x * (1.0 - x) * (1.0 - x);
        const double h01 = x * x * (3.0 - 2.0 * x);
        const double h11 = x * x * (x - 1.0);
        const double w =
            h00 * ws[j] + h10 * dt * dws[j] + h01 * ws[j + 1] + h11 * dt * dws[j + 1];
        r_out = std::pow(w, 2.0 / 3.0);
        s_out = h00 * ss[j] + h10 * dt * dss[j] + h01 * ss[j + 1] + h11 * dt * dss[j + 1];
    };

    const double base = mass_inner(m, zd, Hc * zd);
    const size_t n = static_cast<size_t>(profile.intervals());
    const double h = (profile.b - profile.a) / static_cast<double>(n);
    std::vector<double> corr(n + 1);
    size_t seg = 0;
    for (size_t i = 0; i <= n; ++i) {
        const double t_asym = profile.a + (profile.b - profile.a) *
                                              static_cast<double>(i) /
                                              static_cast<double>(n);
        const double tt = std::clamp(t_asym - shift, t_lo, t_hi);
        while (seg + 2 < count && ts[seg + 1] < tt) ++seg;
        double r = 0.0;
        Vec6 s = Vec6::Zero();
        hermite(seg, tt, r, s);
        const double scale = A * std::pow(t_asym, 2.0 / 3.0);
        const Vec6 q_pt = (r / scale) * s;
        const double bent = mass_inner(m, zd, hessian_potential(q_pt, m) * zd);
        corr[i] = (bent - base) * profile.phi[i] * profile.phi[i] / scale;
    }
    const double correction = simpson(corr, h);
    std::vector<double> coarse(n / 2 + 1);
    for (size_t j = 0; j < coarse.size(); ++j) coarse[j] = corr[2 * j];
    const double corr_err = std::abs(correction - simpson(coarse, 2.0 * h));

    OrbitSecondVariation out;
    out.value = q.value + correction;
    out.q_value = q.value;
    out.correction = correction;
    out.quadrature_error = q.error + corr_err;
    out.time_shift = shift;
    return out;
}

} // namespace p3b
