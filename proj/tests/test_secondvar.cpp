#include "doctest.h"
#include "testutil.hpp"

#include "p3b/secondvar.hpp"
#include "p3b/spectra.hpp"

#include <cmath>
#include <random>

using namespace p3b;

namespace {

// Frozen closed-form values for the equal-mass collinear configuration
// (middle slot 2): U = 2.5 sqrt(2), nu = 1.4, a_osc = sqrt(10.2)/6, and the
// analytic Q of damped-sine profiles phi = (t/w0)^{-1/6} sin(k ln(t/w0)) on
// [w0, w0 e^X] with k X = pi:
//   Q = A^2 w0^{1/3} (X/2)(k^2 - a_osc^2),  A^3 = (9/2) U.
constexpr double kEqualMassAosc = 0.53229064742237708;
constexpr double kFirstConjugate = 365.77738005208948; // e^{pi/a_osc}
constexpr double kNuFiveRatio = 20.45739825165165;     // e^{pi/a_osc}, nu = 5
constexpr double kQPosAnchor = 2.3800874069279851;     // k = 1.25 a_osc, w0 = 1
constexpr double kQNegAnchor = -17.021527134162508;    // k = 0.8 a_osc, w0 = t1
constexpr double kNegWindowEnd = 585110.51243319176;   // t1 e^{1.25 pi/a_osc}
constexpr double kRhoLagrangeOne = 2.381101577952299;  // (27/2)^{1/3}

// Independent oracle: classical RK4 on t^2 y'' + (4/3) t y' + (2/9) nu y = 0
// with geometric steps from a, recording y at the requested times.
std::vector<double> integrate_scalar_ode(double nu, double a,
                                         const std::vector<double>& t_out) {
    double t = a, y = 0.0, yp = 1.0;
    std::vector<double> out;
    const double grow = std::pow(t_out.back() / a, 1.0 / 400000.0);
    size_t next = 0;
    const auto acc = [nu](double tt, double yy, double pp) {
        return -((4.0 / 3.0) * tt * pp + (2.0 / 9.0) * nu * yy) / (tt * tt);
    };
    while (next < t_out.size()) {
        double h = t * (grow - 1.0);
        if (t + h >= t_out[next]) h = t_out[next] - t;
        const double k1y = yp, k1p = acc(t, y, yp);
        const double k2y = yp + 0.5 * h * k1p,
                     k2p = acc(t + 0.5 * h, y + 0.5 * h * k1y, yp + 0.5 * h * k1p);
        const double k3y = yp + 0.5 * h * k2p,
                     k3p = acc(t + 0.5 * h, y + 0.5 * h * k2y, yp + 0.5 * h * k2p);
        const double k4y = yp + h * k3p,
                     k4p = acc(t + h, y + h * k3y, yp + h * k3p);
        y += h / 6.0 * (k1y + 2.0 * k2y + 2.0 * k3y + k4y);
        yp += h / 6.0 * (k1p + 2.0 * k2p + 2.0 * k3p + k4p);
        t += h;
        if (t >= t_out[next] * (1.0 - 1e-15)) {
            out.push_back(y);
            ++next;
        }
    }
    return out;
}

VariationProfile damped_sine_profile(double w0, double wave, double span_log,
                                     int n, const Vec6& z) {
    const double b = w0 * std::exp(span_log);
    return make_profile(
        w0, b, n,
        [&](double t) {
            const double u = std::log(t / w0);
            return std::pow(t / w0, -1.0 / 6.0) * std::sin(wave * u);
        },
        z);
}

} // namespace

TEST_CASE("rho matches the homothetic scale law") {
    const MassTriple m(1.0, 1.0, 1.0);
    const CentralConfiguration cl = lagrange(m, Orientation::Positive);
    CHECK(rho(cl, 1.0) == doctest::Approx(kRhoLagrangeOne).epsilon(1e-15));
    for (double t : {0.3, 1.0, 4.7}) {
        CHECK(rho(cl, 8.0 * t) == doctest::Approx(4.0 * rho(cl, t)).epsilon(1e-14));
    }
    // rho'' = -U / rho^2, via a five-point second difference.
    const CentralConfiguration ce = euler(MassTriple(1.3, 0.8, 1.9), 2);
    for (double t : {0.5, 1.0, 2.0, 7.0}) {
        const double h = 3e-3 * t;
        const double dd = (-rho(ce, t - 2 * h) + 16.0 * rho(ce, t - h) -
                           30.0 * rho(ce, t) + 16.0 * rho(ce, t + h) -
                           rho(ce, t + 2 * h)) /
                          (12.0 * h * h);
        CHECK(std::abs(dd + ce.U_value / (rho(ce, t) * rho(ce, t))) <
              1e-9 * std::abs(dd));
    }
    CHECK_THROWS_AS(rho(cl, 0.0), NonPositiveTimeError);
    CHECK_THROWS_AS(rho(cl, -2.0), NonPositiveTimeError);
}

TEST_CASE("indicial roots solve the quadratic with the right structure") {
    for (double nu : {0.0, 0.05, 0.125, 0.37, 1.4, 5.0}) {
        const IndicialData d = indicial(nu);
        CHECK(d.discriminant == doctest::Approx((1.0 - 8.0 * nu) / 9.0).epsilon(1e-15));
        for (const auto& r : d.roots) {
            CHECK(std::abs(r * r + r / 3.0 + std::complex<double>(2.0 * nu / 9.0)) <
                  1e-14);
        }
        if (nu > 0.125) {
            REQUIRE(d.oscillation_rate.has_value());
            CHECK(d.roots[0].real() == doctest::Approx(-1.0 / 6.0).epsilon(1e-15));
            CHECK(d.roots[1].real() == doctest::Approx(-1.0 / 6.0).epsilon(1e-15));
            CHECK(*d.oscillation_rate ==
                  doctest::Approx(std::sqrt(8.0 * nu - 1.0) / 6.0).epsilon(1e-15));
        } else {
            CHECK(!d.oscillation_rate.has_value());
            CHECK(d.roots[0].imag() == 0.0);
            CHECK(d.roots[1].imag() == 0.0);
        }
    }
    const IndicialData dzero = indicial(0.0);
    CHECK(dzero.roots[0].real() == doctest::Approx(0.0));
    CHECK(dzero.roots[1].real() == doctest::Approx(-1.0 / 3.0).epsilon(1e-15));
    const IndicialData dcrit = indicial(0.125);
    CHECK(dcrit.discriminant == 0.0);
    CHECK(dcrit.roots[0] == dcrit.roots[1]);
    CHECK(dcrit.roots[0].real() == doctest::Approx(-1.0 / 6.0).epsilon(1e-15));
    CHECK(dcrit.roots[0].imag() == 0.0);
    const IndicialData dosc = indicial(1.4);
    CHECK(*dosc.oscillation_rate == doctest::Approx(kEqualMassAosc).epsilon(1e-15));
}

TEST_CASE("disconjugacy solution matches an independent ODE integration") {
    for (double nu : {0.05, 0.125, 0.5, 1.4, 5.0}) {
        const double a = (nu == 0.5) ? 0.6 : 1.0;
        std::vector<double> t_out;
        for (int j = 1; j <= 40; ++j) {
            t_out.push_back(a * std::pow(100.0, static_cast<double>(j) / 40.0));
        }
        const std::vector<double> ode = integrate_scalar_ode(nu, a, t_out);
        for (size_t j = 0; j < t_out.size(); ++j) {
            CHECK(std::abs(disconjugacy_solution(nu, a, t_out[j]) - ode[j]) < 1e-8);
        }
        CHECK(disconjugacy_solution(nu, a, a) == 0.0);
        const double h = 1e-6 * a;
        const double slope = (disconjugacy_solution(nu, a, a + h) -
                              disconjugacy_solution(nu, a, a - h)) /
                             (2.0 * h);
        CHECK(slope == doctest::Approx(1.0).epsilon(1e-8));
    }
    CHECK_THROWS_AS(disconjugacy_solution(1.4, -1.0, 2.0), NonPositiveTimeError);
}

TEST_CASE("conjugate points exist exactly in the oscillatory regime") {
    // nu = 1.4: first zero at e^{pi/a_osc}, one inside horizon 1000.
    const std::vector<double> one = conjugate_points(1.4, 1.0, 1000.0);
    REQUIRE(one.size() == 1);
    CHECK(one[0] == doctest::Approx(kFirstConjugate).epsilon(1e-11));

    const std::vector<double> two = conjugate_points(1.4, 1.0, 1e6);
    REQUIRE(two.size() == 2);
    CHECK(two[1] / two[0] == doctest::Approx(kFirstConjugate).epsilon(1e-10));

    // nu = 5 from a shifted start: zeros at 2 e^{k pi / a_osc}.
    const std::vector<double> three = conjugate_points(5.0, 2.0, 2e4);
    REQUIRE(three.size() == 3);
    for (size_t k = 0; k < three.size(); ++k) {
        CHECK(three[k] ==
              doctest::Approx(2.0 * std::pow(kNuFiveRatio, static_cast<double>(k + 1)))
                  .epsilon(1e-10));
    }
    CHECK(three[1] / three[0] == doctest::Approx(kNuFiveRatio).epsilon(1e-10));
    CHECK(three[2] / three[1] == doctest::Approx(kNuFiveRatio).epsilon(1e-10));

    // Disconjugate side of the dichotomy: empty over wide horizons. Above
    // 1/8 but so close that the first zero falls past the horizon, the list
    // is also empty (logarithmic spacing pi/a_osc exceeds ln horizon).
    for (double nu : {-0.3, 0.0, 0.05, 0.1, 0.12, 0.125}) {
        CHECK(conjugate_points(nu, 1.0, 1e6).empty());
    }
    CHECK(conjugate_points(0.125 + 1e-12, 1.0, 1e6).empty());
    for (double nu : {0.5, 1.4, 5.0}) {
        CHECK(!conjugate_points(nu, 1.0, 1e6).empty());
    }
    CHECK_THROWS_AS(conjugate_points(1.4, 2.0, 1.0), std::invalid_argument);
}

TEST_CASE("q_form reproduces closed-form values for damped sine profiles") {
    const MassTriple m(1.0, 1.0, 1.0);
    const CentralConfiguration cc = euler(m, 2);
    const double alpha1 = nontrivial_alphas(cc, m).first;
    CHECK(alpha1 == doctest::Approx(-cc.U_value * 1.4).epsilon(1e-12));
    const Vec6 z = most_negative_shape_mode(cc, m).first;

    // Faster-than-critical sine on [1, e^{pi/(1.25 a_osc)}]: Q > 0.
    const VariationProfile fast = damped_sine_profile(
        1.0, 1.25 * kEqualMassAosc, M_PI / (1.25 * kEqualMassAosc), 1 << 13, z);
    const QuadratureResult qf = q_form(fast, cc, alpha1);
    CHECK(qf.value == doctest::Approx(kQPosAnchor).epsilon(1e-6));
    CHECK(qf.error < 1e-6 * std::abs(qf.value));

    // phi == 0 gives exactly zero with zero error estimate.
    const VariationProfile trivial =
        make_profile(1.0, 2.0, 64, [](double) { return 0.0; }, z);
    const QuadratureResult qz = q_form(trivial, cc, alpha1);
    CHECK(qz.value == 0.0);
    CHECK(qz.error == 0.0);

    // Quadratic homogeneity under sample scaling.
    VariationProfile scaled = fast;
    for (double& v : scaled.phi) v *= 3.7;
    CHECK(q_form(scaled, cc, alpha1).value ==
          doctest::Approx(3.7 * 3.7 * qf.value).epsilon(1e-12));

    // A grid too coarse for the window fails the Richardson gate.
    const VariationProfile coarse = damped_sine_profile(
        kFirstConjugate, 0.8 * kEqualMassAosc, 1.25 * M_PI / kEqualMassAosc, 64, z);
    CHECK_THROWS_AS(q_form(coarse, cc, alpha1), QuadratureError);

    CHECK_THROWS_AS(make_profile(0.0, 2.0, 128, [](double) { return 0.0; }, z),
                    std::invalid_argument);
    CHECK_THROWS_AS(make_profile(1.0, 0.5, 128, [](double) { return 0.0; }, z),
                    std::invalid_argument);
    CHECK_THROWS_AS(make_profile(1.0, 2.0, 62, [](double) { return 0.0; }, z),
                    std::invalid_argument);
    CHECK_THROWS_AS(make_profile(1.0, 2.0, 65, [](double) { return 0.0; }, z),
                    std::invalid_argument);
}

TEST_CASE("q_form is positive for equilateral configurations") {
    std::mt19937 rng(42);
    std::uniform_real_distribution<double> mass_dist(0.3, 2.5);
    std::uniform_real_distribution<double> win(0.5, 4.0);
    std::normal_distribution<double> gauss(0.0, 1.0);
    for (int trial = 0; trial < 3; ++trial) {
        const MassTriple m(mass_dist(rng), mass_dist(rng), mass_dist(rng));
        const CentralConfiguration cc = lagrange(m, Orientation::Positive);
        const auto alphas = nontrivial_alphas(cc, m);
        REQUIRE(alphas.first > 0.0);
        REQUIRE(alphas.second > 0.0);
        for (int p = 0; p < 10; ++p) {
            const double a = win(rng);
            const double b = a + win(rng);
            double c1 = gauss(rng), c2 = gauss(rng), c3 = gauss(rng);
            const VariationProfile prof = make_profile(
                a, b, 1024,
                [&](double t) {
                    const double x = M_PI * (t - a) / (b - a);
                    return c1 * std::sin(x) + c2 * std::sin(2.0 * x) +
                           c3 * std::sin(3.0 * x);
                },
                Vec6::Zero());
            CHECK(q_form(prof, cc, alphas.first).value > 0.0);
            CHECK(q_form(prof, cc, alphas.second).value > 0.0);
        }
    }
}

TEST_CASE("negative_direction certifies the spiraling instability") {
    const MassTriple m(1.0, 1.0, 1.0);
    const CentralConfiguration cc = euler(m, 2);
    const NegativeDirection nd = negative_direction(cc, m);

    CHECK(nd.nu == doctest::Approx(1.4).epsilon(1e-12));
    CHECK(nd.conjugate_ratio == doctest::Approx(kFirstConjugate).epsilon(1e-12));
    CHECK(nd.profile.a == doctest::Approx(kFirstConjugate).epsilon(1e-12));
    CHECK(nd.profile.b == doctest::Approx(kNegWindowEnd).epsilon(1e-12));
    CHECK(nd.q_value == doctest::Approx(kQNegAnchor).epsilon(1e-6));
    CHECK(nd.q_value < 0.0);
    CHECK(std::abs(nd.q_value) > 10.0 * nd.quadrature_error);

    // The direction is the negative-alpha unit eigenvector of the
    // sphere-restricted shape operator.
    const auto [zvec, alpha_min] = most_negative_shape_mode(cc, m);
    CHECK(alpha_min == doctest::Approx(nontrivial_alphas(cc, m).first).epsilon(1e-12));
    CHECK(mass_norm(m, nd.profile.z_direction) == doctest::Approx(1.0).epsilon(1e-12));
    const Vec6 img = hessian_potential(cc.s.s, m) * zvec + cc.U_value * zvec;
    CHECK(mass_norm(m, Vec6(img - alpha_min * zvec)) < 1e-10);

    // The same profile paired with the positive shape eigenvalue flips sign.
    CHECK(q_form(nd.profile, cc, nontrivial_alphas(cc, m).second).value > 0.0);

    // Window-start dilation rescales Q by the 1/3 power.
    const NegativeDirection shifted = negative_direction(cc, m, 10.0);
    CHECK(shifted.q_value ==
          doctest::Approx(std::cbrt(10.0) * nd.q_value).epsilon(1e-6));

    // Below the spiraling threshold the hypothesis fails.
    const MassTriple light(0.05, 0.9, 0.05);
    CHECK_THROWS_AS(negative_direction(euler(light, 2), light), NotSpiralingError);
    CHECK_THROWS_AS(negative_direction(lagrange(m, Orientation::Positive), m),
                    std::invalid_argument);
}

TEST_CASE("scaling identity holds to quadrature accuracy") {
    const MassTriple m(1.0, 1.0, 1.0);
    const CentralConfiguration cc = euler(m, 2);
    const double alpha1 = nontrivial_alphas(cc, m).first;
    const Vec6 z = most_negative_shape_mode(cc, m).first;
    const VariationProfile smooth = make_profile(
        1.0, 4.0, 512, [](double t) { return std::sin(M_PI * (t - 1.0) / 3.0); }, z);
    CHECK(scaling_identity_check(smooth, 1.0, cc, alpha1) == 0.0);
    CHECK(scaling_identity_check(smooth, 8.0, cc, alpha1) < 1e-8);

    const VariationProfile wiggly = damped_sine_profile(
        1.0, 1.25 * kEqualMassAosc, M_PI / (1.25 * kEqualMassAosc), 1 << 13, z);
    CHECK(scaling_identity_check(wiggly, 100.0, cc, alpha1) < 1e-7);
    CHECK(scaling_identity_check(wiggly, 8.0, cc, alpha1) < 1e-8);
    CHECK_THROWS_AS(scaling_identity_check(smooth, 0.5, cc, alpha1),
                    std::invalid_argument);
}

TEST_CASE("orbit second variation collapses to q_form on the homothetic orbit") {
    const MassTriple m(1.0, 1.0, 1.0);
    const CentralConfiguration cc = euler(m, 2);
    const double v0 = std::sqrt(2.0 * cc.U_value);
    const BlownUpState start =
        make_state(Chart::RChart, 1.0, cc.s.s, v0 * cc.s.s, 0.0, m);
    const Trajectory traj = integrate(start, {0.0, 1.2}, m);
    REQUIRE(traj.termination == TerminationReason::Completed);

    const Vec6 z = most_negative_shape_mode(cc, m).first;
    const VariationProfile prof = make_profile(
        1.0, 25.0, 2048, [](double t) { return std::sin(M_PI * (t - 1.0) / 24.0); },
        z);
    const OrbitSecondVariation osv = second_variation_along_orbit(traj, prof, cc);
    const double alpha1 = nontrivial_alphas(cc, m).first;
    CHECK(osv.q_value == doctest::Approx(q_form(prof, cc, alpha1).value).epsilon(1e-12));
    CHECK(std::abs(osv.correction) < 1e-9 * std::abs(osv.q_value));
    CHECK(std::abs(osv.value - osv.q_value) < 1e-9 * std::abs(osv.q_value));
    // The matched clock shift is the parabolic origin offset (9/2 U)^{-1/2}.
    CHECK(osv.time_shift ==
          doctest::Approx(1.0 / std::sqrt(4.5 * cc.U_value)).epsilon(1e-6));

    // Windows sticking out of the sampled range are rejected.
    VariationProfile outside = prof;
    outside.a = 0.01;
    CHECK_THROWS_AS(second_variation_along_orbit(traj, outside, cc), WindowError);
    VariationProfile late = make_profile(
        1.0, 1e6, 2048, [](double t) { return std::sin(M_PI * (t - 1.0) / (1e6 - 1.0)); },
        z);
    CHECK_THROWS_AS(second_variation_along_orbit(traj, late, cc), WindowError);

    VariationProfile bad = prof;
    bad.z_direction *= 2.0;
    CHECK_THROWS_AS(second_variation_along_orbit(traj, bad, cc),
                    std::invalid_argument);
}

TEST_CASE("orbit second variation stays negative off the homothetic orbit") {
    const MassTriple m(1.0, 1.0, 1.0);
    const CentralConfiguration cc = euler(m, 2);
    const RestpointState rp = restpoint(cc, +1, true, m);
    const StableSubspace ss = stable_subspace(rp, m);
    REQUIRE(ss.modes.size() == 5);

    // Perturb the radial approach with the spiraling shape pair.
    const StableMode* radial = nullptr;
    const StableMode* spiral = nullptr;
    for (const auto& mode : ss.modes) {
        if (mode.kind == 0) radial = &mode;
        if (mode.kind == 2 && std::abs(mode.lambda.imag()) > 1e-8 &&
            spiral == nullptr) {
            spiral = &mode;
        }
    }
    REQUIRE(radial != nullptr);
    REQUIRE(spiral != nullptr);
    Vec13 dir = radial->vec + 0.3 * spiral->vec;

    IntegratorOptions opts;
    opts.max_step = 0.05;
    const Trajectory traj = shoot_stable_manifold(rp, 1e-6, dir, 6.0, m, opts);
    REQUIRE(traj.samples.back().state.chart == Chart::UChart);

    const Vec6 z = most_negative_shape_mode(cc, m).first;
    const double span = 1.25 * M_PI / kEqualMassAosc;
    const auto window_value = [&](double start) {
        const VariationProfile prof =
            damped_sine_profile(start, 0.8 * kEqualMassAosc, span, 1 << 17, z);
        return second_variation_along_orbit(traj, prof, cc);
    };
    const OrbitSecondVariation early = window_value(50.0);
    const OrbitSecondVariation late_window = window_value(400.0);
    CHECK(early.value < 0.0);
    CHECK(late_window.value < 0.0);
    CHECK(std::abs(early.correction) < 0.5 * std::abs(early.q_value));
    // The shape perturbation beta decays along the orbit, so the relative
    // correction shrinks as the window moves out.
    CHECK(std::abs(late_window.correction / late_window.q_value) <
          std::abs(early.correction / early.q_value));
}
