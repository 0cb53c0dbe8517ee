#include "doctest.h"
#include "testutil.hpp"

#include "p3b/centralconfig.hpp"
#include "p3b/jmaction.hpp"
#include "p3b/json_io.hpp"
#include "p3b/secondvar.hpp"

#include <cmath>
#include <optional>
#include <random>
#include <vector>

using namespace p3b;

namespace {

DiscretePath homothetic_path(const CentralConfiguration& cc, const MassTriple& m, double ta,
                             double tb, int n, bool geometric_spacing) {
    const HomotheticOrbit orbit = homothetic_orbit(cc);
    std::vector<double> times(n);
    std::vector<Vec6> nodes(n);
    for (int i = 0; i < n; ++i) {
        const double f = static_cast<double>(i) / (n - 1);
        times[i] = geometric_spacing ? ta * std::pow(tb / ta, f) : ta + (tb - ta) * f;
        nodes[i] = homothetic_position(orbit, times[i]);
    }
    return {m, std::move(nodes), std::move(times)};
}

Vec6 rotate_configuration(const Vec6& q, double angle) {
    const double c = std::cos(angle), s = std::sin(angle);
    Vec6 out;
    for (int b = 0; b < 3; ++b) {
        out[2 * b] = c * q[2 * b] - s * q[2 * b + 1];
        out[2 * b + 1] = s * q[2 * b] + c * q[2 * b + 1];
    }
    return out;
}

// Smooth closed-form family of collision-free timed curves: a breathing,
// slowly rotating equilateral shape with small coordinate wiggles and a
// nonuniform (but analytic) time map, so refined samplings of the same
// curve stay on the same curve.
struct SmoothCurve {
    MassTriple masses{1.0, 1.0, 1.0};
    Vec6 base = Vec6::Zero();
    double breath_phase = 0.0, turn_phase = 0.0, clock_phase = 0.0;
    double amp[6][3] = {}, phase[6][3] = {};

    Vec6 position(double sigma) const {
        const double r = 1.0 + 0.3 * std::sin(M_PI * sigma + breath_phase);
        const double theta = 0.8 * sigma + 0.25 * std::sin(2.0 * M_PI * sigma + turn_phase);
        Vec6 q = r * rotate_configuration(base, theta);
        for (int k = 0; k < 6; ++k)
            for (int j = 0; j < 3; ++j)
                q[k] += amp[k][j] * std::sin((j + 1) * M_PI * sigma + phase[k][j]);
        return q;
    }
    double time(double sigma) const {
        return sigma +
               0.1 / (2.0 * M_PI) *
                   (std::sin(2.0 * M_PI * sigma + clock_phase) - std::sin(clock_phase));
    }
};

SmoothCurve random_curve(std::mt19937& rng) {
    std::uniform_real_distribution<double> mass(0.4, 1.6);
    std::uniform_real_distribution<double> angle(0.0, 2.0 * M_PI);
    std::uniform_real_distribution<double> wiggle(0.0, 0.02);
    SmoothCurve curve;
    curve.masses = MassTriple(mass(rng), mass(rng), mass(rng));
    curve.base = lagrange(curve.masses, Orientation::Positive).s.s;
    curve.breath_phase = angle(rng);
    curve.turn_phase = angle(rng);
    curve.clock_phase = angle(rng);
    for (int k = 0; k < 6; ++k)
        for (int j = 0; j < 3; ++j) {
            curve.amp[k][j] = wiggle(rng);
            curve.phase[k][j] = angle(rng);
        }
    return curve;
}

DiscretePath sample_curve(const SmoothCurve& curve, int n) {
    std::vector<Vec6> nodes(n);
    std::vector<double> times(n);
    for (int i = 0; i < n; ++i) {
        const double sigma = static_cast<double>(i) / (n - 1);
        nodes[i] = curve.position(sigma);
        times[i] = curve.time(sigma);
    }
    return {curve.masses, std::move(nodes), std::move(times)};
}

// Mass-metric cosine between two node-sampled displacement fields.
double field_cosine(const MassTriple& m, const std::vector<Vec6>& f, const std::vector<Vec6>& g) {
    double ff = 0.0, gg = 0.0, fg = 0.0;
    for (size_t i = 0; i < f.size(); ++i) {
        ff += mass_inner(m, f[i], f[i]);
        gg += mass_inner(m, g[i], g[i]);
        fg += mass_inner(m, f[i], g[i]);
    }
    return fg / std::sqrt(ff * gg);
}

}  // namespace

TEST_CASE("discrete paths reject malformed input") {
    const MassTriple m(1.0, 1.0, 1.0);
    const Vec6 a = lagrange(m, Orientation::Positive).s.s;
    const Vec6 b = 2.0 * a;

    CHECK_THROWS_AS(validate_path({m, {a}, std::nullopt}), std::invalid_argument);
    CHECK_THROWS_AS(validate_path({m, {a, a}, std::nullopt}), std::invalid_argument);
    CHECK_THROWS_AS(validate_path({m, {a, b, b}, std::nullopt}), std::invalid_argument);

    Vec6 touching;
    touching << 0.4, 0.1, 0.4, 0.1, -0.5, 0.0;  // bodies 1 and 2 coincide
    CHECK_THROWS_AS(validate_path({m, {a, touching}, std::nullopt}), CollisionError);

    CHECK_THROWS_AS(validate_path({m, {a, b}, std::vector<double>{0.0}}), std::invalid_argument);
    CHECK_THROWS_AS(validate_path({m, {a, b}, std::vector<double>{1.0, 1.0}}),
                    std::invalid_argument);
    CHECK_THROWS_AS(validate_path({m, {a, b}, std::vector<double>{1.0, 0.5}}),
                    std::invalid_argument);

    const DiscretePath geometric{m, {a, b}, std::nullopt};
    const DiscretePath timed{m, {a, b}, std::vector<double>{0.0, 1.0}};
    CHECK_THROWS_AS(action(geometric), std::invalid_argument);
    CHECK_THROWS_AS(zero_energy_timing(timed), std::invalid_argument);
    CHECK_THROWS_AS(local_minimizer_probe(geometric, 4), std::invalid_argument);
    CHECK_THROWS_AS(local_minimizer_probe(timed, 0), std::invalid_argument);
}

TEST_CASE("radial segment length matches the closed form") {
    // Straight segment r c for r in [1, 2] at an equal-mass equilateral
    // shape: the length integral collapses to a one-dimensional radial
    // quadrature with value 2 sqrt(2 U(c)) (sqrt(2) - 1).
    const MassTriple m(1.0, 1.0, 1.0);
    const CentralConfiguration cc = lagrange(m, Orientation::Positive);
    const int n = 150;
    std::vector<Vec6> nodes(n);
    for (int i = 0; i < n; ++i)
        nodes[i] = (1.0 + static_cast<double>(i) / (n - 1)) * cc.s.s;
    const DiscretePath path{m, std::move(nodes), std::nullopt};

    const double exact = 2.0 * std::sqrt(2.0 * cc.U_value) * (std::sqrt(2.0) - 1.0);
    CHECK(jm_length(path) == doctest::Approx(exact).epsilon(1e-12));
}

TEST_CASE("homothetic action equals the length and its closed form") {
    // Parabolic homothetic motion has zero energy, so K + U integrates to
    // the same value as the length; with r(t) = A t^{2/3}, A^3 = (9/2) U(c),
    // the action over [1, 2] is (6 U / A)(2^{1/3} - 1).
    for (const MassTriple& m : {MassTriple(1.0, 1.0, 1.0), MassTriple(1.0, 2.0, 3.0)}) {
        const CentralConfiguration cc = lagrange(m, Orientation::Positive);
        const DiscretePath path = homothetic_path(cc, m, 1.0, 2.0, 120, false);
        const double scale = std::cbrt(4.5 * cc.U_value);
        const double exact = 6.0 * cc.U_value / scale * (std::cbrt(2.0) - 1.0);
        const double a = action(path);
        CHECK(a == doctest::Approx(exact).epsilon(1e-12));
        CHECK(a == doctest::Approx(jm_length(path)).epsilon(1e-12));
    }
}

TEST_CASE("zero-energy timing recovers the parabolic clock") {
    const MassTriple m(1.0, 1.0, 1.0);
    const CentralConfiguration cc = lagrange(m, Orientation::Positive);
    const DiscretePath geometric = homothetic_path(cc, m, 1.0, 2.0, 200, false).geometric();
    const DiscretePath timed = zero_energy_timing(geometric);

    REQUIRE(timed.timed());
    CHECK(timed.times->front() == 0.0);
    CHECK(action(timed) == doctest::Approx(jm_length(geometric)).epsilon(1e-10));

    // The nodes came from r(t) = A t^{2/3} starting at t = 1, so the scale
    // against the assigned times (offset by that start) fits exponent 2/3.
    const int n = static_cast<int>(timed.nodes.size());
    double sx = 0.0, sy = 0.0, sxx = 0.0, sxy = 0.0;
    for (int i = 0; i < n; ++i) {
        const double x = std::log((*timed.times)[i] + 1.0);
        const double y = std::log(mass_norm(m, timed.nodes[i]));
        sx += x;
        sy += y;
        sxx += x * x;
        sxy += x * y;
    }
    const double slope = (n * sxy - sx * sy) / (n * sxx - sx * sx);
    CHECK(slope == doctest::Approx(2.0 / 3.0).epsilon(1e-6));

    double worst_residual = 0.0;
    for (int i = 1; i + 1 < n; ++i) {
        const double k = kinetic(path_velocity(timed, (*timed.times)[i]), m);
        const double u = potential(timed.nodes[i], m);
        worst_residual = std::max(worst_residual, std::abs(k - u));
    }
    CHECK(worst_residual < 1e-8);
}

TEST_CASE("length bounds the action with equality at zero energy") {
    std::mt19937 rng(7);
    for (int trial = 0; trial < 12; ++trial) {
        CAPTURE(trial);
        const SmoothCurve curve = random_curve(rng);
        const DiscretePath path = sample_curve(curve, 201);
        const double a = action(path);
        const double length = jm_length(path);
        CHECK(length < a);

        // Length is a property of the node sequence alone: retiming the
        // same nodes cannot move it.
        DiscretePath retimed = path;
        for (double& t : *retimed.times) t = 0.3 * std::pow(t + 0.1, 1.7);
        CHECK(jm_length(retimed) == doctest::Approx(length).epsilon(1e-10));

        DiscretePath rotated = path;
        for (Vec6& q : rotated.nodes) q = rotate_configuration(q, 1.234);
        CHECK(jm_length(rotated) == doctest::Approx(length).epsilon(1e-12));

        const DiscretePath zero_energy = zero_energy_timing(path.geometric());
        CHECK(std::abs(action(zero_energy) - length) < 1e-8 * length);
    }
}

TEST_CASE("action is stable under node refinement") {
    std::mt19937 rng(11);
    for (int trial = 0; trial < 6; ++trial) {
        CAPTURE(trial);
        const SmoothCurve curve = random_curve(rng);
        const double coarse = action(sample_curve(curve, 251));
        const double fine = action(sample_curve(curve, 501));
        CHECK(std::abs(fine - coarse) < 1e-8 * coarse);
    }
}

TEST_CASE("equilateral homothetic probe finds no descent direction") {
    for (const MassTriple& m : {MassTriple(1.0, 1.0, 1.0), MassTriple(1.0, 2.0, 3.0)}) {
        const CentralConfiguration cc = lagrange(m, Orientation::Positive);
        const DiscretePath path = homothetic_path(cc, m, 1.0, 4.0, 80, true);
        const MinimizerProbe probe = local_minimizer_probe(path, 8);

        CHECK(probe.min_eigenvalue >= -1e-8);
        const double scale = 1.0 + probe.hessian.cwiseAbs().maxCoeff();
        CHECK((probe.hessian - probe.hessian.transpose()).cwiseAbs().maxCoeff() < 1e-10 * scale);

        const MinimizerProbe refined =
            local_minimizer_probe(homothetic_path(cc, m, 1.0, 4.0, 160, true), 8);
        CHECK(std::abs(refined.min_eigenvalue - probe.min_eigenvalue) <
              0.05 * std::abs(probe.min_eigenvalue));
    }
}

TEST_CASE("collinear probe agrees with the variational profile on a conjugate window") {
    // Equal-mass collinear homothetic motion on a window containing a
    // conjugate pair: the probe must find a descent direction, and its
    // worst field should line up with rho(t) phi(t) z from the variational
    // certificate built on the same window.
    const MassTriple m(1.0, 1.0, 1.0);
    const CentralConfiguration cc = euler(m, 2);
    const IndicialData ind = indicial(1.4);
    REQUIRE(ind.oscillation_rate.has_value());
    const NegativeDirection nd =
        negative_direction(cc, m, std::exp(-M_PI / *ind.oscillation_rate));
    REQUIRE(nd.profile.a == doctest::Approx(1.0).epsilon(1e-12));

    const DiscretePath path = homothetic_path(cc, m, nd.profile.a, nd.profile.b, 241, true);
    const MinimizerProbe probe = local_minimizer_probe(path, 10);
    CHECK(probe.min_eigenvalue < -1e-6);

    const double scale = 1.0 + probe.hessian.cwiseAbs().maxCoeff();
    CHECK((probe.hessian - probe.hessian.transpose()).cwiseAbs().maxCoeff() < 1e-10 * scale);

    std::vector<Vec6> found, certified;
    for (size_t i = 1; i + 1 < path.nodes.size(); ++i) {
        const double t = (*path.times)[i];
        found.push_back(probe_direction_field(probe, path, t));
        const double u = (t - nd.profile.a) / (nd.profile.b - nd.profile.a) * nd.profile.intervals();
        const int i0 = std::min(static_cast<int>(u), nd.profile.intervals() - 1);
        const double phi =
            nd.profile.phi[i0] + (u - i0) * (nd.profile.phi[i0 + 1] - nd.profile.phi[i0]);
        certified.push_back(rho(cc, t) * phi * nd.profile.z_direction);
    }
    CHECK(std::abs(field_cosine(m, found, certified)) > 0.9);

    const MinimizerProbe refined = local_minimizer_probe(
        homothetic_path(cc, m, nd.profile.a, nd.profile.b, 481, true), 10);
    CHECK(std::abs(refined.min_eigenvalue - probe.min_eigenvalue) <
          0.05 * std::abs(probe.min_eigenvalue));
}

TEST_CASE("collinear probe stays nonnegative inside a disconjugate window") {
    const MassTriple m(1.0, 1.0, 1.0);
    const CentralConfiguration cc = euler(m, 2);
    const IndicialData ind = indicial(1.4);
    REQUIRE(ind.oscillation_rate.has_value());
    // Window ratio strictly below e^{pi / a_osc}: no conjugate pair fits.
    const double a = 1.05;
    const double b = a * std::exp(0.9 * M_PI / *ind.oscillation_rate);
    const MinimizerProbe probe =
        local_minimizer_probe(homothetic_path(cc, m, a, b, 121, true), 10);
    CHECK(probe.min_eigenvalue >= -1e-8);
}

TEST_CASE("paths round-trip through JSON") {
    std::mt19937 rng(23);
    const SmoothCurve curve = random_curve(rng);
    const DiscretePath path = sample_curve(curve, 40);

    const DiscretePath back = path_from_json(to_json(path));
    REQUIRE(back.nodes.size() == path.nodes.size());
    REQUIRE(back.timed());
    for (size_t i = 0; i < path.nodes.size(); ++i) {
        CHECK((back.nodes[i] - path.nodes[i]).cwiseAbs().maxCoeff() == 0.0);
        CHECK((*back.times)[i] == (*path.times)[i]);
    }
    CHECK(back.masses[0] == path.masses[0]);

    const DiscretePath geometric = path_from_json(to_json(path.geometric()));
    CHECK_FALSE(geometric.timed());
    CHECK(jm_length(geometric) == jm_length(path));

    nlohmann::json bad = to_json(path);
    bad["times"] = std::vector<double>{1.0};
    CHECK_THROWS_AS(path_from_json(bad), std::invalid_argument);
}

TEST_CASE("unequal-mass collinear probe also finds conjugate descent") {
    const MassTriple m(1.0, 2.0, 3.0);
    const CentralConfiguration cc = euler(m, 2);
    const NegativeDirection nd = negative_direction(cc, m, 0.01);
    const DiscretePath path = homothetic_path(cc, m, nd.profile.a, nd.profile.b, 241, true);
    const MinimizerProbe probe = local_minimizer_probe(path, 10);
    CHECK(probe.min_eigenvalue < 0.0);
    CHECK(nd.q_value < 0.0);
}
