#include <doctest.h>

#include <cmath>
#include <numbers>

#include "kinetic/errors.hpp"
#include "kinetic/heat_toy.hpp"

using namespace kinetic;

namespace {

HeatParams params(Vec3 mu, double lam, double gamma = 0.0) {
    HeatParams p;
    p.mu = mu;
    p.lam = lam;
    p.gamma = gamma;
    return p;
}

}  // namespace

TEST_CASE("kernel normalization and moments") {
    HeatParams p = params({0.1, 0.0, -0.2}, 1.4);
    for (double t : {0.3, 2.0, 25.0})
        CHECK(heat_kernel(p, Flow::A, t, {0, 0, 0}) == doctest::Approx(std::pow(4.0 * std::numbers::pi * t, -1.5)).epsilon(1e-14));
    GaussianState b = kernel_state(p, Flow::B, 3.0);
    CHECK(b.mass == doctest::Approx(1.0));
    CHECK(b.center[0] == doctest::Approx(0.3));
    CHECK(b.center[2] == doctest::Approx(-0.6));
    CHECK(b.variance == doctest::Approx(2.0 * p.kappa() * 3.0));
    CHECK(p.kappa() == doctest::Approx(1.4));
    CHECK(params({}, 1.44, 1.0).kappa() == doctest::Approx(1.2));
}

TEST_CASE("flows coincide without drift or temperature change") {
    HeatParams p = params({0, 0, 0}, 1.0);
    GaussianDatum h0{0.8, 2.0};
    for (double t : {0.5, 10.0}) {
        GaussianState a = heat_solution(p, Flow::A, h0, t), b = heat_solution(p, Flow::B, h0, t);
        // Rounding only (FMA contraction may leave a few ulps of the peak).
        const double peak = a.value(a.center);
        CHECK(difference_norm(a, b, 2.0) <= 1e-14 * peak);
        CHECK(difference_norm(a, b, kInfNorm) <= 1e-14 * peak);
        CHECK(difference_norm(a, b, 1.0) == doctest::Approx(0.0).epsilon(1e-14));
        DuhamelSplit d = duhamel_route(p, h0, t, {0.3, 0.2, -0.1});
        CHECK(d.h1 == 0.0);
        CHECK(d.h2 == 0.0);
    }
}

TEST_CASE("mass is conserved and the closed form matches quadrature") {
    HeatParams p = params({0.05, -0.02, 0.1}, 1.5);
    GaussianDatum h0{1.0, 1.0};
    for (double t : {0.5, 5.0}) {
        GaussianState s = heat_solution(p, Flow::B, h0, t);
        CHECK(s.mass == doctest::Approx(h0.mass()).epsilon(1e-15));
        const double peak = s.value(s.center);
        Vec3 x{s.center[0] + 1.0, s.center[1], s.center[2] - 0.5};
        CHECK(std::abs(convolve_direct(p, Flow::B, h0, t, x) - s.value(x)) / peak < 1e-10);
        CHECK(std::abs(convolve_direct(p, Flow::A, h0, t, x) - heat_solution(p, Flow::A, h0, t).value(x)) / peak < 1e-10);
    }
}

TEST_CASE("Galilean consistency: h^b is a translate of the rescaled flow") {
    HeatParams drift = params({0.2, 0.0, 0.0}, 1.0), still = params({0, 0, 0}, 1.0);
    GaussianDatum h0{1.0, 1.0};
    const double t = 4.0;
    GaussianState moved = heat_solution(drift, Flow::B, h0, t), rest = heat_solution(still, Flow::B, h0, t);
    Vec3 x{1.3, -0.4, 0.2};
    CHECK(moved.value({x[0] + 0.8, x[1], x[2]}) == doctest::Approx(rest.value(x)).epsilon(1e-14));
}

TEST_CASE("L1, L2, sup norms of a pure translation") {
    // N(0, v) vs N(c e3, v): closed forms available for all three norms.
    const double v = 2.0, c = 0.5;
    GaussianState a{1.0, v, {0, 0, 0}}, b{1.0, v, {0, 0, c}};
    const double s = std::sqrt(v);
    CHECK(difference_norm(a, b, 1.0) == doctest::Approx(2.0 * std::erf(c / (2.0 * std::sqrt(2.0) * s))).epsilon(1e-9));
    const double l2sq = 2.0 * std::pow(4.0 * std::numbers::pi * v, -1.5) * (1.0 - std::exp(-c * c / (4.0 * v)));
    CHECK(difference_norm(a, b, 2.0) == doctest::Approx(std::sqrt(l2sq)).epsilon(1e-12));
    CHECK(difference_l2_quadrature(a, b) == doctest::Approx(std::sqrt(l2sq)).epsilon(1e-9));
    // The sup sits on the axis through both centres.
    double best = 0.0;
    for (int i = -40000; i <= 40000; ++i) {
        double z = i * 1e-4;
        best = std::max(best, std::abs(a.value({0, 0, z}) - b.value({0, 0, z})));
    }
    CHECK(difference_norm(a, b, kInfNorm) == doctest::Approx(best).epsilon(1e-7));
}

TEST_CASE("kernel difference scales with the envelope") {
    HeatParams p = params({0.0, 0.0, 1e-3}, 1.0);
    // Linear in mu while mu sqrt(t) << 1, so the sup norm over |mu| t^{-1} is flat.
    const double r1 = kernel_difference_norm(p, kInfNorm, 100.0) / (1e-3 * std::sqrt(100.0) * std::pow(100.0, -1.5));
    const double r2 = kernel_difference_norm(p, kInfNorm, 1000.0) / (1e-3 * std::sqrt(1000.0) * std::pow(1000.0, -1.5));
    CHECK(r1 == doctest::Approx(r2).epsilon(0.02));
    HeatParams q = params({0, 0, 0}, 1.5);
    for (double t : {1.0, 30.0})
        CHECK(std::abs(mean_value_difference(q, t, {0.2, 0.1, 0.4}, 64) -
                       (heat_kernel(q, Flow::B, t, {0.2, 0.1, 0.4}) - heat_kernel(q, Flow::A, t, {0.2, 0.1, 0.4}))) <
              1e-12 * heat_kernel(q, Flow::A, t, {0, 0, 0}));
}

TEST_CASE("Duhamel split reproduces the closed-form difference") {
    HeatParams p = params({0.05, 0.0, 0.1}, 1.5);
    GaussianDatum h0{1.0, 1.0};
    for (double t : {2.0, 10.0}) {
        SolutionDifference d = solution_difference(p, h0, t);
        Vec3 x{0.5, -0.2, 1.0};
        DuhamelSplit s = duhamel_route(p, h0, t, x);
        CHECK(std::abs(s.h1 + s.h2 - (-d.value(x))) < 1e-9 * d.linf);
        CHECK(s.panels > 0);
    }
}

TEST_CASE("short-time limit returns the datum") {
    HeatParams p = params({0.1, 0.0, 0.0}, 2.0);
    GaussianDatum h0{0.7, 1.5};
    Vec3 x{0.3, 0.2, -0.4};
    CHECK(heat_solution(p, Flow::B, h0, 1e-12).value(x) == doctest::Approx(h0.value(x)).epsilon(1e-9));
    CHECK(heat_solution(p, Flow::A, h0, 0.0).value(x) == doctest::Approx(h0.value(x)).epsilon(1e-14));
}

TEST_CASE("domain and parameter errors") {
    HeatParams p = params({0, 0, 0}, 1.0);
    CHECK_THROWS_AS(heat_kernel(p, Flow::A, 0.0, {0, 0, 0}), DomainError);
    CHECK_THROWS_AS(kernel_difference_norm(p, 2.0, -1.0), DomainError);
    CHECK_THROWS_AS(params({0, 0, 0}, 2.5).validate(), ConfigError);
    CHECK_THROWS_AS(params({0, 0, 0}, 1.0, 1.5).validate(), ConfigError);
    HeatConfig c;
    c.t2 = 50.0;
    CHECK_THROWS_AS(heat_rate_table(c), ConfigError);
}
