#include <doctest.h>

#include <cmath>
#include <numbers>

#include "kinetic/errors.hpp"
#include "kinetic/maxwell.hpp"

using namespace kinetic;

namespace {
constexpr double kPi = std::numbers::pi;
}

TEST_CASE("Maxwellian evaluation and mass") {
    CHECK(eval_maxwellian({}, {0, 0, 0}) == doctest::Approx(std::pow(2.0 * kPi, -1.5)).epsilon(1e-14));
    CHECK(eval_maxwellian({}, {0, 0, 0}) == doctest::Approx(0.063494).epsilon(1e-5));
    auto p = MaxwellianParams::axial(1.3, 0.4, 1.6);
    auto g = build_background_grid(24, 12, 8.0, 0, 0.4, 1.6);
    double mass = 0.0;
    for (int i = 0; i < g->size(); ++i) mass += g->weight(i) * eval_maxwellian(p, g->velocity(i));
    CHECK(mass == doctest::Approx(1.3).epsilon(1e-10));
    Vec3 xi{0.3, -0.2, 1.1};
    CHECK(eval_maxwellian({}, xi) == doctest::Approx(std::pow(2.0 * kPi, -1.5) * std::exp(-0.5 * (0.09 + 0.04 + 1.21))));
}

TEST_CASE("sqrt ratio closed form") {
    CHECK(sqrt_ratio(MaxwellianParams::axial(1.0, 0.0, 1.0 + 1e-12), {0, 0, 0}) == doctest::Approx(1.0).epsilon(1e-10));
    CHECK(sqrt_ratio(MaxwellianParams::axial(1.0, 0.0, 1.5), {0, 0, 0}) == doctest::Approx(std::pow(1.5, -0.75)).epsilon(1e-14));
    CHECK(std::pow(1.5, -0.75) == doctest::Approx(0.7378).epsilon(1e-4));
    CHECK_THROWS_AS(sqrt_ratio(MaxwellianParams::axial(1.0, 0.1, 1.0), {0, 0, 0}), DomainError);

    auto g = build_grid(24, 12, 8.0, 0);
    for (auto b : {MaxwellianParams::axial(1.2, 0.1, 1.3), MaxwellianParams::axial(0.9, -0.3, 1.8)}) {
        for (int i = 0; i < g->size(); ++i) {
            for (double phi : {0.0, 1.0}) {
                auto xi = g->velocity(i, phi);
                double closed = sqrt_ratio(b, xi), direct = sqrt_ratio_direct(b, xi);
                CHECK(std::abs(closed - direct) <= 1e-12 * direct);
                double rebuilt = closed * sqrt_maxwellian({}, xi);
                CHECK(std::abs(rebuilt - sqrt_maxwellian(b, xi)) <= 1e-12 * sqrt_maxwellian(b, xi));
            }
        }
    }
}

TEST_CASE("weighted difference") {
    CHECK(weighted_difference({}, {0.5, 0.1, -2.0}, 3.0) == 0.0);
    CHECK(weighted_difference(MaxwellianParams::axial(1.0, 0.0, 1.5), {0, 0, 0}, 2.0) < 0.0);
    CHECK(weighted_difference(MaxwellianParams::axial(1.1, 0.0, 1.0), {0, 0, 0}, 2.0) ==
          doctest::Approx(0.1 * std::pow(2.0 * kPi, -0.75)).epsilon(1e-12));

    // First-order vanishing as the deviation shrinks.
    auto base = MaxwellianParams::axial(1.2, 0.1, 1.3);
    Vec3 xi{0.4, 0.0, 1.3};
    double prev = 0.0;
    for (double s : {1e-1, 1e-2, 1e-3}) {
        double v = std::abs(weighted_difference(scale_deviation(base, s), xi, 4.0));
        if (prev > 0.0) CHECK(prev / v == doctest::Approx(10.0).epsilon(0.05));
        prev = v;
    }
}

TEST_CASE("macro error") {
    CHECK(macro_error({}) == 0.0);
    CHECK(macro_error(MaxwellianParams::axial(1.1, 0.0, 1.0)) == doctest::Approx(0.1));
    CHECK(macro_error(MaxwellianParams::axial(1.1, 0.2, 1.3)) == doctest::Approx(0.6));
}

TEST_CASE("mean value path") {
    auto b = MaxwellianParams::axial(1.2, 0.1, 1.3);
    auto g = build_grid(12, 8, 8.0, 0);
    for (int i = 0; i < g->size(); ++i) {
        auto xi = g->velocity(i, 0.7);
        double diff = eval_maxwellian(b, xi) - eval_maxwellian({}, xi);
        CHECK(std::abs(mean_value_reconstruction(b, xi) - diff) < 1e-10);
    }
    Vec3 xi{0.2, 0.1, -0.5};
    CHECK(mean_value_expansion({}, xi, 0.3) == 0.0);
    CHECK(mean_value_expansion(MaxwellianParams::axial(1.1, 0.0, 1.0), xi, 0.0) ==
          doctest::Approx(0.1 * eval_maxwellian({}, xi)).epsilon(1e-14));
}

TEST_CASE("lemma bound ratio") {
    auto g = build_grid(24, 12, 8.0, 0), g2 = build_grid(48, 24, 8.0, 0);
    auto b = MaxwellianParams::axial(1.0, 0.0, 1.0001);
    double r1 = lemma_bound_ratio(b, 4.0, *g, 1.5), r2 = lemma_bound_ratio(b, 4.0, *g2, 1.5);
    CHECK(std::isfinite(r1));
    CHECK(std::abs(r1 - r2) <= 0.05 * r2);

    auto base = MaxwellianParams::axial(1.02, 0.02, 1.02);
    double ref = lemma_bound_ratio(base, 4.0, *g, 1.5);
    for (double s : {0.5, 0.25}) {
        double r = lemma_bound_ratio(scale_deviation(base, s), 4.0, *g, 1.5);
        CHECK(std::abs(r - ref) <= 0.1 * ref);
    }
    for (double beta : {0.0, 2.0, 8.0}) {
        auto bb = MaxwellianParams::axial(1.1, 0.1, 1.3);
        double a1 = lemma_bound_ratio(bb, beta, *g, 1.5), a2 = lemma_bound_ratio(bb, beta, *g2, 1.5);
        CHECK(std::abs(a1 - a2) <= 0.05 * a2);
    }
    CHECK_THROWS_AS(lemma_bound_ratio(MaxwellianParams::axial(1.0, 0.0, 1.6), 4.0, *g, 1.5), PreconditionError);
    CHECK_THROWS_AS(lemma_bound_ratio({}, 4.0, *g, 1.5), DomainError);
}
