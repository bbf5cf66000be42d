#include <doctest.h>

#include <cmath>
#include <numbers>
#include <random>

#include "kinetic/errors.hpp"
#include "kinetic/grid.hpp"

using namespace kinetic;

namespace {

constexpr double kPi = std::numbers::pi;

double maxwell(double s) { return std::pow(2.0 * kPi, -1.5) * std::exp(-0.5 * s * s); }

// Reference: 200-node Gauss-Legendre in the speed on [0, s_max].
double reference_moment(double s_max, int power) {
    Rule r = gauss_legendre(200, 0.0, s_max);
    return 4.0 * kPi * r.integrate([&](double s) { return std::pow(s, 2 + power) * maxwell(s); });
}

double grid_moment(const VelocityGrid& g, int power) {
    double m = 0.0;
    for (int i = 0; i < g.size(); ++i) m += g.weight(i) * std::pow(g.speed(i), power) * maxwell(g.speed(i));
    return m;
}

GridFunction random_function(const GridPtr& g, std::mt19937_64& rng) {
    std::normal_distribution<double> n;
    Eigen::VectorXcd v(g->size());
    for (int i = 0; i < g->size(); ++i) v(i) = cplx(n(rng), n(rng)) * std::sqrt(maxwell(g->speed(i)));
    return GridFunction(g, v);
}

}  // namespace

TEST_CASE("mass and temperature normalization") {
    auto g = build_grid(24, 12, 8.0, 0);
    CHECK(std::abs(grid_moment(*g, 0) - reference_moment(8.0, 0)) < 1e-8);
    CHECK(std::abs(grid_moment(*g, 0) - 1.0) < 1e-8);
    CHECK(std::abs(grid_moment(*g, 2) - 3.0) < 1e-8);

    auto coarse = build_grid(4, 4, 6.0, 0);
    CHECK(std::abs(grid_moment(*coarse, 0) - reference_moment(6.0, 0)) < 1e-3);
    for (int i = 0; i < coarse->size(); ++i) CHECK(coarse->weight(i) > 0.0);
}

TEST_CASE("invalid sizes are configuration errors") {
    CHECK_THROWS_AS(build_grid(0, 4, 6.0, 0), ConfigError);
    CHECK_THROWS_AS(build_grid(4, 3, 6.0, 0), ConfigError);
    CHECK_THROWS_AS(build_grid(8, 8, 5.0, 0), ConfigError);
}

TEST_CASE("collision invariants are orthonormal in their sectors") {
    auto g0 = build_grid(24, 12, 8.0, 0);
    auto g1 = build_grid(24, 12, 8.0, 1);
    std::vector<GridFunction> all = {chi(g0, 0), chi(g0, 3), chi(g0, 4)};
    for (std::size_t i = 0; i < all.size(); ++i)
        for (std::size_t j = 0; j < all.size(); ++j)
            CHECK(std::abs(inner(all[i], all[j]) - (i == j ? 1.0 : 0.0)) < 1e-8);
    auto c1 = chi(g1, 1), c2 = chi(g1, 2);
    CHECK(std::abs(inner(c1, c1) - 1.0) < 1e-8);
    CHECK(std::abs(inner(c2, c2) - 1.0) < 1e-8);
    CHECK(std::abs(inner(c1, c2)) < 1e-15);
    CHECK_THROWS_AS(chi(g1, 0), PreconditionError);
}

TEST_CASE("norms") {
    auto g = build_grid(24, 12, 8.0, 0);
    auto c0 = chi(g, 0);
    CHECK(norm(c0, NormKind::l2()) == doctest::Approx(1.0).epsilon(1e-8));
    CHECK(norm(c0, NormKind::lsigma(0.0)) == doctest::Approx(1.0).epsilon(1e-8));

    // max of <xi>^2 exp(-|xi|^2/4) (2 pi)^{-3/4} is attained at |xi|^2 = 3.
    double sup = 4.0 * std::exp(-0.75) * std::pow(2.0 * kPi, -0.75);
    double discrete = 0.0;
    for (int a = 0; a < g->n_speed(); ++a) {
        double s = g->speed_nodes[a];
        discrete = std::max(discrete, (1.0 + s * s) * std::sqrt(maxwell(s)));
    }
    double got = norm(c0, NormKind::linf_beta(2.0));
    CHECK(got == doctest::Approx(discrete).epsilon(1e-14));
    CHECK(got <= sup);
    CHECK(got > 0.98 * sup);

    WeightSpec bad;
    bad.kappa0 = 0.2;
    CHECK_THROWS_AS(norm(c0, NormKind::linf_weighted(bad, 0.0)), ConfigError);
}

TEST_CASE("inner product is conjugate symmetric and satisfies Cauchy-Schwarz") {
    std::mt19937_64 rng(7);
    for (int sector : {0, 1}) {
        auto g = build_grid(12, 8, 8.0, sector);
        for (int k = 0; k < 20; ++k) {
            auto f = random_function(g, rng), h = random_function(g, rng);
            CHECK(std::abs(inner(f, h) - std::conj(inner(h, f))) < 1e-14);
            CHECK(std::abs(inner(f, h)) <= norm(f, NormKind::l2()) * norm(h, NormKind::l2()) + 1e-14);
        }
    }
}

TEST_CASE("smooth norms converge under refinement") {
    auto profile = [](double s, double c) {
        return (1.0 + s * c + 0.3 * s * s * c * c) * std::exp(-0.25 * s * s) * std::pow(2.0 * kPi, -0.75);
    };
    auto coarse = build_grid(24, 12, 8.0, 0), fine = build_grid(48, 24, 8.0, 0);
    double n1 = norm(sample(coarse, profile), NormKind::l2());
    double n2 = norm(sample(fine, profile), NormKind::l2());
    CHECK(std::abs(n1 - n2) < 1e-6);
    double s1 = norm(sample(coarse, profile), NormKind::lsigma(1.0));
    double s2 = norm(sample(fine, profile), NormKind::lsigma(1.0));
    CHECK(std::abs(s1 - s2) < 1e-6);
}

TEST_CASE("background grid is the scaled and shifted reference layout") {
    auto g = build_background_grid(16, 8, 8.0, 0, 0.3, 1.44);
    auto ref = build_grid(16, 8, 8.0, 0);
    for (int a = 0; a < 16; ++a) CHECK(g->speed_nodes[a] == doctest::Approx(1.2 * ref->speed_nodes[a]));
    // Mass of the background Maxwellian with its own temperature is one.
    double m = 0.0;
    for (int i = 0; i < g->size(); ++i)
        m += g->weight(i) * std::pow(2.0 * kPi * 1.44, -1.5) * std::exp(-g->speed(i) * g->speed(i) / (2.0 * 1.44));
    CHECK(m == doctest::Approx(1.0).epsilon(1e-10));
    CHECK(g->xi3(0) == doctest::Approx(0.3 + g->speed(0) * g->cosine(0)));
}

TEST_CASE("grid spec text round trip") {
    GridSpec s;
    s.n_speed = 16;
    s.sectors = {0};
    auto t = GridSpec::from_text(s.to_text());
    CHECK(t.n_speed == 16);
    CHECK(t.sectors == std::vector<int>{0});
    try {
        GridSpec::from_text("n_speed = 8\nbogus = 1\n");
        FAIL("expected ConfigError");
    } catch (const ConfigError& e) {
        CHECK(e.key() == "bogus");
    }
}
