#include <doctest.h>

#include <cmath>

#include "kinetic/chi_experiment.hpp"
#include "kinetic/errors.hpp"
#include "kinetic/quadrature.hpp"

using namespace kinetic;

namespace {

ChiConfig small_config() {
    ChiConfig c;
    c.setup.n_speed = 8;
    c.setup.n_cosine = 4;
    return c;
}

struct Fixture {
    ChiConfig cfg = small_config();
    CollisionOperator La = assemble_collision(cfg.setup.model, cfg.setup.grid(0));
    ChiOperators ops = assemble_chi_operators(cfg, MaxwellianParams::axial(1.05, 0.08, 1.1), La);
};

const Fixture& fx() {
    static Fixture f;
    return f;
}

double wnorm(const Eigen::VectorXcd& v, const Eigen::VectorXd& sqrt_w) {
    return (v.array() * sqrt_w.array().cast<cplx>()).matrix().norm();
}

// 2 eps int_0^t e^{A_a (t - tau)} T e^{A_b tau} f0b dtau by composite
// Gauss-Legendre in tau.
Eigen::VectorXcd duhamel_quadrature(const ModePropagator& pa, const ModePropagator& pb, const Eigen::MatrixXd& T,
                                    const Eigen::VectorXcd& f0b, double eps, double t) {
    std::vector<double> breaks;
    for (int k = 0; k <= 12; ++k) breaks.push_back(t * k / 12.0);
    Rule rule = composite_gauss_legendre(breaks, 16);
    Eigen::VectorXcd acc = Eigen::VectorXcd::Zero(T.rows());
    for (std::size_t k = 0; k < rule.size(); ++k) {
        const double tau = rule.nodes[k];
        Eigen::VectorXcd inner = T.cast<cplx>() * pb.full(f0b, tau);
        acc += rule.weights[k] * pa.full(inner, t - tau);
    }
    return 2.0 * eps * acc;
}

}  // namespace

TEST_CASE("derived initial datum is the same physical perturbation") {
    ChiConfig cfg = small_config();
    const MaxwellianParams b = MaxwellianParams::axial(1.05, 0.08, 1.1);
    GridPtr gb = build_background_grid(8, 4, 8.0, 0, b.mu[2], b.lam);
    for (XiProfile p : {XiProfile::Kernel, XiProfile::NonFluid}) {
        cfg.xi = p;
        GridFunction f0b = derive_f0b(cfg, b, gb);
        for (int i = 0; i < gb->size(); ++i) {
            auto xi = gb->velocity(i);
            const double lhs = sqrt_maxwellian(b, xi) * f0b.values(i).real();
            const double rhs = sqrt_maxwellian(MaxwellianParams{}, xi) * xi_profile_value(p, xi);
            CHECK(std::abs(lhs - rhs) <= 1e-12 * std::max(1e-300, std::abs(rhs)) + 1e-300);
        }
    }
    GridPtr ga = cfg.setup.grid(0);
    GridFunction same = derive_f0b(cfg, MaxwellianParams{}, ga);
    for (int i = 0; i < ga->size(); ++i)
        CHECK(same.values(i).real() == doctest::Approx(xi_profile_value(cfg.xi, ga->velocity(i))).epsilon(1e-14));
}

TEST_CASE("non-fluid xi profile is orthogonal to the collision invariants") {
    GridPtr g = build_grid(12, 6, 8.0, 0);
    double m0 = 0.0, m1 = 0.0, m2 = 0.0, scale = 0.0;
    for (int i = 0; i < g->size(); ++i) {
        auto xi = g->velocity(i);
        const double f = xi_profile_value(XiProfile::NonFluid, xi) * sqrt_maxwellian(MaxwellianParams{}, xi);
        const double w = g->weight(i), s2 = xi[0] * xi[0] + xi[1] * xi[1] + xi[2] * xi[2];
        m0 += w * f;
        m1 += w * f * xi[2];
        m2 += w * f * s2;
        scale += w * std::abs(f) * (1.0 + s2);
    }
    // Exact Gaussian moments; the residue is the truncation at s_max = 8.
    CHECK(std::abs(m0) <= 1e-7 * scale);
    CHECK(std::abs(m1) <= 1e-7 * scale);
    CHECK(std::abs(m2) <= 1e-7 * scale);
    CHECK(xi_profile_from_string("nonfluid") == XiProfile::NonFluid);
    CHECK_THROWS_AS(xi_profile_from_string("fluid"), ConfigError);
}

TEST_CASE("L_b at the reference background is L_a, and L_b kills its own invariants") {
    const Fixture& f = fx();
    CollisionOperator same = assemble_Lb(BackgroundPair(MaxwellianParams{}), f.cfg.setup, 0);
    CHECK((same.as_L().entries - f.La.as_L().entries).norm() <= 1e-12 * f.La.as_L().entries.norm());

    const Eigen::MatrixXd& L = f.ops.Lb.as_L().entries;
    InvariantProjector P(f.ops.grid_b);
    for (const GridFunction& e : P.basis()) {
        const double d = (L * e.values.real()).norm() / (L.norm() * e.values.norm());
        CHECK(d <= 1e-10);
    }
    CHECK(f.ops.crosscheck <= 1e-8);
}

TEST_CASE("source vanishes for identical backgrounds and misses the invariants otherwise") {
    const Fixture& f = fx();
    ChiOperators same = assemble_chi_operators(f.cfg, MaxwellianParams{}, f.La);
    CHECK(same.T.T.entries.norm() <= 1e-14);
    GridFunction zero = chi11_mode(same, 1.0, 1.0, 0.4, 5.0);
    CHECK(zero.values.norm() == 0.0);

    InvariantProjector P(f.ops.grid_a);
    GridFunction Tf = f.ops.T.T.apply(f.ops.f0b);
    CHECK(P.P0(Tf).values.norm() <= 1e-10 * Tf.values.norm());
}

TEST_CASE("closed-form mode solution agrees with the block exponential and a time quadrature") {
    const Fixture& f = fx();
    for (double r : {0.05, 0.4, 1.3}) {
        ModePropagator pa(assemble_wave_operator(f.La, r), 0.8);
        ModePropagator pb(assemble_wave_operator(f.ops.Lb, r), 0.8);
        Chi11Mode m(pa, pb, f.ops.T.T.entries, f.ops.f0b.values, 0.7);
        CHECK_FALSE(m.fallback());
        CHECK(m.total(0.0).norm() == 0.0);
        for (double t : {0.3, 2.0, 9.0}) {
            Eigen::VectorXcd v = m.total(t);
            const double s = wnorm(v, pa.op().sqrt_w);
            REQUIRE(s > 0.0);
            CHECK(wnorm(v - m.reference_total(t), pa.op().sqrt_w) <= 1e-9 * s);
            Eigen::VectorXcd q = duhamel_quadrature(pa, pb, f.ops.T.T.entries, f.ops.f0b.values, 0.7, t);
            CHECK(wnorm(v - q, pa.op().sqrt_w) <= 1e-9 * s);
        }
    }
}

TEST_CASE("parts sum to the mode and match their block-exponential versions") {
    const Fixture& f = fx();
    for (double r : {0.1, 0.6, 2.0}) {
        ModePropagator pa(assemble_wave_operator(f.La, r), 0.8);
        ModePropagator pb(assemble_wave_operator(f.ops.Lb, r), 0.8);
        Chi11Mode m(pa, pb, f.ops.T.T.entries, f.ops.f0b.values, 1.0);
        for (double t : {0.5, 4.0}) {
            auto parts = m.parts(t);
            auto ref = m.reference_parts(t);
            Eigen::VectorXcd sum = Eigen::VectorXcd::Zero(parts[0].size());
            double biggest = 0.0;
            for (int k = 0; k < Chi11Mode::kParts; ++k) {
                sum += parts[k];
                biggest = std::max(biggest, wnorm(parts[k], pa.op().sqrt_w));
            }
            CHECK(wnorm(sum - m.total(t), pa.op().sqrt_w) <= 1e-10 * biggest);
            for (int k = 0; k < Chi11Mode::kParts; ++k)
                CHECK(wnorm(parts[k] - ref[k], pa.op().sqrt_w) <= 1e-8 * biggest);
            // Above the cutoff radius only the short parts survive.
            if (r > 0.8)
                for (int k = 0; k < Chi11Mode::kParts; ++k)
                    if (k / 6 != Chi11Mode::Short || (k / 2) % 3 != Chi11Mode::Short) CHECK(parts[k].norm() == 0.0);
        }
    }
    CHECK(Chi11Mode::part_index(2, 2, 1) == Chi11Mode::kParts - 1);
}

TEST_CASE("mode solution is linear in epsilon") {
    const Fixture& f = fx();
    GridFunction one = chi11_mode(f.ops, 0.8, 1.0, 0.3, 3.0);
    GridFunction three = chi11_mode(f.ops, 0.8, 3.0, 0.3, 3.0);
    CHECK((three.values - 3.0 * one.values).norm() <= 1e-13 * three.values.norm());
    CHECK_THROWS_AS(chi11_mode(f.ops, 0.8, 1.0, 0.3, -1.0), DomainError);
}

TEST_CASE("configuration errors name the offending key") {
    auto key_of = [](ChiConfig c) -> std::string {
        try {
            c.validate();
        } catch (const ConfigError& e) {
            return e.key();
        }
        return "";
    };
    ChiConfig ok;
    CHECK(key_of(ok) == "");
    ChiConfig c = ok;
    c.beta = 1.5;
    CHECK(key_of(c) == "beta");
    c = ok;
    c.b.mu = {0.01, 0.0, 0.0};
    CHECK(key_of(c) == "mu");
    c = ok;
    c.b.lam = 0.9;
    CHECK(key_of(c) == "lam");
    c = ok;
    c.scales = {0.5, 1.0};
    CHECK(key_of(c) == "scales");
    c = ok;
    c.scan_times = {10.0, 20.0};
    CHECK(key_of(c) == "scan_times");
    c = ok;
    c.fit_t2 = 100.0;
    CHECK(key_of(c) == "fit_window");
    c = ok;
    c.epsilon = 0.0;
    CHECK(key_of(c) == "epsilon");
}
