#include <doctest.h>

#include <unsupported/Eigen/MatrixFunctions>

#include <cmath>

#include "kinetic/errors.hpp"
#include "kinetic/semigroup.hpp"

using namespace kinetic;

namespace {

const double kPi = 3.14159265358979323846;

struct Ops {
    CollisionModel model;
    GridPtr g = build_grid(12, 6, 8.0, 0);
    CollisionOperator L = assemble_collision(model, g);
};

const Ops& ops() {
    static Ops o;
    return o;
}

double wnorm(const Eigen::VectorXcd& v, const WaveOperator& w) {
    return (v.array() * w.sqrt_w.array().cast<cplx>()).matrix().norm();
}

GridFunction bumpy(const GridPtr& g) {
    return sample(g, [](double s, double c) { return (1.0 + s * c + 0.3 * s * s * c * c) * std::exp(-0.3 * s * s); });
}

}  // namespace

TEST_CASE("long-wave cutoff has the prescribed plateau, support and smoothness") {
    const double d = 1.6;
    CHECK(long_wave_cutoff(0.0, d) == 1.0);
    CHECK(long_wave_cutoff(0.8, d) == 1.0);
    CHECK(long_wave_cutoff(1.6, d) == 0.0);
    CHECK(long_wave_cutoff(5.0, d) == 0.0);
    CHECK(long_wave_cutoff(1.2, d) == doctest::Approx(0.5).epsilon(1e-14));
    CHECK(long_wave_cutoff(0.5, 0.0) == 0.0);
    // First and second one-sided differences vanish at both joins.
    const double h = 1e-4;
    for (double r0 : {0.8, 1.6}) {
        double f0 = long_wave_cutoff(r0, d);
        double fp = long_wave_cutoff(r0 + h, d), fm = long_wave_cutoff(r0 - h, d);
        CHECK(std::abs(fp - f0) / h < 1e-6);
        CHECK(std::abs(f0 - fm) / h < 1e-6);
    }
    double prev = 1.0;
    for (double r = 0.8; r <= 1.6; r += 0.01) {
        double v = long_wave_cutoff(r, d);
        CHECK(v <= prev + 1e-15);
        prev = v;
    }
}

TEST_CASE("mode propagator: identity at t=0, stationary kernel, coercive decay") {
    const auto& o = ops();
    GridFunction psi = bumpy(o.g);
    WaveOperator w = assemble_wave_operator(o.L, 0.7);
    ModePropagator mp(w);
    CHECK_FALSE(mp.fallback());
    CHECK((mp.full(psi.values, 0.0) - psi.values).norm() < 1e-12 * psi.values.norm());

    WaveOperator w0 = assemble_wave_operator(o.L, 0.0);
    ModePropagator m0(w0);
    GridFunction c0 = chi(o.g, 0);
    for (double t : {0.5, 10.0, 300.0}) CHECK((m0.full(c0.values, t) - c0.values).norm() < 1e-10);

    InvariantProjector P(o.g, Parity::Cos);
    GridFunction perp = P.P1(psi);
    const double nu0 = 2.0 * kPi / 3.0;
    const double n0 = wnorm(perp.values, w0);
    for (double t : {0.1, 1.0, 3.0, 8.0}) {
        double nt = wnorm(m0.full(perp.values, t), w0);
        CHECK(nt <= std::exp(-nu0 * (1.0 - 1e-3) * t) * n0 * (1.0 + 1e-10));
    }
}

TEST_CASE("semigroup law, contraction and agreement with the Pade exponential") {
    const auto& o = ops();
    GridFunction psi = bumpy(o.g);
    for (double r : {0.03, 0.4, 1.1, 3.0}) {
        WaveOperator w = assemble_wave_operator(o.L, r);
        ModePropagator mp(w);
        const double n0 = wnorm(psi.values, w);
        for (auto [t1, t2] : {std::pair{0.3, 0.9}, std::pair{2.0, 5.0}, std::pair{12.0, 40.0}}) {
            Eigen::VectorXcd a = mp.full(psi.values, t1 + t2);
            Eigen::VectorXcd b = mp.full(mp.full(psi.values, t1), t2);
            CHECK(wnorm(a - b, w) <= 1e-8 * n0);
        }
        double prev = n0;
        for (double t = 0.25; t < 30.0; t *= 1.5) {
            double n = wnorm(mp.full(psi.values, t), w);
            CHECK(n <= prev * (1.0 + 1e-12));
            prev = n;
        }
        // Same evolution via scaling-and-squaring in symmetric coordinates.
        Eigen::VectorXcd y = psi.values.cwiseProduct(w.sqrt_w.cast<cplx>());
        Eigen::VectorXcd e = ((w.sym * 2.5).exp() * y).cwiseQuotient(w.sqrt_w.cast<cplx>());
        CHECK(wnorm(e - mp.full(psi.values, 2.5), w) <= 1e-9 * n0);
    }
}

TEST_CASE("three-way split: partition of unity and cutoff support") {
    const auto& o = ops();
    const double delta = 1.6;
    GridFunction psi = bumpy(o.g);
    std::vector<double> times{0.0, 0.5, 3.0, 20.0, 150.0};
    for (double r : {0.02, 0.5, 1.0, 1.4, 1.6, 2.5}) {
        WaveOperator w = assemble_wave_operator(o.L, r);
        auto parts = split_mode(w, psi, times, delta);
        auto full = evolve_mode(w, psi, times);
        CHECK(parts[0].part == Part::LongFluid);
        CHECK(parts[2].part == Part::Short);
        const double n0 = wnorm(psi.values, w);
        for (std::size_t k = 0; k < times.size(); ++k) {
            Eigen::VectorXcd sum = parts[0].values[k].values + parts[1].values[k].values + parts[2].values[k].values;
            CHECK(wnorm(sum - full.values[k].values, w) <= 1e-8 * n0);
            if (r >= delta) {
                CHECK(parts[0].values[k].values.norm() == 0.0);
                CHECK(parts[1].values[k].values.norm() == 0.0);
            }
            if (r <= 0.5 * delta) CHECK(parts[2].values[k].values.norm() == 0.0);
        }
        CHECK((full.values[0].values - psi.values).norm() < 1e-12 * psi.values.norm());
    }
    GridPtr other = build_grid(10, 6, 8.0, 0);
    WaveOperator w = assemble_wave_operator(o.L, 0.3);
    CHECK_THROWS_AS(evolve_mode(w, bumpy(other), times), PreconditionError);
}

TEST_CASE("fluid part keeps the slow eigen-components and the rest decays fast") {
    const auto& o = ops();
    WaveOperator w = assemble_wave_operator(o.L, 0.1);
    ModePropagator mp(w, 1.6);
    REQUIRE(mp.slow().size() == 3);
    CHECK(mp.cutoff() == 1.0);
    GridFunction psi = bumpy(o.g);
    // Branch subsets add up to the whole fluid part.
    Eigen::VectorXcd all = mp.fluid(psi.values, 4.0);
    Eigen::VectorXcd parts = mp.fluid(psi.values, 4.0, {0, 1}) + mp.fluid(psi.values, 4.0, {2});
    CHECK((all - parts).norm() < 1e-12 * all.norm());
    // The non-fluid part is damped at least like the spectral gap.
    const double n0 = wnorm(mp.nonfluid(psi.values, 0.0), w);
    CHECK(wnorm(mp.nonfluid(psi.values, 5.0), w) < 1e-3 * n0);
}

TEST_CASE("damped transport follows the characteristics") {
    const auto& o = ops();
    GridFunction psi = bumpy(o.g);
    SpaceProfile prof{1.3, 2.0};
    Vec3 x{0.2, -0.4, 0.9};
    Eigen::VectorXcd h0 = damped_transport(prof, psi, o.L.nu, 0.0, x);
    CHECK((h0 - prof.value(std::sqrt(0.04 + 0.16 + 0.81)) * psi.values).norm() < 1e-14);
    // gamma = 0: nu = 2 pi at every node, so the factor is exact.
    for (double t : {0.1, 0.4}) {
        Eigen::VectorXcd h = damped_transport(prof, psi, o.L.nu, t, x);
        for (int i = 0; i < o.g->size(); ++i) {
            auto xi = o.g->velocity(i);
            double R = std::hypot(x[0] - xi[0] * t, x[1] - xi[1] * t, x[2] - xi[2] * t);
            CHECK(std::abs(h(i) - std::exp(-2.0 * kPi * t) * prof.value(R) * psi.values(i)) <= 1e-14);
        }
        CHECK(h.cwiseAbs().maxCoeff() <= std::exp(-o.L.nu.minCoeff() * t) * prof.linf() * psi.values.cwiseAbs().maxCoeff());
    }
    CHECK_THROWS_AS(damped_transport(prof, psi, Eigen::VectorXd::Ones(3), 1.0, x), PreconditionError);
}

TEST_CASE("Gaussian profile closed forms") {
    SpaceProfile p{0.7, 1.5};
    CHECK(p.fourier(0.0) == doctest::Approx(p.l1()).epsilon(1e-14));
    // |phi|_2^2 = (2 pi)^-3 4 pi int r^2 |phi_hat|^2 dr by Plancherel.
    Rule q = gauss_legendre(80, 0.0, 20.0);
    double s = q.integrate([&](double r) { return r * r * p.fourier(r) * p.fourier(r); });
    CHECK(std::sqrt(4.0 * kPi * s / std::pow(2.0 * kPi, 3)) == doctest::Approx(p.l2()).epsilon(1e-12));
    CHECK(p.linf() == 1.5);
}

TEST_CASE("wavenumber quadrature and time grid") {
    RGridSpec spec;
    RQuadrature q = make_r_quadrature(spec);
    CHECK(q.r.size() == q.w.size());
    CHECK(q.r.size() > 1000);
    double s = 0.0;
    for (std::size_t k = 0; k < q.r.size(); ++k) s += q.w[k] * q.r[k] * q.r[k] * std::exp(-q.r[k] * q.r[k]);
    CHECK(s == doctest::Approx(std::sqrt(kPi) / 4.0).epsilon(1e-12));
    for (std::size_t k = 1; k < q.r.size(); ++k) CHECK(q.r[k] > q.r[k - 1]);
    CHECK(q.r.back() < spec.r_max);

    auto t = geometric_times(0.1, 300.0, 12);
    CHECK(t.front() == 0.0);
    CHECK(t[1] == doctest::Approx(0.1));
    CHECK(t.back() == doctest::Approx(300.0));
    CHECK(t.size() >= 1 + 12 * std::log10(3000.0));
    for (std::size_t k = 2; k < t.size(); ++k) CHECK(t[k] / t[k - 1] == doctest::Approx(t[2] / t[1]).epsilon(1e-12));
    CHECK_THROWS_AS(geometric_times(0.0, 1.0, 12), ConfigError);
    RGridSpec bad;
    bad.r_max = -1.0;
    CHECK_THROWS_AS(make_r_quadrature(bad), ConfigError);
}

TEST_CASE("radial synthesis reproduces the factorized data at t=0") {
    const auto& o = ops();
    RGridSpec spec;
    spec.t_max = 1.0;
    RQuadrature q = make_r_quadrature(spec);
    SpaceProfile prof{1.2, 0.8};
    std::vector<double> times{0.0, 1.0};
    RadialSynthesis::Options opt;
    opt.beta = 1.5;
    RadialSynthesis syn(o.g, prof, times, 2, opt);
    GridFunction c0 = chi(o.g, 0);
    GridFunction aniso = sample(o.g, [](double s, double c) { return s * s * (c * c - 1.0 / 3.0) * std::exp(-0.25 * s * s); });
    for (std::size_t k = 0; k < q.r.size(); ++k) syn.add(q.r[k], q.w[k], 0, {&c0.values, &aniso.values});

    NormSeries a = syn.series(0), b = syn.series(1);
    const double n0 = norm(c0, NormKind::l2()), n1 = norm(aniso, NormKind::l2());
    CHECK(std::abs(a.l2l2[0] - prof.l2() * n0) <= 1e-6 * prof.l2() * n0);
    CHECK(std::abs(b.l2l2[0] - prof.l2() * n1) <= 1e-6 * prof.l2() * n1);
    CHECK(a.linf_l2[0] == doctest::Approx(prof.linf() * n0).epsilon(1e-6));
    CHECK(a.linf_l2_argmax[0] == doctest::Approx(0.0));

    // Isotropic data: u = phi(x) psi(xi), so the per-node norms factor.
    double m2 = 0.0;
    for (int i = 0; i < o.g->size(); ++i)
        m2 = std::max(m2, std::pow(bracket(o.g->speed(i)), 1.5) * std::abs(c0.values(i)));
    CHECK(a.linfbeta_l2[0] == doctest::Approx(m2 * prof.l2()).epsilon(1e-6));
    CHECK(a.linfbeta_linf[0] == doctest::Approx(m2 * prof.linf()).epsilon(1e-6));
    // Data rotating with eta do not factor; the L2_x norm at fixed xi is the
    // cosine average: |phi|_2 (1/2 int |psi(s, c)|^2 dc)^{1/2}.
    double mb = 0.0;
    const int nc = o.g->n_cosine();
    for (int s = 0; s < o.g->n_speed(); ++s) {
        double avg = 0.0;
        for (int c = 0; c < nc; ++c) avg += 0.5 * o.g->cosine_weights[c] * std::norm(aniso.values(s * nc + c));
        mb = std::max(mb, std::pow(bracket(o.g->speed_nodes[s]), 1.5) * std::sqrt(avg));
    }
    CHECK(b.linfbeta_l2[0] == doctest::Approx(mb * prof.l2()).epsilon(1e-6));

    auto prof0 = syn.radial_profile(0, 0);
    const auto& R = syn.R_grid(0);
    for (std::size_t k = 0; k < R.size(); k += 7) CHECK(std::abs(prof0[k] - prof.value(R[k]) * n0) < 1e-7);
    CHECK(syn.imaginary_ratio(0) < 1e-12);
    CHECK_THROWS_AS(syn.add(0.1, 0.1, 0, {&c0.values}), PreconditionError);
    CHECK_THROWS_AS(RadialSynthesis(build_grid(12, 6, 8.0, 1), prof, times, 1, opt), PreconditionError);
}

TEST_CASE("suite initial data") {
    const auto& o = ops();
    GridFunction k = kernel_data(o.g), p = perpendicular_data(o.g);
    CHECK(norm(k, NormKind::l2()) == doctest::Approx(1.0));
    CHECK(norm(p, NormKind::l2()) == doctest::Approx(1.0));
    InvariantProjector P(o.g, Parity::Cos);
    CHECK(norm(P.P0(p), NormKind::l2()) < 1e-8);
    CHECK(p.values.real().norm() < 1e-14);
}

TEST_CASE("decay fits on synthetic series") {
    auto t = geometric_times(0.1, 1000.0, 12, false);
    std::vector<double> y;
    for (double s : t) y.push_back(3.0 * std::pow(1.0 + s, -0.75));
    DecayFit f = fit_decay(t, y, 10.0, 300.0);
    CHECK(f.exponent == doctest::Approx(-0.75).epsilon(1e-9));
    CHECK(std::abs(f.exponent + 0.75) <= 1e-6);
    CHECK(f.intercept == doctest::Approx(std::log(3.0)));
    CHECK(f.residual < 1e-10);
    CHECK_FALSE(f.superpolynomial);

    y.clear();
    for (double s : t) y.push_back(2.0 * std::exp(-s));
    DecayFit e = fit_decay(t, y, 1.0, 30.0);
    CHECK(e.superpolynomial);
    CHECK(e.rate == doctest::Approx(1.0).epsilon(1e-9));
    CHECK(e.late_exponent < e.early_exponent - 1.0);

    y.clear();
    for (double s : t) y.push_back(1.0 * std::pow(1.0 + s, -1.0) + 0.01 * std::pow(1.0 + s, -1.5));
    DecayFit m = fit_decay(t, y, 10.0, 300.0);
    CHECK(m.exponent <= -0.95);
    CHECK(m.exponent >= -1.05);
    CHECK_FALSE(m.superpolynomial);

    CHECK_THROWS_AS(fit_decay(t, y, 10.0, 50.0), PreconditionError);
    CHECK_THROWS_AS(fit_decay(t, y, 0.0, 50.0), PreconditionError);
    std::vector<double> bad = y;
    bad[40] = -1.0;
    CHECK_THROWS_AS(fit_decay(t, bad, 1.0, 1000.0), NumericalError);
    std::vector<double> few_t{1.0, 5.0, 20.0}, few_y{1.0, 0.5, 0.2};
    CHECK_THROWS_AS(fit_decay(few_t, few_y, 1.0, 20.0), PreconditionError);
    DecayFit x = fit_exponential(t, std::vector<double>(t.size(), 1.0), 2.0, 8.0);
    CHECK(x.rate == doctest::Approx(0.0).scale(1.0));
}

TEST_CASE("outer peak detection") {
    std::vector<double> R, ring, center;
    for (int k = 0; k <= 200; ++k) {
        double r = 0.05 * k;
        R.push_back(r);
        ring.push_back(std::exp(-4.0 * (r - 6.03) * (r - 6.03)) + 0.5 * std::exp(-r * r));
        center.push_back(std::exp(-r * r));
    }
    CHECK(outer_peak_radius(R, ring) == doctest::Approx(6.03).epsilon(1e-3));
    CHECK(outer_peak_radius(R, center) == 0.0);
    CHECK_THROWS_AS(outer_peak_radius({0.0, 1.0}, {1.0, 0.5}), PreconditionError);
}

TEST_CASE("decay suite rejects invalid windows before any work") {
    DecaySuiteConfig c;
    c.fit_t1 = 20.0;
    c.fit_t2 = 100.0;
    CHECK_THROWS_AS(decay_suite(c), ConfigError);
    DecaySuiteConfig d;
    d.tol_l2 = 0.0;
    CHECK_THROWS_AS(decay_suite(d), ConfigError);
    DecaySuiteConfig e;
    e.t_max = 100.0;
    CHECK_THROWS_AS(decay_suite(e), ConfigError);
}
